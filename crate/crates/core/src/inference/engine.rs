use super::{
    bayesian_model_average, expected_free_energy, mismatch, policy_posterior, select_action,
    update_posterior_states, variational_free_energy, ActionId, Categorical, InferenceError,
    LikelihoodMatrix, LogPreference, Policy, Result, TransitionMatrix,
};
use crate::scalar::Scalar;

/// One independent state factor of the generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor<S> {
    pub likelihood: LikelihoodMatrix<S>,
    /// Prior over the factor at the first step.
    pub initial: Categorical<S>,
    pub preference: LogPreference<S>,
    /// Outcome vectors for the past and present steps.
    pub observations: Vec<Option<Vec<S>>>,
    /// Transition under each action, indexed by [`ActionId`].
    pub transitions: Vec<TransitionMatrix<S>>,
}

/// Factorized model evaluated over `horizon` steps.
///
/// The present step is the number of observations; `history` holds the actions
/// taken between past steps and policies cover the remaining steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel<S> {
    pub factors: Vec<Factor<S>>,
    pub history: Vec<ActionId>,
    pub horizon: usize,
}

impl<S: Scalar> GenerativeModel<S> {
    fn present(&self) -> Result<usize> {
        let present = self.factors.first().map_or(0, |f| f.observations.len());
        if self.factors.iter().any(|f| f.observations.len() != present) {
            return Err(mismatch("factors disagree on the number of observed steps"));
        }
        if present == 0 || present > self.horizon {
            return Err(mismatch(format!(
                "{present} observed steps for a horizon of {}",
                self.horizon
            )));
        }
        if self.history.len() + 1 != present {
            return Err(mismatch(format!(
                "{} past actions for {present} observed steps",
                self.history.len()
            )));
        }
        Ok(present)
    }
}

/// Result of evaluating every candidate policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOutcome<S> {
    pub policy_probs: Categorical<S>,
    pub free_energy: Vec<S>,
    pub expected_free_energy: Vec<S>,
    /// `[policy][factor][step]`
    pub per_policy_beliefs: Vec<Vec<Vec<Categorical<S>>>>,
    /// `[factor][step]`, averaged over policies.
    pub averaged_beliefs: Vec<Vec<Categorical<S>>>,
    pub chosen_action: ActionId,
}

/// Scores `policies` by `F + G` summed over factors and picks the action with
/// the largest posterior mass.
///
/// Factors whose preference is all zeros express no goal and are left out of
/// `G`; they still contribute to `F`.
pub fn run_active_inference<S: Scalar>(
    model: &GenerativeModel<S>,
    policies: &[Policy],
) -> Result<InferenceOutcome<S>> {
    if policies.is_empty() {
        return Err(InferenceError::NoPolicies);
    }
    if model.factors.is_empty() {
        return Err(mismatch("model has no state factors"));
    }
    let present = model.present()?;
    let future = model.horizon - present;
    if let Some(p) = policies.iter().find(|p| p.len() != future) {
        return Err(mismatch(format!(
            "policy of length {} for {future} future steps",
            p.len()
        )));
    }

    let mut free_energy = Vec::with_capacity(policies.len());
    let mut expected = Vec::with_capacity(policies.len());
    let mut per_policy = Vec::with_capacity(policies.len());
    for policy in policies {
        let mut f_total = S::zero();
        let mut g_total = S::zero();
        let mut beliefs = Vec::with_capacity(model.factors.len());
        for (k, factor) in model.factors.iter().enumerate() {
            let transitions = model
                .history
                .iter()
                .chain(policy.actions())
                .map(|a| {
                    factor.transitions.get(a.0).ok_or_else(|| {
                        mismatch(format!("factor {k} has no transition for action {}", a.0))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let s = update_posterior_states(
                &factor.likelihood,
                &transitions,
                &factor.initial,
                &factor.observations,
                model.horizon,
            )?;
            f_total = f_total
                + variational_free_energy(
                    &factor.likelihood,
                    &transitions,
                    &factor.initial,
                    &factor.observations,
                    &s,
                )?;
            if !factor.preference.is_indifferent() {
                g_total =
                    g_total + expected_free_energy(&factor.likelihood, &factor.preference, &s, present)?;
            }
            beliefs.push(s);
        }
        free_energy.push(f_total);
        expected.push(g_total);
        per_policy.push(beliefs);
    }

    let policy_probs = policy_posterior(&free_energy, &expected)?;
    let averaged_beliefs = (0..model.factors.len())
        .map(|k| {
            (0..model.horizon)
                .map(|t| {
                    let column: Vec<&Categorical<S>> =
                        per_policy.iter().map(|b: &Vec<Vec<Categorical<S>>>| &b[k][t]).collect();
                    bayesian_model_average(&policy_probs, &column)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen_action = select_action(&policy_probs, policies);

    Ok(InferenceOutcome {
        policy_probs,
        free_energy,
        expected_free_energy: expected,
        per_policy_beliefs: per_policy,
        averaged_beliefs,
        chosen_action,
    })
}
