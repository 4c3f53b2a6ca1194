use super::{
    mismatch, safe_log_all, softmax, ActionId, Categorical, InferenceError, LikelihoodMatrix,
    Matrix, Policy, Result, TransitionMatrix,
};
use crate::scalar::Scalar;

/// Upper bound on forward-backward sweeps in [`update_posterior_states`].
pub const MAX_SWEEPS: usize = 10;

/// Sweeps stop once no belief entry moves by more than this.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

pub(super) fn check_dimensions<S: Scalar>(
    likelihood: &LikelihoodMatrix<S>,
    transitions: &[&TransitionMatrix<S>],
    initial: &Categorical<S>,
    observations: &[Option<Vec<S>>],
    horizon: usize,
) -> Result<()> {
    let m = initial.len();
    if horizon == 0 {
        return Err(mismatch("horizon must be at least 1"));
    }
    if transitions.len() + 1 != horizon {
        return Err(mismatch(format!(
            "horizon {horizon} needs {} transition matrices, got {}",
            horizon - 1,
            transitions.len()
        )));
    }
    if likelihood.states() != m {
        return Err(mismatch(format!(
            "likelihood has {} state columns but the prior has {m} entries",
            likelihood.states()
        )));
    }
    if let Some((step, b)) = transitions.iter().enumerate().find(|(_, b)| b.size() != m) {
        return Err(mismatch(format!(
            "transition at step {} is {}x{}, expected {m}x{m}",
            step + 1,
            b.size(),
            b.size()
        )));
    }
    if observations.len() > horizon {
        return Err(mismatch(format!(
            "{} observations exceed the horizon {horizon}",
            observations.len()
        )));
    }
    let outcomes = likelihood.outcomes();
    for (step, o) in observations.iter().enumerate() {
        if let Some(o) = o {
            if o.len() != outcomes {
                return Err(mismatch(format!(
                    "observation at step {} has {} entries, expected {outcomes}",
                    step + 1,
                    o.len()
                )));
            }
        }
    }
    Ok(())
}

/// Log messages shared by belief updates and free energy.
pub(super) struct LogModel<S> {
    pub log_a: Matrix<S>,
    pub log_b: Vec<Matrix<S>>,
    pub log_d: Vec<S>,
}

impl<S: Scalar> LogModel<S> {
    pub fn new(
        likelihood: &LikelihoodMatrix<S>,
        transitions: &[&TransitionMatrix<S>],
        initial: &Categorical<S>,
    ) -> Self {
        Self {
            log_a: likelihood.matrix().safe_log(),
            log_b: transitions.iter().map(|b| b.matrix().safe_log()).collect(),
            log_d: safe_log_all(initial.probs()),
        }
    }

    /// Prior message for step `t` (0-based): `ln D` at the first step, otherwise `ln(B) s_{t-1}`.
    pub fn forward(&self, t: usize, previous: Option<&Categorical<S>>) -> Vec<S> {
        match (t, previous) {
            (0, _) => self.log_d.clone(),
            (_, Some(prev)) => self.log_b[t - 1].mul_vec(prev.probs()),
            (_, None) => unreachable!("forward message needs the previous belief"),
        }
    }

    /// `ln(A)ᵀ o` when the step has an observation.
    pub fn evidence(&self, observation: Option<&Vec<S>>) -> Option<Vec<S>> {
        observation.map(|o| self.log_a.transpose_mul_vec(o))
    }
}

fn add_into<S: Scalar>(acc: &mut [S], term: &[S]) {
    for (a, &t) in acc.iter_mut().zip(term) {
        *a = *a + t;
    }
}

/// Policy-conditioned state beliefs `s_τ` for `τ = 1..=horizon`.
///
/// Each belief is `σ(ln(B_{τ-1}) s_{τ-1} + ln(B_τ)ᵀ s_{τ+1} + ln(A)ᵀ o_τ)`, with
/// `ln D` in place of the first term at `τ = 1`, no backward term at the horizon and
/// no evidence term for steps without an observation. Beliefs are initialized by a
/// forward pass and then refined by Gauss-Seidel sweeps until converged or
/// [`MAX_SWEEPS`] is reached.
pub fn update_posterior_states<S: Scalar>(
    likelihood: &LikelihoodMatrix<S>,
    transitions: &[&TransitionMatrix<S>],
    initial: &Categorical<S>,
    observations: &[Option<Vec<S>>],
    horizon: usize,
) -> Result<Vec<Categorical<S>>> {
    check_dimensions(likelihood, transitions, initial, observations, horizon)?;
    let model = LogModel::new(likelihood, transitions, initial);
    let evidence: Vec<Option<Vec<S>>> = (0..horizon)
        .map(|t| model.evidence(observations.get(t).and_then(Option::as_ref)))
        .collect();

    let mut beliefs: Vec<Categorical<S>> = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut x = model.forward(t, beliefs.last());
        if let Some(e) = &evidence[t] {
            add_into(&mut x, e);
        }
        beliefs.push(softmax(&x));
    }

    let tolerance = S::lit(CONVERGENCE_TOLERANCE);
    for _ in 0..MAX_SWEEPS {
        let mut change = S::zero();
        for t in 0..horizon {
            let mut x = model.forward(t, t.checked_sub(1).map(|p| &beliefs[p]));
            if t + 1 < horizon {
                let backward = model.log_b[t].transpose_mul_vec(beliefs[t + 1].probs());
                add_into(&mut x, &backward);
            }
            if let Some(e) = &evidence[t] {
                add_into(&mut x, e);
            }
            let updated = softmax(&x);
            for (new, old) in updated.probs().iter().zip(beliefs[t].probs()) {
                change = change.max((*new - *old).abs());
            }
            beliefs[t] = updated;
        }
        if change < tolerance {
            break;
        }
    }
    Ok(beliefs)
}

/// Posterior over policies, `σ(-G - F)`.
pub fn policy_posterior<S: Scalar>(free_energy: &[S], expected: &[S]) -> Result<Categorical<S>> {
    if free_energy.is_empty() {
        return Err(InferenceError::NoPolicies);
    }
    if free_energy.len() != expected.len() {
        return Err(mismatch(format!(
            "{} free energies but {} expected free energies",
            free_energy.len(),
            expected.len()
        )));
    }
    let scores: Vec<S> = free_energy.iter().zip(expected).map(|(&f, &g)| -g - f).collect();
    Ok(softmax(&scores))
}

/// Policy-weighted average of per-policy beliefs at one step.
pub fn bayesian_model_average<S: Scalar>(
    policy_probs: &Categorical<S>,
    beliefs: &[&Categorical<S>],
) -> Result<Categorical<S>> {
    if policy_probs.len() != beliefs.len() {
        return Err(mismatch(format!(
            "{} policy probabilities for {} belief vectors",
            policy_probs.len(),
            beliefs.len()
        )));
    }
    let m = beliefs.first().map_or(0, |b| b.len());
    if m == 0 {
        return Err(InferenceError::NoPolicies);
    }
    if beliefs.iter().any(|b| b.len() != m) {
        return Err(mismatch("beliefs have different sizes"));
    }
    let mut out = vec![S::zero(); m];
    for (&w, b) in policy_probs.probs().iter().zip(beliefs) {
        for (o, &p) in out.iter_mut().zip(b.probs()) {
            *o = *o + w * p;
        }
    }
    Ok(Categorical::from_normalized(out))
}

/// Action with the largest summed probability over policies starting with it.
///
/// Masses within [`Scalar::tie_tolerance`] of the best are ties, resolved toward
/// the lowest action id.
pub fn select_action<S: Scalar>(policy_probs: &Categorical<S>, policies: &[Policy]) -> ActionId {
    assert!(!policies.is_empty(), "select_action needs at least one policy");
    assert_eq!(policy_probs.len(), policies.len(), "one probability per policy");
    let mut mass: Vec<(ActionId, S)> = Vec::new();
    for (policy, &p) in policies.iter().zip(policy_probs.probs()) {
        let action = policy.first();
        match mass.iter_mut().find(|(a, _)| *a == action) {
            Some((_, m)) => *m = *m + p,
            None => mass.push((action, p)),
        }
    }
    mass.sort_by_key(|(a, _)| *a);
    let best = mass.iter().map(|(_, m)| *m).fold(S::neg_infinity(), S::max);
    mass.iter()
        .find(|(_, m)| *m >= best - S::tie_tolerance())
        .map(|(a, _)| *a)
        .expect("non-empty action masses")
}
