use super::{DomainError, GroundAction, LogicalState, Result, StateId, StateRegistry};
use crate::inference::{safe_log, softmax, Categorical, TransitionMatrix};

/// One-hot outcome vector for an observed value.
pub fn observation_vector(m: usize, observed: usize) -> Vec<f64> {
    Categorical::one_hot(m, observed).into_inner()
}

/// Prior message for the next step, `σ(ln(B) · belief)`; the identity when `b` is `None`.
pub fn predict(belief: &Categorical<f64>, b: Option<&TransitionMatrix<f64>>) -> Categorical<f64> {
    let m = belief.len();
    let message: Vec<f64> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let p = match b {
                        Some(b) => b.matrix().get(i, j),
                        None => f64::from(u8::from(i == j)),
                    };
                    safe_log(p) * belief[j]
                })
                .sum()
        })
        .collect();
    softmax(&message)
}

/// Adds the evidence `ln(A)ᵀ o` of an observation with identity likelihood.
pub fn correct(prior: &Categorical<f64>, observed: Option<usize>) -> Categorical<f64> {
    let Some(o) = observed else {
        return prior.clone();
    };
    let logits: Vec<f64> = prior
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| safe_log(p) + safe_log(f64::from(u8::from(i == o))))
        .collect();
    softmax(&logits)
}

/// One perception step for every state. Returns `(prior messages, posterior beliefs)`.
///
/// States acted on by `last_action` use its transition, all others the identity.
pub fn update_beliefs(
    registry: &StateRegistry,
    beliefs: &[Categorical<f64>],
    observations: &[Option<usize>],
    last_action: Option<&GroundAction>,
) -> Result<(Vec<Categorical<f64>>, Vec<Categorical<f64>>)> {
    if beliefs.len() != registry.len() || observations.len() != registry.len() {
        return Err(DomainError::UnknownState(format!(
            "expected {} states, got {} beliefs and {} observations",
            registry.len(),
            beliefs.len(),
            observations.len()
        )));
    }
    let mut priors = Vec::with_capacity(beliefs.len());
    let mut posteriors = Vec::with_capacity(beliefs.len());
    for (i, (belief, obs)) in beliefs.iter().zip(observations).enumerate() {
        let var = registry.get(StateId(i));
        if belief.len() != var.m() {
            return Err(DomainError::IndexOutOfRange {
                state: var.id.clone(),
                index: belief.len(),
                m: var.m(),
            });
        }
        if let Some(o) = *obs {
            if o >= var.m() {
                return Err(DomainError::IndexOutOfRange { state: var.id.clone(), index: o, m: var.m() });
            }
        }
        let prior = predict(belief, last_action.and_then(|a| a.transition(StateId(i))));
        posteriors.push(correct(&prior, *obs));
        priors.push(prior);
    }
    Ok((priors, posteriors))
}

/// Most probable value of each belief; ties go to the lowest index.
pub fn logical_state(beliefs: &[Categorical<f64>]) -> LogicalState {
    LogicalState::new(beliefs.iter().map(Categorical::argmax).collect())
}
