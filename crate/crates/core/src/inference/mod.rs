//! Discrete active inference over factorized categorical state spaces.
//!
//! Beliefs over each state factor are updated by a fixed-point message
//! passing scheme, policies are scored by variational free energy `F`
//! (fit to past and present evidence) and expected free energy `G`
//! (divergence of predicted outcomes from log-preferences plus ambiguity),
//! and the policy posterior is `σ(-G - F)`.
//!
//! Every logarithm of a probability is clamped at [`LOG_FLOOR`] so that the
//! identity likelihoods used throughout the planner never produce `ln 0`.

mod energy;
mod engine;
mod posterior;
mod types;

pub use energy::{expected_free_energy, variational_free_energy};
pub use engine::{run_active_inference, Factor, GenerativeModel, InferenceOutcome};
pub use posterior::{
    bayesian_model_average, policy_posterior, select_action, update_posterior_states,
    CONVERGENCE_TOLERANCE, MAX_SWEEPS,
};
pub use types::{
    ActionId, Categorical, LikelihoodMatrix, LogPreference, Matrix, Policy, TransitionMatrix,
};

use thiserror::Error;

use crate::scalar::Scalar;

/// Floor applied before taking logarithms of probabilities.
pub const LOG_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("invalid categorical distribution: {0}")]
    InvalidCategorical(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("preference entry {index} is not finite ({value})")]
    NonFinitePreference { index: usize, value: String },

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("policy must contain at least one action")]
    EmptyPolicy,

    #[error("no policies to evaluate")]
    NoPolicies,
}

pub type Result<T> = std::result::Result<T, InferenceError>;

/// `ln(max(p, LOG_FLOOR))`
#[inline]
pub fn safe_log<S: Scalar>(p: S) -> S {
    p.max(S::lit(LOG_FLOOR)).ln()
}

/// Elementwise [`safe_log`].
pub fn safe_log_all<S: Scalar>(values: &[S]) -> Vec<S> {
    values.iter().map(|&p| safe_log(p)).collect()
}

/// Normalized exponential, computed after subtracting the maximum entry.
pub fn softmax<S: Scalar>(values: &[S]) -> Categorical<S> {
    assert!(!values.is_empty(), "softmax of an empty vector");
    let max = values.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = values.iter().map(|&v| (v - max).exp()).collect();
    let sum = exps.iter().fold(S::zero(), |acc, &e| acc + e);
    Categorical::from_normalized(exps.into_iter().map(|e| e / sum).collect())
}

fn mismatch(what: impl Into<String>) -> InferenceError {
    InferenceError::ModelInconsistency(what.into())
}
