//! Reactive task execution with behavior trees whose prior nodes delegate
//! action selection to a discrete active inference agent.
//!
//! The inference core is generic over `f32` and `f64`; the symbolic layers
//! above it work in `f64`.

pub mod btree;
pub mod domain;
pub mod episode;
pub mod inference;
pub mod scalar;
pub mod scenario;
pub mod selector;
pub mod sim;

use thiserror::Error;

pub use scalar::Scalar;

pub type Belief = inference::Categorical<f64>;
pub type BeliefF32 = inference::Categorical<f32>;
pub type Model = inference::GenerativeModel<f64>;
pub type ModelF32 = inference::GenerativeModel<f32>;
pub type Outcome = inference::InferenceOutcome<f64>;
pub type OutcomeF32 = inference::InferenceOutcome<f32>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),

    #[error(transparent)]
    Domain(#[from] domain::DomainError),

    #[error(transparent)]
    Inference(#[from] inference::InferenceError),

    #[error(transparent)]
    Sim(#[from] sim::SimError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
