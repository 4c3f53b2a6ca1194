//! Seeded symbolic world: ground-truth fluents, observability, noisy sensing,
//! timed actions with sampled outcomes and scripted perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{GroundAction, LogicalState, StateId, StateRegistry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("`{0}` started while another action is running")]
    ActionRunning(String),

    #[error("state #{state} has no value {index}")]
    InvalidFluent { state: usize, index: usize },

    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("perturbation at tick {0} is listed after a later one")]
    UnsortedSchedule(u64),

    #[error("noise probability {0} is outside [0, 1]")]
    InvalidNoise(f64),
}

/// Scripted change to the world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationEvent {
    pub at_tick: u64,
    pub assignments: Vec<(StateId, usize)>,
    pub observability: Vec<(StateId, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunningAction {
    pub action: GroundAction,
    pub started_at: u64,
    pub will_succeed: bool,
}

/// An action that finished during a step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completion {
    pub action: GroundAction,
    pub succeeded: bool,
}

#[derive(Debug, Clone)]
pub struct World {
    registry: StateRegistry,
    fluents: Vec<usize>,
    observable: Vec<bool>,
    noise_p: f64,
    deterministic: bool,
    tick: u64,
    rng: ChaCha8Rng,
    schedule: Vec<PerturbationEvent>,
    next_event: usize,
    running: Option<RunningAction>,
}

impl World {
    /// Events scheduled at tick 0 are applied immediately.
    pub fn new(
        registry: StateRegistry,
        fluents: Vec<usize>,
        observable: Vec<bool>,
        noise_p: f64,
        seed: u64,
        deterministic: bool,
        schedule: Vec<PerturbationEvent>,
    ) -> Result<Self, SimError> {
        let n = registry.len();
        for len in [fluents.len(), observable.len()] {
            if len != n {
                return Err(SimError::WrongLength { expected: n, got: len });
            }
        }
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(SimError::InvalidNoise(noise_p));
        }
        let check = |state: usize, index: usize| {
            if state >= n || index >= registry.get(StateId(state)).m() {
                Err(SimError::InvalidFluent { state, index })
            } else {
                Ok(())
            }
        };
        for (s, &v) in fluents.iter().enumerate() {
            check(s, v)?;
        }
        for (i, e) in schedule.iter().enumerate() {
            if i > 0 && schedule[i - 1].at_tick > e.at_tick {
                return Err(SimError::UnsortedSchedule(schedule[i - 1].at_tick));
            }
            for &(s, v) in &e.assignments {
                check(s.0, v)?;
            }
            for &(s, _) in &e.observability {
                check(s.0, 0)?;
            }
        }
        let mut world = Self {
            registry,
            fluents,
            observable,
            noise_p,
            deterministic,
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            schedule,
            next_event: 0,
            running: None,
        };
        world.apply_due_events();
        Ok(world)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn fluents(&self) -> &[usize] {
        &self.fluents
    }

    pub fn observable(&self) -> &[bool] {
        &self.observable
    }

    pub fn running(&self) -> Option<&RunningAction> {
        self.running.as_ref()
    }

    /// Ground truth as a logical state.
    pub fn truth(&self) -> LogicalState {
        LogicalState::new(self.fluents.clone())
    }

    /// One reading per state; noise replaces the true value by a uniformly
    /// chosen wrong one.
    pub fn observe(&mut self) -> Vec<Option<usize>> {
        (0..self.fluents.len())
            .map(|s| {
                if !self.observable[s] {
                    return None;
                }
                let truth = self.fluents[s];
                if self.noise_p > 0.0 && self.rng.random_bool(self.noise_p) {
                    let m = self.registry.get(StateId(s)).m();
                    let wrong = self.rng.random_range(0..m - 1);
                    return Some(if wrong >= truth { wrong + 1 } else { wrong });
                }
                Some(truth)
            })
            .collect()
    }

    /// Starts `action`. It can only succeed if its preconditions hold in the
    /// ground truth right now.
    pub fn start_action(&mut self, action: GroundAction) -> Result<&RunningAction, SimError> {
        if let Some(r) = &self.running {
            return Err(SimError::ActionRunning(format!("{} ({} running)", action.label(), r.action.label())));
        }
        let enabled = action.preconditions.iter().all(|p| self.fluents[p.state.0] == p.index);
        let will_succeed = enabled
            && (self.deterministic || self.rng.random_bool(action.success_probability().clamp(0.0, 1.0)));
        Ok(self.running.insert(RunningAction { action, started_at: self.tick, will_succeed }))
    }

    /// Abandons the running action without touching the fluents.
    pub fn cancel(&mut self) -> Option<RunningAction> {
        self.running.take()
    }

    /// Advances one tick: due perturbations first, then completion of the
    /// running action.
    pub fn step(&mut self) -> Option<Completion> {
        self.tick += 1;
        self.apply_due_events();
        let due = self
            .running
            .as_ref()
            .is_some_and(|r| self.tick - r.started_at >= u64::from(r.action.duration_ticks));
        if !due {
            return None;
        }
        let r = self.running.take()?;
        if r.will_succeed {
            for p in &r.action.postconditions {
                self.fluents[p.state.0] = p.index;
            }
        }
        Some(Completion { action: r.action, succeeded: r.will_succeed })
    }

    fn apply_due_events(&mut self) {
        while let Some(e) = self.schedule.get(self.next_event) {
            if e.at_tick > self.tick {
                break;
            }
            for &(s, v) in &e.assignments {
                self.fluents[s.0] = v;
            }
            for &(s, o) in &e.observability {
                self.observable[s.0] = o;
            }
            self.next_event += 1;
        }
    }
}
