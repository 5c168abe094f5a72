use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::ast::{Name, Process, Trace};
use super::normal::{normalize, NormalForm};
use super::reduce::{RedexEvent, Reducer};
use super::ProcessError;
use crate::engine::SearchBudget;

/// How the scheduler picks among enabled redexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Always the first candidate in enumeration order.
    First,
    /// Uniformly at random from a ChaCha8 stream seeded with the value.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOutcome {
    pub final_state: NormalForm,
    pub events: Vec<RedexEvent>,
    /// Traces sent by finished program executions, in order.
    pub traces: Vec<(Name, Trace)>,
}

impl RunOutcome {
    pub fn program_steps(&self) -> usize {
        self.events.iter().filter(|e| e.is_program_step()).count()
    }
}

/// A failed run together with everything that happened before the failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct RunError {
    pub error: ProcessError,
    pub partial: Box<RunOutcome>,
}

/// Reduces `p` until no redex is enabled.
pub fn run(p: &Process, policy: Policy, max_steps: usize, budget: SearchBudget) -> Result<RunOutcome, RunError> {
    let reducer = Reducer::new(budget);
    let mut rng = match policy {
        Policy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Policy::First => None,
    };
    let mut out = RunOutcome {
        final_state: normalize(p),
        ..RunOutcome::default()
    };
    loop {
        let mut cands = match reducer.candidates(&out.final_state) {
            Ok(c) => c,
            Err(error) => return Err(RunError { error, partial: Box::new(out) }),
        };
        if cands.is_empty() {
            return Ok(out);
        }
        if out.events.len() >= max_steps {
            return Err(RunError {
                error: ProcessError::StepLimit(max_steps),
                partial: Box::new(out),
            });
        }
        let pick = match rng.as_mut() {
            Some(rng) => rng.random_range(0..cands.len()),
            None => 0,
        };
        let mut cand = cands.swap_remove(pick);
        cand.event.step_index = out.events.len();
        if let Some(emitted) = &cand.event.emitted {
            out.traces.push(emitted.clone());
        }
        out.events.push(cand.event);
        out.final_state = cand.next;
    }
}
