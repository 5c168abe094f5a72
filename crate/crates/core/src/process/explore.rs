//! Breadth-first enumeration of the reachable state space.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::ast::{Name, Process, Trace};
use super::normal::{normalize, NormalForm};
use super::reduce::{RedexEvent, Reducer};
use super::ProcessError;
use crate::engine::SearchBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreLimits {
    /// Reductions from the initial state beyond which nothing is expanded.
    pub max_depth: usize,
    /// Distinct search nodes before giving up with `StateLimit`.
    pub max_states: usize,
    /// Unfoldings allowed per replicated thread along a path.
    pub repl_bound: usize,
    pub budget: SearchBudget,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_depth: 50,
            max_states: 10_000,
            repl_bound: 2,
            budget: SearchBudget::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Exploration {
    /// Distinct reachable states; index 0 is the initial state.
    pub states: Vec<NormalForm>,
    /// `(from, to, event)` with indices into `states`.
    pub edges: Vec<(usize, usize, RedexEvent)>,
    /// States with no enabled redex.
    pub terminal: BTreeSet<usize>,
    /// States left unexpanded because they lie at the depth bound.
    pub cut: BTreeSet<usize>,
    /// Every `(channel, trace)` sent by a finished program execution.
    pub traces: BTreeSet<(Name, Trace)>,
}

impl Exploration {
    pub fn index_of(&self, nf: &NormalForm) -> Option<usize> {
        self.states.iter().position(|s| s == nf)
    }

    pub fn contains(&self, nf: &NormalForm) -> bool {
        self.index_of(nf).is_some()
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = &NormalForm> {
        self.terminal.iter().map(|i| &self.states[*i])
    }

    /// The completed traces, ignoring their channels.
    pub fn trace_set(&self) -> BTreeSet<Trace> {
        self.traces.iter().map(|(_, t)| t.clone()).collect()
    }

    /// Completed traces sent on `channel`.
    pub fn traces_on(&self, channel: &str) -> BTreeSet<Trace> {
        self.traces
            .iter()
            .filter(|(c, _)| c.as_str() == channel)
            .map(|(_, t)| t.clone())
            .collect()
    }
}

type Counters = BTreeMap<Process, usize>;

/// Explores every interleaving of `p` within `limits`.
pub fn explore(p: &Process, limits: ExploreLimits) -> Result<Exploration, ProcessError> {
    let reducer = Reducer::new(limits.budget);
    let mut ex = Exploration::default();
    let mut index: HashMap<NormalForm, usize> = HashMap::new();
    let mut seen: HashSet<(usize, Counters)> = HashSet::new();
    let mut edge_seen: HashSet<(usize, usize, String, String)> = HashSet::new();
    let mut queue: VecDeque<(usize, Counters, usize)> = VecDeque::new();

    let mut intern = |nf: NormalForm, ex: &mut Exploration| -> usize {
        *index.entry(nf.clone()).or_insert_with(|| {
            ex.states.push(nf);
            ex.states.len() - 1
        })
    };

    let start = intern(normalize(p), &mut ex);
    seen.insert((start, Counters::new()));
    queue.push_back((start, Counters::new(), 0));
    while let Some((state, counters, depth)) = queue.pop_front() {
        let cands = reducer.candidates(&ex.states[state])?;
        if cands.is_empty() {
            ex.terminal.insert(state);
            continue;
        }
        if depth >= limits.max_depth {
            ex.cut.insert(state);
            continue;
        }
        for cand in cands {
            let mut next_counters = counters.clone();
            for r in &cand.unfolded {
                *next_counters.entry(r.clone()).or_default() += 1;
            }
            if next_counters.values().any(|n| *n > limits.repl_bound) {
                continue;
            }
            let to = intern(cand.next, &mut ex);
            if let Some(emitted) = &cand.event.emitted {
                ex.traces.insert(emitted.clone());
            }
            if edge_seen.insert((state, to, cand.event.name(), cand.event.detail.clone())) {
                ex.edges.push((state, to, cand.event));
            }
            if seen.insert((to, next_counters.clone())) {
                if seen.len() > limits.max_states {
                    return Err(ProcessError::StateLimit(limits.max_states));
                }
                queue.push_back((to, next_counters, depth + 1));
            }
        }
    }
    Ok(ex)
}
