//! Processes: syntax tree, substitutions, structural congruence, reduction,
//! and the two drivers (a scheduled run and exhaustive exploration).

pub mod ast;
pub mod explore;
pub mod normal;
pub mod reduce;
pub mod run;
pub mod subst;

use thiserror::Error;

use crate::engine::EngineError;
use crate::lang::LangError;

pub use ast::{Exec, LangExpr, LangVar, Name, Process, Sort, Trace, TraceExpr, TraceVar};
pub use explore::{explore, Exploration, ExploreLimits};
pub use normal::{is_reserved_name, normalize, NormalForm};
pub use reduce::{
    exe_step, is_in_trace, lan_star, lan_step, reduce_candidates, Candidate, LanStep, RedexEvent,
    Reducer, RuleName,
};
pub use run::{run, Policy, RunError, RunOutcome};
pub use subst::{subst_channel, subst_lang, subst_trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("sort mismatch on channel `{channel}`: {input} input meets {output} output")]
    SortMismatch {
        channel: String,
        input: Sort,
        output: Sort,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Language(#[from] LangError),
    #[error("language variable `{0}` is not bound")]
    OpenLangExpr(String),
    #[error("trace variable `{0}` is not bound")]
    OpenTrace(String),
    #[error("step limit of {0} reached")]
    StepLimit(usize),
    #[error("state limit of {0} reached")]
    StateLimit(usize),
}
