use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::lang::{Language, Symbol, Term};

macro_rules! identifier {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub Symbol);

        impl $name {
            pub fn new(s: &str) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name::new(s)
            }
        }
    };
}

identifier!(
    /// A channel name.
    Name
);
identifier!(
    /// A variable standing for a language.
    LangVar
);
identifier!(
    /// A variable standing for a trace.
    TraceVar
);

/// Language builder expression: `l | L | ℓ union ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LangExpr {
    Var(LangVar),
    Lit(Arc<Language>),
    Union(Box<LangExpr>, Box<LangExpr>),
}

impl LangExpr {
    pub fn lit(lang: Language) -> LangExpr {
        LangExpr::Lit(Arc::new(lang))
    }

    pub fn union(left: LangExpr, right: LangExpr) -> LangExpr {
        LangExpr::Union(Box::new(left), Box::new(right))
    }

    pub fn as_literal(&self) -> Option<&Arc<Language>> {
        match self {
            LangExpr::Lit(l) => Some(l),
            _ => None,
        }
    }

    /// Number of `union` nodes; strictly decreases with every evaluation step.
    pub fn union_count(&self) -> usize {
        match self {
            LangExpr::Var(_) | LangExpr::Lit(_) => 0,
            LangExpr::Union(a, b) => 1 + a.union_count() + b.union_count(),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<LangVar>) {
        match self {
            LangExpr::Var(v) => {
                out.insert(v.clone());
            }
            LangExpr::Lit(_) => {}
            LangExpr::Union(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }
}

/// A finite sequence of ground transition labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Trace(pub Vec<Term>);

impl Trace {
    pub fn empty() -> Trace {
        Trace(Vec::new())
    }

    pub fn labels(&self) -> &[Term] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, label: Term) {
        self.0.push(label);
    }

    pub fn contains(&self, label: &Term) -> bool {
        self.0.contains(label)
    }
}

/// Labels separated by spaces; the empty trace is `[]`.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("[]");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromIterator<Term> for Trace {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        Trace(iter.into_iter().collect())
    }
}

/// Trace position in a process: a trace variable or a literal trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceExpr {
    Var(TraceVar),
    Lit(Trace),
}

impl TraceExpr {
    pub fn as_literal(&self) -> Option<&Trace> {
        match self {
            TraceExpr::Lit(t) => Some(t),
            TraceExpr::Var(_) => None,
        }
    }
}

/// A program execution `exec(ℓ, x, t, 𝔗)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exec {
    pub lang: LangExpr,
    pub result: Name,
    /// Step predicate queried for transitions; `None` means `-->`.
    pub step_pred: Option<Symbol>,
    pub program: Term,
    pub trace: Trace,
}

impl Exec {
    pub fn new(lang: LangExpr, result: Name, program: Term) -> Exec {
        Exec {
            lang,
            result,
            step_pred: None,
            program,
            trace: Trace::empty(),
        }
    }

    pub fn step_predicate(&self) -> &str {
        self.step_pred
            .as_deref()
            .unwrap_or(crate::lang::STEP_PREDICATE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Nil,
    Input {
        chan: Name,
        bind: Name,
        cont: Box<Process>,
    },
    Output {
        chan: Name,
        msg: Name,
        cont: Box<Process>,
    },
    Par(Box<Process>, Box<Process>),
    Choice(Box<Process>, Box<Process>),
    Restrict(Name, Box<Process>),
    Replicate(Box<Process>),
    Exec(Exec),
    IsInTrace {
        label: Term,
        trace: TraceExpr,
        then: Box<Process>,
        otherwise: Box<Process>,
    },
    LangInput {
        chan: Name,
        bind: LangVar,
        cont: Box<Process>,
    },
    LangOutput {
        chan: Name,
        lang: LangExpr,
        cont: Box<Process>,
    },
    TraceInput {
        chan: Name,
        bind: TraceVar,
        cont: Box<Process>,
    },
    TraceOutput {
        chan: Name,
        trace: TraceExpr,
        cont: Box<Process>,
    },
}

/// The three sorts of communication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Name,
    Language,
    Trace,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Name => "name",
            Sort::Language => "language",
            Sort::Trace => "trace",
        })
    }
}

impl Process {
    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Process, b: Process) -> Process {
        Process::Choice(Box::new(a), Box::new(b))
    }

    pub fn restrict(x: impl Into<Name>, p: Process) -> Process {
        Process::Restrict(x.into(), Box::new(p))
    }

    pub fn replicate(p: Process) -> Process {
        Process::Replicate(Box::new(p))
    }

    pub fn input(chan: impl Into<Name>, bind: impl Into<Name>, cont: Process) -> Process {
        Process::Input {
            chan: chan.into(),
            bind: bind.into(),
            cont: Box::new(cont),
        }
    }

    pub fn output(chan: impl Into<Name>, msg: impl Into<Name>, cont: Process) -> Process {
        Process::Output {
            chan: chan.into(),
            msg: msg.into(),
            cont: Box::new(cont),
        }
    }

    pub fn lang_input(chan: impl Into<Name>, bind: impl Into<LangVar>, cont: Process) -> Process {
        Process::LangInput {
            chan: chan.into(),
            bind: bind.into(),
            cont: Box::new(cont),
        }
    }

    pub fn lang_output(chan: impl Into<Name>, lang: LangExpr, cont: Process) -> Process {
        Process::LangOutput {
            chan: chan.into(),
            lang,
            cont: Box::new(cont),
        }
    }

    pub fn trace_input(chan: impl Into<Name>, bind: impl Into<TraceVar>, cont: Process) -> Process {
        Process::TraceInput {
            chan: chan.into(),
            bind: bind.into(),
            cont: Box::new(cont),
        }
    }

    pub fn trace_output(chan: impl Into<Name>, trace: TraceExpr, cont: Process) -> Process {
        Process::TraceOutput {
            chan: chan.into(),
            trace,
            cont: Box::new(cont),
        }
    }

    pub fn exec(exec: Exec) -> Process {
        Process::Exec(exec)
    }

    pub fn is_in_trace(label: Term, trace: TraceExpr, then: Process, otherwise: Process) -> Process {
        Process::IsInTrace {
            label,
            trace,
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        }
    }

    /// Parallel composition of all `threads`, `0` when empty.
    pub fn par_all(threads: impl IntoIterator<Item = Process>) -> Process {
        let mut threads: Vec<Process> = threads.into_iter().collect();
        match threads.len() {
            0 => Process::Nil,
            _ => {
                let mut acc = threads.pop().unwrap();
                while let Some(t) = threads.pop() {
                    acc = Process::par(t, acc);
                }
                acc
            }
        }
    }

    /// For an input or output prefix: its channel, polarity (true = input) and sort.
    pub fn prefix(&self) -> Option<(&Name, bool, Sort)> {
        match self {
            Process::Input { chan, .. } => Some((chan, true, Sort::Name)),
            Process::Output { chan, .. } => Some((chan, false, Sort::Name)),
            Process::LangInput { chan, .. } => Some((chan, true, Sort::Language)),
            Process::LangOutput { chan, .. } => Some((chan, false, Sort::Language)),
            Process::TraceInput { chan, .. } => Some((chan, true, Sort::Trace)),
            Process::TraceOutput { chan, .. } => Some((chan, false, Sort::Trace)),
            _ => None,
        }
    }

    /// Free channel names.
    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free_names(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_names(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        let mut note = |n: &Name, bound: &Vec<Name>| {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        };
        match self {
            Process::Nil => {}
            Process::Input { chan, bind, cont } => {
                note(chan, bound);
                bound.push(bind.clone());
                cont.collect_free_names(bound, out);
                bound.pop();
            }
            Process::Restrict(x, cont) => {
                bound.push(x.clone());
                cont.collect_free_names(bound, out);
                bound.pop();
            }
            Process::Output { chan, msg, cont } => {
                note(chan, bound);
                note(msg, bound);
                cont.collect_free_names(bound, out);
            }
            Process::Par(a, b) | Process::Choice(a, b) => {
                a.collect_free_names(bound, out);
                b.collect_free_names(bound, out);
            }
            Process::Replicate(p) => p.collect_free_names(bound, out),
            Process::Exec(e) => note(&e.result, bound),
            Process::IsInTrace {
                then, otherwise, ..
            } => {
                then.collect_free_names(bound, out);
                otherwise.collect_free_names(bound, out);
            }
            Process::LangInput { chan, cont, .. }
            | Process::LangOutput { chan, cont, .. }
            | Process::TraceInput { chan, cont, .. }
            | Process::TraceOutput { chan, cont, .. } => {
                note(chan, bound);
                cont.collect_free_names(bound, out);
            }
        }
    }

    /// Every channel name occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Process::Nil => {}
            Process::Input { chan, bind, cont } | Process::Output { chan, msg: bind, cont } => {
                out.insert(chan.clone());
                out.insert(bind.clone());
                cont.all_names(out);
            }
            Process::Restrict(x, cont) => {
                out.insert(x.clone());
                cont.all_names(out);
            }
            Process::Par(a, b) | Process::Choice(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Process::Replicate(p) => p.all_names(out),
            Process::Exec(e) => {
                out.insert(e.result.clone());
            }
            Process::IsInTrace {
                then, otherwise, ..
            } => {
                then.all_names(out);
                otherwise.all_names(out);
            }
            Process::LangInput { chan, cont, .. }
            | Process::LangOutput { chan, cont, .. }
            | Process::TraceInput { chan, cont, .. }
            | Process::TraceOutput { chan, cont, .. } => {
                out.insert(chan.clone());
                cont.all_names(out);
            }
        }
    }

    /// Free language variables and free trace variables.
    pub fn free_vars(&self) -> (BTreeSet<LangVar>, BTreeSet<TraceVar>) {
        let mut langs = BTreeSet::new();
        let mut traces = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut Vec::new(), &mut langs, &mut traces);
        (langs, traces)
    }

    fn collect_free_vars(
        &self,
        lbound: &mut Vec<LangVar>,
        tbound: &mut Vec<TraceVar>,
        langs: &mut BTreeSet<LangVar>,
        traces: &mut BTreeSet<TraceVar>,
    ) {
        let lang_expr = |e: &LangExpr, lbound: &Vec<LangVar>, langs: &mut BTreeSet<LangVar>| {
            let mut vs = BTreeSet::new();
            e.free_vars(&mut vs);
            langs.extend(vs.into_iter().filter(|v| !lbound.contains(v)));
        };
        let trace_expr = |e: &TraceExpr, tbound: &Vec<TraceVar>, traces: &mut BTreeSet<TraceVar>| {
            if let TraceExpr::Var(v) = e {
                if !tbound.contains(v) {
                    traces.insert(v.clone());
                }
            }
        };
        match self {
            Process::Nil => {}
            Process::Input { cont, .. }
            | Process::Output { cont, .. }
            | Process::Restrict(_, cont)
            | Process::Replicate(cont) => cont.collect_free_vars(lbound, tbound, langs, traces),
            Process::Par(a, b) | Process::Choice(a, b) => {
                a.collect_free_vars(lbound, tbound, langs, traces);
                b.collect_free_vars(lbound, tbound, langs, traces);
            }
            Process::Exec(e) => lang_expr(&e.lang, lbound, langs),
            Process::IsInTrace {
                trace,
                then,
                otherwise,
                ..
            } => {
                trace_expr(trace, tbound, traces);
                then.collect_free_vars(lbound, tbound, langs, traces);
                otherwise.collect_free_vars(lbound, tbound, langs, traces);
            }
            Process::LangInput { bind, cont, .. } => {
                lbound.push(bind.clone());
                cont.collect_free_vars(lbound, tbound, langs, traces);
                lbound.pop();
            }
            Process::LangOutput { lang, cont, .. } => {
                lang_expr(lang, lbound, langs);
                cont.collect_free_vars(lbound, tbound, langs, traces);
            }
            Process::TraceInput { bind, cont, .. } => {
                tbound.push(bind.clone());
                cont.collect_free_vars(lbound, tbound, langs, traces);
                tbound.pop();
            }
            Process::TraceOutput { trace, cont, .. } => {
                trace_expr(trace, tbound, traces);
                cont.collect_free_vars(lbound, tbound, langs, traces);
            }
        }
    }

    /// No free language or trace variables.
    pub fn is_closed(&self) -> bool {
        let (l, t) = self.free_vars();
        l.is_empty() && t.is_empty()
    }

    /// Number of process constructors.
    pub fn size(&self) -> usize {
        match self {
            Process::Nil | Process::Exec(_) => 1,
            Process::Input { cont, .. }
            | Process::Output { cont, .. }
            | Process::Restrict(_, cont)
            | Process::Replicate(cont)
            | Process::LangInput { cont, .. }
            | Process::LangOutput { cont, .. }
            | Process::TraceInput { cont, .. }
            | Process::TraceOutput { cont, .. } => 1 + cont.size(),
            Process::Par(a, b) | Process::Choice(a, b) => 1 + a.size() + b.size(),
            Process::IsInTrace {
                then, otherwise, ..
            } => 1 + then.size() + otherwise.size(),
        }
    }
}
