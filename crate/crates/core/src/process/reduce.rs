//! One-step reduction: `→lan`, `→exe`, and the enumeration of every enabled
//! redex of a process in normal form.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::ast::{Exec, LangExpr, Name, Process, Trace, TraceExpr};
use super::normal::{flatten_fresh, normalize, NormalForm};
use super::subst::{subst_channel, subst_lang, subst_trace};
use super::ProcessError;
use crate::engine::{compile, query_step_with, ClauseProgram, SearchBudget};
use crate::lang::{union, Language, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleName {
    Comm,
    CommLang,
    CommTrace,
    Exec,
    ExecCtx,
    IsInTrace1,
    IsInTrace2,
    ProgramStep,
    ProgramEnd,
    Union,
    UnionCtx1,
    UnionCtx2,
}

impl RuleName {
    pub const ALL: [RuleName; 12] = [
        RuleName::Comm,
        RuleName::CommLang,
        RuleName::CommTrace,
        RuleName::Exec,
        RuleName::ExecCtx,
        RuleName::IsInTrace1,
        RuleName::IsInTrace2,
        RuleName::ProgramStep,
        RuleName::ProgramEnd,
        RuleName::Union,
        RuleName::UnionCtx1,
        RuleName::UnionCtx2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Comm => "comm",
            RuleName::CommLang => "comm-lang",
            RuleName::CommTrace => "comm-trace",
            RuleName::Exec => "exec",
            RuleName::ExecCtx => "exec-ctx",
            RuleName::IsInTrace1 => "is-in-trace1",
            RuleName::IsInTrace2 => "is-in-trace2",
            RuleName::ProgramStep => "program-step",
            RuleName::ProgramEnd => "program-end",
            RuleName::Union => "union",
            RuleName::UnionCtx1 => "union-ctx1",
            RuleName::UnionCtx2 => "union-ctx2",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// A fired reduction rule. `premises` lists the rules used to derive its
/// premise, outermost first (e.g. `exec-ctx` over `union-ctx1` over `union`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RedexEvent {
    pub step_index: usize,
    pub rule: RuleName,
    pub premises: Vec<RuleName>,
    pub detail: String,
    /// Channel and trace sent by a `program-end`.
    pub emitted: Option<(Name, Trace)>,
}

impl RedexEvent {
    fn new(rule: RuleName, premises: Vec<RuleName>, detail: String) -> RedexEvent {
        RedexEvent {
            step_index: 0,
            rule,
            premises,
            detail,
            emitted: None,
        }
    }

    /// The rule path, e.g. `exec/program-step`.
    pub fn name(&self) -> String {
        std::iter::once(self.rule)
            .chain(self.premises.iter().copied())
            .map(RuleName::as_str)
            .collect::<Vec<_>>()
            .join("/")
    }

    /// True for an `exec` event whose premise is `program-step`.
    pub fn is_program_step(&self) -> bool {
        self.rule == RuleName::Exec && self.premises.first() == Some(&RuleName::ProgramStep)
    }

    pub fn is_program_end(&self) -> bool {
        self.rule == RuleName::Exec && self.premises.first() == Some(&RuleName::ProgramEnd)
    }
}

/// A successor state together with the rule that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub next: NormalForm,
    pub event: RedexEvent,
    /// Replicated threads `!P` that were unfolded, once per copy.
    pub unfolded: Vec<Process>,
}

/// Result of one `→lan` step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LanStep {
    Done(Arc<Language>),
    /// The reduct and the rules used, outermost first.
    Step(LangExpr, Vec<RuleName>),
}

fn open_lang(e: &LangExpr) -> ProcessError {
    let mut vars = BTreeSet::new();
    e.free_vars(&mut vars);
    ProcessError::OpenLangExpr(vars.into_iter().next().map(|v| v.to_string()).unwrap_or_default())
}

/// One `→lan` step, evaluating the left operand of `union` first.
pub fn lan_step(e: &LangExpr) -> Result<LanStep, ProcessError> {
    match e {
        LangExpr::Lit(l) => Ok(LanStep::Done(l.clone())),
        LangExpr::Var(_) => Err(open_lang(e)),
        LangExpr::Union(a, b) => match (a.as_ref(), b.as_ref()) {
            (LangExpr::Lit(la), LangExpr::Lit(lb)) => Ok(LanStep::Step(
                LangExpr::Lit(Arc::new(union(la, lb)?)),
                vec![RuleName::Union],
            )),
            (LangExpr::Lit(_), _) => match lan_step(b)? {
                LanStep::Step(b2, mut rules) => {
                    rules.insert(0, RuleName::UnionCtx2);
                    Ok(LanStep::Step(LangExpr::union((**a).clone(), b2), rules))
                }
                LanStep::Done(_) => unreachable!("non-literal operand"),
            },
            _ => match lan_step(a)? {
                LanStep::Step(a2, mut rules) => {
                    rules.insert(0, RuleName::UnionCtx1);
                    Ok(LanStep::Step(LangExpr::union(a2, (**b).clone()), rules))
                }
                LanStep::Done(_) => unreachable!("non-literal operand"),
            },
        },
    }
}

/// `→lan*` to a literal, returning the rules of every step in order.
pub fn lan_star(e: &LangExpr) -> Result<(Arc<Language>, Vec<RuleName>), ProcessError> {
    let mut cur = e.clone();
    let mut rules = Vec::new();
    loop {
        match lan_step(&cur)? {
            LanStep::Done(l) => return Ok((l, rules)),
            LanStep::Step(next, rs) => {
                rules.extend(rs);
                cur = next;
            }
        }
    }
}

pub fn is_in_trace(t: &Term, trace: &Trace) -> bool {
    trace.contains(t)
}

/// `e` with every literal shown by its label.
fn short_lang(e: &LangExpr) -> String {
    match e {
        LangExpr::Var(v) => v.to_string(),
        LangExpr::Lit(l) => l.label(),
        LangExpr::Union(a, b) => format!("union({}, {})", short_lang(a), short_lang(b)),
    }
}

fn bracketed(t: &Trace) -> String {
    let labels: Vec<String> = t.labels().iter().map(Term::to_string).collect();
    format!("[{}]", labels.join(" "))
}

/// A `→exe` successor of a program execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExeStep {
    /// `program-step` with the given label.
    Step { label: Term, next: Exec },
    /// `program-end`: the trace output `x<T>.0`.
    End(Process),
}

fn exe_successors(e: &Exec, prog: &ClauseProgram, budget: SearchBudget) -> Result<Vec<ExeStep>, ProcessError> {
    let answers = query_step_with(prog, e.step_predicate(), &e.program, budget)?;
    if answers.is_empty() {
        return Ok(vec![ExeStep::End(Process::trace_output(
            e.result.clone(),
            TraceExpr::Lit(e.trace.clone()),
            Process::Nil,
        ))]);
    }
    Ok(answers
        .into_iter()
        .map(|(label, target)| {
            let mut next = e.clone();
            next.program = target;
            next.trace.push(label.clone());
            ExeStep::Step { label, next }
        })
        .collect())
}

/// Every `→exe` successor of `e`, whose language must already be a literal.
pub fn exe_step(e: &Exec, budget: SearchBudget) -> Result<Vec<ExeStep>, ProcessError> {
    let lang = e.lang.as_literal().ok_or_else(|| open_lang(&e.lang))?;
    exe_successors(e, &compile(lang.clone()), budget)
}

/// Enumerates redexes, caching compiled clause programs per language value.
type ProgramCache = HashMap<usize, (Arc<Language>, Arc<ClauseProgram>)>;

#[derive(Debug, Default)]
pub struct Reducer {
    budget: SearchBudget,
    programs: RefCell<ProgramCache>,
}

/// Where a communication prefix comes from: a top-level thread, or a member
/// of an unfolded copy of a replicated thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Thread(usize),
    Copy { thread: usize, copy: usize, member: usize },
}

struct Offer {
    origin: Origin,
    prefix: Process,
}

type Unfolded = (Vec<Name>, Vec<Process>);

/// Prefix processes a thread offers: itself, or each prefix branch of a choice.
fn prefixes_of(p: &Process, out: &mut Vec<Process>) {
    match p {
        Process::Choice(a, b) => {
            prefixes_of(a, out);
            prefixes_of(b, out);
        }
        p if p.prefix().is_some() => out.push(p.clone()),
        _ => {}
    }
}

fn compatible(a: Origin, b: Origin) -> bool {
    use Origin::*;
    match (a, b) {
        (Thread(i), Thread(j)) => i != j,
        (Thread(_), Copy { copy, .. }) | (Copy { copy, .. }, Thread(_)) => copy == 0,
        (
            Copy {
                thread: t1,
                copy: c1,
                member: m1,
            },
            Copy {
                thread: t2,
                copy: c2,
                member: m2,
            },
        ) => {
            if t1 != t2 {
                c1 == 0 && c2 == 0
            } else {
                (c1 == 0 && c2 == 0 && m1 != m2) || (c1 == 0 && c2 == 1)
            }
        }
    }
}

struct Successor {
    processes: Vec<Process>,
    event: RedexEvent,
}

impl Reducer {
    pub fn new(budget: SearchBudget) -> Reducer {
        Reducer {
            budget,
            programs: RefCell::default(),
        }
    }

    pub fn budget(&self) -> SearchBudget {
        self.budget
    }

    fn program(&self, lang: &Arc<Language>) -> Arc<ClauseProgram> {
        let key = Arc::as_ptr(lang) as usize;
        let mut cache = self.programs.borrow_mut();
        cache
            .entry(key)
            .or_insert_with(|| (lang.clone(), Arc::new(compile(lang.clone()))))
            .1
            .clone()
    }

    /// Successors of a single thread that reduces on its own.
    fn unary(&self, p: &Process) -> Result<Vec<Successor>, ProcessError> {
        match p {
            Process::Exec(e) => match e.lang.as_literal() {
                None => {
                    let LanStep::Step(lang, premises) = lan_step(&e.lang)? else {
                        unreachable!("non-literal language")
                    };
                    let detail = format!("{}: {}", e.result, short_lang(&lang));
                    let next = Exec { lang, ..e.clone() };
                    Ok(vec![Successor {
                        processes: vec![Process::Exec(next)],
                        event: RedexEvent::new(RuleName::ExecCtx, premises, detail),
                    }])
                }
                Some(lang) => {
                    let prog = self.program(lang);
                    let steps = exe_successors(e, &prog, self.budget)?;
                    Ok(steps
                        .into_iter()
                        .map(|s| match s {
                            ExeStep::Step { label, next } => {
                                let detail =
                                    format!("{}: {} --{}--> {}", e.result, e.program, label, next.program);
                                Successor {
                                    processes: vec![Process::Exec(next)],
                                    event: RedexEvent::new(
                                        RuleName::Exec,
                                        vec![RuleName::ProgramStep],
                                        detail,
                                    ),
                                }
                            }
                            ExeStep::End(out) => {
                                let mut event = RedexEvent::new(
                                    RuleName::Exec,
                                    vec![RuleName::ProgramEnd],
                                    format!("{}<{}>", e.result, bracketed(&e.trace)),
                                );
                                event.emitted = Some((e.result.clone(), e.trace.clone()));
                                Successor {
                                    processes: vec![out],
                                    event,
                                }
                            }
                        })
                        .collect())
                }
            },
            Process::IsInTrace {
                label,
                trace,
                then,
                otherwise,
            } => {
                let trace = match trace {
                    TraceExpr::Lit(t) => t,
                    TraceExpr::Var(v) => return Err(ProcessError::OpenTrace(v.to_string())),
                };
                let detail = format!("{} in {}", label, bracketed(trace));
                let (rule, next) = if is_in_trace(label, trace) {
                    (RuleName::IsInTrace1, then)
                } else {
                    (RuleName::IsInTrace2, otherwise)
                };
                Ok(vec![Successor {
                    processes: vec![(**next).clone()],
                    event: RedexEvent::new(rule, Vec::new(), detail),
                }])
            }
            _ => Ok(Vec::new()),
        }
    }

    /// The communication between an input and an output prefix on the same
    /// channel, or `None` if they are not complementary.
    fn communicate(&self, input: &Process, output: &Process) -> Result<Option<Successor>, ProcessError> {
        let (Some((ci, true, si)), Some((co, false, so))) = (input.prefix(), output.prefix()) else {
            return Ok(None);
        };
        if ci != co {
            return Ok(None);
        }
        if si != so {
            return Err(ProcessError::SortMismatch {
                channel: ci.to_string(),
                input: si,
                output: so,
            });
        }
        let succ = match (input, output) {
            (Process::Input { bind, cont, .. }, Process::Output { msg, cont: q, .. }) => Successor {
                processes: vec![subst_channel(cont, msg, bind), (**q).clone()],
                event: RedexEvent::new(RuleName::Comm, Vec::new(), format!("{ci}<{msg}>")),
            },
            (Process::LangInput { bind, cont, .. }, Process::LangOutput { lang, cont: q, .. }) => {
                let (lang, premises) = lan_star(lang)?;
                let detail = format!("{ci}<{}>", lang.label());
                Successor {
                    processes: vec![subst_lang(cont, &lang, bind), (**q).clone()],
                    event: RedexEvent::new(RuleName::CommLang, premises, detail),
                }
            }
            (Process::TraceInput { bind, cont, .. }, Process::TraceOutput { trace, cont: q, .. }) => {
                let trace = match trace {
                    TraceExpr::Lit(t) => t,
                    TraceExpr::Var(v) => return Err(ProcessError::OpenTrace(v.to_string())),
                };
                Successor {
                    processes: vec![subst_trace(cont, trace, bind), (**q).clone()],
                    event: RedexEvent::new(RuleName::CommTrace, Vec::new(), format!("{ci}<{}>", bracketed(trace))),
                }
            }
            _ => unreachable!("prefix sorts agree"),
        };
        Ok(Some(succ))
    }

    /// Every enabled redex of `nf`, in a deterministic order: communications
    /// (inputs by thread order, then outputs), then executions and trace
    /// tests.
    pub fn candidates(&self, nf: &NormalForm) -> Result<Vec<Candidate>, ProcessError> {
        let threads = nf.threads();
        let mut avoid: BTreeSet<Name> = nf.restricted().iter().cloned().collect();
        nf.to_process().all_names(&mut avoid);
        let copies: Vec<Option<[Unfolded; 2]>> = threads
            .iter()
            .map(|t| match t {
                Process::Replicate(body) => {
                    let first = flatten_fresh(body, &mut avoid);
                    let second = flatten_fresh(body, &mut avoid);
                    Some([first, second])
                }
                _ => None,
            })
            .collect();

        let mut offers = Vec::new();
        for (i, t) in threads.iter().enumerate() {
            match &copies[i] {
                Some(cs) => {
                    for (c, (_, members)) in cs.iter().enumerate() {
                        for (m, member) in members.iter().enumerate() {
                            let mut ps = Vec::new();
                            prefixes_of(member, &mut ps);
                            offers.extend(ps.into_iter().map(|prefix| Offer {
                                origin: Origin::Copy {
                                    thread: i,
                                    copy: c,
                                    member: m,
                                },
                                prefix,
                            }));
                        }
                    }
                }
                None => {
                    let mut ps = Vec::new();
                    prefixes_of(t, &mut ps);
                    offers.extend(ps.into_iter().map(|prefix| Offer {
                        origin: Origin::Thread(i),
                        prefix,
                    }));
                }
            }
        }

        let mut out = Vec::new();
        for a in offers.iter().filter(|o| matches!(o.prefix.prefix(), Some((_, true, _)))) {
            for b in offers.iter().filter(|o| matches!(o.prefix.prefix(), Some((_, false, _)))) {
                if !compatible(a.origin, b.origin) {
                    continue;
                }
                if let Some(succ) = self.communicate(&a.prefix, &b.prefix)? {
                    out.push(assemble(nf, &copies, &[a.origin, b.origin], succ));
                }
            }
        }
        for (i, t) in threads.iter().enumerate() {
            match &copies[i] {
                Some(cs) => {
                    for (m, member) in cs[0].1.iter().enumerate() {
                        let origin = Origin::Copy {
                            thread: i,
                            copy: 0,
                            member: m,
                        };
                        for succ in self.unary(member)? {
                            out.push(assemble(nf, &copies, &[origin], succ));
                        }
                    }
                }
                None => {
                    for succ in self.unary(t)? {
                        out.push(assemble(nf, &copies, &[Origin::Thread(i)], succ));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Builds the successor state: the untouched threads, the remaining members
/// of every unfolded copy, and the reducts.
fn assemble(nf: &NormalForm, copies: &[Option<[Unfolded; 2]>], origins: &[Origin], succ: Successor) -> Candidate {
    let threads = nf.threads();
    let mut restricted: Vec<Name> = nf.restricted().to_vec();
    let mut parts: Vec<Process> = Vec::new();
    let mut unfolded = Vec::new();
    let consumed: Vec<usize> = origins
        .iter()
        .filter_map(|o| match o {
            Origin::Thread(i) => Some(*i),
            Origin::Copy { .. } => None,
        })
        .collect();
    for (i, t) in threads.iter().enumerate() {
        if !consumed.contains(&i) {
            parts.push(t.clone());
        }
    }
    let mut used: Vec<(usize, usize)> = Vec::new();
    for o in origins {
        if let Origin::Copy { thread, copy, .. } = *o {
            if !used.contains(&(thread, copy)) {
                used.push((thread, copy));
            }
        }
    }
    for (thread, copy) in used {
        let (names, members) = &copies[thread].as_ref().expect("replicated thread")[copy];
        restricted.extend(names.iter().cloned());
        for (m, member) in members.iter().enumerate() {
            let taken = origins.iter().any(|o| {
                *o == Origin::Copy {
                    thread,
                    copy,
                    member: m,
                }
            });
            if !taken {
                parts.push(member.clone());
            }
        }
        unfolded.push(threads[thread].clone());
    }
    parts.extend(succ.processes);
    let whole = restricted
        .into_iter()
        .rev()
        .fold(Process::par_all(parts), |acc, x| Process::restrict(x, acc));
    Candidate {
        next: normalize(&whole),
        event: succ.event,
        unfolded,
    }
}

/// Every enabled redex of `p` under the default search budget.
pub fn reduce_candidates(p: &Process) -> Result<Vec<Candidate>, ProcessError> {
    Reducer::default().candidates(&normalize(p))
}
