//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use langnsend::lang::{Formula, Language, Term};
use langnsend::process::{Exec, LangExpr, LangVar, Name, Process, Trace, TraceExpr, TraceVar};
use langnsend::syntax::{load_languages, load_process, parse_language, Imports};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- corpus

pub const SYSTEMS: [&str; 5] = [
    "bpa_walkthrough",
    "empty",
    "disrupt_system",
    "quitmode_system",
    "ccs_system",
];

pub const LANGUAGE_FILES: [&str; 7] = [
    "bpa",
    "almostDisrupt",
    "disruptRules",
    "interruptRules",
    "partialCCS",
    "synchOutput",
    "asynchOutput",
];

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn imports() -> Imports {
    load_languages(&[corpus_dir()]).expect("corpus languages load")
}

pub fn lang(name: &str) -> Arc<Language> {
    imports()[name].clone()
}

pub fn script(name: &str) -> Process {
    load_process(corpus_dir().join(format!("{name}.lns")), &imports()).expect("corpus script loads")
}

pub fn union_all(names: &[&str]) -> Language {
    names[1..].iter().fold((*lang(names[0])).clone(), |acc, n| {
        langnsend::lang::union(&acc, &lang(n)).expect("compatible")
    })
}

/// The languages the corpus systems actually execute with.
pub fn composed_languages() -> Vec<(String, Language)> {
    vec![
        ("disrupt".into(), union_all(&["almostDisrupt", "disruptRules"])),
        ("interrupt".into(), union_all(&["almostDisrupt", "interruptRules"])),
        ("bpa+disrupt".into(), union_all(&["bpa", "almostDisrupt", "disruptRules"])),
        ("bpa+interrupt".into(), union_all(&["bpa", "almostDisrupt", "interruptRules"])),
        ("ccs+synch".into(), union_all(&["partialCCS", "synchOutput"])),
        ("ccs+asynch".into(), union_all(&["partialCCS", "asynchOutput"])),
    ]
}

pub fn n(op: &str, args: Vec<Term>) -> Term {
    Term::node(op, args)
}

pub fn c(op: &str) -> Term {
    Term::constant(op)
}

pub fn act(a: &str) -> Term {
    n("act", vec![c(a)])
}

pub fn trace(labels: &[Term]) -> Trace {
    Trace(labels.to_vec())
}

// ------------------------------------------------------------ BPA oracle

/// BPA with a preemption operator, interpreted directly by its SOS rules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bpa {
    Act(String),
    Alt(Box<Bpa>, Box<Bpa>),
    Seq(Box<Bpa>, Box<Bpa>),
    Pre(Box<Bpa>, Box<Bpa>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preempt {
    Disrupt,
    Interrupt,
}

impl Bpa {
    pub fn from_term(t: &Term) -> Bpa {
        let Term::Node(op, kids) = t else { panic!("not a BPA process: {t}") };
        let sub = |i: usize| Box::new(Bpa::from_term(&kids[i]));
        match (&**op, kids.len()) {
            ("act", 1) => match &kids[0] {
                Term::Node(a, k) if k.is_empty() => Bpa::Act(a.to_string()),
                other => panic!("not an action: {other}"),
            },
            ("+", 2) => Bpa::Alt(sub(0), sub(1)),
            ("seq", 2) => Bpa::Seq(sub(0), sub(1)),
            ("|>", 2) => Bpa::Pre(sub(0), sub(1)),
            _ => panic!("not a BPA process: {t}"),
        }
    }
}

/// Transitions `p --a--> p'`, with `None` standing for successful
/// termination.
pub fn bpa_steps(p: &Bpa, mode: Preempt) -> Vec<(String, Option<Bpa>)> {
    match p {
        Bpa::Act(a) => vec![(a.clone(), None)],
        Bpa::Alt(l, r) => {
            let mut out = bpa_steps(l, mode);
            out.extend(bpa_steps(r, mode));
            out
        }
        Bpa::Seq(l, r) => bpa_steps(l, mode)
            .into_iter()
            .map(|(a, next)| match next {
                Some(l2) => (a, Some(Bpa::Seq(Box::new(l2), r.clone()))),
                None => (a, Some((**r).clone())),
            })
            .collect(),
        Bpa::Pre(l, r) => {
            let mut out: Vec<(String, Option<Bpa>)> = bpa_steps(l, mode)
                .into_iter()
                .map(|(a, next)| (a, next.map(|l2| Bpa::Pre(Box::new(l2), r.clone()))))
                .collect();
            for (a, next) in bpa_steps(r, mode) {
                out.push(match (mode, next) {
                    (Preempt::Disrupt, next) => (a, next),
                    (Preempt::Interrupt, Some(r2)) => (a, Some(Bpa::Seq(Box::new(r2), l.clone()))),
                    (Preempt::Interrupt, None) => (a, Some((**l).clone())),
                });
            }
            out
        }
    }
}

/// Traces of an execution that records every non-terminating transition
/// and stops when none is left (terminating transitions are not steps).
pub fn bpa_traces(p: &Bpa, mode: Preempt) -> BTreeSet<Vec<String>> {
    let steps: Vec<(String, Bpa)> = bpa_steps(p, mode)
        .into_iter()
        .filter_map(|(a, next)| next.map(|q| (a, q)))
        .collect();
    if steps.is_empty() {
        return BTreeSet::from([Vec::new()]);
    }
    let mut out = BTreeSet::new();
    for (a, q) in steps {
        for mut rest in bpa_traces(&q, mode) {
            rest.insert(0, format!("({a})"));
            out.insert(rest);
        }
    }
    out
}

// ------------------------------------------------------------ CCS oracle

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ccs {
    Nil,
    In(String, Box<Ccs>),
    Out(String, Box<Ccs>),
    /// Asynchronous output message.
    Msg(String),
    Res(String, Box<Ccs>),
    Par(Box<Ccs>, Box<Ccs>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CcsLabel {
    Tau,
    In(String),
    Out(String),
}

impl CcsLabel {
    pub fn render(&self) -> String {
        match self {
            CcsLabel::Tau => "(tau)".into(),
            CcsLabel::In(a) => format!("(in ({a}))"),
            CcsLabel::Out(a) => format!("(out ({a}))"),
        }
    }

    fn channel(&self) -> Option<&str> {
        match self {
            CcsLabel::Tau => None,
            CcsLabel::In(a) | CcsLabel::Out(a) => Some(a),
        }
    }
}

impl Ccs {
    pub fn from_term(t: &Term) -> Ccs {
        let Term::Node(op, kids) = t else { panic!("not a CCS process: {t}") };
        let chan = |i: usize| match &kids[i] {
            Term::Node(a, k) if k.is_empty() => a.to_string(),
            other => panic!("not a channel: {other}"),
        };
        let sub = |i: usize| Box::new(Ccs::from_term(&kids[i]));
        match &**op {
            "nil" => Ccs::Nil,
            "in" => Ccs::In(chan(0), sub(1)),
            "out" => Ccs::Out(chan(0), sub(1)),
            "out'" => Ccs::Msg(chan(0)),
            "res" => Ccs::Res(chan(0), sub(1)),
            "par" => Ccs::Par(sub(0), sub(1)),
            _ => panic!("not a CCS process: {t}"),
        }
    }
}

pub fn ccs_steps(p: &Ccs, asynchronous: bool) -> Vec<(CcsLabel, Ccs)> {
    match p {
        Ccs::Nil => vec![],
        Ccs::In(a, q) => vec![(CcsLabel::In(a.clone()), (**q).clone())],
        Ccs::Out(a, q) if asynchronous => vec![(
            CcsLabel::Tau,
            Ccs::Par(Box::new(Ccs::Msg(a.clone())), q.clone()),
        )],
        Ccs::Out(a, q) => vec![(CcsLabel::Out(a.clone()), (**q).clone())],
        Ccs::Msg(a) => vec![(CcsLabel::Out(a.clone()), Ccs::Nil)],
        Ccs::Res(a, q) => ccs_steps(q, asynchronous)
            .into_iter()
            .filter(|(l, _)| l.channel() != Some(a.as_str()))
            .map(|(l, q2)| (l, Ccs::Res(a.clone(), Box::new(q2))))
            .collect(),
        Ccs::Par(l, r) => {
            let ls = ccs_steps(l, asynchronous);
            let rs = ccs_steps(r, asynchronous);
            let mut out = Vec::new();
            for (lab, l2) in &ls {
                out.push((lab.clone(), Ccs::Par(Box::new(l2.clone()), r.clone())));
            }
            for (lab, r2) in &rs {
                out.push((lab.clone(), Ccs::Par(l.clone(), Box::new(r2.clone()))));
            }
            for (la, l2) in &ls {
                for (lb, r2) in &rs {
                    let sync = matches!((la, lb),
                        (CcsLabel::In(x), CcsLabel::Out(y)) | (CcsLabel::Out(x), CcsLabel::In(y)) if x == y);
                    if sync {
                        out.push((CcsLabel::Tau, Ccs::Par(Box::new(l2.clone()), Box::new(r2.clone()))));
                    }
                }
            }
            out
        }
    }
}

/// Maximal traces up to `depth` steps; the flag reports whether any path
/// was cut at the depth bound.
pub fn ccs_traces(p: &Ccs, asynchronous: bool, depth: usize) -> (BTreeSet<Vec<String>>, bool) {
    let steps = ccs_steps(p, asynchronous);
    if steps.is_empty() {
        return (BTreeSet::from([Vec::new()]), false);
    }
    if depth == 0 {
        return (BTreeSet::new(), true);
    }
    let mut out = BTreeSet::new();
    let mut cut = false;
    for (l, q) in steps {
        let (rest, c) = ccs_traces(&q, asynchronous, depth - 1);
        cut |= c;
        for mut r in rest {
            r.insert(0, l.render());
            out.insert(r);
        }
    }
    (out, cut)
}

// ------------------------------------------- bottom-up derivation oracle

fn subterms(t: &Term, out: &mut BTreeSet<Term>) {
    out.insert(t.clone());
    if let Term::Node(_, kids) = t {
        kids.iter().for_each(|k| subterms(k, out));
    }
}

fn matches(pattern: &Term, ground: &Term, s: &mut BTreeMap<String, Term>) -> bool {
    match pattern {
        Term::MetaVar(v) => match s.get(&**v) {
            Some(bound) => bound == ground,
            None => {
                s.insert(v.to_string(), ground.clone());
                true
            }
        },
        Term::Node(op, kids) => match ground {
            Term::Node(gop, gkids) => {
                op == gop && kids.len() == gkids.len() && kids.iter().zip(gkids).all(|(k, g)| matches(k, g, s))
            }
            Term::MetaVar(_) => false,
        },
    }
}

fn instantiate(t: &Term, s: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::MetaVar(v) => s.get(&**v).cloned().unwrap_or_else(|| t.clone()),
        Term::Node(op, kids) => Term::Node(op.clone(), kids.iter().map(|k| instantiate(k, s)).collect()),
    }
}

type Fact = (String, Vec<Term>);

fn premise_matches(
    premises: &[Formula],
    facts: &BTreeSet<Fact>,
    s: BTreeMap<String, Term>,
    out: &mut Vec<BTreeMap<String, Term>>,
) {
    let Some((first, rest)) = premises.split_first() else {
        out.push(s);
        return;
    };
    for (pred, args) in facts {
        if **pred != *first.pred || args.len() != first.args.len() {
            continue;
        }
        let mut s2 = s.clone();
        if first.args.iter().zip(args).all(|(p, g)| matches(p, g, &mut s2)) {
            premise_matches(rest, facts, s2, out);
        }
    }
}

fn ground_over(vars: &[String], universe: &[Term], s: BTreeMap<String, Term>, out: &mut Vec<BTreeMap<String, Term>>) {
    let Some((v, rest)) = vars.split_first() else {
        out.push(s);
        return;
    };
    for u in universe {
        let mut s2 = s.clone();
        s2.insert(v.clone(), u.clone());
        ground_over(rest, universe, s2, out);
    }
}

/// All `(label, target)` with `(pred label t target)` derivable in at most
/// `depth` rule applications, by saturating ground facts whose subject
/// (second argument) is a subterm of `t`. Complete for languages whose
/// premises only mention subterms of the conclusion's subject.
pub fn bottom_up_steps(lang: &Language, pred: &str, t: &Term, depth: usize) -> BTreeSet<(Term, Term)> {
    let mut universe = BTreeSet::new();
    subterms(t, &mut universe);
    let universe: Vec<Term> = universe.into_iter().collect();
    let mut facts: BTreeSet<Fact> = BTreeSet::new();
    for _ in 0..depth {
        let mut next = facts.clone();
        for rule in lang.rules() {
            let mut sols = Vec::new();
            premise_matches(&rule.premises, &facts, BTreeMap::new(), &mut sols);
            for s in sols {
                let mut free = BTreeSet::new();
                rule.conclusion.args.iter().for_each(|a| free.extend(a.free_metavars()));
                let unbound: Vec<String> = free.into_iter().filter(|v| !s.contains_key(v)).collect();
                let mut grounded = Vec::new();
                ground_over(&unbound, &universe, s, &mut grounded);
                for g in grounded {
                    let args: Vec<Term> = rule.conclusion.args.iter().map(|a| instantiate(a, &g)).collect();
                    if args.len() >= 2 && !universe.contains(&args[1]) {
                        continue;
                    }
                    next.insert((rule.conclusion.pred.to_string(), args));
                }
            }
        }
        if next == facts {
            break;
        }
        facts = next;
    }
    facts
        .into_iter()
        .filter(|(p, args)| p == pred && args.len() == 3 && args[1] == *t)
        .map(|(_, args)| (args[0].clone(), args[2].clone()))
        .collect()
}

/// Ground terms of each grammar category, up to `max_size` nodes.
pub fn ground_terms(lang: &Language, max_size: usize) -> BTreeMap<String, Vec<Term>> {
    // by_size[category][s] = terms of exactly s nodes
    let mut by_size: BTreeMap<String, Vec<Vec<Term>>> = lang
        .grammar()
        .iter()
        .map(|g| (g.category.to_string(), vec![Vec::new(); max_size + 1]))
        .collect();

    fn fill(
        lang: &Language,
        p: &Term,
        size: usize,
        by_size: &BTreeMap<String, Vec<Vec<Term>>>,
    ) -> Vec<Term> {
        match p {
            Term::MetaVar(v) => match lang.category_of_metavar(v) {
                Some(g) => by_size[&*g.category][size].clone(),
                None => Vec::new(),
            },
            Term::Node(op, kids) => {
                if size == 0 {
                    return Vec::new();
                }
                let mut partial: Vec<(Vec<Term>, usize)> = vec![(Vec::new(), size - 1)];
                for (i, k) in kids.iter().enumerate() {
                    let remaining_kids = kids.len() - i - 1;
                    let mut next = Vec::new();
                    for (done, left) in &partial {
                        let lo = 1;
                        let hi = left.saturating_sub(remaining_kids);
                        for s in lo..=hi {
                            if i + 1 == kids.len() && s != *left {
                                continue;
                            }
                            for t in fill(lang, k, s, by_size) {
                                let mut d = done.clone();
                                d.push(t);
                                next.push((d, left - s));
                            }
                        }
                    }
                    partial = next;
                }
                partial
                    .into_iter()
                    .filter(|(_, left)| *left == 0)
                    .map(|(kids, _)| Term::Node(op.clone(), kids))
                    .collect()
            }
        }
    }

    for s in 1..=max_size {
        for g in lang.grammar() {
            let mut terms = Vec::new();
            for p in &g.productions {
                terms.extend(fill(lang, p, s, &by_size));
            }
            by_size.get_mut(&*g.category).unwrap()[s] = terms;
        }
    }
    by_size
        .into_iter()
        .map(|(cat, sizes)| (cat, sizes.into_iter().flatten().collect()))
        .collect()
}

// ----------------------------------------------------- Robinson unifier

/// Textbook unification with explicit occurs-check, used to cross-check
/// success and failure of the engine's unifier.
pub fn robinson(a: &Term, b: &Term) -> Option<BTreeMap<String, Term>> {
    let mut s: BTreeMap<String, Term> = BTreeMap::new();
    let mut stack = vec![(a.clone(), b.clone())];
    fn walk(t: &Term, s: &BTreeMap<String, Term>) -> Term {
        match t {
            Term::MetaVar(v) => match s.get(&**v) {
                Some(u) => walk(u, s),
                None => t.clone(),
            },
            Term::Node(op, kids) => Term::Node(op.clone(), kids.iter().map(|k| walk(k, s)).collect()),
        }
    }
    while let Some((x, y)) = stack.pop() {
        let (x, y) = (walk(&x, &s), walk(&y, &s));
        match (&x, &y) {
            (Term::MetaVar(v), Term::MetaVar(w)) if v == w => {}
            (Term::MetaVar(v), t) | (t, Term::MetaVar(v)) => {
                if t.occurs(v) {
                    return None;
                }
                s.insert(v.to_string(), t.clone());
            }
            (Term::Node(f, xs), Term::Node(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
        }
    }
    let keys: Vec<String> = s.keys().cloned().collect();
    Some(keys.into_iter().map(|k| {
        let t = walk(&Term::var(&k), &s);
        (k, t)
    }).collect())
}

// --------------------------------------------------- random generation

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const VARS: [&str; 4] = ["X", "Y", "Z", "X1"];
const OPS: [(&str, usize); 5] = [("f", 2), ("g", 1), ("h", 3), ("a", 0), ("b", 0)];

pub fn random_term(r: &mut ChaCha8Rng, depth: usize) -> Term {
    if depth == 0 || r.random_range(0..4) == 0 {
        return if r.random_bool(0.6) {
            Term::var(VARS[r.random_range(0..VARS.len())])
        } else {
            c(OPS[3 + r.random_range(0..2)].0)
        };
    }
    let (op, arity) = OPS[r.random_range(0..OPS.len())];
    n(op, (0..arity).map(|_| random_term(r, depth - 1)).collect())
}

fn tiny() -> Arc<Language> {
    Arc::new(
        parse_language("grammar X x ::= (k) | (s x) rules (--> (l) (s x) x)").unwrap(),
    )
}

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

struct Scope {
    names: Vec<String>,
    langs: Vec<String>,
    traces: Vec<String>,
}

fn pick<'a>(r: &mut ChaCha8Rng, xs: &'a [String]) -> &'a str {
    &xs[r.random_range(0..xs.len())]
}

fn random_prefix(r: &mut ChaCha8Rng, depth: usize, scope: &mut Scope, tiny: &Arc<Language>) -> Process {
    let chan = Name::new(pick(r, &scope.names));
    match r.random_range(0..6) {
        0 => {
            let b = NAMES[r.random_range(0..NAMES.len())];
            scope.names.push(b.into());
            let cont = random_process(r, depth - 1, scope, tiny);
            scope.names.pop();
            Process::input(chan, b, cont)
        }
        1 => {
            let msg = Name::new(pick(r, &scope.names));
            Process::output(chan, msg, random_process(r, depth - 1, scope, tiny))
        }
        2 => {
            let l = ["l", "m"][r.random_range(0..2)];
            scope.langs.push(l.into());
            let cont = random_process(r, depth - 1, scope, tiny);
            scope.langs.pop();
            Process::lang_input(chan, l, cont)
        }
        3 => {
            let lang = random_lang(r, scope, tiny);
            Process::lang_output(chan, lang, random_process(r, depth - 1, scope, tiny))
        }
        4 => {
            let t = ["t", "u"][r.random_range(0..2)];
            scope.traces.push(t.into());
            let cont = random_process(r, depth - 1, scope, tiny);
            scope.traces.pop();
            Process::trace_input(chan, t, cont)
        }
        _ => {
            let tr = random_trace(r, scope);
            Process::trace_output(chan, tr, random_process(r, depth - 1, scope, tiny))
        }
    }
}

fn random_lang(r: &mut ChaCha8Rng, scope: &Scope, tiny: &Arc<Language>) -> LangExpr {
    match r.random_range(0..3) {
        0 if !scope.langs.is_empty() => LangExpr::Var(LangVar::new(pick(r, &scope.langs))),
        1 => LangExpr::union(LangExpr::Lit(tiny.clone()), LangExpr::Lit(tiny.clone())),
        _ => LangExpr::Lit(tiny.clone()),
    }
}

fn random_trace(r: &mut ChaCha8Rng, scope: &Scope) -> TraceExpr {
    if !scope.traces.is_empty() && r.random_bool(0.5) {
        TraceExpr::Var(TraceVar::new(pick(r, &scope.traces)))
    } else {
        let len = r.random_range(0..3);
        TraceExpr::Lit(trace(&(0..len).map(|_| c(["l", "m"][r.random_range(0..2)])).collect::<Vec<_>>()))
    }
}

fn random_process(r: &mut ChaCha8Rng, depth: usize, scope: &mut Scope, tiny: &Arc<Language>) -> Process {
    if depth == 0 {
        return Process::Nil;
    }
    match r.random_range(0..10) {
        0 => Process::Nil,
        1 | 2 => Process::par(random_process(r, depth - 1, scope, tiny), random_process(r, depth - 1, scope, tiny)),
        3 => Process::choice(random_prefix(r, depth, scope, tiny), random_prefix(r, depth, scope, tiny)),
        4 => {
            let x = NAMES[r.random_range(0..NAMES.len())];
            scope.names.push(x.into());
            let body = random_process(r, depth - 1, scope, tiny);
            scope.names.pop();
            Process::restrict(x, body)
        }
        5 => Process::replicate(random_prefix(r, depth, scope, tiny)),
        6 => {
            let lang = random_lang(r, scope, tiny);
            let result = Name::new(pick(r, &scope.names));
            let program = (0..r.random_range(0..3)).fold(c("k"), |t, _| n("s", vec![t]));
            Process::Exec(Exec::new(lang, result, program))
        }
        7 => {
            let tr = random_trace(r, scope);
            Process::is_in_trace(
                c(["l", "m"][r.random_range(0..2)]),
                tr,
                random_process(r, depth - 1, scope, tiny),
                random_process(r, depth - 1, scope, tiny),
            )
        }
        _ => random_prefix(r, depth, scope, tiny),
    }
}

/// A closed random process of the given maximum depth.
pub fn random_closed_process(seed: u64, depth: usize) -> Process {
    let mut r = rng(seed);
    let mut scope = Scope {
        names: NAMES.iter().map(|s| s.to_string()).collect(),
        langs: Vec::new(),
        traces: Vec::new(),
    };
    random_process(&mut r, depth, &mut scope, &tiny())
}

// -------------------------------------------------- congruence rewrites

fn fresh(p: &Process, stem: &str) -> Name {
    let mut all = BTreeSet::new();
    p.all_names(&mut all);
    (0..).map(|i| Name::new(&format!("{stem}{i}"))).find(|n| !all.contains(n)).unwrap()
}

/// Applies congruence axiom `axiom` at the node itself, if it applies.
fn axiom_at(p: &Process, axiom: u32) -> Option<Process> {
    use Process::*;
    match (axiom, p) {
        (0, _) => Some(Process::par(p.clone(), Nil)),
        (1, Par(a, b)) => Some(Process::par((**b).clone(), (**a).clone())),
        (2, Par(ab, c)) => match &**ab {
            Par(a, b) => Some(Process::par((**a).clone(), Process::par((**b).clone(), (**c).clone()))),
            _ => None,
        },
        (3, Par(a, bc)) => match &**bc {
            Par(b, c) => Some(Process::par(Process::par((**a).clone(), (**b).clone()), (**c).clone())),
            _ => None,
        },
        (4, Nil) => Some(Process::restrict(fresh(p, "z"), Nil)),
        (5, Restrict(x, inner)) => match &**inner {
            Restrict(y, q) => Some(Process::restrict(y.clone(), Process::restrict(x.clone(), (**q).clone()))),
            _ => None,
        },
        (6, Restrict(x, inner)) => match &**inner {
            Par(a, b) if !b.free_names().contains(x) => {
                Some(Process::par(Process::restrict(x.clone(), (**a).clone()), (**b).clone()))
            }
            _ => None,
        },
        (7, Par(ra, b)) => match &**ra {
            Restrict(x, a) if !b.free_names().contains(x) => {
                Some(Process::restrict(x.clone(), Process::par((**a).clone(), (**b).clone())))
            }
            _ => None,
        },
        (8, Restrict(x, q)) => {
            let y = fresh(p, "r");
            Some(Process::restrict(y.clone(), langnsend::process::subst_channel(q, &y, x)))
        }
        (9, Input { chan, bind, cont }) => {
            let y = fresh(p, "i");
            Some(Process::input(chan.clone(), y.clone(), langnsend::process::subst_channel(cont, &y, bind)))
        }
        (10, Par(a, b)) if **b == Nil => Some((**a).clone()),
        (11, Restrict(_, q)) if **q == Nil => Some(Nil),
        _ => None,
    }
}

pub const AXIOMS: u32 = 12;

fn count_nodes(p: &Process) -> usize {
    use Process::*;
    1 + match p {
        Nil | Exec(_) => 0,
        Par(a, b) | Choice(a, b) => count_nodes(a) + count_nodes(b),
        IsInTrace { then, otherwise, .. } => count_nodes(then) + count_nodes(otherwise),
        Restrict(_, q) | Replicate(q) => count_nodes(q),
        Input { cont, .. }
        | Output { cont, .. }
        | LangInput { cont, .. }
        | LangOutput { cont, .. }
        | TraceInput { cont, .. }
        | TraceOutput { cont, .. } => count_nodes(cont),
    }
}

fn rewrite_nth(p: &Process, target: &mut usize, axiom: u32) -> Process {
    use Process::*;
    if *target == 0 {
        *target = usize::MAX;
        return axiom_at(p, axiom).unwrap_or_else(|| p.clone());
    }
    *target -= 1;
    let mut go = |q: &Process| Box::new(rewrite_nth(q, target, axiom));
    match p {
        Nil | Exec(_) => p.clone(),
        Par(a, b) => {
            let a = go(a);
            Par(a, go(b))
        }
        Choice(a, b) => {
            let a = go(a);
            Choice(a, go(b))
        }
        IsInTrace { label, trace, then, otherwise } => {
            let then = go(then);
            IsInTrace { label: label.clone(), trace: trace.clone(), then, otherwise: go(otherwise) }
        }
        Restrict(x, q) => Restrict(x.clone(), go(q)),
        Replicate(q) => Replicate(go(q)),
        Input { chan, bind, cont } => Input { chan: chan.clone(), bind: bind.clone(), cont: go(cont) },
        Output { chan, msg, cont } => Output { chan: chan.clone(), msg: msg.clone(), cont: go(cont) },
        LangInput { chan, bind, cont } => LangInput { chan: chan.clone(), bind: bind.clone(), cont: go(cont) },
        LangOutput { chan, lang, cont } => LangOutput { chan: chan.clone(), lang: lang.clone(), cont: go(cont) },
        TraceInput { chan, bind, cont } => TraceInput { chan: chan.clone(), bind: bind.clone(), cont: go(cont) },
        TraceOutput { chan, trace, cont } => TraceOutput { chan: chan.clone(), trace: trace.clone(), cont: go(cont) },
    }
}

/// `p` rewritten by `moves` random applications of congruence axioms
/// (other than replication unfolding) at random positions.
pub fn congruent_variant(p: &Process, seed: u64, moves: usize) -> Process {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut q = p.clone();
    for _ in 0..moves {
        let mut target = r.random_range(0..count_nodes(&q));
        let axiom = r.random_range(0..AXIOMS);
        q = rewrite_nth(&q, &mut target, axiom);
    }
    q
}

// ------------------------------------------------------- property checks

use langnsend::engine::{unify, SearchBudget, Substitution};
use langnsend::process::{explore, normalize, run, Exploration, ExploreLimits, Policy, RunOutcome};
use langnsend::syntax::parse_process;

/// `a` and `b` are equal up to a renaming of metavariables.
pub fn variants(a: &Term, b: &Term) -> bool {
    let mut s = BTreeMap::new();
    let mut t = BTreeMap::new();
    matches(a, b, &mut s) && matches(b, a, &mut t)
}

/// Perturbs `t` so that unification with it succeeds often, clashes
/// sometimes and trips the occurs-check now and then.
pub fn mutate_term(r: &mut ChaCha8Rng, t: &Term) -> Term {
    match r.random_range(0..10) {
        0 | 1 => Term::var(VARS[r.random_range(0..VARS.len())]),
        2 => random_term(r, 2),
        _ => match t {
            Term::MetaVar(_) => t.clone(),
            Term::Node(op, kids) => Term::Node(op.clone(), kids.iter().map(|k| mutate_term(r, k)).collect()),
        },
    }
}

pub fn check_mgu(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let a = random_term(&mut r, 4);
    let b = if r.random_bool(0.2) { random_term(&mut r, 4) } else { mutate_term(&mut r, &a) };
    let ours = unify(&a, &b, &Substitution::new());
    let theirs = robinson(&a, &b);
    match (ours, theirs) {
        (None, None) => Ok(()),
        (Some(s), Some(o)) => {
            let (sa, sb) = (s.apply(&a), s.apply(&b));
            if sa != sb {
                return Err(format!("{a} ~ {b}: {sa} != {sb}"));
            }
            for (v, t) in s.iter() {
                if s.apply(t) != *t {
                    return Err(format!("{a} ~ {b}: binding {v} -> {t} not idempotent"));
                }
            }
            let oa = robinson_apply(&a, &o);
            if !variants(&sa, &oa) {
                return Err(format!("{a} ~ {b}: {sa} is not a variant of {oa}"));
            }
            Ok(())
        }
        (ours, theirs) => Err(format!(
            "{a} ~ {b}: engine {} but reference {}",
            if ours.is_some() { "unifies" } else { "fails" },
            if theirs.is_some() { "unifies" } else { "fails" }
        )),
    }
}

pub fn robinson_apply(t: &Term, s: &BTreeMap<String, Term>) -> Term {
    instantiate(t, s)
}

pub fn check_normalize_idempotent(seed: u64) -> Result<(), String> {
    let p = random_closed_process(seed, 6);
    let nf = normalize(&p);
    let again = normalize(&nf.to_process());
    if again != nf {
        return Err(format!("{p}: normalize not idempotent"));
    }
    let text = nf.to_process().to_string();
    let parsed = parse_process(&text, &Imports::new()).map_err(|e| format!("{text}: {e}"))?;
    if normalize(&parsed) != nf {
        return Err(format!("{p}: printed normal form `{text}` reads back differently"));
    }
    Ok(())
}

pub fn check_congruence(seed: u64) -> Result<(), String> {
    let p = random_closed_process(seed, 6);
    let q = congruent_variant(&p, seed, 8);
    if normalize(&p) != normalize(&q) {
        return Err(format!("{p} and its congruent variant {q} normalize differently"));
    }
    Ok(())
}

/// Program-step events and emitted trace lengths balance when every exec
/// started from an empty trace and ran to its end.
pub fn check_trace_length(out: &RunOutcome) -> Result<(), String> {
    let emitted: usize = out.traces.iter().map(|(_, t)| t.len()).sum();
    let unfinished = out.final_state.threads().iter().any(contains_exec);
    if !unfinished && emitted != out.program_steps() {
        return Err(format!("{} program steps but {emitted} labels emitted", out.program_steps()));
    }
    if emitted > out.program_steps() {
        return Err(format!("{emitted} labels emitted from {} program steps", out.program_steps()));
    }
    Ok(())
}

fn contains_exec(p: &Process) -> bool {
    use Process::*;
    match p {
        Exec(_) => true,
        Nil => false,
        Par(a, b) | Choice(a, b) => contains_exec(a) || contains_exec(b),
        IsInTrace { then, otherwise, .. } => contains_exec(then) || contains_exec(otherwise),
        Restrict(_, q) | Replicate(q) => contains_exec(q),
        Input { cont, .. }
        | Output { cont, .. }
        | LangInput { cont, .. }
        | LangOutput { cont, .. }
        | TraceInput { cont, .. }
        | TraceOutput { cont, .. } => contains_exec(cont),
    }
}

pub fn explore_default(p: &Process) -> Exploration {
    explore(p, ExploreLimits::default()).expect("exploration within bounds")
}

/// A seeded run ends in a terminal state of the exhaustive exploration and
/// emits only traces the exploration found.
pub fn check_run_agrees(p: &Process, ex: &Exploration, seed: u64) -> Result<(), String> {
    let out = run(p, Policy::Seeded(seed), 10_000, SearchBudget::default()).map_err(|e| e.error.to_string())?;
    let Some(i) = ex.index_of(&out.final_state) else {
        return Err(format!("seed {seed}: final state {} not explored", out.final_state.to_process()));
    };
    if !ex.terminal.contains(&i) {
        return Err(format!("seed {seed}: final state is not terminal in the exploration"));
    }
    let ours: BTreeSet<Trace> = out.traces.iter().map(|(_, t)| t.clone()).collect();
    let all = ex.trace_set();
    if let Some(t) = ours.iter().find(|t| !all.contains(t)) {
        return Err(format!("seed {seed}: trace {t} not found by exploration"));
    }
    check_trace_length(&out).map_err(|e| format!("seed {seed}: {e}"))
}

/// Checks that every node of `d` is an instance of its clause: one
/// substitution maps the clause head to the node's goal and each body
/// formula to the corresponding premise goal.
pub fn replay(prog: &langnsend::engine::ClauseProgram, d: &langnsend::engine::Derivation) -> Result<(), String> {
    let clause = prog.clauses().get(d.clause).ok_or("clause index out of range")?;
    if clause.body.len() != d.premises.len() {
        return Err(format!("{}: premise count differs from clause", d.goal));
    }
    let mut s = BTreeMap::new();
    let pairs = std::iter::once((&clause.head, &d.goal)).chain(clause.body.iter().zip(d.premises.iter().map(|p| &p.goal)));
    for (pattern, goal) in pairs {
        let ok = pattern.pred == goal.pred
            && pattern.args.len() == goal.args.len()
            && pattern.args.iter().zip(&goal.args).all(|(p, g)| matches(p, g, &mut s));
        if !ok {
            return Err(format!("{goal} is not an instance of {pattern}"));
        }
    }
    d.premises.iter().try_for_each(|p| replay(prog, p))
}
