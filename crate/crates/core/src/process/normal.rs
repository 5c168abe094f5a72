//! Structural-congruence normalization.
//!
//! A process is flattened into restricted names plus a multiset of threads
//! (no `0`, no `|`, restrictions hoisted with fresh names). Unused
//! restrictions are dropped. Every bound name is then renamed canonically:
//! top-level restrictions become `ν0, ν1, ...` and binders below a prefix
//! become `β<d>` where `d` counts the binders above them. Threads are sorted,
//! so two congruent processes normalize to syntactically equal forms.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{LangExpr, LangVar, Name, Process, TraceExpr, TraceVar};
use super::subst::{map_children, subst_channel};

/// Placeholder prefix for restriction names during flattening; never
/// produced by the parser.
const TEMP_PREFIX: char = '#';
const TOP_PREFIX: &str = "ν";
const BOUND_PREFIX: &str = "β";

/// Upper bound on the tie-breaking permutations tried when ordering threads
/// that differ only in their restricted names.
const MAX_TIE_PERMUTATIONS: usize = 720;

/// A process in normal form: `(ν restricted...)(threads...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NormalForm {
    restricted: Vec<Name>,
    threads: Vec<Process>,
}

impl NormalForm {
    pub fn restricted(&self) -> &[Name] {
        &self.restricted
    }

    pub fn threads(&self) -> &[Process] {
        &self.threads
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    /// The process `(νν0)...(T1 | ... | Tn)`.
    pub fn to_process(&self) -> Process {
        self.restricted
            .iter()
            .rev()
            .fold(Process::par_all(self.threads.iter().cloned()), |acc, x| {
                Process::restrict(x.clone(), acc)
            })
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_process())
    }
}

/// True for names reserved for canonical binders (`ν<digits>`, `β<digits>`,
/// optionally followed by primes).
pub fn is_reserved_name(name: &str) -> bool {
    [TOP_PREFIX, BOUND_PREFIX].iter().any(|p| {
        name.strip_prefix(p).is_some_and(|rest| {
            let digits = rest.trim_end_matches('\'');
            !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
        })
    })
}

struct Normalizer {
    free: BTreeSet<Name>,
    temps: usize,
}

impl Normalizer {
    fn temp(&mut self) -> Name {
        self.temps += 1;
        Name::new(&format!("{TEMP_PREFIX}{}", self.temps))
    }

    fn avoiding_free(&self, base: String) -> Name {
        let mut n = base;
        while self.free.contains(&Name::new(&n)) {
            n.push('\'');
        }
        Name::new(&n)
    }

    fn top_name(&self, i: usize) -> Name {
        self.avoiding_free(format!("{TOP_PREFIX}{i}"))
    }

    fn bound_name(&self, depth: usize) -> Name {
        self.avoiding_free(format!("{BOUND_PREFIX}{depth}"))
    }

    fn flatten(&mut self, p: &Process, restricted: &mut Vec<Name>, threads: &mut Vec<Process>) {
        match p {
            Process::Nil => {}
            Process::Par(a, b) => {
                self.flatten(a, restricted, threads);
                self.flatten(b, restricted, threads);
            }
            Process::Restrict(x, body) => {
                let t = self.temp();
                let body = subst_channel(body, &t, x);
                restricted.push(t);
                self.flatten(&body, restricted, threads);
            }
            other => threads.push(other.clone()),
        }
    }

    /// Normalizes one scope level. `top` selects `ν` naming for the level's
    /// restrictions; otherwise they are named as binders from `depth` on.
    fn level(&mut self, p: &Process, depth: usize, top: bool) -> (Vec<Name>, Vec<Process>) {
        let mut restricted = Vec::new();
        let mut raw = Vec::new();
        self.flatten(p, &mut restricted, &mut raw);
        let frees: Vec<BTreeSet<Name>> = raw.iter().map(Process::free_names).collect();
        let used: Vec<Name> = restricted
            .into_iter()
            .filter(|t| frees.iter().any(|f| f.contains(t)))
            .collect();
        let inner = if top { depth } else { depth + used.len() };
        let threads: Vec<Process> = raw.iter().map(|t| self.thread(t, inner)).collect();
        let names: Vec<Name> = (0..used.len())
            .map(|i| {
                if top {
                    self.top_name(i)
                } else {
                    self.bound_name(depth + i)
                }
            })
            .collect();
        let threads = assign_names(&used, threads, &names);
        (names, threads)
    }

    fn nested(&mut self, p: &Process, depth: usize) -> Process {
        let (names, threads) = self.level(p, depth, false);
        names
            .into_iter()
            .rev()
            .fold(Process::par_all(threads), |acc, x| Process::restrict(x, acc))
    }

    fn thread(&mut self, p: &Process, depth: usize) -> Process {
        match p {
            Process::Input { chan, bind, cont } => {
                let nb = self.bound_name(depth);
                let cont = subst_channel(cont, &nb, bind);
                Process::Input {
                    chan: chan.clone(),
                    bind: nb,
                    cont: Box::new(self.nested(&cont, depth + 1)),
                }
            }
            Process::LangInput { chan, bind, cont } => {
                let nb = LangVar(self.bound_name(depth).0);
                let cont = rename_lang_var(cont, bind, &nb);
                Process::LangInput {
                    chan: chan.clone(),
                    bind: nb,
                    cont: Box::new(self.nested(&cont, depth + 1)),
                }
            }
            Process::TraceInput { chan, bind, cont } => {
                let nb = TraceVar(self.bound_name(depth).0);
                let cont = rename_trace_var(cont, bind, &nb);
                Process::TraceInput {
                    chan: chan.clone(),
                    bind: nb,
                    cont: Box::new(self.nested(&cont, depth + 1)),
                }
            }
            Process::Exec(_) | Process::Nil => p.clone(),
            _ => map_children(p, &mut |q| self.nested(q, depth)),
        }
    }
}

fn normalize_once(p: &Process) -> NormalForm {
    let mut n = Normalizer {
        free: p.free_names(),
        temps: 0,
    };
    let (restricted, threads) = n.level(p, 0, true);
    NormalForm {
        restricted,
        threads,
    }
}

/// Bound on re-normalization rounds; in practice a second round is a no-op.
const MAX_ROUNDS: usize = 8;

/// Normal form of `p` modulo the structural congruence axioms other than
/// replication unfolding.
pub fn normalize(p: &Process) -> NormalForm {
    let mut nf = normalize_once(p);
    for _ in 0..MAX_ROUNDS {
        let again = normalize_once(&nf.to_process());
        if again == nf {
            break;
        }
        nf = again;
    }
    nf
}

/// Re-sorts the parallel components of every nested scope. Inner scopes are
/// ordered before the enclosing restrictions get their final names, so the
/// order can go stale once those names are substituted.
fn resort(p: &Process) -> Process {
    fn threads(p: &Process, out: &mut Vec<Process>) {
        match p {
            Process::Par(a, b) => {
                threads(a, out);
                threads(b, out);
            }
            other => out.push(resort(other)),
        }
    }
    match p {
        Process::Par(..) => {
            let mut ts = Vec::new();
            threads(p, &mut ts);
            ts.sort();
            Process::par_all(ts)
        }
        Process::Nil | Process::Exec(_) => p.clone(),
        _ => map_children(p, &mut resort),
    }
}

/// Flattens `p` into restricted names and threads without canonical
/// renaming. Restricted names are made fresh with respect to `avoid`, which
/// is extended with them.
pub(crate) fn flatten_fresh(p: &Process, avoid: &mut BTreeSet<Name>) -> (Vec<Name>, Vec<Process>) {
    fn go(p: &Process, avoid: &mut BTreeSet<Name>, rs: &mut Vec<Name>, ts: &mut Vec<Process>) {
        match p {
            Process::Nil => {}
            Process::Par(a, b) => {
                go(a, avoid, rs, ts);
                go(b, avoid, rs, ts);
            }
            Process::Restrict(x, body) => {
                let mut all = avoid.clone();
                body.all_names(&mut all);
                let fresh = super::subst::fresh_name(x.as_str(), &all);
                avoid.insert(fresh.clone());
                let body = subst_channel(body, &fresh, x);
                rs.push(fresh);
                go(&body, avoid, rs, ts);
            }
            other => ts.push(other.clone()),
        }
    }
    let mut rs = Vec::new();
    let mut ts = Vec::new();
    go(p, avoid, &mut rs, &mut ts);
    (rs, ts)
}

/// Renames the restriction placeholders `temps` to `names` so that the
/// sorted thread list is minimal.
fn assign_names(temps: &[Name], threads: Vec<Process>, names: &[Name]) -> Vec<Process> {
    if temps.is_empty() {
        let mut threads = threads;
        threads.sort();
        return threads;
    }
    let mask = Name::new(&TEMP_PREFIX.to_string());
    let masked: Vec<Process> = threads
        .iter()
        .map(|t| temps.iter().fold(t.clone(), |acc, x| subst_channel(&acc, &mask, x)))
        .collect();
    let mut order: Vec<usize> = (0..threads.len()).collect();
    order.sort_by(|a, b| masked[*a].cmp(&masked[*b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if masked[g[0]] == masked[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let combos: usize = groups
        .iter()
        .map(|g| (1..=g.len()).product::<usize>())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    let orderings: Vec<Vec<usize>> = if combos <= MAX_TIE_PERMUTATIONS {
        group_orderings(&groups)
    } else {
        vec![groups.concat()]
    };
    orderings
        .into_iter()
        .map(|ordering| {
            let mut seen: Vec<Name> = Vec::new();
            for &i in &ordering {
                visit_names(&threads[i], &mut |n| {
                    if temps.contains(n) && !seen.contains(n) {
                        seen.push(n.clone());
                    }
                });
            }
            let mut renamed: Vec<Process> = threads
                .iter()
                .map(|t| {
                    seen.iter()
                        .zip(names)
                        .fold(t.clone(), |acc, (tmp, name)| subst_channel(&acc, name, tmp))
                })
                .map(|t| resort(&t))
                .collect();
            renamed.sort();
            renamed
        })
        .min()
        .expect("at least one ordering")
}

fn group_orderings(groups: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for g in groups {
        let perms = permutations(g);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                perms.iter().map(move |p| {
                    let mut v = prefix.clone();
                    v.extend(p);
                    v
                })
            })
            .collect();
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Visits channel-name occurrences in syntactic order.
fn visit_names(p: &Process, f: &mut dyn FnMut(&Name)) {
    match p {
        Process::Nil => {}
        Process::Input { chan, bind, cont } | Process::Output { chan, msg: bind, cont } => {
            f(chan);
            f(bind);
            visit_names(cont, f);
        }
        Process::Restrict(x, cont) => {
            f(x);
            visit_names(cont, f);
        }
        Process::Par(a, b) | Process::Choice(a, b) => {
            visit_names(a, f);
            visit_names(b, f);
        }
        Process::Replicate(q) => visit_names(q, f),
        Process::Exec(e) => f(&e.result),
        Process::IsInTrace {
            then, otherwise, ..
        } => {
            visit_names(then, f);
            visit_names(otherwise, f);
        }
        Process::LangInput { chan, cont, .. }
        | Process::LangOutput { chan, cont, .. }
        | Process::TraceInput { chan, cont, .. }
        | Process::TraceOutput { chan, cont, .. } => {
            f(chan);
            visit_names(cont, f);
        }
    }
}

fn lang_vars_bound(p: &Process, out: &mut BTreeSet<LangVar>) {
    if let Process::LangInput { bind, .. } = p {
        out.insert(bind.clone());
    }
    let _ = map_children(p, &mut |q| {
        lang_vars_bound(q, out);
        Process::Nil
    });
}

fn trace_vars_bound(p: &Process, out: &mut BTreeSet<TraceVar>) {
    if let Process::TraceInput { bind, .. } = p {
        out.insert(bind.clone());
    }
    let _ = map_children(p, &mut |q| {
        trace_vars_bound(q, out);
        Process::Nil
    });
}

fn rename_in_lang_expr(e: &LangExpr, from: &LangVar, to: &LangVar) -> LangExpr {
    match e {
        LangExpr::Var(v) if v == from => LangExpr::Var(to.clone()),
        LangExpr::Var(_) | LangExpr::Lit(_) => e.clone(),
        LangExpr::Union(a, b) => LangExpr::union(
            rename_in_lang_expr(a, from, to),
            rename_in_lang_expr(b, from, to),
        ),
    }
}

/// Capture-avoiding renaming of a free language variable.
pub(crate) fn rename_lang_var(p: &Process, from: &LangVar, to: &LangVar) -> Process {
    if from == to {
        return p.clone();
    }
    match p {
        Process::LangInput { chan, bind, cont } => {
            if bind == from {
                return p.clone();
            }
            let (bind, cont) = if bind == to && cont.free_vars().0.contains(from) {
                let mut avoid = BTreeSet::new();
                lang_vars_bound(cont, &mut avoid);
                avoid.extend(cont.free_vars().0);
                avoid.insert(to.clone());
                let fresh = (1..)
                    .map(|i| LangVar::new(&format!("{}{i}", bind.as_str())))
                    .find(|v| !avoid.contains(v))
                    .unwrap();
                let cont = rename_lang_var(cont, bind, &fresh);
                (fresh, cont)
            } else {
                (bind.clone(), (**cont).clone())
            };
            Process::LangInput {
                chan: chan.clone(),
                bind,
                cont: Box::new(rename_lang_var(&cont, from, to)),
            }
        }
        Process::LangOutput { chan, lang, cont } => Process::LangOutput {
            chan: chan.clone(),
            lang: rename_in_lang_expr(lang, from, to),
            cont: Box::new(rename_lang_var(cont, from, to)),
        },
        Process::Exec(e) => {
            let mut e = e.clone();
            e.lang = rename_in_lang_expr(&e.lang, from, to);
            Process::Exec(e)
        }
        _ => map_children(p, &mut |q| rename_lang_var(q, from, to)),
    }
}

/// Capture-avoiding renaming of a free trace variable.
pub(crate) fn rename_trace_var(p: &Process, from: &TraceVar, to: &TraceVar) -> Process {
    if from == to {
        return p.clone();
    }
    let swap = |e: &TraceExpr| match e {
        TraceExpr::Var(v) if v == from => TraceExpr::Var(to.clone()),
        _ => e.clone(),
    };
    match p {
        Process::TraceInput { chan, bind, cont } => {
            if bind == from {
                return p.clone();
            }
            let (bind, cont) = if bind == to && cont.free_vars().1.contains(from) {
                let mut avoid = BTreeSet::new();
                trace_vars_bound(cont, &mut avoid);
                avoid.extend(cont.free_vars().1);
                avoid.insert(to.clone());
                let fresh = (1..)
                    .map(|i| TraceVar::new(&format!("{}{i}", bind.as_str())))
                    .find(|v| !avoid.contains(v))
                    .unwrap();
                let cont = rename_trace_var(cont, bind, &fresh);
                (fresh, cont)
            } else {
                (bind.clone(), (**cont).clone())
            };
            Process::TraceInput {
                chan: chan.clone(),
                bind,
                cont: Box::new(rename_trace_var(&cont, from, to)),
            }
        }
        Process::TraceOutput { chan, trace, cont } => Process::TraceOutput {
            chan: chan.clone(),
            trace: swap(trace),
            cont: Box::new(rename_trace_var(cont, from, to)),
        },
        Process::IsInTrace {
            label,
            trace,
            then,
            otherwise,
        } => Process::IsInTrace {
            label: label.clone(),
            trace: swap(trace),
            then: Box::new(rename_trace_var(then, from, to)),
            otherwise: Box::new(rename_trace_var(otherwise, from, to)),
        },
        _ => map_children(p, &mut |q| rename_trace_var(q, from, to)),
    }
}
