//! Capture-avoiding substitution of channel names, languages and traces.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::ast::{LangExpr, LangVar, Name, Process, Trace, TraceExpr, TraceVar};
use crate::lang::Language;

/// A name not in `avoid`, derived from `base` by appending a counter.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let stem = if stem.is_empty() { "n" } else { stem };
    (1..)
        .map(|i| Name::new(&format!("{stem}{i}")))
        .find(|n| !avoid.contains(n))
        .expect("infinitely many candidates")
}

fn rename(n: &Name, z: &Name, y: &Name) -> Name {
    if n == y {
        z.clone()
    } else {
        n.clone()
    }
}

/// `P{z/y}`: replaces the free occurrences of channel `y` with `z`.
pub fn subst_channel(p: &Process, z: &Name, y: &Name) -> Process {
    if z == y {
        return p.clone();
    }
    let go = |q: &Process| Box::new(subst_channel(q, z, y));
    match p {
        Process::Nil => Process::Nil,
        Process::Input { chan, bind, cont } => {
            let chan = rename(chan, z, y);
            if bind == y {
                return Process::Input {
                    chan,
                    bind: bind.clone(),
                    cont: cont.clone(),
                };
            }
            let (bind, cont) = avoid_capture(bind, cont, z, y);
            Process::Input {
                chan,
                bind,
                cont: go(&cont),
            }
        }
        Process::Restrict(x, cont) => {
            if x == y {
                return p.clone();
            }
            let (x, cont) = avoid_capture(x, cont, z, y);
            Process::Restrict(x, go(&cont))
        }
        Process::Output { chan, msg, cont } => Process::Output {
            chan: rename(chan, z, y),
            msg: rename(msg, z, y),
            cont: go(cont),
        },
        Process::Par(a, b) => Process::Par(go(a), go(b)),
        Process::Choice(a, b) => Process::Choice(go(a), go(b)),
        Process::Replicate(q) => Process::Replicate(go(q)),
        Process::Exec(e) => {
            let mut e = e.clone();
            e.result = rename(&e.result, z, y);
            Process::Exec(e)
        }
        Process::IsInTrace {
            label,
            trace,
            then,
            otherwise,
        } => Process::IsInTrace {
            label: label.clone(),
            trace: trace.clone(),
            then: go(then),
            otherwise: go(otherwise),
        },
        Process::LangInput { chan, bind, cont } => Process::LangInput {
            chan: rename(chan, z, y),
            bind: bind.clone(),
            cont: go(cont),
        },
        Process::LangOutput { chan, lang, cont } => Process::LangOutput {
            chan: rename(chan, z, y),
            lang: lang.clone(),
            cont: go(cont),
        },
        Process::TraceInput { chan, bind, cont } => Process::TraceInput {
            chan: rename(chan, z, y),
            bind: bind.clone(),
            cont: go(cont),
        },
        Process::TraceOutput { chan, trace, cont } => Process::TraceOutput {
            chan: rename(chan, z, y),
            trace: trace.clone(),
            cont: go(cont),
        },
    }
}

/// Alpha-renames binder `bind` in `cont` when it would capture `z` in
/// `cont{z/y}`.
fn avoid_capture(bind: &Name, cont: &Process, z: &Name, y: &Name) -> (Name, Process) {
    if bind != z || !cont.free_names().contains(y) {
        return (bind.clone(), cont.clone());
    }
    let mut avoid = BTreeSet::new();
    cont.all_names(&mut avoid);
    avoid.insert(z.clone());
    avoid.insert(y.clone());
    let fresh = fresh_name(bind.as_str(), &avoid);
    let cont = subst_channel(cont, &fresh, bind);
    (fresh, cont)
}

fn subst_lang_expr(e: &LangExpr, lang: &Arc<Language>, l: &LangVar) -> LangExpr {
    match e {
        LangExpr::Var(v) if v == l => LangExpr::Lit(lang.clone()),
        LangExpr::Var(_) | LangExpr::Lit(_) => e.clone(),
        LangExpr::Union(a, b) => LangExpr::union(
            subst_lang_expr(a, lang, l),
            subst_lang_expr(b, lang, l),
        ),
    }
}

/// `P{L/l}`. The substituted language is closed, so only shadowing matters.
pub fn subst_lang(p: &Process, lang: &Arc<Language>, l: &LangVar) -> Process {
    let go = |q: &Process| Box::new(subst_lang(q, lang, l));
    match p {
        Process::Nil => Process::Nil,
        Process::LangInput { chan, bind, cont } => Process::LangInput {
            chan: chan.clone(),
            bind: bind.clone(),
            cont: if bind == l { cont.clone() } else { go(cont) },
        },
        Process::LangOutput {
            chan,
            lang: expr,
            cont,
        } => Process::LangOutput {
            chan: chan.clone(),
            lang: subst_lang_expr(expr, lang, l),
            cont: go(cont),
        },
        Process::Exec(e) => {
            let mut e = e.clone();
            e.lang = subst_lang_expr(&e.lang, lang, l);
            Process::Exec(e)
        }
        _ => map_children(p, &mut |q| subst_lang(q, lang, l)),
    }
}

/// `P{𝔗/tr}`.
pub fn subst_trace(p: &Process, trace: &Trace, tr: &TraceVar) -> Process {
    let replace = |e: &TraceExpr| match e {
        TraceExpr::Var(v) if v == tr => TraceExpr::Lit(trace.clone()),
        _ => e.clone(),
    };
    match p {
        Process::TraceInput { chan, bind, cont } => Process::TraceInput {
            chan: chan.clone(),
            bind: bind.clone(),
            cont: if bind == tr {
                cont.clone()
            } else {
                Box::new(subst_trace(cont, trace, tr))
            },
        },
        Process::TraceOutput {
            chan,
            trace: expr,
            cont,
        } => Process::TraceOutput {
            chan: chan.clone(),
            trace: replace(expr),
            cont: Box::new(subst_trace(cont, trace, tr)),
        },
        Process::IsInTrace {
            label,
            trace: expr,
            then,
            otherwise,
        } => Process::IsInTrace {
            label: label.clone(),
            trace: replace(expr),
            then: Box::new(subst_trace(then, trace, tr)),
            otherwise: Box::new(subst_trace(otherwise, trace, tr)),
        },
        _ => map_children(p, &mut |q| subst_trace(q, trace, tr)),
    }
}

/// Rebuilds `p` with `f` applied to each direct sub-process. Binders and
/// payloads are left untouched.
pub(crate) fn map_children(p: &Process, f: &mut dyn FnMut(&Process) -> Process) -> Process {
    let mut g = |q: &Process| Box::new(f(q));
    match p {
        Process::Nil => Process::Nil,
        Process::Exec(e) => Process::Exec(e.clone()),
        Process::Input { chan, bind, cont } => Process::Input {
            chan: chan.clone(),
            bind: bind.clone(),
            cont: g(cont),
        },
        Process::Output { chan, msg, cont } => Process::Output {
            chan: chan.clone(),
            msg: msg.clone(),
            cont: g(cont),
        },
        Process::Par(a, b) => {
            let a = g(a);
            Process::Par(a, g(b))
        }
        Process::Choice(a, b) => {
            let a = g(a);
            Process::Choice(a, g(b))
        }
        Process::Restrict(x, q) => Process::Restrict(x.clone(), g(q)),
        Process::Replicate(q) => Process::Replicate(g(q)),
        Process::IsInTrace {
            label,
            trace,
            then,
            otherwise,
        } => {
            let then = g(then);
            Process::IsInTrace {
                label: label.clone(),
                trace: trace.clone(),
                then,
                otherwise: g(otherwise),
            }
        }
        Process::LangInput { chan, bind, cont } => Process::LangInput {
            chan: chan.clone(),
            bind: bind.clone(),
            cont: g(cont),
        },
        Process::LangOutput { chan, lang, cont } => Process::LangOutput {
            chan: chan.clone(),
            lang: lang.clone(),
            cont: g(cont),
        },
        Process::TraceInput { chan, bind, cont } => Process::TraceInput {
            chan: chan.clone(),
            bind: bind.clone(),
            cont: g(cont),
        },
        Process::TraceOutput { chan, trace, cont } => Process::TraceOutput {
            chan: chan.clone(),
            trace: trace.clone(),
            cont: g(cont),
        },
    }
}
