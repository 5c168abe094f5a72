//! Process scripts.
//!
//! ```text
//! P ::= 0 | x(y).P | send x<y>.P | P | P | P + P | new x.P | !P | (P)
//!     | recvlang x(l).P | sendlang x<LEXPR>.P
//!     | recvtrace x(tr).P | sendtrace x<TR>.P
//!     | exec(LEXPR, x, TERM) | exec(LEXPR, x, TERM, TR) | exec(LEXPR, x, TERM, TR, PRED)
//!     | if TERM in TR then P else P
//! LEXPR ::= name | union(LEXPR, LEXPR) | lang { <language definition> }
//! TR ::= tr | [ TERM ... ]
//! ```
//!
//! `|` binds weakest, then `+`; prefixes extend as far as a single prefix
//! process. The `.0` after an output may be omitted.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::cursor::Cursor;
use super::language::{parse_language_at, print_language, sexpr_to_term};
use super::{SyntaxError, SyntaxErrorKind};
use crate::lang::{Language, Term};
use crate::process::ast::{
    Exec, LangExpr, LangVar, Name, Process, Sort, Trace, TraceExpr, TraceVar,
};
use crate::process::normal::is_reserved_name;

/// Languages a script may refer to by name.
pub type Imports = HashMap<String, Arc<Language>>;

const KEYWORDS: [&str; 14] = [
    "new", "send", "recvlang", "sendlang", "recvtrace", "sendtrace", "exec", "if", "in", "then",
    "else", "union", "lang", "language",
];

struct Parser<'s, 'i> {
    cur: Cursor<'s>,
    imports: &'i Imports,
    scope: Vec<(String, Sort)>,
}

impl Parser<'_, '_> {
    fn lookup(&self, id: &str) -> Option<Sort> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == id)
            .map(|(_, s)| *s)
    }

    fn ident(&mut self, what: &str) -> Result<(String, (usize, usize)), SyntaxError> {
        self.cur.skip_trivia();
        let pos = self.cur.position();
        match self.cur.ident() {
            Some(id) if KEYWORDS.contains(&id.as_str()) => Err(SyntaxError::new(
                pos.0,
                pos.1,
                SyntaxErrorKind::Parse(format!("expected {what}, found keyword `{id}`")),
            )),
            Some(id) => Ok((id, pos)),
            None => Err(self.cur.expected(what)),
        }
    }

    fn channel(&mut self) -> Result<Name, SyntaxError> {
        let (id, (line, col)) = self.ident("a channel name")?;
        match self.lookup(&id) {
            Some(Sort::Name) => Ok(Name::new(&id)),
            Some(sort) => Err(SyntaxError::new(
                line,
                col,
                SyntaxErrorKind::SortMismatch(format!("`{id}` is a {sort} variable, used as a channel")),
            )),
            None if is_reserved_name(&id) => Err(SyntaxError::new(
                line,
                col,
                SyntaxErrorKind::Parse(format!("`{id}` is reserved for bound names")),
            )),
            None => Ok(Name::new(&id)),
        }
    }

    fn binder(&mut self, what: &str) -> Result<String, SyntaxError> {
        Ok(self.ident(what)?.0)
    }

    fn lang_expr(&mut self) -> Result<LangExpr, SyntaxError> {
        self.cur.skip_trivia();
        if self.cur.at_keyword("union") {
            self.cur.ident();
            self.cur.expect("(")?;
            let a = self.lang_expr()?;
            self.cur.expect(",")?;
            let b = self.lang_expr()?;
            self.cur.expect(")")?;
            return Ok(LangExpr::union(a, b));
        }
        if self.cur.at_keyword("lang") {
            self.cur.ident();
            self.cur.expect("{")?;
            let lang = parse_language_at(&mut self.cur)?;
            self.cur.expect("}")?;
            return Ok(LangExpr::lit(lang));
        }
        let (id, (line, col)) = self.ident("a language expression")?;
        match self.lookup(&id) {
            Some(Sort::Language) => Ok(LangExpr::Var(LangVar::new(&id))),
            Some(sort) => Err(SyntaxError::new(
                line,
                col,
                SyntaxErrorKind::SortMismatch(format!("`{id}` is a {sort} variable, used as a language")),
            )),
            None => match self.imports.get(&id) {
                Some(lang) => Ok(LangExpr::Lit(lang.clone())),
                None => Err(SyntaxError::new(
                    line,
                    col,
                    SyntaxErrorKind::UnboundVariable(id),
                )),
            },
        }
    }

    fn ground_term(&mut self) -> Result<Term, SyntaxError> {
        self.cur.skip_trivia();
        if self.cur.peek() != Some('(') {
            return Err(self.cur.expected("a parenthesized term"));
        }
        let e = self.cur.sexpr()?;
        sexpr_to_term(&e, &[]).map_err(|mut err| {
            if let SyntaxErrorKind::UndeclaredMetavarRoot(w) = &err.kind {
                err.kind = SyntaxErrorKind::Parse(format!(
                    "`{w}`: terms in processes are ground and cannot contain metavariables"
                ));
            }
            err
        })
    }

    fn trace_expr(&mut self) -> Result<TraceExpr, SyntaxError> {
        if self.cur.eat("[") {
            let mut labels = Vec::new();
            loop {
                self.cur.skip_trivia();
                if self.cur.eat("]") {
                    return Ok(TraceExpr::Lit(Trace(labels)));
                }
                labels.push(self.ground_term()?);
            }
        }
        let (id, (line, col)) = self.ident("a trace")?;
        match self.lookup(&id) {
            Some(Sort::Trace) => Ok(TraceExpr::Var(TraceVar::new(&id))),
            Some(sort) => Err(SyntaxError::new(
                line,
                col,
                SyntaxErrorKind::SortMismatch(format!("`{id}` is a {sort} variable, used as a trace")),
            )),
            None => Err(SyntaxError::new(
                line,
                col,
                SyntaxErrorKind::UnboundVariable(id),
            )),
        }
    }

    fn with_binding<T>(
        &mut self,
        name: &str,
        sort: Sort,
        f: impl FnOnce(&mut Self) -> Result<T, SyntaxError>,
    ) -> Result<T, SyntaxError> {
        self.scope.push((name.to_string(), sort));
        let r = f(self);
        self.scope.pop();
        r
    }

    fn continuation(&mut self) -> Result<Process, SyntaxError> {
        if self.cur.eat(".") {
            self.prefix()
        } else {
            Ok(Process::Nil)
        }
    }

    fn process(&mut self) -> Result<Process, SyntaxError> {
        let mut p = self.choice()?;
        while self.cur.eat("|") {
            let q = self.choice()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn choice(&mut self) -> Result<Process, SyntaxError> {
        let mut p = self.prefix()?;
        while self.cur.eat("+") {
            let q = self.prefix()?;
            p = Process::choice(p, q);
        }
        Ok(p)
    }

    fn prefix(&mut self) -> Result<Process, SyntaxError> {
        self.cur.skip_trivia();
        match self.cur.peek() {
            Some('0') => {
                self.cur.bump();
                return Ok(Process::Nil);
            }
            Some('(') => {
                self.cur.bump();
                let p = self.process()?;
                self.cur.expect(")")?;
                return Ok(p);
            }
            Some('!') => {
                self.cur.bump();
                return Ok(Process::replicate(self.prefix()?));
            }
            _ => {}
        }
        let Some(word) = self.cur.peek_ident() else {
            return Err(self.cur.expected("a process"));
        };
        match word.as_str() {
            "new" => {
                self.cur.ident();
                let x = self.binder("a restricted name")?;
                self.cur.expect(".")?;
                let body = self.with_binding(&x, Sort::Name, |p| p.prefix())?;
                Ok(Process::restrict(x.as_str(), body))
            }
            "send" => {
                self.cur.ident();
                let chan = self.channel()?;
                self.cur.expect("<")?;
                let msg = self.channel()?;
                self.cur.expect(">")?;
                let cont = self.continuation()?;
                Ok(Process::output(chan, msg, cont))
            }
            "sendlang" => {
                self.cur.ident();
                let chan = self.channel()?;
                self.cur.expect("<")?;
                let lang = self.lang_expr()?;
                self.cur.expect(">")?;
                let cont = self.continuation()?;
                Ok(Process::lang_output(chan, lang, cont))
            }
            "sendtrace" => {
                self.cur.ident();
                let chan = self.channel()?;
                self.cur.expect("<")?;
                let trace = self.trace_expr()?;
                self.cur.expect(">")?;
                let cont = self.continuation()?;
                Ok(Process::trace_output(chan, trace, cont))
            }
            "recvlang" | "recvtrace" => {
                self.cur.ident();
                let chan = self.channel()?;
                self.cur.expect("(")?;
                let var = self.binder("a variable")?;
                self.cur.expect(")")?;
                self.cur.expect(".")?;
                if word == "recvlang" {
                    let cont = self.with_binding(&var, Sort::Language, |p| p.prefix())?;
                    Ok(Process::lang_input(chan, LangVar::new(&var), cont))
                } else {
                    let cont = self.with_binding(&var, Sort::Trace, |p| p.prefix())?;
                    Ok(Process::trace_input(chan, TraceVar::new(&var), cont))
                }
            }
            "exec" => {
                self.cur.ident();
                self.cur.expect("(")?;
                let lang = self.lang_expr()?;
                self.cur.expect(",")?;
                let result = self.channel()?;
                self.cur.expect(",")?;
                let program = self.ground_term()?;
                let mut trace = Trace::empty();
                let mut step_pred = None;
                if self.cur.eat(",") {
                    self.cur.skip_trivia();
                    let pos = self.cur.position();
                    match self.trace_expr()? {
                        TraceExpr::Lit(t) => trace = t,
                        TraceExpr::Var(v) => {
                            return Err(SyntaxError::new(
                                pos.0,
                                pos.1,
                                SyntaxErrorKind::Parse(format!(
                                    "the trace of a program execution must be literal, found `{v}`"
                                )),
                            ))
                        }
                    }
                    if self.cur.eat(",") {
                        step_pred = Some(
                            self.cur
                                .word()
                                .ok_or_else(|| self.cur.expected("a predicate name"))?
                                .into(),
                        );
                    }
                }
                self.cur.expect(")")?;
                Ok(Process::Exec(Exec {
                    lang,
                    result,
                    step_pred,
                    program,
                    trace,
                }))
            }
            "if" => {
                self.cur.ident();
                let label = self.ground_term()?;
                if !self.cur.at_keyword("in") {
                    return Err(self.cur.expected("`in`"));
                }
                self.cur.ident();
                let trace = self.trace_expr()?;
                if !self.cur.at_keyword("then") {
                    return Err(self.cur.expected("`then`"));
                }
                self.cur.ident();
                let then = self.prefix()?;
                if !self.cur.at_keyword("else") {
                    return Err(self.cur.expected("`else`"));
                }
                self.cur.ident();
                let otherwise = self.prefix()?;
                Ok(Process::is_in_trace(label, trace, then, otherwise))
            }
            _ => {
                let chan = self.channel()?;
                self.cur.expect("(")?;
                let y = self.binder("a bound name")?;
                self.cur.expect(")")?;
                self.cur.expect(".")?;
                let cont = self.with_binding(&y, Sort::Name, |p| p.prefix())?;
                Ok(Process::input(chan, y.as_str(), cont))
            }
        }
    }
}

/// Parses a process script. Language names resolve through `imports`.
pub fn parse_process(text: &str, imports: &Imports) -> Result<Process, SyntaxError> {
    let mut p = Parser {
        cur: Cursor::new(text),
        imports,
        scope: Vec::new(),
    };
    let proc = p.process()?;
    if !p.cur.at_end() {
        return Err(p.cur.expected("end of input"));
    }
    Ok(proc)
}

/// Script text of a language expression. Named literals print by name,
/// anonymous ones inline as `lang { ... }`.
pub fn print_lang_expr(e: &LangExpr) -> String {
    e.to_string()
}

impl fmt::Display for LangExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangExpr::Var(v) => write!(f, "{v}"),
            LangExpr::Lit(l) => match l.name() {
                Some(n) => f.write_str(n),
                None => {
                    let body = print_language(l);
                    write!(f, "lang {{ {} }}", body.split_whitespace().collect::<Vec<_>>().join(" "))
                }
            },
            LangExpr::Union(a, b) => write!(f, "union({a}, {b})"),
        }
    }
}

fn fmt_trace_expr(t: &TraceExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        TraceExpr::Var(v) => write!(f, "{v}"),
        TraceExpr::Lit(t) => fmt_trace(t, f),
    }
}

fn fmt_trace(t: &Trace, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str("[")?;
    for (i, l) in t.labels().iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{l}")?;
    }
    f.write_str("]")
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Par,
    Choice,
    Prefix,
}

fn level_of(p: &Process) -> Level {
    match p {
        Process::Par(..) => Level::Par,
        Process::Choice(..) => Level::Choice,
        _ => Level::Prefix,
    }
}

fn fmt_at(p: &Process, at: Level, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level_of(p) < at {
        f.write_str("(")?;
        fmt_process(p, f)?;
        return f.write_str(")");
    }
    fmt_process(p, f)
}

fn fmt_cont(cont: &Process, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if *cont == Process::Nil {
        return Ok(());
    }
    f.write_str(".")?;
    fmt_at(cont, Level::Prefix, f)
}

fn fmt_process(p: &Process, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Process::Nil => f.write_str("0"),
        Process::Input { chan, bind, cont } => {
            write!(f, "{chan}({bind}).")?;
            fmt_at(cont, Level::Prefix, f)
        }
        Process::Output { chan, msg, cont } => {
            write!(f, "send {chan}<{msg}>")?;
            fmt_cont(cont, f)
        }
        Process::Par(a, b) => {
            fmt_at(a, Level::Par, f)?;
            f.write_str(" | ")?;
            fmt_at(b, Level::Choice, f)
        }
        Process::Choice(a, b) => {
            fmt_at(a, Level::Choice, f)?;
            f.write_str(" + ")?;
            fmt_at(b, Level::Prefix, f)
        }
        Process::Restrict(x, body) => {
            write!(f, "new {x}.")?;
            fmt_at(body, Level::Prefix, f)
        }
        Process::Replicate(body) => {
            f.write_str("!")?;
            fmt_at(body, Level::Prefix, f)
        }
        Process::Exec(e) => {
            write!(f, "exec({}, {}, {}", e.lang, e.result, e.program)?;
            if !e.trace.is_empty() || e.step_pred.is_some() {
                f.write_str(", ")?;
                fmt_trace(&e.trace, f)?;
            }
            if let Some(pred) = &e.step_pred {
                write!(f, ", {pred}")?;
            }
            f.write_str(")")
        }
        Process::IsInTrace {
            label,
            trace,
            then,
            otherwise,
        } => {
            write!(f, "if {label} in ")?;
            fmt_trace_expr(trace, f)?;
            f.write_str(" then ")?;
            fmt_at(then, Level::Prefix, f)?;
            f.write_str(" else ")?;
            fmt_at(otherwise, Level::Prefix, f)
        }
        Process::LangInput { chan, bind, cont } => {
            write!(f, "recvlang {chan}({bind}).")?;
            fmt_at(cont, Level::Prefix, f)
        }
        Process::LangOutput { chan, lang, cont } => {
            write!(f, "sendlang {chan}<{lang}>")?;
            fmt_cont(cont, f)
        }
        Process::TraceInput { chan, bind, cont } => {
            write!(f, "recvtrace {chan}({bind}).")?;
            fmt_at(cont, Level::Prefix, f)
        }
        Process::TraceOutput { chan, trace, cont } => {
            write!(f, "sendtrace {chan}<")?;
            fmt_trace_expr(trace, f)?;
            f.write_str(">")?;
            fmt_cont(cont, f)
        }
    }
}

/// Script syntax; parses back to an equal process given the same imports.
impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_process(self, f)
    }
}
