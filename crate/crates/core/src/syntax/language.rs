//! Language definition files.
//!
//! ```text
//! language bpa
//! grammar
//!   Action A ::= (a) | (b) | (c)
//!   Process P ::= (act A) | (+ P P) | (seq P P)
//! rules
//!   (checkMark A (act A))
//!   (checkMark A P1) --- (checkMark A (+ P1 P2))
//!   (--> A P1 P1') --- (--> A (seq P1 P2) (seq P1' P2))
//! ```
//!
//! Premises are separated by commas and `---` precedes the conclusion.
//! Bare words are metavariables and must start with a declared root;
//! `metavars A P` declares roots for fragments that have no grammar of
//! their own.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::cursor::{Cursor, SExpr};
use super::{SyntaxError, SyntaxErrorKind};
use crate::lang::{metavar_root, Formula, GrammarRule, Language, Rule, Term};

const KEYWORDS: [&str; 4] = ["language", "metavars", "grammar", "rules"];

pub(crate) fn sexpr_to_term(e: &SExpr, roots: &[String]) -> Result<Term, SyntaxError> {
    match e {
        SExpr::Atom(w, (line, col)) => {
            if metavar_root(w, roots.iter().map(String::as_str)).is_some() {
                Ok(Term::var(w))
            } else {
                Err(SyntaxError::new(
                    *line,
                    *col,
                    SyntaxErrorKind::UndeclaredMetavarRoot(w.clone()),
                ))
            }
        }
        SExpr::List(items, (line, col)) => {
            let (op, args) = split_head(items, *line, *col)?;
            let args = args
                .iter()
                .map(|a| sexpr_to_term(a, roots))
                .collect::<Result<_, _>>()?;
            Ok(Term::node(op, args))
        }
    }
}

fn split_head(items: &[SExpr], line: usize, col: usize) -> Result<(&str, &[SExpr]), SyntaxError> {
    match items.split_first() {
        Some((SExpr::Atom(op, _), rest)) => Ok((op, rest)),
        Some((other, _)) => {
            let (l, c) = other.pos();
            Err(SyntaxError::new(
                l,
                c,
                SyntaxErrorKind::Parse("constructor name expected".into()),
            ))
        }
        None => Err(SyntaxError::new(
            line,
            col,
            SyntaxErrorKind::Parse("empty term `()`".into()),
        )),
    }
}

fn sexpr_to_formula(e: &SExpr, roots: &[String]) -> Result<Formula, SyntaxError> {
    match e {
        SExpr::List(items, (line, col)) => {
            let (pred, args) = split_head(items, *line, *col)?;
            let args = args
                .iter()
                .map(|a| sexpr_to_term(a, roots))
                .collect::<Result<_, _>>()?;
            Ok(Formula::new(pred, args))
        }
        SExpr::Atom(_, (line, col)) => Err(SyntaxError::new(
            *line,
            *col,
            SyntaxErrorKind::Parse("a formula must be parenthesized".into()),
        )),
    }
}

/// Category name, metavariable root, productions and source position.
type RawCategory = (String, String, Vec<SExpr>, (usize, usize));

fn keyword_next(cur: &Cursor<'_>) -> bool {
    cur.peek_word()
        .is_some_and(|w| KEYWORDS.contains(&w.as_str()))
}

pub(crate) fn parse_language_at(cur: &mut Cursor<'_>) -> Result<Language, SyntaxError> {
    let mut name = None;
    let mut roots: Vec<String> = Vec::new();
    if cur.peek_word().as_deref() == Some("language") {
        cur.word();
        name = Some(cur.ident().ok_or_else(|| cur.expected("a language name"))?);
    }
    if cur.peek_word().as_deref() == Some("metavars") {
        cur.word();
        while !cur.at_end() && !keyword_next(cur) && cur.peek() != Some('}') {
            roots.push(cur.ident().ok_or_else(|| cur.expected("a metavariable root"))?);
        }
    }
    let mut raw_grammar: Vec<RawCategory> = Vec::new();
    if cur.peek_word().as_deref() == Some("grammar") {
        cur.word();
        while !cur.at_end() && !keyword_next(cur) && cur.peek() != Some('}') {
            let pos = cur.position();
            let category = cur.ident().ok_or_else(|| cur.expected("a category name"))?;
            let root = cur
                .ident()
                .ok_or_else(|| cur.expected("a metavariable root"))?;
            cur.expect("::=")?;
            let mut productions = vec![cur.sexpr()?];
            while cur.peek_word().as_deref() == Some("|") {
                cur.word();
                productions.push(cur.sexpr()?);
            }
            raw_grammar.push((category, root, productions, pos));
        }
    }
    roots.extend(raw_grammar.iter().map(|(_, r, _, _)| r.clone()));
    let mut grammar = Vec::new();
    for (category, root, productions, _) in &raw_grammar {
        let productions = productions
            .iter()
            .map(|p| sexpr_to_term(p, &roots))
            .collect::<Result<_, _>>()?;
        grammar.push(GrammarRule::new(category, root, productions));
    }
    let mut rules = Vec::new();
    if cur.peek_word().as_deref() == Some("rules") {
        cur.word();
        loop {
            cur.skip_trivia();
            if cur.peek() != Some('(') {
                break;
            }
            let mut formulas = vec![sexpr_to_formula(&cur.sexpr()?, &roots)?];
            while cur.eat(",") {
                formulas.push(sexpr_to_formula(&cur.sexpr()?, &roots)?);
            }
            if cur.peek_word().as_deref() == Some("---") {
                cur.word();
                let conclusion = sexpr_to_formula(&cur.sexpr()?, &roots)?;
                rules.push(Rule::new(formulas, conclusion));
            } else if formulas.len() == 1 {
                rules.push(Rule::axiom(formulas.pop().unwrap()));
            } else {
                return Err(cur.expected("`---` before the conclusion"));
            }
        }
    }
    let pos = raw_grammar.first().map(|g| g.3).unwrap_or((1, 1));
    Language::new(name, grammar, rules)
        .map_err(|e| SyntaxError::new(pos.0, pos.1, SyntaxErrorKind::Language(e)))
}

/// Parses a complete language definition file.
pub fn parse_language(text: &str) -> Result<Language, SyntaxError> {
    let mut cur = Cursor::new(text);
    let lang = parse_language_at(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.expected("end of input"));
    }
    Ok(lang)
}

fn alpha_prefix(var: &str) -> &str {
    let end = var
        .char_indices()
        .find(|(_, c)| !c.is_alphabetic())
        .map(|(i, _)| i)
        .unwrap_or(var.len());
    &var[..end]
}

/// Canonical text of a language definition.
pub fn print_language(lang: &Language) -> String {
    let mut out = String::new();
    if let Some(name) = lang.name() {
        let _ = writeln!(out, "language {name}");
    }
    let declared: BTreeSet<&str> = lang.roots().collect();
    let mut used = BTreeSet::new();
    for g in lang.grammar() {
        g.productions.iter().for_each(|p| p.collect_metavars(&mut used));
    }
    for r in lang.rules() {
        used.extend(r.metavars());
    }
    let extra: BTreeSet<&str> = used
        .iter()
        .map(|v| alpha_prefix(v))
        .filter(|r| !declared.contains(r))
        .collect();
    if !extra.is_empty() {
        let list: Vec<&str> = extra.into_iter().collect();
        let _ = writeln!(out, "metavars {}", list.join(" "));
    }
    if !lang.grammar().is_empty() {
        out.push_str("grammar\n");
        for g in lang.grammar() {
            let prods: Vec<String> = g.productions.iter().map(Term::to_string).collect();
            let _ = writeln!(out, "  {} {} ::= {}", g.category, g.root, prods.join(" | "));
        }
    }
    if !lang.rules().is_empty() {
        out.push_str("rules\n");
        for r in lang.rules() {
            let _ = writeln!(out, "  {r}");
        }
    }
    out
}
