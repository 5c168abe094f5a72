//! Language definitions: terms, formulae, inference rules, grammars and the
//! syntactic union of two languages.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Interned-ish identifier used for operator, predicate and variable names.
pub type Symbol = Arc<str>;

/// Name of the distinguished labeled transition predicate.
pub const STEP_PREDICATE: &str = "-->";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("category `{category}` uses metavariable root `{left}` on one side of a union and `{right}` on the other")]
    CategoryClash {
        category: String,
        left: String,
        right: String,
    },
    #[error("category `{0}` is defined twice")]
    DuplicateCategory(String),
    #[error("metavariable root `{root}` is declared by both `{first}` and `{second}`")]
    DuplicateRoot {
        root: String,
        first: String,
        second: String,
    },
    #[error("production `{production}` of category `{category}` has no top-level constructor")]
    BareProduction { category: String, production: String },
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
}

/// A term in abstract-syntax-tree style: a metavariable or a constructor
/// applied to a (possibly empty) list of terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    MetaVar(Symbol),
    Node(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::MetaVar(name.into())
    }

    pub fn node(op: &str, children: Vec<Term>) -> Term {
        Term::Node(op.into(), children)
    }

    /// A nullary constructor such as `(a)`.
    pub fn constant(op: &str) -> Term {
        Term::Node(op.into(), Vec::new())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::MetaVar(_) => false,
            Term::Node(_, children) => children.iter().all(Term::is_ground),
        }
    }

    /// Number of nodes, counting metavariables as one node each.
    pub fn size(&self) -> usize {
        match self {
            Term::MetaVar(_) => 1,
            Term::Node(_, children) => 1 + children.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn free_metavars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_metavars(&mut out);
        out
    }

    pub(crate) fn collect_metavars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::MetaVar(name) => {
                out.insert(name.to_string());
            }
            Term::Node(_, children) => children.iter().for_each(|c| c.collect_metavars(out)),
        }
    }

    pub fn occurs(&self, name: &str) -> bool {
        match self {
            Term::MetaVar(v) => &**v == name,
            Term::Node(_, children) => children.iter().any(|c| c.occurs(name)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::MetaVar(name) => f.write_str(name),
            Term::Node(op, children) => {
                write!(f, "({op}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Set of metavariable names occurring in `t`.
pub fn free_metavars(t: &Term) -> BTreeSet<String> {
    t.free_metavars()
}

/// `(pn t1 ... tn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula {
    pub pred: Symbol,
    pub args: Vec<Term>,
}

impl Formula {
    pub fn new(pred: &str, args: Vec<Term>) -> Formula {
        Formula {
            pred: pred.into(),
            args,
        }
    }

    /// `(--> label source target)`.
    pub fn step(label: Term, source: Term, target: Term) -> Formula {
        Formula::new(STEP_PREDICATE, vec![label, source, target])
    }

    pub fn collect_metavars(&self, out: &mut BTreeSet<String>) {
        self.args.iter().for_each(|a| a.collect_metavars(out));
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// An inference rule. Metavariables are scoped over the whole rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
}

impl Rule {
    pub fn axiom(conclusion: Formula) -> Rule {
        Rule {
            premises: Vec::new(),
            conclusion,
        }
    }

    pub fn new(premises: Vec<Formula>, conclusion: Formula) -> Rule {
        Rule {
            premises,
            conclusion,
        }
    }

    pub fn metavars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.premises.iter().for_each(|p| p.collect_metavars(&mut out));
        self.conclusion.collect_metavars(&mut out);
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        if !self.premises.is_empty() {
            f.write_str(" --- ")?;
        }
        write!(f, "{}", self.conclusion)
    }
}

/// `cname X ::= t1 | ... | tn`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GrammarRule {
    pub category: Symbol,
    pub root: Symbol,
    pub productions: Vec<Term>,
}

impl GrammarRule {
    pub fn new(category: &str, root: &str, productions: Vec<Term>) -> GrammarRule {
        GrammarRule {
            category: category.into(),
            root: root.into(),
            productions,
        }
    }
}

/// Splits a token into its maximal alphabetic prefix and the rest.
fn alpha_prefix(token: &str) -> (&str, &str) {
    let end = token
        .char_indices()
        .find(|(_, c)| !c.is_alphabetic())
        .map(|(i, _)| i)
        .unwrap_or(token.len());
    token.split_at(end)
}

/// Returns the metavariable root of `token` if its alphabetic prefix is one
/// of `roots` and the remainder consists of digits and primes only.
pub fn metavar_root<'a, I>(token: &str, roots: I) -> Option<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let (prefix, rest) = alpha_prefix(token);
    if prefix.is_empty() || !rest.chars().all(|c| c.is_ascii_digit() || c == '\'') {
        return None;
    }
    roots
        .into_iter()
        .find(|r| *r == prefix)
        .map(|r| r.to_string())
}

/// A grammar together with an inference-rule system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Language {
    name: Option<String>,
    grammar: Vec<GrammarRule>,
    rules: Vec<Rule>,
}

impl Language {
    pub fn new(
        name: Option<String>,
        grammar: Vec<GrammarRule>,
        rules: Vec<Rule>,
    ) -> Result<Language, LangError> {
        let mut categories: HashMap<&str, &str> = HashMap::new();
        let mut roots: HashMap<&str, &str> = HashMap::new();
        for g in &grammar {
            if categories.insert(&g.category, &g.root).is_some() {
                return Err(LangError::DuplicateCategory(g.category.to_string()));
            }
            if let Some(first) = roots.insert(&g.root, &g.category) {
                return Err(LangError::DuplicateRoot {
                    root: g.root.to_string(),
                    first: first.to_string(),
                    second: g.category.to_string(),
                });
            }
            if let Some(p) = g.productions.iter().find(|p| matches!(p, Term::MetaVar(_))) {
                return Err(LangError::BareProduction {
                    category: g.category.to_string(),
                    production: p.to_string(),
                });
            }
        }
        Ok(Language {
            name,
            grammar,
            rules,
        })
    }

    /// The language with no grammar and no rules; neutral for [`union`].
    pub fn empty() -> Language {
        Language::default()
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Language {
        self.name = Some(name.into());
        self
    }

    pub fn grammar(&self) -> &[GrammarRule] {
        &self.grammar
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn category(&self, name: &str) -> Option<&GrammarRule> {
        self.grammar.iter().find(|g| &*g.category == name)
    }

    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.grammar.iter().map(|g| &*g.root)
    }

    /// The category whose metavariable root matches `var`, if any.
    pub fn category_of_metavar(&self, var: &str) -> Option<&GrammarRule> {
        let root = metavar_root(var, self.roots())?;
        self.grammar.iter().find(|g| *g.root == *root)
    }

    /// Name for diagnostics: the declared name, or a short structural summary.
    pub fn label(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => format!(
                "<{} categories, {} rules>",
                self.grammar.len(),
                self.rules.len()
            ),
        }
    }
}

/// Syntactic union: grammar productions and rules of `right` are appended to
/// those of `left`, dropping exact duplicates. The result is unnamed.
pub fn union(left: &Language, right: &Language) -> Result<Language, LangError> {
    let mut grammar = left.grammar.clone();
    for g in &right.grammar {
        match grammar.iter_mut().find(|l| l.category == g.category) {
            Some(existing) => {
                if existing.root != g.root {
                    return Err(LangError::CategoryClash {
                        category: g.category.to_string(),
                        left: existing.root.to_string(),
                        right: g.root.to_string(),
                    });
                }
                for p in &g.productions {
                    if !existing.productions.contains(p) {
                        existing.productions.push(p.clone());
                    }
                }
            }
            None => {
                let mut fresh = g.clone();
                fresh.productions.dedup();
                grammar.push(fresh);
            }
        }
    }
    let mut rules = left.rules.clone();
    for r in &right.rules {
        if !rules.contains(r) {
            rules.push(r.clone());
        }
    }
    Language::new(None, grammar, rules)
}

/// Grammar conformance: is the ground term `t` derivable from `category`?
pub fn check_term(lang: &Language, category: &str, t: &Term) -> Result<bool, LangError> {
    let g = lang
        .category(category)
        .ok_or_else(|| LangError::UnknownCategory(category.to_string()))?;
    Ok(derivable(lang, g, t))
}

fn derivable(lang: &Language, g: &GrammarRule, t: &Term) -> bool {
    g.productions.iter().any(|p| conforms(lang, p, t))
}

fn conforms(lang: &Language, production: &Term, t: &Term) -> bool {
    match (production, t) {
        (Term::MetaVar(hole), _) => match lang.category_of_metavar(hole) {
            Some(g) => derivable(lang, g, t),
            None => false,
        },
        (Term::Node(op, ps), Term::Node(top, ts)) => {
            op == top && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, c)| conforms(lang, p, c))
        }
        (Term::Node(..), Term::MetaVar(_)) => false,
    }
}
