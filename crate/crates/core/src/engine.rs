//! Proof search over the clause program obtained from a language's inference
//! rules.
//!
//! Every rule becomes one first-order Horn clause (conclusion as head,
//! premises as body). Goals are solved depth-first, clauses tried in rule
//! order and premises left to right, with occurs-checked unification. The
//! search is bounded by a [`SearchBudget`]; running out of budget is an
//! error, never a failed proof.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::lang::{Formula, Language, Rule, Symbol, Term, STEP_PREDICATE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("proof search budget exhausted ({nodes} nodes explored, depth limit {max_depth}) while proving {goal}")]
    BudgetExhausted {
        goal: String,
        nodes: u64,
        max_depth: usize,
    },
    #[error("step query on {source_term} produced a non-ground answer: label {label}, target {target}")]
    NonGroundAnswer {
        source_term: String,
        label: String,
        target: String,
    },
    #[error("invalid search budget: both limits must be positive")]
    InvalidBudget,
}

/// Limits on a single proof search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    max_nodes: u64,
    max_depth: usize,
}

impl SearchBudget {
    pub const DEFAULT_MAX_NODES: u64 = 1_000_000;
    pub const DEFAULT_MAX_DEPTH: usize = 512;

    pub fn new(max_nodes: u64, max_depth: usize) -> Result<SearchBudget, EngineError> {
        if max_nodes == 0 || max_depth == 0 {
            return Err(EngineError::InvalidBudget);
        }
        Ok(SearchBudget {
            max_nodes,
            max_depth,
        })
    }

    pub fn max_nodes(&self) -> u64 {
        self.max_nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: Self::DEFAULT_MAX_NODES,
            max_depth: Self::DEFAULT_MAX_DEPTH,
        }
    }
}

/// A finite map from metavariable names to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::MetaVar(v) => match self.bindings.get(&**v) {
                Some(bound) => bound.clone(),
                None => t.clone(),
            },
            Term::Node(op, children) => {
                Term::Node(op.clone(), children.iter().map(|c| self.apply(c)).collect())
            }
        }
    }

    pub fn apply_formula(&self, f: &Formula) -> Formula {
        Formula {
            pred: f.pred.clone(),
            args: f.args.iter().map(|a| self.apply(a)).collect(),
        }
    }

    /// Adds `var ↦ t`, keeping the substitution idempotent. `t` must already
    /// be fully substituted and must not contain `var`.
    fn bind(&mut self, var: &str, t: Term) {
        let single = Substitution {
            bindings: BTreeMap::from([(var.to_string(), t.clone())]),
        };
        for value in self.bindings.values_mut() {
            *value = single.apply(value);
        }
        self.bindings.insert(var.to_string(), t);
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} ↦ {v}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of `s(t1)` and `s(t2)` extending `s`, with occurs-check.
pub fn unify(t1: &Term, t2: &Term, s: &Substitution) -> Option<Substitution> {
    let mut s = s.clone();
    let mut stack = vec![(t1.clone(), t2.clone())];
    while let Some((a, b)) = stack.pop() {
        let a = s.apply(&a);
        let b = s.apply(&b);
        match (a, b) {
            (Term::MetaVar(x), Term::MetaVar(y)) if x == y => {}
            (Term::MetaVar(x), t) | (t, Term::MetaVar(x)) => {
                if t.occurs(&x) {
                    return None;
                }
                s.bind(&x, t);
            }
            (Term::Node(f, fs), Term::Node(g, gs)) => {
                if f != g || fs.len() != gs.len() {
                    return None;
                }
                stack.extend(fs.into_iter().zip(gs));
            }
        }
    }
    Some(s)
}

/// One inference rule read as a Horn clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub head: Formula,
    pub body: Vec<Formula>,
}

impl From<&Rule> for Clause {
    fn from(rule: &Rule) -> Self {
        Clause {
            head: rule.conclusion.clone(),
            body: rule.premises.clone(),
        }
    }
}

/// Clause pattern with metavariables numbered per clause.
#[derive(Debug, Clone)]
enum Pattern {
    Var(usize),
    App(Symbol, Vec<Pattern>),
}

#[derive(Debug, Clone)]
struct CompiledClause {
    head: Vec<Pattern>,
    body: Vec<(Symbol, Vec<Pattern>)>,
    vars: usize,
}

fn compile_term(t: &Term, names: &mut HashMap<Symbol, usize>) -> Pattern {
    match t {
        Term::MetaVar(v) => {
            let next = names.len();
            Pattern::Var(*names.entry(v.clone()).or_insert(next))
        }
        Term::Node(op, children) => Pattern::App(
            op.clone(),
            children.iter().map(|c| compile_term(c, names)).collect(),
        ),
    }
}

impl CompiledClause {
    fn new(clause: &Clause) -> CompiledClause {
        let mut names = HashMap::new();
        let head = clause
            .head
            .args
            .iter()
            .map(|a| compile_term(a, &mut names))
            .collect();
        let body = clause
            .body
            .iter()
            .map(|f| {
                let args = f.args.iter().map(|a| compile_term(a, &mut names)).collect();
                (f.pred.clone(), args)
            })
            .collect();
        CompiledClause {
            head,
            body,
            vars: names.len(),
        }
    }
}

/// The clause program of a language. Clause order equals rule order.
#[derive(Debug, Clone)]
pub struct ClauseProgram {
    clauses: Vec<Clause>,
    compiled: Vec<CompiledClause>,
    by_pred: HashMap<Symbol, Vec<usize>>,
    source: Arc<Language>,
}

impl ClauseProgram {
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn source(&self) -> &Language {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

pub fn compile(lang: Arc<Language>) -> ClauseProgram {
    let clauses: Vec<Clause> = lang.rules().iter().map(Clause::from).collect();
    let compiled = clauses.iter().map(CompiledClause::new).collect();
    let mut by_pred: HashMap<Symbol, Vec<usize>> = HashMap::new();
    for (i, c) in clauses.iter().enumerate() {
        by_pred.entry(c.head.pred.clone()).or_default().push(i);
    }
    ClauseProgram {
        clauses,
        compiled,
        by_pred,
        source: lang,
    }
}

// Search-time terms. Variables index into the solver's binding store.
#[derive(Debug, Clone)]
enum Cell {
    Var(usize),
    App(Symbol, Rc<[Cell]>),
}

#[derive(Debug, Clone)]
struct Goal {
    id: usize,
    pred: Symbol,
    args: Rc<[Cell]>,
    depth: usize,
}

/// Persistent goal list.
#[derive(Debug, Clone)]
enum Goals {
    Nil,
    Cons(Rc<Goal>, Rc<Goals>),
}

#[derive(Debug)]
struct Frame {
    goal: Rc<Goal>,
    rest: Rc<Goals>,
    next_alt: usize,
    trail_len: usize,
    vars_len: usize,
    goals_len: usize,
    log_len: usize,
}

/// A node of a derivation tree: the instantiated goal, the clause that
/// proved it and the sub-derivations of the clause premises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub goal: Formula,
    pub clause: usize,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn depth(&self) -> usize {
        1 + self.premises.iter().map(Derivation::depth).max().unwrap_or(0)
    }
}

/// One solution of a goal.
#[derive(Debug, Clone)]
pub struct Answer {
    pub subst: Substitution,
    pub derivation: Derivation,
}

/// Lazy stream of answers, in clause order, depth first.
pub struct Solutions<'p> {
    prog: &'p ClauseProgram,
    budget: SearchBudget,
    goal_text: String,
    goal_vars: Vec<(String, usize)>,
    bindings: Vec<Option<Cell>>,
    trail: Vec<usize>,
    goals: Vec<(Symbol, Rc<[Cell]>)>,
    log: Vec<(usize, usize, Vec<usize>)>,
    frames: Vec<Frame>,
    pending: Option<Rc<Goals>>,
    nodes: u64,
    done: bool,
}

impl<'p> Solutions<'p> {
    fn new(prog: &'p ClauseProgram, goal: &Formula, budget: SearchBudget) -> Solutions<'p> {
        let mut names: HashMap<Symbol, usize> = HashMap::new();
        let args: Vec<Pattern> = goal
            .args
            .iter()
            .map(|a| compile_term(a, &mut names))
            .collect();
        let mut goal_vars: Vec<(String, usize)> =
            names.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        goal_vars.sort_by_key(|(_, v)| *v);
        let mut s = Solutions {
            prog,
            budget,
            goal_text: goal.to_string(),
            goal_vars,
            bindings: vec![None; names.len()],
            trail: Vec::new(),
            goals: Vec::new(),
            log: Vec::new(),
            frames: Vec::new(),
            pending: None,
            nodes: 0,
            done: false,
        };
        let cells: Rc<[Cell]> = args.iter().map(|p| instantiate(p, 0)).collect();
        let root = s.new_goal(goal.pred.clone(), cells, 1);
        s.pending = Some(Rc::new(Goals::Cons(root, Rc::new(Goals::Nil))));
        s
    }

    fn new_goal(&mut self, pred: Symbol, args: Rc<[Cell]>, depth: usize) -> Rc<Goal> {
        let id = self.goals.len();
        self.goals.push((pred.clone(), args.clone()));
        Rc::new(Goal {
            id,
            pred,
            args,
            depth,
        })
    }

    fn exhausted(&mut self) -> EngineError {
        self.done = true;
        EngineError::BudgetExhausted {
            goal: self.goal_text.clone(),
            nodes: self.nodes,
            max_depth: self.budget.max_depth,
        }
    }

    fn deref(&self, c: &Cell) -> Cell {
        let mut cur = c.clone();
        while let Cell::Var(v) = cur {
            match &self.bindings[v] {
                Some(next) => cur = next.clone(),
                None => return Cell::Var(v),
            }
        }
        cur
    }

    fn occurs(&self, var: usize, c: &Cell) -> bool {
        match self.deref(c) {
            Cell::Var(v) => v == var,
            Cell::App(_, args) => args.iter().any(|a| self.occurs(var, a)),
        }
    }

    fn bind(&mut self, var: usize, c: Cell) {
        self.bindings[var] = Some(c);
        self.trail.push(var);
    }

    fn unify(&mut self, a: &Cell, b: &Cell) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((a, b)) = stack.pop() {
            match (self.deref(&a), self.deref(&b)) {
                (Cell::Var(x), Cell::Var(y)) if x == y => {}
                // younger variables point at older ones so goal variables stay roots
                (Cell::Var(x), Cell::Var(y)) => {
                    let (young, old) = if x > y { (x, y) } else { (y, x) };
                    self.bind(young, Cell::Var(old));
                }
                (Cell::Var(x), t) | (t, Cell::Var(x)) => {
                    if self.occurs(x, &t) {
                        return false;
                    }
                    self.bind(x, t);
                }
                (Cell::App(f, fs), Cell::App(g, gs)) => {
                    if f != g || fs.len() != gs.len() {
                        return false;
                    }
                    stack.extend(fs.iter().cloned().zip(gs.iter().cloned()));
                }
            }
        }
        true
    }

    fn undo(&mut self, frame: &Frame) {
        while self.trail.len() > frame.trail_len {
            let v = self.trail.pop().unwrap();
            self.bindings[v] = None;
        }
        self.bindings.truncate(frame.vars_len);
        self.goals.truncate(frame.goals_len);
        self.log.truncate(frame.log_len);
    }

    fn reify(&self, c: &Cell, fresh: &mut HashMap<usize, String>) -> Term {
        match self.deref(c) {
            Cell::Var(v) => {
                if let Some((name, _)) = self.goal_vars.iter().find(|(_, id)| *id == v) {
                    return Term::MetaVar(name.as_str().into());
                }
                let next = fresh.len();
                let name = fresh.entry(v).or_insert_with(|| format!("_{next}"));
                Term::MetaVar(name.as_str().into())
            }
            Cell::App(op, args) => {
                Term::Node(op, args.iter().map(|a| self.reify(a, fresh)).collect())
            }
        }
    }

    fn derivation(&self, goal_id: usize, fresh: &mut HashMap<usize, String>) -> Derivation {
        let (pred, args) = &self.goals[goal_id];
        let goal = Formula {
            pred: pred.clone(),
            args: args.iter().map(|a| self.reify(a, fresh)).collect(),
        };
        let (_, clause, children) = self
            .log
            .iter()
            .find(|(g, _, _)| *g == goal_id)
            .expect("every solved goal is logged");
        Derivation {
            goal,
            clause: *clause,
            premises: children
                .iter()
                .map(|c| self.derivation(*c, fresh))
                .collect(),
        }
    }

    fn answer(&self) -> Answer {
        let mut fresh = HashMap::new();
        let mut subst = Substitution::new();
        for (name, id) in &self.goal_vars {
            let t = self.reify(&Cell::Var(*id), &mut fresh);
            if t != Term::MetaVar(name.as_str().into()) {
                subst.bindings.insert(name.clone(), t);
            }
        }
        let derivation = self.derivation(0, &mut fresh);
        Answer { subst, derivation }
    }

    /// Tries the remaining alternatives of the topmost frame. Returns the new
    /// goal list on success, `None` when the frame is exhausted (and popped).
    fn advance(&mut self) -> Result<Option<Rc<Goals>>, EngineError> {
        let mut frame = self.frames.pop().expect("advance needs a frame");
        let alts = self
            .prog
            .by_pred
            .get(&frame.goal.pred)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        while frame.next_alt < alts.len() {
            let idx = alts[frame.next_alt];
            frame.next_alt += 1;
            self.undo(&frame);
            let clause = &self.prog.compiled[idx];
            if clause.head.len() != frame.goal.args.len() {
                continue;
            }
            let base = self.bindings.len();
            self.bindings.resize(base + clause.vars, None);
            let head: Vec<Cell> = clause.head.iter().map(|p| instantiate(p, base)).collect();
            let ok = head
                .iter()
                .zip(frame.goal.args.iter())
                .all(|(h, g)| self.unify(h, g));
            if !ok {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget.max_nodes {
                return Err(self.exhausted());
            }
            let depth = frame.goal.depth + 1;
            let mut premises = Vec::with_capacity(clause.body.len());
            for (pred, args) in &clause.body {
                let cells: Rc<[Cell]> = args.iter().map(|p| instantiate(p, base)).collect();
                premises.push(self.new_goal(pred.clone(), cells, depth));
            }
            self.log.push((
                frame.goal.id,
                idx,
                premises.iter().map(|g| g.id).collect(),
            ));
            let mut goals = frame.rest.clone();
            for g in premises.into_iter().rev() {
                goals = Rc::new(Goals::Cons(g, goals));
            }
            self.frames.push(frame);
            return Ok(Some(goals));
        }
        self.undo(&frame);
        Ok(None)
    }

    fn step(&mut self) -> Option<Result<Answer, EngineError>> {
        loop {
            let goals = match self.pending.take() {
                Some(g) => g,
                None => {
                    if self.frames.is_empty() {
                        self.done = true;
                        return None;
                    }
                    match self.advance() {
                        Ok(Some(g)) => g,
                        Ok(None) => continue,
                        Err(e) => return Some(Err(e)),
                    }
                }
            };
            match &*goals {
                Goals::Nil => return Some(Ok(self.answer())),
                Goals::Cons(goal, rest) => {
                    if goal.depth > self.budget.max_depth {
                        return Some(Err(self.exhausted()));
                    }
                    self.frames.push(Frame {
                        goal: goal.clone(),
                        rest: rest.clone(),
                        next_alt: 0,
                        trail_len: self.trail.len(),
                        vars_len: self.bindings.len(),
                        goals_len: self.goals.len(),
                        log_len: self.log.len(),
                    });
                }
            }
        }
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Answer, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.step()
    }
}

fn instantiate(p: &Pattern, base: usize) -> Cell {
    match p {
        Pattern::Var(i) => Cell::Var(base + i),
        Pattern::App(op, args) => {
            Cell::App(op.clone(), args.iter().map(|a| instantiate(a, base)).collect())
        }
    }
}

/// Enumerates the answers to `goal` in `prog`.
pub fn solve<'p>(prog: &'p ClauseProgram, goal: &Formula, budget: SearchBudget) -> Solutions<'p> {
    Solutions::new(prog, goal, budget)
}

/// All `(label, target)` pairs such that `(pred label t target)` is provable,
/// in proof-search order with repeated pairs removed.
pub fn query_step_with(
    prog: &ClauseProgram,
    pred: &str,
    t: &Term,
    budget: SearchBudget,
) -> Result<Vec<(Term, Term)>, EngineError> {
    let label = Term::var("Label");
    let target = Term::var("Target");
    let goal = Formula::new(pred, vec![label.clone(), t.clone(), target.clone()]);
    let mut out: Vec<(Term, Term)> = Vec::new();
    for answer in solve(prog, &goal, budget) {
        let answer = answer?;
        let l = answer.subst.apply(&label);
        let r = answer.subst.apply(&target);
        if !l.is_ground() || !r.is_ground() {
            return Err(EngineError::NonGroundAnswer {
                source_term: t.to_string(),
                label: l.to_string(),
                target: r.to_string(),
            });
        }
        if !out.iter().any(|(a, b)| *a == l && *b == r) {
            out.push((l, r));
        }
    }
    Ok(out)
}

/// Transitions of `t` under the distinguished step predicate `-->`.
pub fn query_step(
    prog: &ClauseProgram,
    t: &Term,
    budget: SearchBudget,
) -> Result<Vec<(Term, Term)>, EngineError> {
    query_step_with(prog, STEP_PREDICATE, t, budget)
}
