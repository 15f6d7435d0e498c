//! Terms, goal formulas, clauses, and programs.
//!
//! Lists use the conventional cons-cell encoding: `[]` is `Atom("[]")` and a
//! nonempty list is `Compound(".", [head, tail])`, so list terms unify
//! structurally with no special cases. A `[Lo..Hi]` range is kept symbolic in
//! the tree and only expanded by the engine when a loop iterates over it.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;

/// Source of globally unique variable ids for one session.
///
/// Parsing, clause renaming, and the solver all draw from the same source, so
/// two distinct variables never share an id. One source is owned per session;
/// it is never shared between threads.
#[derive(Clone, Debug, Default)]
pub struct VarSource {
    next: u64,
}

impl VarSource {
    pub fn new() -> Self {
        VarSource { next: 0 }
    }

    pub fn starting_at(next: u64) -> Self {
        VarSource { next }
    }

    /// Mint a variable with a new id, keeping `name` for display.
    pub fn fresh(&mut self, name: &str) -> Var {
        let id = self.next;
        self.next += 1;
        Var {
            name: name.to_string(),
            id,
        }
    }

    pub fn next_id(&self) -> u64 {
        self.next
    }
}

/// A logic variable. Two `Var`s denote the same variable exactly when their
/// ids are equal; the name only matters for printing.
#[derive(Clone, Debug)]
pub struct Var {
    pub name: String,
    pub id: u64,
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl std::hash::Hash for Var {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

/// First-order terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Atom(String),
    Int(BigInt),
    Str(String),
    /// Functor plus arguments; arity is always `args.len()` and at least 1.
    Compound(String, Vec<Term>),
    /// Surface `[Lo..Hi]`, expanded at loop-evaluation time.
    Range(Box<Term>, Box<Term>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(name.to_string())
    }

    pub fn int(value: i64) -> Term {
        Term::Int(BigInt::from(value))
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        debug_assert!(!args.is_empty(), "compound arity must be >= 1");
        Term::Compound(functor.to_string(), args)
    }

    pub fn nil() -> Term {
        Term::atom("[]")
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Compound(".".to_string(), vec![head, tail])
    }

    /// Build a proper list from the given elements.
    pub fn list(items: Vec<Term>) -> Term {
        items
            .into_iter()
            .rev()
            .fold(Term::nil(), |tail, head| Term::cons(head, tail))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Atom(a) if a == "[]")
    }

    /// Heads of clauses and call payloads must be callable.
    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(_, _))
    }

    /// Functor/arity key for callable terms.
    pub fn functor_arity(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(name) => Some((name, 0)),
            Term::Compound(functor, args) => Some((functor, args.len())),
            _ => None,
        }
    }
}

/// Goal formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Goal {
    /// The empty goal: succeeds once.
    True,
    /// An atomic call; the payload is always an `Atom` or `Compound`.
    Call(Term),
    /// Conjunction whose conjuncts must both succeed; evaluation order is
    /// unspecified (scheduled left-to-right here).
    ParAnd(Box<Goal>, Box<Goal>),
    /// Conjunction with guaranteed left-before-right side-effect order.
    SeqAnd(Box<Goal>, Box<Goal>),
    /// Existential: the binder scopes over exactly the body.
    Exists(Var, Box<Goal>),
    /// Bounded quantifier: iterate the body with the binder ranging over
    /// every element of the list term.
    Forall(Var, Term, Box<Goal>),
}

impl Goal {
    pub fn call(t: Term) -> Goal {
        debug_assert!(t.is_callable(), "call payload must be atom or compound");
        Goal::Call(t)
    }

    pub fn par(left: Goal, right: Goal) -> Goal {
        Goal::ParAnd(Box::new(left), Box::new(right))
    }

    pub fn seq(left: Goal, right: Goal) -> Goal {
        Goal::SeqAnd(Box::new(left), Box::new(right))
    }

    pub fn exists(var: Var, body: Goal) -> Goal {
        Goal::Exists(var, Box::new(body))
    }

    pub fn forall(var: Var, list: Term, body: Goal) -> Goal {
        Goal::Forall(var, list, Box::new(body))
    }
}

/// A program clause `head :- body.`; facts carry `Goal::True` as body. All
/// clause variables are implicitly universally quantified at clause level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub head: Term,
    pub body: Goal,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        Clause {
            head,
            body: Goal::True,
        }
    }

    pub fn rule(head: Term, body: Goal) -> Clause {
        Clause { head, body }
    }

    pub fn key(&self) -> (String, usize) {
        let (f, a) = self
            .head
            .functor_arity()
            .expect("clause head must be callable");
        (f.to_string(), a)
    }
}

/// An ordered clause sequence indexed by head functor/arity. Clause order
/// within a key follows insertion (source) order.
#[derive(Clone, Debug, Default)]
pub struct Program {
    clauses: Vec<Clause>,
    index: HashMap<(String, usize), Vec<usize>>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.clauses == other.clauses
    }
}

impl Program {
    pub fn new() -> Self {
        Program::default()
    }

    pub fn from_clauses(clauses: Vec<Clause>) -> Self {
        let mut p = Program::new();
        for c in clauses {
            p.add(c);
        }
        p
    }

    pub fn add(&mut self, clause: Clause) {
        let key = clause.key();
        self.index.entry(key).or_default().push(self.clauses.len());
        self.clauses.push(clause);
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Positions of the clauses whose head matches `functor/arity`, in source
    /// order; `None` when the predicate is not defined at all.
    pub fn matching(&self, functor: &str, arity: usize) -> Option<&[usize]> {
        self.index
            .get(&(functor.to_string(), arity))
            .map(|v| v.as_slice())
    }

    pub fn defines(&self, functor: &str, arity: usize) -> bool {
        self.index.contains_key(&(functor.to_string(), arity))
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, self.id)
    }
}

/// All variables occurring in `t`, first occurrence first, deduplicated.
pub fn term_vars(t: &Term) -> Vec<Var> {
    let mut out = Vec::new();
    collect_term_vars(t, &mut Vec::new(), &mut out);
    out
}

/// Variables occurring free in `g` (not captured by an enclosing binder),
/// first occurrence first, deduplicated.
pub fn free_vars(g: &Goal) -> Vec<Var> {
    let mut out = Vec::new();
    collect_goal_vars(g, &mut Vec::new(), &mut out);
    out
}

fn collect_term_vars(t: &Term, bound: &mut Vec<u64>, out: &mut Vec<Var>) {
    match t {
        Term::Var(v) => {
            if !bound.contains(&v.id) && !out.iter().any(|w| w.id == v.id) {
                out.push(v.clone());
            }
        }
        Term::Atom(_) | Term::Int(_) | Term::Str(_) => {}
        Term::Compound(_, args) => {
            for a in args {
                collect_term_vars(a, bound, out);
            }
        }
        Term::Range(lo, hi) => {
            collect_term_vars(lo, bound, out);
            collect_term_vars(hi, bound, out);
        }
    }
}

fn collect_goal_vars(g: &Goal, bound: &mut Vec<u64>, out: &mut Vec<Var>) {
    match g {
        Goal::True => {}
        Goal::Call(t) => collect_term_vars(t, bound, out),
        Goal::ParAnd(a, b) | Goal::SeqAnd(a, b) => {
            collect_goal_vars(a, bound, out);
            collect_goal_vars(b, bound, out);
        }
        Goal::Exists(v, body) => {
            bound.push(v.id);
            collect_goal_vars(body, bound, out);
            bound.pop();
        }
        Goal::Forall(v, list, body) => {
            // The list is evaluated outside the binder's scope.
            collect_term_vars(list, bound, out);
            bound.push(v.id);
            collect_goal_vars(body, bound, out);
            bound.pop();
        }
    }
}

/// Replace every free occurrence of `var` in `t` by `replacement`.
pub fn substitute_term(t: &Term, var: &Var, replacement: &Term) -> Term {
    match t {
        Term::Var(v) if v.id == var.id => replacement.clone(),
        Term::Var(_) | Term::Atom(_) | Term::Int(_) | Term::Str(_) => t.clone(),
        Term::Compound(f, args) => Term::Compound(
            f.clone(),
            args.iter()
                .map(|a| substitute_term(a, var, replacement))
                .collect(),
        ),
        Term::Range(lo, hi) => Term::Range(
            Box::new(substitute_term(lo, var, replacement)),
            Box::new(substitute_term(hi, var, replacement)),
        ),
    }
}

/// Replace every free occurrence of `var` in `g` by `replacement`; bound
/// occurrences under a binder for the same variable are untouched.
pub fn substitute_goal(g: &Goal, var: &Var, replacement: &Term) -> Goal {
    match g {
        Goal::True => Goal::True,
        Goal::Call(t) => Goal::Call(substitute_term(t, var, replacement)),
        Goal::ParAnd(a, b) => Goal::par(
            substitute_goal(a, var, replacement),
            substitute_goal(b, var, replacement),
        ),
        Goal::SeqAnd(a, b) => Goal::seq(
            substitute_goal(a, var, replacement),
            substitute_goal(b, var, replacement),
        ),
        Goal::Exists(v, body) => {
            if v.id == var.id {
                g.clone()
            } else {
                Goal::exists(v.clone(), substitute_goal(body, var, replacement))
            }
        }
        Goal::Forall(v, list, body) => {
            let list = substitute_term(list, var, replacement);
            let body = if v.id == var.id {
                (**body).clone()
            } else {
                substitute_goal(body, var, replacement)
            };
            Goal::forall(v.clone(), list, body)
        }
    }
}

/// Standardize a clause apart: every variable is replaced by a fresh one,
/// consistently within the clause.
pub fn rename_clause(c: &Clause, fresh: &mut VarSource) -> Clause {
    let mut map = HashMap::new();
    Clause {
        head: rename_term(&c.head, fresh, &mut map),
        body: rename_goal(&c.body, fresh, &mut map),
    }
}

fn rename_var(v: &Var, fresh: &mut VarSource, map: &mut HashMap<u64, Var>) -> Var {
    map.entry(v.id).or_insert_with(|| fresh.fresh(&v.name)).clone()
}

fn rename_term(t: &Term, fresh: &mut VarSource, map: &mut HashMap<u64, Var>) -> Term {
    match t {
        Term::Var(v) => Term::Var(rename_var(v, fresh, map)),
        Term::Atom(_) | Term::Int(_) | Term::Str(_) => t.clone(),
        Term::Compound(f, args) => Term::Compound(
            f.clone(),
            args.iter().map(|a| rename_term(a, fresh, map)).collect(),
        ),
        Term::Range(lo, hi) => Term::Range(
            Box::new(rename_term(lo, fresh, map)),
            Box::new(rename_term(hi, fresh, map)),
        ),
    }
}

fn rename_goal(g: &Goal, fresh: &mut VarSource, map: &mut HashMap<u64, Var>) -> Goal {
    match g {
        Goal::True => Goal::True,
        Goal::Call(t) => Goal::Call(rename_term(t, fresh, map)),
        Goal::ParAnd(a, b) => Goal::par(rename_goal(a, fresh, map), rename_goal(b, fresh, map)),
        Goal::SeqAnd(a, b) => Goal::seq(rename_goal(a, fresh, map), rename_goal(b, fresh, map)),
        Goal::Exists(v, body) => Goal::exists(
            rename_var(v, fresh, map),
            rename_goal(body, fresh, map),
        ),
        Goal::Forall(v, list, body) => Goal::forall(
            rename_var(v, fresh, map),
            rename_term(list, fresh, map),
            rename_goal(body, fresh, map),
        ),
    }
}

/// Wrap the free variables of a query goal in `Exists`, outermost binder
/// first in order of first occurrence.
pub fn close_query(g: Goal) -> Goal {
    let fv = free_vars(&g);
    fv.into_iter()
        .rev()
        .fold(g, |acc, v| Goal::exists(v, acc))
}

/// Largest variable id occurring anywhere in the term, binders included.
pub fn max_var_id_term(t: &Term) -> Option<u64> {
    match t {
        Term::Var(v) => Some(v.id),
        Term::Atom(_) | Term::Int(_) | Term::Str(_) => None,
        Term::Compound(_, args) => args.iter().filter_map(max_var_id_term).max(),
        Term::Range(lo, hi) => max_var_id_term(lo).max(max_var_id_term(hi)),
    }
}

pub fn max_var_id_goal(g: &Goal) -> Option<u64> {
    match g {
        Goal::True => None,
        Goal::Call(t) => max_var_id_term(t),
        Goal::ParAnd(a, b) | Goal::SeqAnd(a, b) => max_var_id_goal(a).max(max_var_id_goal(b)),
        Goal::Exists(v, body) => Some(v.id).max(max_var_id_goal(body)),
        Goal::Forall(v, list, body) => Some(v.id)
            .max(max_var_id_term(list))
            .max(max_var_id_goal(body)),
    }
}

pub fn max_var_id_clause(c: &Clause) -> Option<u64> {
    max_var_id_term(&c.head).max(max_var_id_goal(&c.body))
}

pub fn max_var_id_program(p: &Program) -> Option<u64> {
    p.clauses().iter().filter_map(max_var_id_clause).max()
}

#[derive(Default)]
struct AlphaMap {
    fwd: HashMap<u64, u64>,
    rev: HashMap<u64, u64>,
}

impl AlphaMap {
    fn pair(&mut self, a: &Var, b: &Var) -> bool {
        match (self.fwd.get(&a.id), self.rev.get(&b.id)) {
            (None, None) => {
                self.fwd.insert(a.id, b.id);
                self.rev.insert(b.id, a.id);
                true
            }
            (Some(&bb), Some(&aa)) => bb == b.id && aa == a.id,
            _ => false,
        }
    }
}

fn term_alpha(a: &Term, b: &Term, m: &mut AlphaMap) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => m.pair(x, y),
        (Term::Atom(x), Term::Atom(y)) => x == y,
        (Term::Int(x), Term::Int(y)) => x == y,
        (Term::Str(x), Term::Str(y)) => x == y,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_alpha(x, y, m))
        }
        (Term::Range(l1, h1), Term::Range(l2, h2)) => {
            term_alpha(l1, l2, m) && term_alpha(h1, h2, m)
        }
        _ => false,
    }
}

fn goal_alpha(a: &Goal, b: &Goal, m: &mut AlphaMap) -> bool {
    match (a, b) {
        (Goal::True, Goal::True) => true,
        (Goal::Call(x), Goal::Call(y)) => term_alpha(x, y, m),
        (Goal::ParAnd(x1, x2), Goal::ParAnd(y1, y2))
        | (Goal::SeqAnd(x1, x2), Goal::SeqAnd(y1, y2)) => {
            goal_alpha(x1, y1, m) && goal_alpha(x2, y2, m)
        }
        (Goal::Exists(v, x), Goal::Exists(w, y)) => m.pair(v, w) && goal_alpha(x, y, m),
        (Goal::Forall(v, l1, x), Goal::Forall(w, l2, y)) => {
            term_alpha(l1, l2, m) && m.pair(v, w) && goal_alpha(x, y, m)
        }
        _ => false,
    }
}

/// Structural equality up to a consistent renaming of variables.
pub fn alpha_eq_term(a: &Term, b: &Term) -> bool {
    term_alpha(a, b, &mut AlphaMap::default())
}

pub fn alpha_eq_goal(a: &Goal, b: &Goal) -> bool {
    goal_alpha(a, b, &mut AlphaMap::default())
}

pub fn alpha_eq_clause(a: &Clause, b: &Clause) -> bool {
    let mut m = AlphaMap::default();
    term_alpha(&a.head, &b.head, &mut m) && goal_alpha(&a.body, &b.body, &mut m)
}

/// Clause-by-clause alpha equality; the variable map is fresh per clause
/// since clauses are implicitly closed.
pub fn alpha_eq_program(a: &Program, b: &Program) -> bool {
    a.len() == b.len()
        && a.clauses()
            .iter()
            .zip(b.clauses())
            .all(|(x, y)| alpha_eq_clause(x, y))
}
