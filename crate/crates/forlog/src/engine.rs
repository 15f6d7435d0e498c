//! The solver: depth-first, left-to-right proof search with backtracking,
//! enumerating answer substitutions lazily.
//!
//! Goal dispatch follows the top-level constructor:
//!
//! * `Call` of a builtin key goes to the [`crate::builtins`] table;
//! * any other `Call` backchains through matching program clauses, renamed
//!   apart and unified against the goal;
//! * both conjunctions solve left then right under shared bindings — the
//!   parallel form's success condition is honored with sequential
//!   scheduling, the sequential form additionally guarantees side-effect
//!   order;
//! * `Exists` substitutes a fresh variable for the binder;
//! * `Forall` iterates its body over the elements of the (fully
//!   instantiated) list, all iterations sharing bindings, an empty list
//!   succeeding immediately.
//!
//! Side effects are never undone on backtracking. Runtime errors abort the
//! current query and are distinct from failure.

use std::collections::HashSet;
use std::fmt;
use std::io;

use num_bigint::BigInt;
use num_traits::One;

use crate::ast::{
    rename_clause, substitute_goal, Goal, Program, Term, Var, VarSource,
};
use crate::builtins;
use crate::reader;
use crate::unify::{unify, Bindings, CyclicTerm, Trail};

/// A failure of execution, as opposed to an unprovable goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuntimeError {
    UnknownPredicate(String, usize),
    IterationListUnbound,
    NotAProperList(String),
    RangeEndpointUnbound,
    RangeEndpointNotInt(String),
    ArithUnbound,
    ArithNonNumeric(String),
    DivisionByZero,
    CyclicTerm,
    DepthLimitExceeded(usize),
    EndOfInput,
    MalformedInput(String),
    Io(String),
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuntimeError::UnknownPredicate(name, arity) => {
                write!(f, "unknown predicate {name}/{arity}")
            }
            RuntimeError::IterationListUnbound => write!(f, "iteration list not instantiated"),
            RuntimeError::NotAProperList(t) => {
                write!(f, "iteration target is not a proper list: {t}")
            }
            RuntimeError::RangeEndpointUnbound => write!(f, "range endpoint not instantiated"),
            RuntimeError::RangeEndpointNotInt(t) => {
                write!(f, "range endpoint is not an integer: {t}")
            }
            RuntimeError::ArithUnbound => write!(f, "arithmetic on an unbound variable"),
            RuntimeError::ArithNonNumeric(t) => write!(f, "arithmetic on a non-number: {t}"),
            RuntimeError::DivisionByZero => write!(f, "division by zero"),
            RuntimeError::CyclicTerm => write!(f, "cyclic term"),
            RuntimeError::DepthLimitExceeded(n) => write!(f, "depth limit {n} exceeded"),
            RuntimeError::EndOfInput => write!(f, "read past end of input"),
            RuntimeError::MalformedInput(e) => write!(f, "malformed input term: {e}"),
            RuntimeError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RuntimeError {}

impl From<CyclicTerm> for RuntimeError {
    fn from(_: CyclicTerm) -> Self {
        RuntimeError::CyclicTerm
    }
}

impl From<io::Error> for RuntimeError {
    fn from(e: io::Error) -> Self {
        RuntimeError::Io(e.to_string())
    }
}

/// Consumer verdict after each solution: keep enumerating or stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    More,
    Done,
}

pub type Step = Result<Flow, RuntimeError>;

/// Where `read/1` takes its terms from.
pub trait TermSource {
    fn next_term(&mut self, vars: &mut VarSource) -> Result<Term, RuntimeError>;
}

/// Pre-parsed `term. term. ...` input, for scripted, deterministic runs.
pub struct ScriptSource {
    terms: std::collections::VecDeque<Term>,
}

impl ScriptSource {
    pub fn new(text: &str, vars: &mut VarSource) -> Result<Self, reader::ParseError> {
        Ok(ScriptSource {
            terms: reader::parse_term_script(text, vars)?.into(),
        })
    }
}

impl TermSource for ScriptSource {
    fn next_term(&mut self, _vars: &mut VarSource) -> Result<Term, RuntimeError> {
        self.terms.pop_front().ok_or(RuntimeError::EndOfInput)
    }
}

/// An input source with nothing in it; `read/1` fails with a runtime error.
pub struct EmptySource;

impl TermSource for EmptySource {
    fn next_term(&mut self, _vars: &mut VarSource) -> Result<Term, RuntimeError> {
        Err(RuntimeError::EndOfInput)
    }
}

/// Output sink wrapper that remembers whether anything was written and what
/// the last byte was, so drivers can decide if answers need a separating
/// newline. Golden tests compare these bytes exactly.
pub struct Sink<'a> {
    inner: &'a mut dyn io::Write,
    wrote: bool,
    last: u8,
}

impl<'a> Sink<'a> {
    fn new(inner: &'a mut dyn io::Write) -> Self {
        Sink {
            inner,
            wrote: false,
            last: 0,
        }
    }

    pub fn write_str(&mut self, s: &str) -> io::Result<()> {
        if let Some(&b) = s.as_bytes().last() {
            self.wrote = true;
            self.last = b;
        }
        self.inner.write_all(s.as_bytes())
    }

    /// True when output was produced and does not already end in a newline.
    pub fn needs_newline(&self) -> bool {
        self.wrote && self.last != b'\n'
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Execution options for one machine.
#[derive(Clone, Copy, Debug, Default)]
pub struct MachineOpts {
    pub occurs_check: bool,
    pub depth_limit: Option<usize>,
    pub trace: bool,
}

/// One answer substitution, restricted to the query variables: every query
/// variable appears, unbound ones mapping to themselves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub answer: Vec<(String, Term)>,
}

impl Solution {
    /// Rendering with variables numbered by appearance, comparable across
    /// runs that allocated different fresh ids.
    pub fn canonical(&self) -> String {
        let mut seen = std::collections::HashMap::new();
        let parts: Vec<String> = self
            .answer
            .iter()
            .map(|(name, t)| format!("{name} = {}", builtins::render_term_canonical(t, &mut seen)))
            .collect();
        parts.join(", ")
    }
}

/// The execution state for one query run: program, bindings, trail, and the
/// machine-owned output sink and input source. One machine runs one query at
/// a time; independent machines over the same program are independent.
pub struct Machine<'a> {
    program: &'a Program,
    pub bind: Bindings,
    pub(crate) trail: Trail,
    out: Sink<'a>,
    inp: &'a mut dyn TermSource,
    pub(crate) opts: MachineOpts,
}

impl<'a> Machine<'a> {
    pub fn new(
        program: &'a Program,
        vars: VarSource,
        out: &'a mut dyn io::Write,
        inp: &'a mut dyn TermSource,
        opts: MachineOpts,
    ) -> Self {
        Machine {
            program,
            bind: Bindings::new(vars),
            trail: Trail::new(),
            out: Sink::new(out),
            inp,
            opts,
        }
    }

    pub fn sink(&mut self) -> &mut Sink<'a> {
        &mut self.out
    }

    pub(crate) fn read_term(&mut self) -> Result<Term, RuntimeError> {
        self.inp.next_term(self.bind.vars_mut())
    }

    /// Solve `g`, invoking `k` once per solution with the bindings still in
    /// place. `k` returns [`Flow::Done`] to stop the enumeration; everything
    /// is unwound (side effects excepted) before `solve` returns.
    pub fn solve(
        &mut self,
        g: &Goal,
        depth: usize,
        k: &mut dyn FnMut(&mut Self) -> Step,
    ) -> Step {
        if let Some(limit) = self.opts.depth_limit {
            if depth > limit {
                return Err(RuntimeError::DepthLimitExceeded(limit));
            }
        }
        match g {
            Goal::True => k(self),
            Goal::ParAnd(left, right) | Goal::SeqAnd(left, right) => {
                self.solve(left, depth + 1, &mut |m| m.solve(right, depth + 1, &mut *k))
            }
            Goal::Exists(v, body) => {
                let fresh = Term::Var(self.bind.fresh(&v.name));
                let inst = substitute_goal(body, v, &fresh);
                self.solve(&inst, depth + 1, k)
            }
            Goal::Forall(v, list, body) => self.solve_forall(v, list, body, depth, k),
            Goal::Call(t) => {
                let (name, arity) = t.functor_arity().expect("call payload is callable");
                if let Some(b) = builtins::lookup(name, arity) {
                    if self.opts.trace {
                        eprintln!("trace: call {}", builtins::render_term(t));
                    }
                    let args: &[Term] = match t {
                        Term::Compound(_, args) => args,
                        _ => &[],
                    };
                    let mark = self.trail.checkpoint();
                    let flow = if builtins::exec(self, b, args)? {
                        k(self)?
                    } else {
                        Flow::More
                    };
                    self.trail.undo(mark, &mut self.bind);
                    Ok(flow)
                } else {
                    self.solve_atom(t, depth, k)
                }
            }
        }
    }

    /// Backchaining over the program clauses whose head key matches the
    /// goal, in source order. An atom with no clauses and no builtin entry
    /// is an unknown predicate, reported rather than silently failed.
    fn solve_atom(
        &mut self,
        goal: &Term,
        depth: usize,
        k: &mut dyn FnMut(&mut Self) -> Step,
    ) -> Step {
        let (name, arity) = goal.functor_arity().expect("callable");
        let program = self.program;
        let Some(positions) = program.matching(name, arity) else {
            return Err(RuntimeError::UnknownPredicate(name.to_string(), arity));
        };
        if self.opts.trace {
            eprintln!("trace: call {}", builtins::render_term(goal));
        }
        for &idx in positions {
            let clause = &program.clauses()[idx];
            let mark = self.trail.checkpoint();
            let renamed = rename_clause(clause, self.bind.vars_mut());
            if unify(
                &renamed.head,
                goal,
                &mut self.bind,
                &mut self.trail,
                self.opts.occurs_check,
            ) {
                let flow = self.solve(&renamed.body, depth + 1, &mut *k)?;
                self.trail.undo(mark, &mut self.bind);
                if flow == Flow::Done {
                    return Ok(Flow::Done);
                }
            } else {
                self.trail.undo(mark, &mut self.bind);
            }
        }
        Ok(Flow::More)
    }

    /// Bounded quantification: dereference the list (expanding a range),
    /// then run the body once per element under shared bindings. The empty
    /// list succeeds immediately with no effect on the store.
    fn solve_forall(
        &mut self,
        v: &Var,
        list: &Term,
        body: &Goal,
        depth: usize,
        k: &mut dyn FnMut(&mut Self) -> Step,
    ) -> Step {
        let mut cur = self.bind.deref(list).clone();
        if let Term::Range(lo, hi) = &cur {
            cur = expand_range(lo, hi, &self.bind)?;
        }
        let mut elems = Vec::new();
        let mut seen_tails = HashSet::new();
        loop {
            if let Term::Var(w) = &cur {
                if !seen_tails.insert(w.id) {
                    return Err(RuntimeError::CyclicTerm);
                }
            }
            cur = self.bind.deref(&cur).clone();
            match cur {
                Term::Atom(ref a) if a == "[]" => break,
                Term::Var(_) => return Err(RuntimeError::IterationListUnbound),
                Term::Compound(ref f, ref mut args) if f == "." && args.len() == 2 => {
                    let tail = args.pop().expect("cons tail");
                    let head = args.pop().expect("cons head");
                    elems.push(head);
                    cur = tail;
                }
                other => {
                    let shown = self.bind.resolve(&other).unwrap_or(other);
                    return Err(RuntimeError::NotAProperList(builtins::render_term(&shown)));
                }
            }
        }
        self.solve_iterations(&elems, v, body, depth, k)
    }

    fn solve_iterations(
        &mut self,
        elems: &[Term],
        v: &Var,
        body: &Goal,
        depth: usize,
        k: &mut dyn FnMut(&mut Self) -> Step,
    ) -> Step {
        match elems.split_first() {
            None => k(self),
            Some((first, rest)) => {
                // Substitute the element for the binder; the binder never
                // leaks a binding past its own iteration.
                let inst = substitute_goal(body, v, first);
                self.solve(&inst, depth + 1, &mut |m| {
                    m.solve_iterations(rest, v, body, depth, &mut *k)
                })
            }
        }
    }

    /// Collect up to `max_solutions` answers (all when unset) together with
    /// whatever the query wrote to the machine's sink. Outer existential
    /// binders name the query variables reported in each solution.
    pub fn run_query(
        &mut self,
        goal: &Goal,
        max_solutions: Option<usize>,
    ) -> Result<Vec<Solution>, RuntimeError> {
        let (open, qvars) = strip_query_binders(goal);
        if max_solutions == Some(0) {
            return Ok(Vec::new());
        }
        let mut solutions = Vec::new();
        {
            let solutions = &mut solutions;
            let qvars = &qvars;
            self.solve(open, 0, &mut |m| {
                let mut answer = Vec::new();
                for v in qvars.iter() {
                    if v.name == "_" {
                        continue;
                    }
                    let t = m.bind.resolve(&Term::Var(v.clone()))?;
                    answer.push((v.name.clone(), t));
                }
                solutions.push(Solution { answer });
                match max_solutions {
                    Some(n) if solutions.len() >= n => Ok(Flow::Done),
                    _ => Ok(Flow::More),
                }
            })?;
        }
        Ok(solutions)
    }
}

/// Split the outermost existential closure off a query, returning the open
/// goal and the query variables in binder order.
pub fn strip_query_binders(goal: &Goal) -> (&Goal, Vec<Var>) {
    let mut qvars = Vec::new();
    let mut g = goal;
    while let Goal::Exists(v, body) = g {
        qvars.push(v.clone());
        g = body;
    }
    (g, qvars)
}

/// `[Lo..Hi]` denotes the list of consecutive integers from `Lo` to `Hi`;
/// when `Lo > Hi` the list is empty. Both endpoints must be bound integers
/// by the time the range is iterated.
pub fn expand_range(lo: &Term, hi: &Term, bind: &Bindings) -> Result<Term, RuntimeError> {
    let endpoint = |t: &Term| -> Result<BigInt, RuntimeError> {
        match bind.deref(t) {
            Term::Int(i) => Ok(i.clone()),
            Term::Var(_) => Err(RuntimeError::RangeEndpointUnbound),
            other => Err(RuntimeError::RangeEndpointNotInt(builtins::render_term(
                other,
            ))),
        }
    };
    let lo = endpoint(lo)?;
    let hi = endpoint(hi)?;
    let mut list = Term::nil();
    let mut cur = hi;
    while cur >= lo {
        list = Term::cons(Term::Int(cur.clone()), list);
        cur -= BigInt::one();
    }
    Ok(list)
}
