//! Bindings store with trail-based undo, dereferencing, and first-order
//! unification.
//!
//! A `Bindings` + `Trail` pair is a single-threaded mutable unit owned by one
//! solver run. Unification never leaves a partial substitution behind: on
//! failure the store is restored to its pre-call state.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::ast::{Term, Var, VarSource};

/// Resolving a term ran into a cycle (possible with the occurs check off) or
/// exceeded the nesting guard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicTerm;

/// Non-list nesting deeper than this is treated as cyclic rather than risking
/// the process stack.
const MAX_RESOLVE_DEPTH: usize = 10_000;

/// The current substitution: variable id -> term, plus the session's
/// fresh-variable source.
#[derive(Debug)]
pub struct Bindings {
    map: HashMap<u64, Term>,
    vars: VarSource,
}

impl Bindings {
    pub fn new(vars: VarSource) -> Self {
        Bindings {
            map: HashMap::new(),
            vars,
        }
    }

    pub fn fresh(&mut self, name: &str) -> Var {
        self.vars.fresh(name)
    }

    pub fn vars_mut(&mut self) -> &mut VarSource {
        &mut self.vars
    }

    pub fn lookup(&self, id: u64) -> Option<&Term> {
        self.map.get(&id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Follow variable bindings until an unbound variable or a non-variable
    /// term; does not recurse into compound arguments.
    pub fn deref<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(&v.id) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Fully dereference `t` into a tree with no bound variables left.
    ///
    /// List spines are walked iteratively so long lists do not recurse.
    /// A variable encountered while its own binding is being expanded means
    /// the substitution is cyclic; that is reported rather than looped on.
    pub fn resolve(&self, t: &Term) -> Result<Term, CyclicTerm> {
        let mut path = Vec::new();
        self.resolve_at(t, &mut path, 0)
    }

    fn resolve_at(&self, t: &Term, path: &mut Vec<u64>, depth: usize) -> Result<Term, CyclicTerm> {
        if depth > MAX_RESOLVE_DEPTH {
            return Err(CyclicTerm);
        }
        let entered = self.chase(t, path)?;
        let cur = self.deref(t);
        let out = match cur {
            Term::Var(_) | Term::Atom(_) | Term::Int(_) | Term::Str(_) => Ok(cur.clone()),
            Term::Range(lo, hi) => Ok(Term::Range(
                Box::new(self.resolve_at(lo, path, depth + 1)?),
                Box::new(self.resolve_at(hi, path, depth + 1)?),
            )),
            Term::Compound(f, args) if f == "." && args.len() == 2 => {
                self.resolve_spine(args, path, depth)
            }
            Term::Compound(f, args) => {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    out.push(self.resolve_at(a, path, depth + 1)?);
                }
                Ok(Term::Compound(f.clone(), out))
            }
        };
        path.truncate(path.len() - entered);
        out
    }

    /// Resolve a cons chain without recursing along the tail.
    fn resolve_spine(
        &self,
        first: &[Term],
        path: &mut Vec<u64>,
        depth: usize,
    ) -> Result<Term, CyclicTerm> {
        let mut heads = Vec::new();
        let mut entered = 0usize;
        let mut cur_args = first;
        let tail = loop {
            heads.push(self.resolve_at(&cur_args[0], path, depth + 1)?);
            let t = &cur_args[1];
            entered += self.chase(t, path)?;
            match self.deref(t) {
                Term::Compound(f, args) if f == "." && args.len() == 2 => cur_args = args,
                other => break self.resolve_at(other, path, depth + 1)?,
            }
        };
        path.truncate(path.len() - entered);
        Ok(heads
            .into_iter()
            .rev()
            .fold(tail, |acc, h| Term::cons(h, acc)))
    }

    /// Record on `path` every bound variable passed through while
    /// dereferencing `t`; detects re-entry into a variable being expanded.
    fn chase(&self, t: &Term, path: &mut Vec<u64>) -> Result<usize, CyclicTerm> {
        let mut pushed = 0usize;
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.map.get(&v.id) {
                Some(next) => {
                    if path.contains(&v.id) {
                        return Err(CyclicTerm);
                    }
                    path.push(v.id);
                    pushed += 1;
                    cur = next;
                }
                None => break,
            }
        }
        Ok(pushed)
    }

    /// Order-insensitive fingerprint of the current substitution, for tests
    /// that assert a failed operation left no trace.
    pub fn fingerprint(&self) -> u64 {
        let mut entries: Vec<_> = self.map.iter().collect();
        entries.sort_by_key(|(id, _)| **id);
        let mut h = DefaultHasher::new();
        for (id, t) in entries {
            id.hash(&mut h);
            t.hash(&mut h);
        }
        h.finish()
    }

    fn bind(&mut self, id: u64, t: Term, trail: &mut Trail) {
        let prev = self.map.insert(id, t);
        debug_assert!(prev.is_none(), "rebinding a bound variable");
        trail.log.push(id);
    }

    fn unbind(&mut self, id: u64) {
        self.map.remove(&id);
    }
}

/// Ordered log of the variables bound since a checkpoint.
#[derive(Debug, Default)]
pub struct Trail {
    log: Vec<u64>,
}

/// A checkpoint into the trail.
#[derive(Clone, Copy, Debug)]
pub struct Mark(usize);

impl Trail {
    pub fn new() -> Self {
        Trail::default()
    }

    pub fn checkpoint(&self) -> Mark {
        Mark(self.log.len())
    }

    /// Remove every binding made after `mark`. Panics on a stale mark (one
    /// taken before a deeper undo already truncated the trail).
    pub fn undo(&mut self, mark: Mark, bind: &mut Bindings) {
        assert!(
            mark.0 <= self.log.len(),
            "stale trail mark: checkpoint at {} but trail has {} entries",
            mark.0,
            self.log.len()
        );
        while self.log.len() > mark.0 {
            let id = self.log.pop().expect("trail entry");
            bind.unbind(id);
        }
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }
}

/// Unify `a` and `b`, extending `bind` with a most general unifier on
/// success. On failure the store is restored exactly to its pre-call state.
///
/// When two unbound variables meet, the younger (higher id) is bound to the
/// older so answers come out deterministically. Range terms unify only
/// structurally, component against component.
pub fn unify(a: &Term, b: &Term, bind: &mut Bindings, trail: &mut Trail, occurs: bool) -> bool {
    let mark = trail.checkpoint();
    if unify_inner(a, b, bind, trail, occurs) {
        true
    } else {
        trail.undo(mark, bind);
        false
    }
}

fn unify_inner(a: &Term, b: &Term, bind: &mut Bindings, trail: &mut Trail, occurs: bool) -> bool {
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = work.pop() {
        let x = bind.deref(&x).clone();
        let y = bind.deref(&y).clone();
        match (x, y) {
            (Term::Var(v), Term::Var(w)) => {
                if v.id != w.id {
                    // Bind the younger variable to the older.
                    if v.id < w.id {
                        bind.bind(w.id, Term::Var(v), trail);
                    } else {
                        bind.bind(v.id, Term::Var(w), trail);
                    }
                }
            }
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if occurs && occurs_in(v.id, &t, bind) {
                    return false;
                }
                bind.bind(v.id, t, trail);
            }
            (Term::Atom(p), Term::Atom(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Int(p), Term::Int(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Str(p), Term::Str(q)) => {
                if p != q {
                    return false;
                }
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                work.extend(xs.into_iter().zip(ys));
            }
            (Term::Range(l1, h1), Term::Range(l2, h2)) => {
                work.push((*l1, *l2));
                work.push((*h1, *h2));
            }
            _ => return false,
        }
    }
    true
}

/// Does variable `id` occur in `t` after dereferencing?
fn occurs_in(id: u64, t: &Term, bind: &Bindings) -> bool {
    let mut work = vec![t.clone()];
    while let Some(x) = work.pop() {
        match bind.deref(&x) {
            Term::Var(v) => {
                if v.id == id {
                    return true;
                }
            }
            Term::Atom(_) | Term::Int(_) | Term::Str(_) => {}
            Term::Compound(_, args) => work.extend(args.iter().cloned()),
            Term::Range(lo, hi) => {
                work.push((**lo).clone());
                work.push((**hi).clone());
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::VarSource;

    fn setup() -> (Bindings, Trail, Var, Var, Var) {
        let mut vars = VarSource::new();
        let x = vars.fresh("X");
        let y = vars.fresh("Y");
        let w = vars.fresh("W");
        (Bindings::new(vars), Trail::new(), x, y, w)
    }

    #[test]
    fn deref_follows_chains() {
        let (mut bind, mut trail, x, y, _) = setup();
        assert!(unify(
            &Term::Var(x.clone()),
            &Term::Var(y.clone()),
            &mut bind,
            &mut trail,
            false
        ));
        assert!(unify(&Term::Var(y), &Term::int(3), &mut bind, &mut trail, false));
        assert_eq!(bind.deref(&Term::Var(x)), &Term::int(3));
    }

    #[test]
    fn deref_is_identity_on_nonvars_and_unbound() {
        let (bind, _, x, _, _) = setup();
        assert_eq!(bind.deref(&Term::int(5)), &Term::int(5));
        assert_eq!(bind.deref(&Term::Var(x.clone())), &Term::Var(x));
    }

    #[test]
    fn unify_computes_textbook_mgu() {
        let (mut bind, mut trail, x, y, _) = setup();
        let a = Term::compound("f", vec![Term::Var(x.clone()), Term::atom("b")]);
        let b = Term::compound("f", vec![Term::atom("a"), Term::Var(y.clone())]);
        assert!(unify(&a, &b, &mut bind, &mut trail, true));
        assert_eq!(bind.resolve(&Term::Var(x)).unwrap(), Term::atom("a"));
        assert_eq!(bind.resolve(&Term::Var(y)).unwrap(), Term::atom("b"));
    }

    #[test]
    fn unify_matches_fact_head() {
        let (mut bind, mut trail, _, _, w) = setup();
        let a = Term::compound("fact", vec![Term::int(0), Term::int(1)]);
        let b = Term::compound("fact", vec![Term::int(0), Term::Var(w.clone())]);
        assert!(unify(&a, &b, &mut bind, &mut trail, true));
        assert_eq!(bind.resolve(&Term::Var(w)).unwrap(), Term::int(1));
    }

    #[test]
    fn occurs_check_rejects_self_embedding() {
        let (mut bind, mut trail, x, _, _) = setup();
        let fx = Term::compound("f", vec![Term::Var(x.clone())]);
        assert!(!unify(&Term::Var(x), &fx, &mut bind, &mut trail, true));
        assert!(bind.is_empty());
    }

    #[test]
    fn without_occurs_check_cycles_are_detected_at_resolve() {
        let (mut bind, mut trail, x, _, _) = setup();
        let fx = Term::compound("f", vec![Term::Var(x.clone())]);
        assert!(unify(&Term::Var(x.clone()), &fx, &mut bind, &mut trail, false));
        assert_eq!(bind.resolve(&Term::Var(x)), Err(CyclicTerm));
    }

    #[test]
    fn undo_restores_checkpoint() {
        let (mut bind, mut trail, x, _, _) = setup();
        let mark = trail.checkpoint();
        assert!(unify(&Term::Var(x.clone()), &Term::int(1), &mut bind, &mut trail, false));
        trail.undo(mark, &mut bind);
        assert_eq!(bind.deref(&Term::Var(x.clone())), &Term::Var(x));
        assert!(bind.is_empty());
    }

    #[test]
    fn undo_at_empty_mark_is_noop() {
        let (mut bind, mut trail, _, _, _) = setup();
        let mark = trail.checkpoint();
        trail.undo(mark, &mut bind);
        assert!(trail.is_empty());
    }

    #[test]
    fn nested_checkpoints_undo_in_lifo_order() {
        let (mut bind, mut trail, x, y, _) = setup();
        let outer = trail.checkpoint();
        assert!(unify(&Term::Var(x.clone()), &Term::int(1), &mut bind, &mut trail, false));
        let inner = trail.checkpoint();
        assert!(unify(&Term::Var(y.clone()), &Term::int(2), &mut bind, &mut trail, false));
        trail.undo(inner, &mut bind);
        assert_eq!(bind.deref(&Term::Var(x)), &Term::int(1));
        assert_eq!(bind.deref(&Term::Var(y.clone())), &Term::Var(y.clone()));
        trail.undo(outer, &mut bind);
        assert!(bind.is_empty());
    }

    #[test]
    #[should_panic(expected = "stale trail mark")]
    fn stale_mark_is_signaled() {
        let (mut bind, mut trail, x, _, _) = setup();
        let early = trail.checkpoint();
        assert!(unify(&Term::Var(x), &Term::int(1), &mut bind, &mut trail, false));
        let late = trail.checkpoint();
        trail.undo(early, &mut bind);
        trail.undo(late, &mut bind);
    }

    #[test]
    fn failed_unify_restores_bindings_exactly() {
        let (mut bind, mut trail, x, y, _) = setup();
        assert!(unify(&Term::Var(x.clone()), &Term::atom("a"), &mut bind, &mut trail, false));
        let before = bind.fingerprint();
        let a = Term::compound("f", vec![Term::Var(x), Term::Var(y)]);
        let b = Term::compound("f", vec![Term::atom("b"), Term::atom("c")]);
        assert!(!unify(&a, &b, &mut bind, &mut trail, false));
        assert_eq!(bind.fingerprint(), before);
        assert_eq!(bind.len(), 1);
    }

    #[test]
    fn range_unifies_componentwise_only() {
        let (mut bind, mut trail, x, _, _) = setup();
        let r1 = Term::Range(Box::new(Term::int(1)), Box::new(Term::Var(x.clone())));
        let r2 = Term::Range(Box::new(Term::int(1)), Box::new(Term::int(9)));
        assert!(unify(&r1, &r2, &mut bind, &mut trail, false));
        assert_eq!(bind.resolve(&Term::Var(x)).unwrap(), Term::int(9));
        let list = Term::list(vec![Term::int(1)]);
        assert!(!unify(&r2, &list, &mut bind, &mut trail, false));
    }

    #[test]
    fn resolve_handles_long_lists_iteratively() {
        let (bind, _, _, _, _) = setup();
        let items: Vec<Term> = (0..50_000).map(Term::int).collect();
        let list = Term::list(items);
        // Would overflow the stack if the spine were resolved recursively.
        assert_eq!(bind.resolve(&list).unwrap(), list);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        // Terms of depth <= 2 over {a, b, f/1, g/2} and two fixed variables.
        fn leaf() -> impl Strategy<Value = Term> {
            prop_oneof![
                Just(Term::atom("a")),
                Just(Term::atom("b")),
                Just(Term::Var(Var { name: "X".into(), id: 0 })),
                Just(Term::Var(Var { name: "Y".into(), id: 1 })),
            ]
        }

        fn term() -> impl Strategy<Value = Term> {
            leaf().prop_recursive(2, 16, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|t| Term::compound("f", vec![t])),
                    (inner.clone(), inner).prop_map(|(t, u)| Term::compound("g", vec![t, u])),
                ]
            })
        }

        fn fresh_store() -> (Bindings, Trail) {
            (Bindings::new(VarSource::starting_at(2)), Trail::new())
        }

        proptest! {
            #[test]
            fn unifier_makes_terms_equal(a in term(), b in term()) {
                let (mut bind, mut trail) = fresh_store();
                if unify(&a, &b, &mut bind, &mut trail, true) {
                    prop_assert_eq!(bind.resolve(&a).unwrap(), bind.resolve(&b).unwrap());
                }
            }

            #[test]
            fn success_is_symmetric(a in term(), b in term()) {
                let (mut b1, mut t1) = fresh_store();
                let (mut b2, mut t2) = fresh_store();
                prop_assert_eq!(
                    unify(&a, &b, &mut b1, &mut t1, true),
                    unify(&b, &a, &mut b2, &mut t2, true)
                );
            }

            #[test]
            fn failure_leaves_no_trace(a in term(), b in term()) {
                let (mut bind, mut trail) = fresh_store();
                let before = bind.fingerprint();
                if !unify(&a, &b, &mut bind, &mut trail, true) {
                    prop_assert_eq!(bind.fingerprint(), before);
                    prop_assert_eq!(trail.len(), 0);
                }
            }
        }
    }
}
