//! Source-to-source elimination of bounded quantifiers into recursive
//! auxiliary predicates, plus a pretty-printer for the surface syntax.
//!
//! Every `forall X in L do G` becomes a call `'$forall_k'(L, V...)` where
//! `V...` are the free variables of `G` other than the binder, paired with
//! two generated clauses:
//!
//! ```text
//! $forall_k([], V...).
//! $forall_k([X|T], V...) :- G & $forall_k(T, V...).
//! ```
//!
//! Ranges go through a generated `$range/3` that enumerates the integers at
//! run time; its output list is scoped per iteration with an existential so
//! enclosing loops cannot pin it. Nested quantifiers are eliminated
//! innermost-first, so every generated body is already loop-free. Running
//! the translated program is the differential oracle for the direct engine.

use crate::ast::{
    free_vars, max_var_id_goal, max_var_id_program, Clause, Goal, Program, Term, Var, VarSource,
};
use crate::engine::{Machine, MachineOpts, RuntimeError, ScriptSource, Solution};

/// Result of eliminating the loops of a program: the untouched original, the
/// loop-free translation, and the auxiliary predicate names introduced.
#[derive(Clone, Debug)]
pub struct TranslationUnit {
    pub original: Program,
    pub translated: Program,
    pub aux_names: Vec<String>,
}

struct Eliminator {
    vars: VarSource,
    counter: usize,
    aux_clauses: Vec<Clause>,
    aux_names: Vec<String>,
    need_range: bool,
}

impl Eliminator {
    fn new(start_var: u64, start_counter: usize) -> Self {
        Eliminator {
            vars: VarSource::starting_at(start_var),
            counter: start_counter,
            aux_clauses: Vec::new(),
            aux_names: Vec::new(),
            need_range: false,
        }
    }

    fn transform(&mut self, g: &Goal) -> Goal {
        match g {
            Goal::True => Goal::True,
            Goal::Call(t) => Goal::Call(t.clone()),
            Goal::ParAnd(a, b) => Goal::par(self.transform(a), self.transform(b)),
            Goal::SeqAnd(a, b) => Goal::seq(self.transform(a), self.transform(b)),
            Goal::Exists(v, body) => Goal::exists(v.clone(), self.transform(body)),
            Goal::Forall(v, list, body) => {
                let body = self.transform(body);
                let params: Vec<Var> = free_vars(&body)
                    .into_iter()
                    .filter(|w| w.id != v.id)
                    .collect();
                let name = format!("$forall_{}", self.counter);
                self.counter += 1;
                self.aux_names.push(name.clone());

                fn param_terms(ps: &[Var]) -> Vec<Term> {
                    ps.iter().map(|w| Term::Var(w.clone())).collect()
                }
                let tail = self.vars.fresh("T");

                let mut base_args = vec![Term::nil()];
                base_args.extend(param_terms(&params));
                self.aux_clauses
                    .push(Clause::fact(Term::Compound(name.clone(), base_args)));

                let mut step_head = vec![Term::cons(
                    Term::Var(v.clone()),
                    Term::Var(tail.clone()),
                )];
                step_head.extend(param_terms(&params));
                let mut step_rec = vec![Term::Var(tail)];
                step_rec.extend(param_terms(&params));
                self.aux_clauses.push(Clause::rule(
                    Term::Compound(name.clone(), step_head),
                    Goal::seq(body, Goal::Call(Term::Compound(name.clone(), step_rec))),
                ));

                match list {
                    Term::Range(lo, hi) => {
                        self.need_range = true;
                        let expanded = self.vars.fresh("L");
                        let range_call = Goal::Call(Term::compound(
                            "$range",
                            vec![
                                (**lo).clone(),
                                (**hi).clone(),
                                Term::Var(expanded.clone()),
                            ],
                        ));
                        let mut call_args = vec![Term::Var(expanded.clone())];
                        call_args.extend(param_terms(&params));
                        let aux_call = Goal::Call(Term::Compound(name, call_args));
                        // The expanded list is scoped per execution so an
                        // enclosing loop cannot pin one iteration's list.
                        Goal::exists(expanded, Goal::par(range_call, aux_call))
                    }
                    other => {
                        let mut call_args = vec![other.clone()];
                        call_args.extend(param_terms(&params));
                        Goal::Call(Term::Compound(name, call_args))
                    }
                }
            }
        }
    }
}

/// `$range(Lo, Hi, Xs)` enumerating the closed integer interval, with an
/// empty list when the bounds cross.
fn range_clauses(vars: &mut VarSource) -> Vec<Clause> {
    let lo = vars.fresh("Lo");
    let hi = vars.fresh("Hi");
    let empty = Clause::rule(
        Term::compound(
            "$range",
            vec![Term::Var(lo.clone()), Term::Var(hi.clone()), Term::nil()],
        ),
        Goal::Call(Term::compound(
            ">",
            vec![Term::Var(lo.clone()), Term::Var(hi.clone())],
        )),
    );

    let lo2 = vars.fresh("Lo");
    let hi2 = vars.fresh("Hi");
    let next = vars.fresh("Next");
    let tail = vars.fresh("T");
    let step = Clause::rule(
        Term::compound(
            "$range",
            vec![
                Term::Var(lo2.clone()),
                Term::Var(hi2.clone()),
                Term::cons(Term::Var(lo2.clone()), Term::Var(tail.clone())),
            ],
        ),
        Goal::par(
            Goal::par(
                Goal::Call(Term::compound(
                    "=<",
                    vec![Term::Var(lo2.clone()), Term::Var(hi2.clone())],
                )),
                Goal::Call(Term::compound(
                    "is",
                    vec![
                        Term::Var(next.clone()),
                        Term::compound("+", vec![Term::Var(lo2), Term::int(1)]),
                    ],
                )),
            ),
            Goal::Call(Term::compound(
                "$range",
                vec![Term::Var(next), Term::Var(hi2), Term::Var(tail)],
            )),
        ),
    );
    vec![empty, step]
}

/// Smallest counter that keeps generated names disjoint from any aux
/// predicates already defined in the program.
fn first_free_counter(p: &Program) -> usize {
    let mut next = 1;
    for c in p.clauses() {
        let (name, _) = c.key();
        if let Some(rest) = name.strip_prefix("$forall_") {
            if let Ok(n) = rest.parse::<usize>() {
                next = next.max(n + 1);
            }
        }
    }
    next
}

/// Eliminate every bounded quantifier in `p`.
pub fn eliminate_foralls(p: &Program) -> TranslationUnit {
    let (unit, _) = eliminate_with_queries(p, &[]);
    unit
}

/// Eliminate bounded quantifiers in the program and in a set of queries that
/// will run against it; the queries' aux clauses land in the same translated
/// program.
pub fn eliminate_with_queries(p: &Program, queries: &[Goal]) -> (TranslationUnit, Vec<Goal>) {
    let start_var = queries
        .iter()
        .filter_map(max_var_id_goal)
        .chain(max_var_id_program(p))
        .max()
        .map_or(0, |m| m + 1);
    let mut el = Eliminator::new(start_var, first_free_counter(p));

    let mut translated = Program::new();
    for c in p.clauses() {
        translated.add(Clause {
            head: c.head.clone(),
            body: el.transform(&c.body),
        });
    }
    let tqueries: Vec<Goal> = queries.iter().map(|q| el.transform(q)).collect();
    for c in el.aux_clauses {
        translated.add(c);
    }
    if el.need_range && !p.defines("$range", 3) {
        for c in range_clauses(&mut el.vars) {
            translated.add(c);
        }
    }
    (
        TranslationUnit {
            original: p.clone(),
            translated,
            aux_names: el.aux_names,
        },
        tqueries,
    )
}

/// One query of an equivalence check, with the scripted input and limits it
/// runs under.
#[derive(Clone, Debug, Default)]
pub struct RunSpec {
    pub input: String,
    pub max_solutions: Option<usize>,
    pub occurs_check: bool,
    pub depth_limit: Option<usize>,
}

/// A query whose direct and translated runs disagreed.
#[derive(Clone, Debug)]
pub struct Divergence {
    pub query: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct EquivalenceReport {
    pub queries_checked: usize,
    pub divergences: Vec<Divergence>,
}

/// Run each query against the original program (direct execution) and the
/// translated one (no loop path exercised) and report any divergence in
/// solution sequences or output bytes.
pub fn check_equivalence(
    p: &Program,
    queries: &[(Goal, RunSpec)],
) -> Result<EquivalenceReport, RuntimeError> {
    let goals: Vec<Goal> = queries.iter().map(|(g, _)| g.clone()).collect();
    let (unit, tgoals) = eliminate_with_queries(p, &goals);
    let mut report = EquivalenceReport::default();
    for ((goal, spec), tgoal) in queries.iter().zip(&tgoals) {
        report.queries_checked += 1;
        let (direct_sols, direct_out) = run_captured(p, goal, spec)?;
        let (trans_sols, trans_out) = run_captured(&unit.translated, tgoal, spec)?;
        let direct: Vec<String> = direct_sols.iter().map(Solution::canonical).collect();
        let translated: Vec<String> = trans_sols.iter().map(Solution::canonical).collect();
        if direct != translated {
            report.divergences.push(Divergence {
                query: pretty_goal(goal),
                detail: format!("solutions {direct:?} vs {translated:?}"),
            });
        } else if direct_out != trans_out {
            report.divergences.push(Divergence {
                query: pretty_goal(goal),
                detail: format!(
                    "output {:?} vs {:?}",
                    String::from_utf8_lossy(&direct_out),
                    String::from_utf8_lossy(&trans_out)
                ),
            });
        }
    }
    Ok(report)
}

/// Run one query against a program with scripted input, capturing solutions
/// and output bytes.
pub fn run_captured(
    p: &Program,
    goal: &Goal,
    spec: &RunSpec,
) -> Result<(Vec<Solution>, Vec<u8>), RuntimeError> {
    let start = max_var_id_program(p)
        .max(max_var_id_goal(goal))
        .map_or(0, |m| m + 1);
    let mut vars = VarSource::starting_at(start);
    let mut out = Vec::new();
    let mut inp = ScriptSource::new(&spec.input, &mut vars)
        .map_err(|e| RuntimeError::MalformedInput(e.to_string()))?;
    let opts = MachineOpts {
        occurs_check: spec.occurs_check,
        depth_limit: spec.depth_limit,
        trace: false,
    };
    let mut machine = Machine::new(p, vars, &mut out, &mut inp, opts);
    let solutions = machine.run_query(goal, spec.max_solutions)?;
    Ok((solutions, out))
}

// ---------------------------------------------------------------------------
// Pretty-printing back to surface syntax.

/// Render a whole program as parseable surface syntax, one clause per line.
pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for c in p.clauses() {
        out.push_str(&pretty_clause(c));
        out.push('\n');
    }
    out
}

pub fn pretty_clause(c: &Clause) -> String {
    let names = clause_names(c);
    let head = pp_term(&c.head, 0, &names);
    match &c.body {
        Goal::True => format!("{head}."),
        body => format!("{head} :- {}.", pp_seq(body, &names)),
    }
}

pub fn pretty_goal(g: &Goal) -> String {
    let mut order = Vec::new();
    goal_var_order(g, &mut order);
    pp_seq(g, &names_for(order))
}

/// Printable names per variable id, unique within the clause so the text
/// reparses to an alpha-equivalent tree even when distinct variables share a
/// source name (binder shadowing, generated variables).
fn clause_names(c: &Clause) -> Names {
    let mut order = Vec::new();
    term_var_order(&c.head, &mut order);
    goal_var_order(&c.body, &mut order);
    names_for(order)
}

type Names = std::collections::HashMap<u64, String>;

fn names_for(order: Vec<Var>) -> Names {
    let mut names = Names::new();
    let mut taken: std::collections::HashSet<String> = std::collections::HashSet::new();
    for v in order {
        let base = if v.name == "_" || v.name.is_empty() {
            "_G".to_string()
        } else {
            v.name.clone()
        };
        let mut candidate = if v.name == "_" || v.name.is_empty() {
            format!("{base}{}", v.id)
        } else {
            base.clone()
        };
        let mut n = 1;
        while !taken.insert(candidate.clone()) {
            n += 1;
            candidate = format!("{base}{n}");
        }
        names.insert(v.id, candidate);
    }
    names
}

/// Every variable occurrence in order, binders included.
fn term_var_order(t: &Term, out: &mut Vec<Var>) {
    match t {
        Term::Var(v) => {
            if !out.iter().any(|w| w.id == v.id) {
                out.push(v.clone());
            }
        }
        Term::Atom(_) | Term::Int(_) | Term::Str(_) => {}
        Term::Compound(_, args) => args.iter().for_each(|a| term_var_order(a, out)),
        Term::Range(lo, hi) => {
            term_var_order(lo, out);
            term_var_order(hi, out);
        }
    }
}

fn goal_var_order(g: &Goal, out: &mut Vec<Var>) {
    match g {
        Goal::True => {}
        Goal::Call(t) => term_var_order(t, out),
        Goal::ParAnd(a, b) | Goal::SeqAnd(a, b) => {
            goal_var_order(a, out);
            goal_var_order(b, out);
        }
        Goal::Exists(v, body) => {
            if !out.iter().any(|w| w.id == v.id) {
                out.push(v.clone());
            }
            goal_var_order(body, out);
        }
        Goal::Forall(v, list, body) => {
            term_var_order(list, out);
            if !out.iter().any(|w| w.id == v.id) {
                out.push(v.clone());
            }
            goal_var_order(body, out);
        }
    }
}

const RELATIONAL: &[&str] = &["is", "<", "=<", ">", ">=", "=:=", "=\\=", "="];

fn pp_seq(g: &Goal, names: &Names) -> String {
    match g {
        Goal::SeqAnd(a, b) => format!("{} & {}", pp_seq(a, names), pp_par(b, names)),
        _ => pp_par(g, names),
    }
}

fn pp_par(g: &Goal, names: &Names) -> String {
    match g {
        Goal::ParAnd(a, b) => format!("{}, {}", pp_par(a, names), pp_unit(b, names)),
        _ => pp_unit(g, names),
    }
}

fn pp_unit(g: &Goal, names: &Names) -> String {
    match g {
        Goal::True => "true".to_string(),
        Goal::Call(t) => pp_call(t, names),
        Goal::Exists(v, body) => format!(
            "exists {} do {}",
            var_name(v, names),
            pp_unit(body, names)
        ),
        Goal::Forall(v, list, body) => format!(
            "forall {} in {} do {}",
            var_name(v, names),
            pp_term(list, 0, names),
            pp_unit(body, names)
        ),
        Goal::ParAnd(_, _) | Goal::SeqAnd(_, _) => format!("({})", pp_seq(g, names)),
    }
}

fn pp_call(t: &Term, names: &Names) -> String {
    if let Term::Compound(op, args) = t {
        if args.len() == 2 && RELATIONAL.contains(&op.as_str()) {
            return format!(
                "{} {} {}",
                pp_term(&args[0], 0, names),
                op,
                pp_term(&args[1], 0, names)
            );
        }
    }
    pp_term(t, 0, names)
}

fn var_name(v: &Var, names: &Names) -> String {
    names
        .get(&v.id)
        .cloned()
        .unwrap_or_else(|| format!("_G{}", v.id))
}

fn arith_prec(op: &str) -> Option<u8> {
    match op {
        "+" | "-" => Some(1),
        "*" | "//" | "mod" => Some(2),
        _ => None,
    }
}

fn pp_term(t: &Term, prec: u8, names: &Names) -> String {
    match t {
        Term::Var(v) => var_name(v, names),
        Term::Atom(a) => a.clone(),
        Term::Int(i) => i.to_string(),
        Term::Str(s) => {
            let mut out = String::from("\"");
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    other => out.push(other),
                }
            }
            out.push('"');
            out
        }
        Term::Range(lo, hi) => format!(
            "[{}..{}]",
            pp_term(lo, 0, names),
            pp_term(hi, 0, names)
        ),
        Term::Compound(f, args) if f == "." && args.len() == 2 => {
            let mut items = vec![pp_term(&args[0], 0, names)];
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::Compound(g, rest) if g == "." && rest.len() == 2 => {
                        items.push(pp_term(&rest[0], 0, names));
                        tail = &rest[1];
                    }
                    Term::Atom(a) if a == "[]" => {
                        return format!("[{}]", items.join(", "));
                    }
                    other => {
                        return format!(
                            "[{}|{}]",
                            items.join(", "),
                            pp_term(other, 0, names)
                        );
                    }
                }
            }
        }
        Term::Compound(f, args) if args.len() == 2 && arith_prec(f).is_some() => {
            let own = arith_prec(f).expect("operator");
            let body = format!(
                "{} {} {}",
                pp_term(&args[0], own, names),
                f,
                pp_term(&args[1], own + 1, names)
            );
            if own < prec {
                format!("({body})")
            } else {
                body
            }
        }
        Term::Compound(f, args) => {
            let rendered: Vec<String> = args.iter().map(|a| pp_term(a, 0, names)).collect();
            format!("{f}({})", rendered.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{alpha_eq_program, Clause};
    use crate::reader::{parse_goal, parse_program, parse_program_reserved};

    fn parse(src: &str) -> (Program, VarSource) {
        let mut vars = VarSource::new();
        let unit = parse_program(src, "test", &mut vars).expect("parses");
        (Program::from_clauses(unit.clauses), vars)
    }

    fn goal_has_forall(g: &Goal) -> bool {
        match g {
            Goal::True | Goal::Call(_) => false,
            Goal::ParAnd(a, b) | Goal::SeqAnd(a, b) => goal_has_forall(a) || goal_has_forall(b),
            Goal::Exists(_, body) => goal_has_forall(body),
            Goal::Forall(_, _, _) => true,
        }
    }

    const WRITE_LIST: &str =
        "write_list(L) :- write(\"List: \") & forall X in L do write(X).";

    #[test]
    fn write_list_translates_to_the_recursive_shape() {
        let (p, mut vars) = parse(WRITE_LIST);
        let unit = eliminate_foralls(&p);
        assert_eq!(unit.aux_names, vec!["$forall_1"]);

        // Expected shape:
        //   write_list(L) :- write("List: ") & $forall_1(L).
        //   $forall_1([]).
        //   $forall_1([X|T]) :- write(X) & $forall_1(T).
        let l = vars.fresh("L");
        let x = vars.fresh("X");
        let t = vars.fresh("T");
        let expected = Program::from_clauses(vec![
            Clause::rule(
                Term::compound("write_list", vec![Term::Var(l.clone())]),
                Goal::seq(
                    Goal::Call(Term::compound("write", vec![Term::Str("List: ".into())])),
                    Goal::Call(Term::compound("$forall_1", vec![Term::Var(l)])),
                ),
            ),
            Clause::fact(Term::compound("$forall_1", vec![Term::nil()])),
            Clause::rule(
                Term::compound(
                    "$forall_1",
                    vec![Term::cons(Term::Var(x.clone()), Term::Var(t.clone()))],
                ),
                Goal::seq(
                    Goal::Call(Term::compound("write", vec![Term::Var(x)])),
                    Goal::Call(Term::compound("$forall_1", vec![Term::Var(t)])),
                ),
            ),
        ]);
        assert!(
            alpha_eq_program(&unit.translated, &expected),
            "got:\n{}",
            pretty_program(&unit.translated)
        );
    }

    #[test]
    fn loop_free_programs_translate_to_themselves() {
        let (p, _) = parse("p(1). p(2). q(X) :- p(X), p(X).");
        let unit = eliminate_foralls(&p);
        assert_eq!(unit.translated, p);
        assert!(unit.aux_names.is_empty());
    }

    #[test]
    fn free_variables_are_carried_positionally() {
        let (p, mut vars) = parse("r(L, Y) :- forall X in L do p(X, Y).");
        let unit = eliminate_foralls(&p);

        let l = vars.fresh("L");
        let y = vars.fresh("Y");
        let x = vars.fresh("X");
        let t = vars.fresh("T");
        let expected = Program::from_clauses(vec![
            Clause::rule(
                Term::compound("r", vec![Term::Var(l.clone()), Term::Var(y.clone())]),
                Goal::Call(Term::compound(
                    "$forall_1",
                    vec![Term::Var(l), Term::Var(y.clone())],
                )),
            ),
            Clause::fact(Term::compound(
                "$forall_1",
                vec![Term::nil(), Term::Var(y.clone())],
            )),
            Clause::rule(
                Term::compound(
                    "$forall_1",
                    vec![
                        Term::cons(Term::Var(x.clone()), Term::Var(t.clone())),
                        Term::Var(y.clone()),
                    ],
                ),
                Goal::seq(
                    Goal::Call(Term::compound(
                        "p",
                        vec![Term::Var(x), Term::Var(y.clone())],
                    )),
                    Goal::Call(Term::compound(
                        "$forall_1",
                        vec![Term::Var(t), Term::Var(y)],
                    )),
                ),
            ),
        ]);
        assert!(
            alpha_eq_program(&unit.translated, &expected),
            "got:\n{}",
            pretty_program(&unit.translated)
        );
    }

    #[test]
    fn translation_leaves_no_forall_behind() {
        let src = "p(1). p(2).\n\
                   nested(L) :- forall X in L do (forall Y in [1..2] do p(Y)), p(X).\n\
                   ?- forall X in [1, 2] do (exists Y do (p(Y) & forall Z in [Y] do p(Z))).";
        let mut vars = VarSource::new();
        let unit = parse_program(src, "t", &mut vars).unwrap();
        let p = Program::from_clauses(unit.clauses);
        let (tu, tqueries) = eliminate_with_queries(&p, &unit.queries);
        for c in tu.translated.clauses() {
            assert!(!goal_has_forall(&c.body), "{}", pretty_clause(c));
        }
        for q in &tqueries {
            assert!(!goal_has_forall(q), "{}", pretty_goal(q));
        }
    }

    #[test]
    fn aux_names_never_collide_with_existing_ones() {
        let mut vars = VarSource::new();
        let unit = parse_program_reserved(
            "$forall_3([]).\np(L) :- forall X in L do q(X).",
            "t",
            &mut vars,
        )
        .unwrap();
        let p = Program::from_clauses(unit.clauses);
        let tu = eliminate_foralls(&p);
        assert_eq!(tu.aux_names, vec!["$forall_4"]);
    }

    #[test]
    fn repeated_translation_keeps_generating_fresh_names() {
        let (p, _) = parse("p(L) :- forall X in L do q(X). q(1).");
        let once = eliminate_foralls(&p);
        let twice = eliminate_foralls(&once.translated);
        // Nothing left to eliminate, and re-translation does not duplicate.
        assert_eq!(once.translated, twice.translated);
        assert!(twice.aux_names.is_empty());
    }

    #[test]
    fn range_loops_generate_a_runtime_expansion() {
        let (p, _) = parse("count(N) :- forall X in [1..N] do write(X).");
        let tu = eliminate_foralls(&p);
        assert!(tu.translated.defines("$range", 3));
        let spec = RunSpec::default();
        let goal = {
            let mut vars = VarSource::starting_at(1000);
            parse_goal("count(4)", &mut vars).unwrap()
        };
        let (sols, out) = run_captured(&tu.translated, &goal, &spec).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(out, b"1234");
    }

    #[test]
    fn pretty_prints_facts_and_rules() {
        let (p, _) = parse("fact(0,1). p(X) :- q(X, [1,2|T]) & forall Y in [1..3] do r(Y).");
        let text = pretty_program(&p);
        assert_eq!(
            text,
            "fact(0, 1).\np(X) :- q(X, [1, 2|T]) & forall Y in [1..3] do r(Y).\n"
        );
    }

    #[test]
    fn pretty_parenthesizes_only_where_needed() {
        let mut vars = VarSource::new();
        let g = parse_goal("a, b & c", &mut vars).unwrap();
        assert_eq!(pretty_goal(&g), "a, b & c");
        let g = parse_goal("a & (b & c)", &mut vars).unwrap();
        assert_eq!(pretty_goal(&g), "a & (b & c)");
        let g = parse_goal("forall X in [1] do (p(X), q(X))", &mut vars).unwrap();
        assert_eq!(pretty_goal(&g), "forall X in [1] do (p(X), q(X))");
        let g = parse_goal("X is (1 + 2) * 3", &mut vars).unwrap();
        assert_eq!(pretty_goal(&g), "X is (1 + 2) * 3");
    }

    #[test]
    fn pretty_renames_shadowed_variables_apart() {
        let (p, _) = parse("p(X) :- forall X in [1] do q(X).");
        let text = pretty_program(&p);
        // The two X's are different variables and must print differently.
        let mut vars = VarSource::new();
        let reparsed = parse_program(&text, "pp", &mut vars).unwrap();
        assert!(alpha_eq_program(&p, &Program::from_clauses(reparsed.clauses)));
        let c = &p.clauses()[0];
        let Goal::Forall(inner, _, _) = &c.body else {
            panic!()
        };
        let names = super::clause_names(c);
        assert_ne!(names[&inner.id], "X");
    }

    #[test]
    fn translated_write_list_runs_like_the_original() {
        let (p, mut vars) = parse(WRITE_LIST);
        let goal = parse_goal("write_list([1, 2, 3])", &mut vars).unwrap();
        let report = check_equivalence(&p, &[(goal, RunSpec::default())]).unwrap();
        assert_eq!(report.queries_checked, 1);
        assert!(report.divergences.is_empty(), "{:?}", report.divergences);
    }

    #[test]
    fn empty_loop_queries_are_trivially_equivalent() {
        let (p, mut vars) = parse("p(1).");
        let goal = parse_goal("forall X in [] do p(X)", &mut vars).unwrap();
        let report = check_equivalence(&p, &[(goal, RunSpec::default())]).unwrap();
        assert!(report.divergences.is_empty());
    }

    #[test]
    fn equivalence_covers_scripted_reads() {
        let (p, mut vars) = parse("double(X, Y) :- Y is X * 2.");
        let goal = parse_goal(
            "read(N) & forall X in [1..N] do (exists Y do (double(X, Y) & write(Y)))",
            &mut vars,
        )
        .unwrap();
        let spec = RunSpec {
            input: "3.".to_string(),
            ..RunSpec::default()
        };
        let report = check_equivalence(&p, &[(goal, spec)]).unwrap();
        assert!(report.divergences.is_empty(), "{:?}", report.divergences);
    }

    mod props {
        use super::*;
        use crate::ast::alpha_eq_goal;
        use proptest::prelude::*;

        fn atom_name() -> impl Strategy<Value = String> {
            proptest::sample::select(vec!["a", "b", "foo", "bar"]).prop_map(str::to_string)
        }

        fn ground_term() -> impl Strategy<Value = Term> {
            let leaf = prop_oneof![
                atom_name().prop_map(Term::Atom),
                (-30i64..30).prop_map(Term::int),
                Just(Term::Str("s \"x\"\n".to_string())),
                Just(Term::nil()),
            ];
            leaf.prop_recursive(3, 24, 3, |inner| {
                prop_oneof![
                    (atom_name(), proptest::collection::vec(inner.clone(), 1..3))
                        .prop_map(|(f, args)| Term::Compound(f, args)),
                    proptest::collection::vec(inner.clone(), 0..3).prop_map(Term::list),
                    ((-5i64..5), (-5i64..5)).prop_map(|(l, h)| Term::Range(
                        Box::new(Term::int(l)),
                        Box::new(Term::int(h))
                    )),
                    (inner.clone(), inner).prop_map(|(a, b)| Term::compound("+", vec![a, b])),
                ]
            })
        }

        prop_compose! {
            fn clause_like()(head_args in proptest::collection::vec(ground_term(), 1..3),
                             body_terms in proptest::collection::vec(ground_term(), 0..3),
                             seq in proptest::bool::ANY) -> Clause {
                let head = Term::Compound("h".to_string(), head_args);
                let mut body = Goal::True;
                let mut first = true;
                for (i, t) in body_terms.into_iter().enumerate() {
                    let call = Goal::Call(Term::Compound(format!("g{i}"), vec![t]));
                    body = if first { first = false; call }
                           else if seq { Goal::seq(body, call) }
                           else { Goal::par(body, call) };
                }
                Clause { head, body }
            }
        }

        proptest! {
            #[test]
            fn pretty_then_parse_is_identity_up_to_renaming(
                clauses in proptest::collection::vec(clause_like(), 1..4)
            ) {
                let p = Program::from_clauses(clauses);
                let text = pretty_program(&p);
                let mut vars = VarSource::new();
                let reparsed = parse_program_reserved(&text, "roundtrip", &mut vars)
                    .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
                prop_assert!(
                    alpha_eq_program(&p, &Program::from_clauses(reparsed.clauses)),
                    "not alpha-equal:\n{}",
                    text
                );
            }

            #[test]
            fn pretty_goal_round_trips(depth_seed in 0u8..4, n in 0i64..6) {
                // A goal mixing every connective, built from the seed.
                let mut vars = VarSource::starting_at(100);
                let x = vars.fresh("X");
                let y = vars.fresh("Y");
                let base = Goal::Call(Term::compound("p", vec![Term::Var(x.clone()), Term::int(n)]));
                let g = match depth_seed {
                    0 => base,
                    1 => Goal::seq(base.clone(), Goal::par(base.clone(), Goal::True)),
                    2 => Goal::forall(x, Term::list(vec![Term::int(n)]), base),
                    _ => Goal::exists(y, Goal::seq(base.clone(), base)),
                };
                let text = pretty_goal(&g);
                let mut vs = VarSource::new();
                let reparsed = crate::reader::parse_goal(&text, &mut vs)
                    .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
                let (open, _) = crate::engine::strip_query_binders(&reparsed);
                prop_assert!(
                    alpha_eq_goal(&g, open) || alpha_eq_goal(&crate::ast::close_query(g.clone()), &reparsed),
                    "not alpha-equal: {text}"
                );
            }
        }
    }
}
