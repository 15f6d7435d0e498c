//! Primitive predicates: output, input, arithmetic evaluation, comparison,
//! and unification equality.
//!
//! The engine consults this table before the program index, so these keys
//! shadow any same-named user predicate (redefinition is rejected at load).

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::ast::Term;
use crate::engine::{Machine, RuntimeError};
use crate::unify::{unify, Bindings};

/// Behavior attached to a builtin key. All builtins are deterministic:
/// they either succeed once or fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Write,
    Nl,
    Read,
    Is,
    Cmp(CmpOp),
    UnifyEq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    ArithEq,
    ArithNe,
}

/// The builtin table, keyed by name and arity.
pub fn lookup(name: &str, arity: usize) -> Option<Builtin> {
    Some(match (name, arity) {
        ("write", 1) => Builtin::Write,
        ("nl", 0) => Builtin::Nl,
        ("read", 1) => Builtin::Read,
        ("is", 2) => Builtin::Is,
        ("<", 2) => Builtin::Cmp(CmpOp::Lt),
        ("=<", 2) => Builtin::Cmp(CmpOp::Le),
        (">", 2) => Builtin::Cmp(CmpOp::Gt),
        (">=", 2) => Builtin::Cmp(CmpOp::Ge),
        ("=:=", 2) => Builtin::Cmp(CmpOp::ArithEq),
        ("=\\=", 2) => Builtin::Cmp(CmpOp::ArithNe),
        ("=", 2) => Builtin::UnifyEq,
        _ => return None,
    })
}

pub fn is_builtin(name: &str, arity: usize) -> bool {
    lookup(name, arity).is_some()
}

/// Execute a builtin on the machine. `Ok(false)` is failure, not an error.
pub fn exec(m: &mut Machine, b: Builtin, args: &[Term]) -> Result<bool, RuntimeError> {
    match b {
        Builtin::Write => {
            let t = m.bind.resolve(&args[0])?;
            let text = render_term(&t);
            m.sink().write_str(&text)?;
            Ok(true)
        }
        Builtin::Nl => {
            m.sink().write_str("\n")?;
            Ok(true)
        }
        Builtin::Read => {
            let term = m.read_term()?;
            let occurs = m.opts.occurs_check;
            Ok(unify(&term, &args[0], &mut m.bind, &mut m.trail, occurs))
        }
        Builtin::Is => {
            let value = Term::Int(eval_arith(&m.bind, &args[1])?);
            let occurs = m.opts.occurs_check;
            Ok(unify(&args[0], &value, &mut m.bind, &mut m.trail, occurs))
        }
        Builtin::Cmp(op) => {
            let a = eval_arith(&m.bind, &args[0])?;
            let b = eval_arith(&m.bind, &args[1])?;
            Ok(match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::ArithEq => a == b,
                CmpOp::ArithNe => a != b,
            })
        }
        Builtin::UnifyEq => {
            let occurs = m.opts.occurs_check;
            Ok(unify(&args[0], &args[1], &mut m.bind, &mut m.trail, occurs))
        }
    }
}

/// Evaluate a ground arithmetic expression over `+ - * // mod` to an integer.
///
/// `//` floors toward negative infinity and `mod` takes the sign of the
/// divisor, so `A =:= (A // B) * B + A mod B` holds for every nonzero `B`.
pub fn eval_arith(bind: &Bindings, t: &Term) -> Result<BigInt, RuntimeError> {
    match bind.deref(t) {
        Term::Int(i) => Ok(i.clone()),
        Term::Var(_) => Err(RuntimeError::ArithUnbound),
        Term::Compound(op, args) if args.len() == 2 => {
            let (a, b) = (&args[0], &args[1]);
            match op.as_str() {
                "+" => Ok(eval_arith(bind, a)? + eval_arith(bind, b)?),
                "-" => Ok(eval_arith(bind, a)? - eval_arith(bind, b)?),
                "*" => Ok(eval_arith(bind, a)? * eval_arith(bind, b)?),
                "//" => {
                    let x = eval_arith(bind, a)?;
                    let y = eval_arith(bind, b)?;
                    if y.is_zero() {
                        return Err(RuntimeError::DivisionByZero);
                    }
                    Ok(x.div_floor(&y))
                }
                "mod" => {
                    let x = eval_arith(bind, a)?;
                    let y = eval_arith(bind, b)?;
                    if y.is_zero() {
                        return Err(RuntimeError::DivisionByZero);
                    }
                    Ok(x.mod_floor(&y))
                }
                _ => Err(RuntimeError::ArithNonNumeric(render_term(
                    &bind.resolve(t).unwrap_or_else(|_| t.clone()),
                ))),
            }
        }
        other => Err(RuntimeError::ArithNonNumeric(render_term(
            &bind.resolve(other).unwrap_or_else(|_| other.clone()),
        ))),
    }
}

enum Namer<'m> {
    Raw,
    Canonical(&'m mut HashMap<u64, usize>),
}

/// Render a term the way `write/1` prints it: integers in decimal, strings
/// without quotes, atoms by name, proper lists as `[e1,e2,...]`, arithmetic
/// operators infix, everything else as `functor(arg,...,arg)`. Unbound
/// variables print as `_Gnnn`.
pub fn render_term(t: &Term) -> String {
    let mut out = String::new();
    render(t, 0, &mut Namer::Raw, &mut out);
    out
}

/// Like [`render_term`] but numbering variables in order of appearance, so
/// renderings can be compared across runs that allocate different ids.
pub fn render_term_canonical(t: &Term, seen: &mut HashMap<u64, usize>) -> String {
    let mut out = String::new();
    render(t, 0, &mut Namer::Canonical(seen), &mut out);
    out
}

fn op_prec(op: &str) -> Option<u8> {
    match op {
        "+" | "-" => Some(1),
        "*" | "//" | "mod" => Some(2),
        _ => None,
    }
}

fn render(t: &Term, prec: u8, namer: &mut Namer, out: &mut String) {
    match t {
        Term::Var(v) => match namer {
            Namer::Raw => {
                out.push_str("_G");
                out.push_str(&v.id.to_string());
            }
            Namer::Canonical(seen) => {
                let next = seen.len();
                let k = *seen.entry(v.id).or_insert(next);
                out.push_str("_V");
                out.push_str(&k.to_string());
            }
        },
        Term::Atom(a) => out.push_str(a),
        Term::Int(i) => out.push_str(&i.to_string()),
        Term::Str(s) => out.push_str(s),
        Term::Range(lo, hi) => {
            out.push('[');
            render(lo, 0, namer, out);
            out.push_str("..");
            render(hi, 0, namer, out);
            out.push(']');
        }
        Term::Compound(f, args) if f == "." && args.len() == 2 => {
            out.push('[');
            render(&args[0], 0, namer, out);
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::Compound(g, rest) if g == "." && rest.len() == 2 => {
                        out.push(',');
                        render(&rest[0], 0, namer, out);
                        tail = &rest[1];
                    }
                    Term::Atom(a) if a == "[]" => break,
                    other => {
                        out.push('|');
                        render(other, 0, namer, out);
                        break;
                    }
                }
            }
            out.push(']');
        }
        Term::Compound(f, args) if args.len() == 2 && op_prec(f).is_some() => {
            let own = op_prec(f).expect("operator");
            let parens = own < prec;
            if parens {
                out.push('(');
            }
            render(&args[0], own, namer, out);
            // `mod` needs spacing to stay lexable; symbols do not.
            if f == "mod" {
                out.push_str(" mod ");
            } else {
                out.push_str(f);
            }
            render(&args[1], own + 1, namer, out);
            if parens {
                out.push(')');
            }
        }
        Term::Compound(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(a, 0, namer, out);
            }
            out.push(')');
        }
    }
}
