//! Tokenizer and parser for the `.fl` surface syntax.
//!
//! Concrete syntax summary: `,` is parallel conjunction, `&` is sequential
//! conjunction and binds looser, `forall X in L do G` is the bounded
//! quantifier, `exists X do G` the existential. Clauses are `head :- body.`
//! or bare facts; queries are `?- goal.`. `%` starts a line comment.
//! Lowercase-initial identifiers are atoms, uppercase or `_`-initial are
//! variables, and both `"..."` and `'...'` literals are strings.

use std::fmt;

use num_bigint::BigInt;

use crate::ast::{close_query, Clause, Goal, Term, Var, VarSource};

/// A parse failure with its position in the source text (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at {}:{}: {}, found {}",
            self.line, self.column, self.message, self.found
        )
    }
}

impl std::error::Error for ParseError {}

/// A parsed source file or REPL line: clauses plus embedded `?-` queries,
/// both in source order.
#[derive(Clone, Debug, Default)]
pub struct SourceUnit {
    pub origin: String,
    pub clauses: Vec<Clause>,
    pub queries: Vec<Goal>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Atom(String),
    Var(String),
    Int(BigInt),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Amp,
    Bar,
    Neck,      // :-
    QueryNeck, // ?-
    EndDot,
    DotDot,
    Forall,
    In,
    Do,
    Exists,
    Is,
    Mod,
    Plus,
    Minus,
    Star,
    IntDiv, // //
    Lt,
    Le,
    Gt,
    Ge,
    ArithEq, // =:=
    ArithNe, // =\=
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Atom(s) => format!("atom `{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Amp => "`&`".to_string(),
            Tok::Bar => "`|`".to_string(),
            Tok::Neck => "`:-`".to_string(),
            Tok::QueryNeck => "`?-`".to_string(),
            Tok::EndDot => "`.`".to_string(),
            Tok::DotDot => "`..`".to_string(),
            Tok::Forall => "`forall`".to_string(),
            Tok::In => "`in`".to_string(),
            Tok::Do => "`do`".to_string(),
            Tok::Exists => "`exists`".to_string(),
            Tok::Is => "`is`".to_string(),
            Tok::Mod => "`mod`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::IntDiv => "`//`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Le => "`=<`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Ge => "`>=`".to_string(),
            Tok::ArithEq => "`=:=`".to_string(),
            Tok::ArithNe => "`=\\=`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'s> {
    src: &'s [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>, found: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col,
            message: message.into(),
            found: found.into(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c == b'%' {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if c.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'&' => {
                    self.bump();
                    Tok::Amp
                }
                b'|' => {
                    self.bump();
                    Tok::Bar
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'.' => {
                    self.bump();
                    if self.peek() == Some(b'.') {
                        self.bump();
                        Tok::DotDot
                    } else {
                        Tok::EndDot
                    }
                }
                b'/' => {
                    self.bump();
                    if self.peek() == Some(b'/') {
                        self.bump();
                        Tok::IntDiv
                    } else {
                        return Err(self.error("unknown operator", "`/`"));
                    }
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b'-') {
                        self.bump();
                        Tok::Neck
                    } else {
                        return Err(self.error("expected `:-`", "`:`"));
                    }
                }
                b'?' => {
                    self.bump();
                    if self.peek() == Some(b'-') {
                        self.bump();
                        Tok::QueryNeck
                    } else {
                        return Err(self.error("expected `?-`", "`?`"));
                    }
                }
                b'<' => {
                    self.bump();
                    Tok::Lt
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                b'=' => {
                    self.bump();
                    match self.peek() {
                        Some(b'<') => {
                            self.bump();
                            Tok::Le
                        }
                        Some(b':') => {
                            self.bump();
                            if self.peek() == Some(b'=') {
                                self.bump();
                                Tok::ArithEq
                            } else {
                                return Err(self.error("expected `=:=`", "`=:`"));
                            }
                        }
                        Some(b'\\') => {
                            self.bump();
                            if self.peek() == Some(b'=') {
                                self.bump();
                                Tok::ArithNe
                            } else {
                                return Err(self.error("expected `=\\=`", "`=\\`"));
                            }
                        }
                        _ => Tok::Eq,
                    }
                }
                b'"' | b'\'' => self.string(c, line, col)?,
                b'0'..=b'9' => self.integer(),
                c if c == b'_' || c.is_ascii_alphabetic() || c == b'$' => self.identifier(),
                other => {
                    return Err(self.error(
                        "illegal character",
                        format!("`{}`", other as char),
                    ))
                }
            };
            out.push(Token { tok, line, col });
        }
    }

    fn integer(&mut self) -> Tok {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.bump();
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("digits are ascii");
        Tok::Int(text.parse::<BigInt>().expect("digits parse as integer"))
    }

    fn identifier(&mut self) -> Tok {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == b'_' || c == b'$' || c.is_ascii_alphanumeric() {
                self.bump();
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .expect("identifier is ascii")
            .to_string();
        match text.as_str() {
            "forall" => Tok::Forall,
            "in" => Tok::In,
            "do" => Tok::Do,
            "exists" => Tok::Exists,
            "is" => Tok::Is,
            "mod" => Tok::Mod,
            _ => {
                let first = text.as_bytes()[0];
                if first == b'_' || first.is_ascii_uppercase() {
                    Tok::Var(text)
                } else {
                    Tok::Atom(text)
                }
            }
        }
    }

    fn string(&mut self, quote: u8, line: usize, col: usize) -> Result<Tok, ParseError> {
        self.bump(); // opening quote
        let mut text = String::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => {
                    return Err(ParseError {
                        line,
                        column: col,
                        message: "unterminated string".to_string(),
                        found: "end of line".to_string(),
                    })
                }
                Some(b'\\') => {
                    self.bump();
                    let esc = self.bump().ok_or_else(|| ParseError {
                        line,
                        column: col,
                        message: "unterminated string".to_string(),
                        found: "end of input".to_string(),
                    })?;
                    match esc {
                        b'n' => text.push('\n'),
                        b't' => text.push('\t'),
                        b'\\' => text.push('\\'),
                        b'"' => text.push('"'),
                        b'\'' => text.push('\''),
                        other => {
                            return Err(self.error(
                                "unknown escape in string",
                                format!("`\\{}`", other as char),
                            ))
                        }
                    }
                }
                Some(c) if c == quote => {
                    self.bump();
                    return Ok(Tok::Str(text));
                }
                Some(_) => {
                    // Copy a full UTF-8 scalar, not just one byte.
                    let rest = std::str::from_utf8(&self.src[self.pos..]).map_err(|_| {
                        self.error("invalid UTF-8 in string", "byte sequence")
                    })?;
                    let ch = rest.chars().next().expect("non-empty");
                    for _ in 0..ch.len_utf8() {
                        self.bump();
                    }
                    text.push(ch);
                }
            }
        }
    }
}

struct Parser<'v> {
    toks: Vec<Token>,
    pos: usize,
    vars: &'v mut VarSource,
    /// Lexical scope: name -> variable, innermost last. Binders push and pop.
    scope: Vec<(String, Var)>,
    allow_reserved: bool,
}

impl<'v> Parser<'v> {
    fn new(toks: Vec<Token>, vars: &'v mut VarSource, allow_reserved: bool) -> Self {
        Parser {
            toks,
            pos: 0,
            vars,
            scope: Vec::new(),
            allow_reserved,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            column: t.col,
            message: message.into(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn check_atom_name(&self, name: &str) -> Result<(), ParseError> {
        if name.starts_with('$') && !self.allow_reserved {
            return Err(self.error(format!("`{name}` uses the reserved `$` prefix")));
        }
        Ok(())
    }

    /// Look a variable name up in scope, creating a clause-level variable on
    /// first sight. A bare `_` is a fresh variable at every occurrence.
    fn variable(&mut self, name: &str) -> Var {
        if name == "_" {
            return self.vars.fresh("_");
        }
        if let Some((_, v)) = self.scope.iter().rev().find(|(n, _)| n == name) {
            return v.clone();
        }
        let v = self.vars.fresh(name);
        self.scope.push((name.to_string(), v.clone()));
        v
    }

    /// Introduce a binder variable shadowing any same-named clause variable;
    /// returns the scope depth to restore afterwards.
    fn push_binder(&mut self, name: &str) -> (Var, usize) {
        let mark = self.scope.len();
        let v = self.vars.fresh(name);
        self.scope.push((name.to_string(), v.clone()));
        (v, mark)
    }

    fn pop_binder(&mut self, mark: usize) {
        self.scope.truncate(mark);
    }

    fn program(&mut self, origin: &str) -> Result<SourceUnit, ParseError> {
        let mut unit = SourceUnit {
            origin: origin.to_string(),
            ..SourceUnit::default()
        };
        while *self.peek() != Tok::Eof {
            self.scope.clear();
            if *self.peek() == Tok::QueryNeck {
                self.advance();
                let g = self.goal()?;
                self.expect(Tok::EndDot, "`.` after query")?;
                unit.queries.push(close_query(g));
            } else {
                unit.clauses.push(self.clause()?);
            }
        }
        Ok(unit)
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let head_pos = self.here();
        let head = self.expr()?;
        match &head {
            Term::Atom(name) => self.check_head_functor(name, head_pos)?,
            Term::Compound(f, _) => self.check_head_functor(f, head_pos)?,
            _ => {
                return Err(ParseError {
                    line: head_pos.0,
                    column: head_pos.1,
                    message: "clause head must be an atom or compound term".to_string(),
                    found: self.toks[self.pos].tok.describe(),
                })
            }
        }
        let body = if *self.peek() == Tok::Neck {
            self.advance();
            self.goal()?
        } else {
            Goal::True
        };
        self.expect(Tok::EndDot, "`.` at end of clause")?;
        Ok(Clause { head, body })
    }

    fn check_head_functor(&self, name: &str, pos: (usize, usize)) -> Result<(), ParseError> {
        const OPERATORS: &[&str] = &[
            "+", "-", "*", "//", "mod", "is", "<", "=<", ">", ">=", "=:=", "=\\=", "=", ".",
        ];
        if OPERATORS.contains(&name) || name == "true" {
            return Err(ParseError {
                line: pos.0,
                column: pos.1,
                message: format!("cannot define clauses for `{name}`"),
                found: format!("clause head `{name}`"),
            });
        }
        Ok(())
    }

    // goal := seqgoal; seqgoal := pargoal ("&" pargoal)*
    fn goal(&mut self) -> Result<Goal, ParseError> {
        let mut g = self.pargoal()?;
        while *self.peek() == Tok::Amp {
            self.advance();
            let rhs = self.pargoal()?;
            g = Goal::seq(g, rhs);
        }
        Ok(g)
    }

    // pargoal := unit ("," unit)*   -- binds tighter than "&"
    fn pargoal(&mut self) -> Result<Goal, ParseError> {
        let mut g = self.unit()?;
        while *self.peek() == Tok::Comma {
            self.advance();
            let rhs = self.unit()?;
            g = Goal::par(g, rhs);
        }
        Ok(g)
    }

    fn unit(&mut self) -> Result<Goal, ParseError> {
        match self.peek().clone() {
            Tok::Forall => {
                self.advance();
                let name = match self.advance() {
                    Tok::Var(n) => n,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected a variable after `forall`"));
                    }
                };
                self.expect(Tok::In, "`in`")?;
                // The list is outside the binder's scope.
                let list = self.expr()?;
                self.expect(Tok::Do, "`do`")?;
                let (v, mark) = self.push_binder(&name);
                let body = self.unit()?;
                self.pop_binder(mark);
                Ok(Goal::forall(v, list, body))
            }
            Tok::Exists => {
                self.advance();
                let name = match self.advance() {
                    Tok::Var(n) => n,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected a variable after `exists`"));
                    }
                };
                self.expect(Tok::Do, "`do`")?;
                let (v, mark) = self.push_binder(&name);
                let body = self.unit()?;
                self.pop_binder(mark);
                Ok(Goal::exists(v, body))
            }
            Tok::LParen => {
                self.advance();
                let g = self.goal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            _ => self.callable(),
        }
    }

    /// An atomic goal: either `term OP term` for a relational operator or a
    /// callable term.
    fn callable(&mut self) -> Result<Goal, ParseError> {
        let start = self.here();
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Is => "is",
            Tok::Lt => "<",
            Tok::Le => "=<",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::ArithEq => "=:=",
            Tok::ArithNe => "=\\=",
            Tok::Eq => "=",
            _ => {
                return match lhs {
                    Term::Atom(ref name) if name == "true" => Ok(Goal::True),
                    Term::Atom(_) | Term::Compound(_, _) => Ok(Goal::Call(lhs)),
                    _ => Err(ParseError {
                        line: start.0,
                        column: start.1,
                        message: "expected a goal".to_string(),
                        found: self.toks[self.pos].tok.describe(),
                    }),
                }
            }
        };
        self.advance();
        let rhs = self.expr()?;
        Ok(Goal::Call(Term::compound(op, vec![lhs, rhs])))
    }

    // expr := mulexpr (("+" | "-") mulexpr)*
    fn expr(&mut self) -> Result<Term, ParseError> {
        let mut t = self.mulexpr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => break,
            };
            self.advance();
            let rhs = self.mulexpr()?;
            t = Term::compound(op, vec![t, rhs]);
        }
        Ok(t)
    }

    // mulexpr := primary (("*" | "//" | "mod") primary)*
    fn mulexpr(&mut self) -> Result<Term, ParseError> {
        let mut t = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => "*",
                Tok::IntDiv => "//",
                Tok::Mod => "mod",
                _ => break,
            };
            self.advance();
            let rhs = self.primary()?;
            t = Term::compound(op, vec![t, rhs]);
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Term::Int(i))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(i) => {
                        self.advance();
                        Ok(Term::Int(-i))
                    }
                    _ => Err(self.error("expected an integer after unary `-`")),
                }
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Term::Str(s))
            }
            Tok::Var(name) => {
                self.advance();
                Ok(Term::Var(self.variable(&name)))
            }
            Tok::Atom(name) => {
                self.check_atom_name(&name)?;
                self.advance();
                if *self.peek() == Tok::LParen {
                    self.advance();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.advance();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Atom(name))
                }
            }
            Tok::LParen => {
                self.advance();
                let t = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::LBracket => {
                self.advance();
                self.list()
            }
            _ => Err(self.error("expected a term")),
        }
    }

    // list := "[" "]" | "[" term (".." term | ("," term)* ("|" term)?) "]"
    fn list(&mut self) -> Result<Term, ParseError> {
        if *self.peek() == Tok::RBracket {
            self.advance();
            return Ok(Term::nil());
        }
        let first = self.expr()?;
        if *self.peek() == Tok::DotDot {
            self.advance();
            let hi = self.expr()?;
            if *self.peek() == Tok::Bar {
                return Err(self.error("a `[Lo..Hi]` range cannot have a `|` tail"));
            }
            self.expect(Tok::RBracket, "`]`")?;
            return Ok(Term::Range(Box::new(first), Box::new(hi)));
        }
        let mut items = vec![first];
        while *self.peek() == Tok::Comma {
            self.advance();
            items.push(self.expr()?);
        }
        let tail = if *self.peek() == Tok::Bar {
            self.advance();
            self.expr()?
        } else {
            Term::nil()
        };
        self.expect(Tok::RBracket, "`]`")?;
        Ok(items.into_iter().rev().fold(tail, |t, h| Term::cons(h, t)))
    }

    fn eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error("expected end of input"))
        }
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(src).run()
}

/// Parse a program: clauses and embedded queries. Query variables are
/// implicitly existentially closed.
pub fn parse_program(
    src: &str,
    origin: &str,
    vars: &mut VarSource,
) -> Result<SourceUnit, ParseError> {
    let toks = lex(src)?;
    Parser::new(toks, vars, false).program(origin)
}

/// Same as [`parse_program`] but accepting `$`-reserved predicate names;
/// used for machine-generated sources.
pub fn parse_program_reserved(
    src: &str,
    origin: &str,
    vars: &mut VarSource,
) -> Result<SourceUnit, ParseError> {
    let toks = lex(src)?;
    Parser::new(toks, vars, true).program(origin)
}

/// Parse a single goal (REPL entry point), implicitly ∃-closing its free
/// variables. A trailing `.` is allowed but not required.
pub fn parse_goal(src: &str, vars: &mut VarSource) -> Result<Goal, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks, vars, false);
    let g = p.goal()?;
    if *p.peek() == Tok::EndDot {
        p.advance();
    }
    p.eof()?;
    Ok(close_query(g))
}

/// Parse one standalone term, for tests and canonical round-trips.
pub fn parse_term(src: &str, vars: &mut VarSource) -> Result<Term, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks, vars, false);
    let t = p.expr()?;
    if *p.peek() == Tok::EndDot {
        p.advance();
    }
    p.eof()?;
    Ok(t)
}

/// Parse a sequence of `term.` items, as consumed by `read/1` input scripts.
pub fn parse_term_script(src: &str, vars: &mut VarSource) -> Result<Vec<Term>, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks, vars, false);
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        p.scope.clear();
        out.push(p.expr()?);
        p.expect(Tok::EndDot, "`.` after input term")?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{alpha_eq_goal, free_vars};

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn tokenize_fact() {
        assert_eq!(
            toks("fact(0,1)."),
            vec![
                Tok::Atom("fact".into()),
                Tok::LParen,
                Tok::Int(0.into()),
                Tok::Comma,
                Tok::Int(1.into()),
                Tok::RParen,
                Tok::EndDot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn tokenize_skips_comments() {
        assert_eq!(
            toks("% comment\np."),
            vec![Tok::Atom("p".into()), Tok::EndDot, Tok::Eof]
        );
    }

    #[test]
    fn tokenize_range_shorthand() {
        assert_eq!(
            toks("[1..N]"),
            vec![
                Tok::LBracket,
                Tok::Int(1.into()),
                Tok::DotDot,
                Tok::Var("N".into()),
                Tok::RBracket,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn tokenize_reports_position_of_bad_char() {
        let err = lex("p :- ^q.").unwrap_err();
        assert_eq!((err.line, err.column), (1, 6));
    }

    #[test]
    fn tokenize_unterminated_string() {
        let err = lex("write(\"abc").unwrap_err();
        assert_eq!(err.message, "unterminated string");
    }

    #[test]
    fn parse_write_list_clause() {
        let mut vars = VarSource::new();
        let unit = parse_program(
            "write_list(L) :- write(\"List: \") & forall X in L do write(X).",
            "test",
            &mut vars,
        )
        .unwrap();
        assert_eq!(unit.clauses.len(), 1);
        let c = &unit.clauses[0];
        let Term::Compound(f, args) = &c.head else {
            panic!("head shape")
        };
        assert_eq!(f, "write_list");
        let Term::Var(l) = &args[0] else { panic!("head arg") };
        let Goal::SeqAnd(lhs, rhs) = &c.body else {
            panic!("body shape: {:?}", c.body)
        };
        assert_eq!(
            **lhs,
            Goal::call(Term::compound("write", vec![Term::Str("List: ".into())]))
        );
        let Goal::Forall(x, list, body) = &**rhs else {
            panic!("loop shape")
        };
        assert_eq!(list, &Term::Var(l.clone()));
        assert_eq!(
            **body,
            Goal::call(Term::compound("write", vec![Term::Var(x.clone())]))
        );
    }

    #[test]
    fn queries_are_existentially_closed() {
        let mut vars = VarSource::new();
        let unit = parse_program("?- p(X), q(X).", "test", &mut vars).unwrap();
        assert_eq!(unit.queries.len(), 1);
        let Goal::Exists(x, body) = &unit.queries[0] else {
            panic!("expected closure, got {:?}", unit.queries[0])
        };
        assert_eq!(x.name, "X");
        let Goal::ParAnd(a, b) = &**body else { panic!("body") };
        assert_eq!(**a, Goal::call(Term::compound("p", vec![Term::Var(x.clone())])));
        assert_eq!(**b, Goal::call(Term::compound("q", vec![Term::Var(x.clone())])));
    }

    #[test]
    fn parse_fact_clause() {
        let mut vars = VarSource::new();
        let unit = parse_program("fact(0,1).", "test", &mut vars).unwrap();
        assert_eq!(
            unit.clauses[0],
            Clause::fact(Term::compound("fact", vec![Term::int(0), Term::int(1)]))
        );
    }

    #[test]
    fn parse_goal_forall_over_empty_list() {
        let mut vars = VarSource::new();
        let g = parse_goal("forall X in [] do write(X)", &mut vars).unwrap();
        let Goal::Forall(x, list, body) = &g else { panic!("{g:?}") };
        assert!(list.is_nil());
        assert_eq!(
            **body,
            Goal::call(Term::compound("write", vec![Term::Var(x.clone())]))
        );
    }

    #[test]
    fn parse_goal_closes_read_loop_query() {
        let mut vars = VarSource::new();
        let g = parse_goal("read(N) & forall X in [1..N] do p(X)", &mut vars).unwrap();
        let Goal::Exists(n, body) = &g else { panic!("{g:?}") };
        assert_eq!(n.name, "N");
        let Goal::SeqAnd(lhs, rhs) = &**body else { panic!("{body:?}") };
        assert_eq!(
            **lhs,
            Goal::call(Term::compound("read", vec![Term::Var(n.clone())]))
        );
        let Goal::Forall(_, Term::Range(lo, hi), _) = &**rhs else {
            panic!("{rhs:?}")
        };
        assert_eq!(**lo, Term::int(1));
        assert_eq!(**hi, Term::Var(n.clone()));
    }

    #[test]
    fn parse_error_position_on_unterminated_call() {
        let err = parse_goal("p(", &mut VarSource::new()).unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
    }

    #[test]
    fn comma_binds_tighter_than_amp() {
        let mut vars = VarSource::new();
        let g = parse_goal("a, b & c", &mut vars).unwrap();
        assert_eq!(
            g,
            Goal::seq(
                Goal::par(
                    Goal::call(Term::atom("a")),
                    Goal::call(Term::atom("b"))
                ),
                Goal::call(Term::atom("c"))
            )
        );
    }

    #[test]
    fn amp_chains_are_left_associative() {
        let mut vars = VarSource::new();
        let g = parse_goal("a & b & c", &mut vars).unwrap();
        assert_eq!(
            g,
            Goal::seq(
                Goal::seq(Goal::call(Term::atom("a")), Goal::call(Term::atom("b"))),
                Goal::call(Term::atom("c"))
            )
        );
    }

    #[test]
    fn range_with_tail_is_rejected() {
        let err = parse_goal("p([1..2|T])", &mut VarSource::new()).unwrap_err();
        assert!(err.message.contains("range"), "{err}");
    }

    #[test]
    fn list_with_tail_variable() {
        let mut vars = VarSource::new();
        let t = parse_term("[1,2|T]", &mut vars).unwrap();
        let Term::Compound(_, args) = &t else { panic!() };
        assert_eq!(args[0], Term::int(1));
        let Term::Compound(_, args2) = &args[1] else { panic!() };
        assert_eq!(args2[0], Term::int(2));
        assert!(matches!(args2[1], Term::Var(_)));
    }

    #[test]
    fn relational_goals_parse_infix() {
        let mut vars = VarSource::new();
        let g = parse_goal("F is 3 * 4", &mut vars).unwrap();
        let Goal::Exists(f, body) = &g else { panic!("{g:?}") };
        assert_eq!(
            **body,
            Goal::Call(Term::compound(
                "is",
                vec![
                    Term::Var(f.clone()),
                    Term::compound("*", vec![Term::int(3), Term::int(4)])
                ]
            ))
        );
    }

    #[test]
    fn arithmetic_precedence_and_parens() {
        let mut vars = VarSource::new();
        let t = parse_term("1 + 2 * 3", &mut vars).unwrap();
        assert_eq!(
            t,
            Term::compound(
                "+",
                vec![
                    Term::int(1),
                    Term::compound("*", vec![Term::int(2), Term::int(3)])
                ]
            )
        );
        let t = parse_term("(1 + 2) * 3", &mut vars).unwrap();
        assert_eq!(
            t,
            Term::compound(
                "*",
                vec![
                    Term::compound("+", vec![Term::int(1), Term::int(2)]),
                    Term::int(3)
                ]
            )
        );
    }

    #[test]
    fn single_quoted_text_is_a_string() {
        let mut vars = VarSource::new();
        let t = parse_term("'factorial is:'", &mut vars).unwrap();
        assert_eq!(t, Term::Str("factorial is:".into()));
    }

    #[test]
    fn goal_in_head_position_is_rejected() {
        let err = parse_program("p, q.", "test", &mut VarSource::new()).unwrap_err();
        assert!(err.message.contains("expected"), "{err}");
        let err = parse_program("X.", "test", &mut VarSource::new()).unwrap_err();
        assert!(err.message.contains("clause head"), "{err}");
    }

    #[test]
    fn reserved_dollar_atoms_are_rejected_in_user_source() {
        let err = parse_program("$forall_1([]).", "test", &mut VarSource::new()).unwrap_err();
        assert!(err.message.contains("reserved"), "{err}");
        assert!(parse_program_reserved("$forall_1([]).", "test", &mut VarSource::new()).is_ok());
    }

    #[test]
    fn binder_shadows_clause_variable() {
        let mut vars = VarSource::new();
        let unit = parse_program("p(X) :- forall X in [1] do q(X).", "t", &mut vars).unwrap();
        let c = &unit.clauses[0];
        let Term::Compound(_, head_args) = &c.head else { panic!() };
        let Term::Var(outer) = &head_args[0] else { panic!() };
        let Goal::Forall(inner, _, body) = &c.body else { panic!() };
        assert_ne!(outer.id, inner.id);
        let Goal::Call(Term::Compound(_, body_args)) = &**body else { panic!() };
        assert_eq!(body_args[0], Term::Var(inner.clone()));
    }

    #[test]
    fn anonymous_underscore_is_fresh_each_time() {
        let mut vars = VarSource::new();
        let g = parse_goal("q(_, _)", &mut vars).unwrap();
        // Both occurrences are distinct, so the closure introduced two binders.
        let Goal::Exists(a, rest) = &g else { panic!("{g:?}") };
        let Goal::Exists(b, _) = &**rest else { panic!("{g:?}") };
        assert_ne!(a.id, b.id);
    }

    #[test]
    fn explicit_exists_parses() {
        let mut vars = VarSource::new();
        let g = parse_goal("exists Y do p(Y)", &mut vars).unwrap();
        let Goal::Exists(y, body) = &g else { panic!("{g:?}") };
        assert_eq!(y.name, "Y");
        assert!(free_vars(body).is_empty() || free_vars(&g).is_empty());
        assert!(alpha_eq_goal(
            &g,
            &Goal::exists(
                y.clone(),
                Goal::call(Term::compound("p", vec![Term::Var(y.clone())]))
            )
        ));
    }

    #[test]
    fn multiline_positions_are_tracked() {
        let err = parse_program("p.\nq :- .\n", "t", &mut VarSource::new()).unwrap_err();
        assert_eq!(err.line, 2);
    }
}
