//! forlog: a Horn-clause logic programming language extended with
//! bounded-quantifier loop goals (`forall X in L do G`), together with a
//! source-to-source translator that eliminates the loops into recursive
//! auxiliary predicates.
//!
//! The crate is organized around the pipeline:
//!
//! * [`ast`] — terms, goals, clauses, programs
//! * [`reader`] — tokenizer and parser for the `.fl` surface syntax
//! * [`unify`] — bindings store, trail, and first-order unification
//! * [`engine`] — depth-first solver with backtracking
//! * [`builtins`] — `write`, `nl`, `read`, `is`, comparison, `=`
//! * [`translate`] — loop elimination and pretty-printing
//! * [`cli`] — the `forlog` command-line front end

pub mod ast;
pub mod builtins;
pub mod cli;
pub mod engine;
pub mod reader;
pub mod translate;
pub mod unify;
