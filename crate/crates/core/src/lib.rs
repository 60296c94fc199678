//! Compiler, reference interpreter and tooling for Linguine, a controlled-English
//! programming language whose pronouns are resolved at compile time.

#![allow(clippy::result_large_err)]

pub mod ast;
pub mod codegen;
pub mod desugar;
pub mod driver;
#[cfg(feature = "host")]
pub mod fuzz;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod refanalysis;
pub mod span;
pub mod ssa;
pub mod typeck;
pub mod types;
