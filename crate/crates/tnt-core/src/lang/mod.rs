//! Source language: syntax, control-flow automata and instrumentation.

pub mod ast;
pub mod cfa;
pub mod parser;
pub mod pretty;

pub use ast::{Cond, Decl, Expr, Init, Program, RelOp};
pub use cfa::{get_loop_seq, instrument, to_cfa, Cfa, Edge, InstrumentedCfa, Loc, LoopInfo, Pos};
pub use parser::{parse_program, ParseError};
pub use pretty::pretty;
