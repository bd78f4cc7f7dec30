//! Termination and non-termination analysis for a small integer language.
//!
//! Loops are executed under a truncating instrumentation, candidate ranking
//! functions and recurrent sets are guessed from the recorded snapshots, and
//! every guess is validated before it is reported.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod clock;
pub mod dinfer;
pub mod exec;
pub mod formula;
pub mod lang;
pub mod poly;
pub mod rank;
pub mod solver;
pub mod summary;

pub use formula::{Atom, Conjunction, Formula, Rel};
pub use poly::{Monomial, Poly, Valuation};
