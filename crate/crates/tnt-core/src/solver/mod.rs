//! Satisfiability, validity and ranking-function validation.

pub mod lp;
pub mod prove;
pub mod search;
pub mod smt;
pub mod validate;

pub use prove::{check_implication, check_recurrent, entails, inconsistent, RecurrentCheck};
pub use search::{check_sat, find_models, CheckResult, SearchOpts};
pub use smt::{export_obligation, export_smtlib, formula_sexpr, parse_smtlib, poly_sexpr, SmtError};
pub use validate::{grid_inputs, validate_rfs, validate_rfs_on, RfCex, RfValidation};
