use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;

use crate::formula::{Atom, Formula};
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    True,
    False,
    Cmp(Expr, RelOp, Expr),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Init {
    Expr(Expr),
    Nondet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub init: Init,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, Expr),
    /// `x = *;` inside a statement list.
    Havoc(String),
    While(Cond, Vec<Stmt>),
    If(Cond, Vec<Stmt>, Option<Vec<Stmt>>),
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub params: Vec<String>,
    pub decls: Vec<Decl>,
    pub body: Vec<Stmt>,
}

impl Program {
    /// Parameters first, then declarations, in source order.
    pub fn vars(&self) -> Vec<String> {
        self.params.iter().cloned().chain(self.decls.iter().map(|d| d.name.clone())).collect()
    }

    /// Parameters and `*`-initialized declarations.
    pub fn inputs(&self) -> Vec<String> {
        self.params
            .iter()
            .cloned()
            .chain(self.decls.iter().filter(|d| d.init == Init::Nondet).map(|d| d.name.clone()))
            .collect()
    }
}

impl Expr {
    pub fn to_poly(&self) -> Poly {
        match self {
            Expr::Int(n) => Poly::constant(n.clone()),
            Expr::Var(v) => Poly::var(v),
            Expr::Neg(e) => e.to_poly().neg(),
            Expr::Add(a, b) => a.to_poly().add(&b.to_poly()),
            Expr::Sub(a, b) => a.to_poly().sub(&b.to_poly()),
            Expr::Mul(a, b) => a.to_poly().mul(&b.to_poly()),
        }
    }
}

impl Cond {
    pub fn to_formula(&self) -> Formula {
        match self {
            Cond::True => Formula::True,
            Cond::False => Formula::False,
            Cond::Cmp(a, op, b) => {
                let (pa, pb) = (a.to_poly(), b.to_poly());
                let d = pa.sub(&pb);
                match op {
                    RelOp::Ge => Formula::Atom(Atom::ge(d)),
                    RelOp::Gt => Formula::Atom(Atom::ge(d.add_const(-1))),
                    RelOp::Le => Formula::Atom(Atom::ge(d.neg())),
                    RelOp::Lt => Formula::Atom(Atom::ge(d.neg().add_const(-1))),
                    RelOp::Eq => Formula::Atom(Atom::eq(d)),
                    RelOp::Ne => Formula::not(Formula::Atom(Atom::eq(d))),
                }
            }
            Cond::And(a, b) => Formula::And(alloc::vec![a.to_formula(), b.to_formula()]),
            Cond::Or(a, b) => Formula::Or(alloc::vec![a.to_formula(), b.to_formula()]),
            Cond::Not(c) => Formula::not(c.to_formula()),
        }
    }
}
