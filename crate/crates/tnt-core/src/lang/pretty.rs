//! Source printer. `parse_program(&pretty(p))` rebuilds `p`.

use alloc::format;
use alloc::string::String;

use super::ast::*;

pub fn pretty(p: &Program) -> String {
    let mut out = format!("fun {}({}) {{\n", p.name, p.params.join(", "));
    for d in &p.decls {
        match &d.init {
            Init::Nondet => out += &format!("  int {} = *;\n", d.name),
            Init::Expr(e) => out += &format!("  int {} = {};\n", d.name, expr(e)),
        }
    }
    stmts(&p.body, 1, &mut out);
    out += "}\n";
    out
}

fn indent(n: usize) -> String {
    "  ".repeat(n)
}

fn stmts(ss: &[Stmt], lvl: usize, out: &mut String) {
    for s in ss {
        let pad = indent(lvl);
        match s {
            Stmt::Assign(v, e) => *out += &format!("{pad}{v} = {};\n", expr(e)),
            Stmt::Havoc(v) => *out += &format!("{pad}{v} = *;\n"),
            Stmt::Skip => *out += &format!("{pad}skip;\n"),
            Stmt::While(c, b) => {
                *out += &format!("{pad}while ({}) {{\n", cond(c));
                stmts(b, lvl + 1, out);
                *out += &format!("{pad}}}\n");
            }
            Stmt::If(c, t, e) => {
                *out += &format!("{pad}if ({}) {{\n", cond(c));
                stmts(t, lvl + 1, out);
                match e {
                    Some(e) => {
                        *out += &format!("{pad}}} else {{\n");
                        stmts(e, lvl + 1, out);
                        *out += &format!("{pad}}}\n");
                    }
                    None => *out += &format!("{pad}}}\n"),
                }
            }
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Int(n) if n.sign() == num_bigint::Sign::Minus => 3,
        _ => 4,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    if prec(e) < min {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => format!("{n}"),
        Expr::Var(v) => v.clone(),
        Expr::Neg(a) => format!("-{}", wrap(a, 3)),
        Expr::Add(a, b) => format!("{} + {}", wrap(a, 1), wrap(b, 2)),
        Expr::Sub(a, b) => format!("{} - {}", wrap(a, 1), wrap(b, 2)),
        Expr::Mul(a, b) => format!("{} * {}", wrap(a, 2), wrap(b, 3)),
    }
}

fn cprec(c: &Cond) -> u8 {
    match c {
        Cond::Or(..) => 1,
        Cond::And(..) => 2,
        _ => 3,
    }
}

fn cwrap(c: &Cond, min: u8) -> String {
    if cprec(c) < min {
        format!("({})", cond(c))
    } else {
        cond(c)
    }
}

pub fn cond(c: &Cond) -> String {
    match c {
        Cond::True => "true".into(),
        Cond::False => "false".into(),
        Cond::Cmp(a, op, b) => format!("{} {} {}", expr(a), op.symbol(), expr(b)),
        Cond::And(a, b) => format!("{} && {}", cwrap(a, 2), cwrap(b, 3)),
        Cond::Or(a, b) => format!("{} || {}", cwrap(a, 1), cwrap(b, 2)),
        Cond::Not(a) => match **a {
            Cond::True | Cond::False | Cond::Not(_) => format!("!{}", cond(a)),
            _ => format!("!({})", cond(a)),
        },
    }
}
