//! SMT-LIB 2 export of formulas and obligations, and a reader for the
//! subset we emit.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use num_bigint::BigInt;
use num_traits::Signed;
use thiserror::Error;

use crate::formula::{Atom, Conjunction, Formula, Rel};
use crate::poly::{Monomial, Poly};
use crate::summary::Path;

fn num(c: &BigInt) -> String {
    if c.is_negative() {
        alloc::format!("(- {})", -c)
    } else {
        c.to_string()
    }
}

fn term(m: &Monomial, c: &BigInt) -> String {
    let mut parts = Vec::new();
    if !(c == &BigInt::from(1) && !m.is_one()) {
        parts.push(num(c));
    }
    for (v, e) in m.factors() {
        for _ in 0..*e {
            parts.push(v.clone());
        }
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        alloc::format!("(* {})", parts.join(" "))
    }
}

pub fn poly_sexpr(p: &Poly) -> String {
    let ts: Vec<String> = p.terms().map(|(m, c)| term(m, c)).collect();
    match ts.len() {
        0 => "0".into(),
        1 => ts.into_iter().next().unwrap(),
        _ => alloc::format!("(+ {})", ts.join(" ")),
    }
}

pub fn formula_sexpr(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Atom(a) => {
            let op = match a.rel {
                Rel::Eq => "=",
                Rel::Ge => ">=",
            };
            alloc::format!("({op} {} 0)", poly_sexpr(&a.poly))
        }
        Formula::And(fs) => nary("and", fs),
        Formula::Or(fs) => nary("or", fs),
        Formula::Not(g) => alloc::format!("(not {})", formula_sexpr(g)),
    }
}

fn nary(op: &str, fs: &[Formula]) -> String {
    let parts: Vec<String> = fs.iter().map(formula_sexpr).collect();
    alloc::format!("({op} {})", parts.join(" "))
}

/// Satisfiability script for `f`.
pub fn export_smtlib(f: &Formula, vars: &[String]) -> String {
    let mut s = String::from("(set-logic QF_NIA)\n");
    for v in vars {
        let _ = writeln!(s, "(declare-const {v} Int)");
    }
    let _ = writeln!(s, "(assert {})", formula_sexpr(f));
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

/// Script whose models are counterexamples to `hyp ∧ guard ⟹ concl[update]`.
pub fn export_obligation(hyp: &Conjunction, path: &Path, concl: &Atom, vars: &[String]) -> String {
    let mut hs = hyp.clone();
    for a in path.guard.atoms() {
        hs.push(a.clone());
    }
    let f = Formula::and(alloc::vec![hs.to_formula(), Formula::not(Formula::Atom(concl.subst(&path.update)))]);
    let mut s = String::from("; counterexample states, if sat\n");
    s.push_str(&export_smtlib(&f, vars));
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unexpected expression: {0}")]
    Unexpected(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut comment = false;
    for ch in text.chars() {
        if comment {
            comment = ch != '\n';
            continue;
        }
        match ch {
            ';' => comment = true,
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(core::mem::take(&mut cur));
                }
                toks.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(core::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

fn read_all(text: &str) -> Result<Vec<Sexp>, SmtError> {
    let mut stack: Vec<Vec<Sexp>> = alloc::vec![Vec::new()];
    for t in tokenize(text) {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let l = stack.pop().ok_or(SmtError::Unbalanced)?;
                stack.last_mut().ok_or(SmtError::Unbalanced)?.push(Sexp::List(l));
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(t)),
        }
    }
    if stack.len() != 1 {
        return Err(SmtError::Unbalanced);
    }
    Ok(stack.pop().unwrap())
}

fn unexpected(s: &Sexp) -> SmtError {
    SmtError::Unexpected(alloc::format!("{s:?}"))
}

fn to_poly(s: &Sexp) -> Result<Poly, SmtError> {
    match s {
        Sexp::Atom(a) => match a.parse::<BigInt>() {
            Ok(n) => Ok(Poly::constant(n)),
            Err(_) => Ok(Poly::var(a)),
        },
        Sexp::List(l) => {
            let (Some(Sexp::Atom(op)), args) = (l.first(), &l[1.min(l.len())..]) else {
                return Err(unexpected(s));
            };
            let ps = args.iter().map(to_poly).collect::<Result<Vec<_>, _>>()?;
            match (op.as_str(), ps.len()) {
                ("-", 1) => Ok(ps[0].neg()),
                ("-", n) if n > 1 => Ok(ps[1..].iter().fold(ps[0].clone(), |a, b| a.sub(b))),
                ("+", _) => Ok(ps.iter().fold(Poly::zero(), |a, b| a.add(b))),
                ("*", _) => Ok(ps.iter().fold(Poly::constant(1), |a, b| a.mul(b))),
                _ => Err(unexpected(s)),
            }
        }
    }
}

fn to_formula(s: &Sexp) -> Result<Formula, SmtError> {
    match s {
        Sexp::Atom(a) if a == "true" => Ok(Formula::True),
        Sexp::Atom(a) if a == "false" => Ok(Formula::False),
        Sexp::List(l) => {
            let Some(Sexp::Atom(op)) = l.first() else { return Err(unexpected(s)) };
            let args = &l[1..];
            match op.as_str() {
                "and" => Ok(Formula::And(args.iter().map(to_formula).collect::<Result<_, _>>()?)),
                "or" => Ok(Formula::Or(args.iter().map(to_formula).collect::<Result<_, _>>()?)),
                "not" if args.len() == 1 => Ok(Formula::Not(Box::new(to_formula(&args[0])?))),
                ">=" | "<=" | ">" | "<" | "=" if args.len() == 2 => {
                    let d = to_poly(&args[0])?.sub(&to_poly(&args[1])?);
                    Ok(Formula::Atom(match op.as_str() {
                        ">=" => Atom::ge(d),
                        "<=" => Atom::ge(d.neg()),
                        ">" => Atom::ge(d.add_const(-1)),
                        "<" => Atom::ge(d.neg().add_const(-1)),
                        _ => Atom::eq(d),
                    }))
                }
                _ => Err(unexpected(s)),
            }
        }
        _ => Err(unexpected(s)),
    }
}

/// Conjunction of every `assert` in a script.
pub fn parse_smtlib(text: &str) -> Result<Formula, SmtError> {
    let mut asserts = Vec::new();
    for cmd in read_all(text)? {
        if let Sexp::List(l) = &cmd {
            if let [Sexp::Atom(h), body] = l.as_slice() {
                if h == "assert" {
                    asserts.push(to_formula(body)?);
                }
            }
        }
    }
    Ok(match asserts.len() {
        1 => asserts.pop().unwrap(),
        _ => Formula::And(asserts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_export() {
        let f = Formula::Atom(Atom::ge(Poly::var("x")));
        let s = export_smtlib(&f, &["x".into()]);
        assert!(s.contains("(assert (>= x 0))"));
        assert!(s.contains("(declare-const x Int)"));
        assert_eq!(parse_smtlib(&s).unwrap(), f);
    }

    #[test]
    fn negative_and_products() {
        let p = Poly::var("t").mul(&Poly::var("t")).sub(&Poly::var("n").scale(&BigInt::from(4))).add_const(-3);
        let f = Formula::Atom(Atom::eq(p));
        assert_eq!(parse_smtlib(&export_smtlib(&f, &[])).unwrap(), f);
    }
}
