//! Atoms in `= 0` / `≥ 0` normal form and boolean formulas over them.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::poly::{CompiledPoly, Poly, Valuation, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub poly: Poly,
    pub rel: Rel,
}

impl Atom {
    /// `p ≥ 0`, tightened over the integers.
    pub fn ge(p: Poly) -> Atom {
        let g = p.nonconst_content();
        let poly = if g > BigInt::from(1) {
            let c = p.constant_term();
            let mut q = p.add_const(-c.clone()).div_exact(&g);
            q = q.add_const(c.div_floor(&g));
            q
        } else {
            p
        };
        Atom { poly, rel: Rel::Ge }
    }

    /// `p = 0` with coprime coefficients and positive leading coefficient.
    pub fn eq(p: Poly) -> Atom {
        Atom { poly: p.primitive(), rel: Rel::Eq }
    }

    /// `a ≤ b`.
    pub fn le(a: &Poly, b: &Poly) -> Atom {
        Atom::ge(b.sub(a))
    }

    pub fn holds(&self, val: &Valuation) -> Option<bool> {
        let v = self.poly.eval(val)?;
        Some(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Ge => !v.is_negative(),
        })
    }

    /// Constant truth value, if the polynomial is constant.
    pub fn trivial(&self) -> Option<bool> {
        let c = self.poly.as_constant()?;
        Some(match self.rel {
            Rel::Eq => c.is_zero(),
            Rel::Ge => !c.is_negative(),
        })
    }

    /// Negation as a disjunction of atoms.
    pub fn negate(&self) -> Vec<Atom> {
        match self.rel {
            Rel::Ge => alloc::vec![Atom::ge(self.poly.neg().add_const(-1))],
            Rel::Eq => alloc::vec![
                Atom::ge(self.poly.add_const(-1)),
                Atom::ge(self.poly.neg().add_const(-1)),
            ],
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, Poly>) -> Atom {
        let p = self.poly.subst(map);
        match self.rel {
            Rel::Eq => Atom::eq(p),
            Rel::Ge => Atom::ge(p),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        self.poly.vars()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rel {
            Rel::Eq => write!(f, "{} = 0", self.poly),
            Rel::Ge => write!(f, "{} >= 0", self.poly),
        }
    }
}

/// Ordered, duplicate-free list of atoms. Empty means `true`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Conjunction(Vec<Atom>);

impl Conjunction {
    pub fn top() -> Self {
        Conjunction(Vec::new())
    }

    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Self {
        let mut c = Conjunction::top();
        for a in atoms {
            c.push(a);
        }
        c
    }

    /// Adds an atom unless already present or trivially true.
    pub fn push(&mut self, a: Atom) -> bool {
        if a.trivial() == Some(true) || self.0.contains(&a) {
            return false;
        }
        self.0.push(a);
        true
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.0.truncate(n);
    }

    pub fn with(&self, a: Atom) -> Conjunction {
        let mut c = self.clone();
        c.push(a);
        c
    }

    pub fn holds(&self, val: &Valuation) -> Option<bool> {
        for a in &self.0 {
            if !a.holds(val)? {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Contains a constant-false atom.
    pub fn is_trivially_false(&self) -> bool {
        self.0.iter().any(|a| a.trivial() == Some(false))
    }

    pub fn vars(&self) -> Vec<String> {
        let mut vs: Vec<String> = self.0.iter().flat_map(|a| a.vars()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Order-insensitive identity key.
    pub fn key(&self) -> Vec<Atom> {
        let mut k = self.0.clone();
        k.sort();
        k
    }

    pub fn subst(&self, map: &BTreeMap<String, Poly>) -> Conjunction {
        Conjunction::from_atoms(self.0.iter().map(|a| a.subst(map)))
    }

    pub fn to_formula(&self) -> Formula {
        Formula::and(self.0.iter().cloned().map(Formula::Atom).collect())
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn and(mut fs: Vec<Formula>) -> Formula {
        fs.retain(|f| *f != Formula::True);
        if fs.contains(&Formula::False) {
            return Formula::False;
        }
        match fs.len() {
            0 => Formula::True,
            1 => fs.pop().unwrap(),
            _ => Formula::And(fs),
        }
    }

    pub fn or(mut fs: Vec<Formula>) -> Formula {
        fs.retain(|f| *f != Formula::False);
        if fs.contains(&Formula::True) {
            return Formula::True;
        }
        match fs.len() {
            0 => Formula::False,
            1 => fs.pop().unwrap(),
            _ => Formula::Or(fs),
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn eval(&self, val: &Valuation) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(val)?,
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(val)? {
                        return Some(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(val)? {
                        return Some(true);
                    }
                }
                false
            }
            Formula::Not(f) => !f.eval(val)?,
        })
    }

    /// Negation pushed to atoms; atoms re-normalized; constants folded.
    pub fn normalize(&self) -> Formula {
        self.nnf(false)
    }

    fn nnf(&self, neg: bool) -> Formula {
        match (self, neg) {
            (Formula::True, false) | (Formula::False, true) => Formula::True,
            (Formula::True, true) | (Formula::False, false) => Formula::False,
            (Formula::Atom(a), false) => atom_formula(a.clone()),
            (Formula::Atom(a), true) => {
                Formula::or(a.negate().into_iter().map(atom_formula).collect())
            }
            (Formula::And(fs), false) => Formula::and(fs.iter().map(|f| f.nnf(false)).collect()),
            (Formula::And(fs), true) => Formula::or(fs.iter().map(|f| f.nnf(true)).collect()),
            (Formula::Or(fs), false) => Formula::or(fs.iter().map(|f| f.nnf(false)).collect()),
            (Formula::Or(fs), true) => Formula::and(fs.iter().map(|f| f.nnf(true)).collect()),
            (Formula::Not(f), n) => f.nnf(!n),
        }
    }

    /// Disjunctive normal form; None if more than `cap` clauses arise.
    pub fn dnf(&self, cap: usize) -> Option<Vec<Conjunction>> {
        let mut out = dnf_rec(&self.normalize(), cap)?;
        out.retain(|c| !c.is_trivially_false());
        let mut seen = Vec::new();
        out.retain(|c| {
            let k = c.key();
            if seen.contains(&k) {
                false
            } else {
                seen.push(k);
                true
            }
        });
        Some(out)
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Not(f) => f.collect_atoms(out),
            _ => {}
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut vs: Vec<String> = self.atoms().iter().flat_map(|a| a.vars()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn subst(&self, map: &BTreeMap<String, Poly>) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.subst(map)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.subst(map)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.subst(map)).collect()),
            Formula::Not(f) => Formula::not(f.subst(map)),
            f => f.clone(),
        }
    }
}

fn atom_formula(a: Atom) -> Formula {
    match a.trivial() {
        Some(true) => Formula::True,
        Some(false) => Formula::False,
        None => Formula::Atom(a),
    }
}

fn dnf_rec(f: &Formula, cap: usize) -> Option<Vec<Conjunction>> {
    match f {
        Formula::True => Some(alloc::vec![Conjunction::top()]),
        Formula::False => Some(Vec::new()),
        Formula::Atom(a) => Some(alloc::vec![Conjunction::from_atoms([a.clone()])]),
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(dnf_rec(g, cap)?);
                if out.len() > cap {
                    return None;
                }
            }
            Some(out)
        }
        Formula::And(fs) => {
            let mut acc = alloc::vec![Conjunction::top()];
            for g in fs {
                let d = dnf_rec(g, cap)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &d {
                        let mut c = a.clone();
                        for at in b.atoms() {
                            c.push(at.clone());
                        }
                        next.push(c);
                    }
                }
                if next.len() > cap {
                    return None;
                }
                acc = next;
            }
            Some(acc)
        }
        Formula::Not(_) => dnf_rec(&f.normalize(), cap),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::And(fs) | Formula::Or(fs) => {
                let op = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                write!(f, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            Formula::Not(g) => write!(f, "!{g}"),
        }
    }
}

/// Formula compiled against a variable order.
#[derive(Clone, Debug)]
pub enum CompiledFormula {
    True,
    False,
    Atom(CompiledPoly, Rel),
    And(Vec<CompiledFormula>),
    Or(Vec<CompiledFormula>),
    Not(alloc::boxed::Box<CompiledFormula>),
}

impl CompiledFormula {
    pub fn new(f: &Formula, order: &[String]) -> CompiledFormula {
        match f {
            Formula::True => CompiledFormula::True,
            Formula::False => CompiledFormula::False,
            Formula::Atom(a) => CompiledFormula::Atom(
                CompiledPoly::new(&a.poly, order).expect("formula over program variables"),
                a.rel,
            ),
            Formula::And(fs) => CompiledFormula::And(fs.iter().map(|g| CompiledFormula::new(g, order)).collect()),
            Formula::Or(fs) => CompiledFormula::Or(fs.iter().map(|g| CompiledFormula::new(g, order)).collect()),
            Formula::Not(g) => CompiledFormula::Not(alloc::boxed::Box::new(CompiledFormula::new(g, order))),
        }
    }

    pub fn eval<V: Value>(&self, x: &[V]) -> bool {
        match self {
            CompiledFormula::True => true,
            CompiledFormula::False => false,
            CompiledFormula::Atom(p, Rel::Eq) => V::sign(p, x) == 0,
            CompiledFormula::Atom(p, Rel::Ge) => V::sign(p, x) >= 0,
            CompiledFormula::And(fs) => fs.iter().all(|f| f.eval(x)),
            CompiledFormula::Or(fs) => fs.iter().any(|f| f.eval(x)),
            CompiledFormula::Not(f) => !f.eval(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn integer_tightening() {
        let a = Atom::ge(Poly::var("x").scale(&2.into()).add_const(-1));
        assert_eq!(a.to_string(), "x - 1 >= 0");
    }

    #[test]
    fn negation_normal_forms() {
        let a = Atom::ge(Poly::var("x"));
        assert_eq!(a.negate()[0].to_string(), "-x - 1 >= 0");
        let e = Atom::eq(Poly::var("x").add_const(-3));
        let n = e.negate();
        assert_eq!(n.len(), 2);
        assert_eq!(n[0].to_string(), "x - 4 >= 0");
        assert_eq!(n[1].to_string(), "-x + 2 >= 0");
    }

    #[test]
    fn dnf_of_disequality() {
        let f = Formula::not(Formula::Atom(Atom::eq(Poly::var("x"))));
        let d = f.dnf(16).unwrap();
        assert_eq!(d.len(), 2);
    }
}
