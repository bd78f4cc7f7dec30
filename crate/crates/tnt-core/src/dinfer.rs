//! Invariant inference from snapshots: polynomial equalities from the
//! nullspace of a monomial data matrix, plus interval and octagonal bounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exec::LoopTrace;
use crate::formula::{Atom, Conjunction, Rel};
use crate::lang::Pos;
use crate::poly::{Monomial, Poly, Valuation};

pub const MAX_TERMS: usize = 2000;
/// States fed to elimination before the candidates are checked on the rest.
const ELIM_ROWS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DinferError {
    #[error("{count} monomials exceed the limit of {MAX_TERMS}")]
    TermExplosion { count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Interval,
    Octagonal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DinferOptions {
    pub max_degree: u32,
    pub max_conjuncts: usize,
    pub equalities: bool,
    pub octagonal: bool,
    pub interval: bool,
    /// Drop bounds that some truncated trace is moving towards.
    pub trend_filter: bool,
}

impl Default for DinferOptions {
    fn default() -> Self {
        DinferOptions {
            max_degree: 2,
            max_conjuncts: 12,
            equalities: true,
            octagonal: true,
            interval: true,
            trend_filter: false,
        }
    }
}

fn binom(n: usize, k: usize) -> usize {
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// All monomials of degree 0..=d; graded, lexicographic in `vars` order, `1` first.
pub fn gen_terms(vars: &[String], d: u32) -> Result<Vec<Monomial>, DinferError> {
    let count = binom(vars.len() + d as usize, d as usize);
    if count > MAX_TERMS {
        return Err(DinferError::TermExplosion { count });
    }
    fn rec(n: usize, k: u32, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n - 1 {
            cur[i] = k;
            out.push(cur.clone());
            return;
        }
        for e in (0..=k).rev() {
            cur[i] = e;
            rec(n, k - e, i + 1, cur, out);
        }
    }
    let mut out = alloc::vec![Monomial::one()];
    if vars.is_empty() {
        return Ok(out);
    }
    for k in 1..=d {
        let mut exps = Vec::new();
        rec(vars.len(), k, 0, &mut alloc::vec![0; vars.len()], &mut exps);
        for e in exps {
            out.push(Monomial::from_pairs(vars.iter().cloned().zip(e)));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equalities {
    pub atoms: Vec<Atom>,
    /// Fewer distinct states than monomials + 1.
    pub low_confidence: bool,
}

/// Reduced row echelon form over the integers, kept fully reduced.
struct Echelon {
    rows: Vec<(usize, Vec<BigInt>)>,
    cols: usize,
}

fn normalize_row(r: &mut [BigInt]) {
    let g = r.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in r.iter_mut() {
            *x /= &g;
        }
    }
}

impl Echelon {
    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Returns true if the row increased the rank.
    fn insert(&mut self, mut r: Vec<BigInt>) -> bool {
        for (p, b) in &self.rows {
            if !r[*p].is_zero() {
                let (f, g) = (b[*p].clone(), r[*p].clone());
                for j in 0..self.cols {
                    r[j] = &r[j] * &f - &b[j] * &g;
                }
                normalize_row(&mut r);
            }
        }
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        if r[p].is_negative() {
            r.iter_mut().for_each(|x| *x = -x.clone());
        }
        for (_, b) in self.rows.iter_mut() {
            if !b[p].is_zero() {
                let (f, g) = (r[p].clone(), b[p].clone());
                for j in 0..self.cols {
                    b[j] = &b[j] * &f - &r[j] * &g;
                }
                normalize_row(b);
            }
        }
        self.rows.push((p, r));
        self.rows.sort_by_key(|(p, _)| *p);
        true
    }

    /// One integer basis vector per free column.
    fn nullspace(&self) -> Vec<Vec<BigInt>> {
        let pivots: BTreeSet<usize> = self.rows.iter().map(|(p, _)| *p).collect();
        let mut out = Vec::new();
        for f in (0..self.cols).filter(|c| !pivots.contains(c)) {
            // x_f = L, x_p = -row[f] * L / row[p]
            let l = self.rows.iter().fold(BigInt::one(), |l, (p, r)| {
                if r[f].is_zero() {
                    l
                } else {
                    l.lcm(&r[*p])
                }
            });
            let mut v = alloc::vec![BigInt::zero(); self.cols];
            v[f] = l.clone();
            for (p, r) in &self.rows {
                if !r[f].is_zero() {
                    v[*p] = -(&r[f] * &l) / &r[*p];
                }
            }
            normalize_row(&mut v);
            out.push(v);
        }
        out
    }
}

fn dedup_states(states: &[Valuation]) -> Vec<&Valuation> {
    let mut seen = BTreeSet::new();
    states.iter().filter(|s| seen.insert(*s)).collect()
}

/// Exact equalities over `terms` holding on every state.
pub fn infer_equalities(
    states: &[Valuation],
    vars: &[String],
    max_degree: u32,
) -> Result<Equalities, DinferError> {
    let terms = gen_terms(vars, max_degree)?;
    let distinct = dedup_states(states);
    let low_confidence = distinct.len() < terms.len() + 1;
    if distinct.is_empty() {
        return Ok(Equalities { atoms: Vec::new(), low_confidence });
    }
    let row = |s: &Valuation| -> Vec<BigInt> {
        terms.iter().map(|m| m.eval(s).expect("state covers vars")).collect()
    };
    let mut ech = Echelon { rows: Vec::new(), cols: terms.len() };
    let mut used = alloc::vec![false; distinct.len()];
    for (i, s) in distinct.iter().enumerate().take(ELIM_ROWS) {
        used[i] = true;
        ech.insert(row(s));
        if ech.rank() == terms.len() {
            return Ok(Equalities { atoms: Vec::new(), low_confidence });
        }
    }
    loop {
        let basis = ech.nullspace();
        let polys: Vec<Poly> = basis.iter().map(|v| to_poly(&terms, v)).collect();
        let mut changed = false;
        for (i, s) in distinct.iter().enumerate() {
            if used[i] {
                continue;
            }
            if polys.iter().any(|p| !p.eval(s).expect("state covers vars").is_zero()) {
                used[i] = true;
                changed |= ech.insert(row(s));
            }
        }
        if !changed {
            let atoms = polys.into_iter().filter(|p| !p.is_zero()).map(Atom::eq).collect();
            return Ok(Equalities { atoms, low_confidence });
        }
    }
}

fn to_poly(terms: &[Monomial], v: &[BigInt]) -> Poly {
    let mut p = Poly::zero();
    for (m, c) in terms.iter().zip(v) {
        p.add_term(m.clone(), c.clone());
    }
    p
}

fn bounds(states: &[Valuation], p: &Poly, out: &mut Vec<Atom>) {
    let mut vals = states.iter().map(|s| p.eval(s).expect("state covers vars"));
    let Some(first) = vals.next() else { return };
    let (mut lo, mut hi) = (first.clone(), first);
    for v in vals {
        if v < lo {
            lo = v.clone();
        }
        if v > hi {
            hi = v;
        }
    }
    out.push(Atom::ge(p.add_const(-lo)));
    out.push(Atom::ge(p.neg().add_const(hi)));
}

/// Bounds from observed extrema.
pub fn infer_inequalities(states: &[Valuation], vars: &[String], shape: Shape) -> Vec<Atom> {
    let mut out = Vec::new();
    match shape {
        Shape::Interval => {
            for v in vars {
                bounds(states, &Poly::var(v), &mut out);
            }
        }
        Shape::Octagonal => {
            for i in 0..vars.len() {
                for j in i + 1..vars.len() {
                    let (a, b) = (Poly::var(&vars[i]), Poly::var(&vars[j]));
                    bounds(states, &a.add(&b), &mut out);
                    bounds(states, &a.sub(&b), &mut out);
                }
            }
        }
    }
    out
}

/// Linear equalities with a unit coefficient, solved for that variable.
pub fn solved_linear(eqs: &[Atom]) -> BTreeMap<String, Poly> {
    let mut sub: BTreeMap<String, Poly> = BTreeMap::new();
    for a in eqs.iter().filter(|a| a.rel == Rel::Eq) {
        let p = a.poly.subst(&sub);
        let Some((lin, _)) = p.linear_parts() else { continue };
        let Some((v, c)) = lin.iter().rev().find(|(_, c)| c.abs().is_one()) else { continue };
        // v = -(p - c*v) / c
        let rest = p.sub(&Poly::var(v).scale(c));
        let sol = if c.is_positive() { rest.neg() } else { rest };
        let v = v.clone();
        let mut one = BTreeMap::new();
        one.insert(v.clone(), sol.clone());
        for q in sub.values_mut() {
            *q = q.subst(&one);
        }
        sub.insert(v, sol);
    }
    sub
}

fn trending_down(a: &Atom, traces: &[&LoopTrace]) -> bool {
    traces.iter().any(|t| {
        let mut body = t.body();
        let (Some(first), Some(last)) = (body.next(), t.body().last()) else { return false };
        let (f, l) = (a.poly.eval(first), a.poly.eval(last));
        matches!((f, l), (Some(f), Some(l)) if l < f)
    })
}

/// Candidate invariant of the snapshots at `pos`, ranked and truncated.
pub fn dinfer(traces: &[LoopTrace], pos: Pos, vars: &[String], opts: &DinferOptions) -> Conjunction {
    let states: Vec<Valuation> = traces.iter().flat_map(|t| t.at(pos).cloned()).collect();
    if states.is_empty() {
        return Conjunction::top();
    }
    let mut eqs = Vec::new();
    if opts.equalities {
        // too few distinct states overfit; retry at lower degree, else skip
        for d in (1..=opts.max_degree).rev() {
            if let Ok(e) = infer_equalities(&states, vars, d) {
                if !e.low_confidence {
                    eqs = e.atoms;
                    break;
                }
            }
        }
    }
    // drop equalities implied by earlier linear ones
    let mut kept: Vec<Atom> = Vec::new();
    for a in eqs {
        let sub = solved_linear(&kept);
        if a.poly.subst(&sub).is_zero() {
            continue;
        }
        kept.push(a);
    }
    let sub = solved_linear(&kept);
    let mut ineqs = Vec::new();
    if opts.octagonal {
        ineqs.extend(infer_inequalities(&states, vars, Shape::Octagonal));
    }
    if opts.interval {
        ineqs.extend(infer_inequalities(&states, vars, Shape::Interval));
    }
    let truncated: Vec<&LoopTrace> = if opts.trend_filter { traces.iter().collect() } else { Vec::new() };
    let mut c = Conjunction::from_atoms(kept);
    for a in ineqs {
        if a.poly.subst(&sub).as_constant().is_some() {
            continue;
        }
        if opts.trend_filter && trending_down(&a, &truncated) {
            continue;
        }
        c.push(a);
    }
    c.truncate(opts.max_conjuncts);
    c
}
