//! Ranking-function inference from sampled pairs of the transitive closure
//! of observed loop transitions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::LoopTrace;
use crate::poly::{Poly, Valuation};
use crate::solver::lp::{self, LpResult, Q};

pub const DEFAULT_K: usize = 200;
/// Coefficient vectors tried before falling back to the LP.
const ENUM_BUDGET: usize = 200_000;
const ENUM_MAX_NORM: u64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RankingFunction {
    pub coeffs: BTreeMap<String, BigInt>,
    pub constant: BigInt,
}

impl RankingFunction {
    pub fn new(coeffs: BTreeMap<String, BigInt>, constant: BigInt) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        RankingFunction { coeffs, constant }
    }

    pub fn coeff(&self, v: &str) -> BigInt {
        self.coeffs.get(v).cloned().unwrap_or_default()
    }

    pub fn eval(&self, s: &Valuation) -> BigInt {
        let mut r = self.constant.clone();
        for (v, c) in &self.coeffs {
            r += c * s.get(v).cloned().unwrap_or_default();
        }
        r
    }

    /// `rf(s1) > rf(s2) ∧ rf(s1) ≥ 0`
    pub fn ranks(&self, s1: &Valuation, s2: &Valuation) -> bool {
        let a = self.eval(s1);
        !a.is_negative() && a > self.eval(s2)
    }

    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            p = p.add(&Poly::var(v).scale(c));
        }
        p
    }

    /// True when `self` is a positive multiple of `other`'s linear part.
    pub fn proportional_to(&self, dir: &BTreeMap<String, BigInt>) -> bool {
        let keys: BTreeSet<&String> = self.coeffs.keys().chain(dir.keys()).collect();
        let mut ratio: Option<(BigInt, BigInt)> = None;
        for k in keys {
            let (a, b) = (self.coeff(k), dir.get(k).cloned().unwrap_or_default());
            if a.is_zero() != b.is_zero() {
                return false;
            }
            if a.is_zero() {
                continue;
            }
            match &ratio {
                None => {
                    if a.is_positive() != b.is_positive() {
                        return false;
                    }
                    ratio = Some((a, b));
                }
                Some((ra, rb)) => {
                    if &a * rb != &b * ra {
                        return false;
                    }
                }
            }
        }
        ratio.is_some()
    }
}

impl fmt::Display for RankingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

/// Insertion-ordered, duplicate-free.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RfSet(Vec<RankingFunction>);

impl RfSet {
    pub fn new() -> Self {
        RfSet(Vec::new())
    }

    pub fn insert(&mut self, rf: RankingFunction) -> bool {
        if self.0.contains(&rf) {
            return false;
        }
        self.0.push(rf);
        true
    }

    pub fn iter(&self) -> core::slice::Iter<'_, RankingFunction> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, rf: &RankingFunction) -> bool {
        self.0.contains(rf)
    }

    /// Some member ranks the pair.
    pub fn covers(&self, s1: &Valuation, s2: &Valuation) -> bool {
        self.0.iter().any(|rf| rf.ranks(s1, s2))
    }
}

impl FromIterator<RankingFunction> for RfSet {
    fn from_iter<I: IntoIterator<Item = RankingFunction>>(it: I) -> Self {
        let mut s = RfSet::new();
        for rf in it {
            s.insert(rf);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TcPair {
    pub s1: Valuation,
    pub s2: Valuation,
}

/// Index pairs enumerated before switching to rejection sampling.
const ENUM_PAIRS: usize = 1 << 20;

/// Ordered pairs of body snapshots, shuffled, first `k` kept.
pub fn gen_tc_trans(t: &LoopTrace, k: usize, seed: u64) -> Vec<TcPair> {
    let body: Vec<&Valuation> = t.body().collect();
    let n = body.len();
    let total = n * n.saturating_sub(1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<(usize, usize)> = if total <= ENUM_PAIRS || total <= 2 * k {
        let mut all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        all.shuffle(&mut rng);
        all.truncate(k);
        all
    } else {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b && seen.insert((a.min(b), a.max(b))) {
                out.push((a.min(b), a.max(b)));
            }
        }
        out
    };
    idx.into_iter().map(|(i, j)| TcPair { s1: body[i].clone(), s2: body[j].clone() }).collect()
}

struct Rows {
    /// h1 - h2 per pair
    delta: Vec<Vec<BigInt>>,
    h1: Vec<Vec<BigInt>>,
}

impl Rows {
    fn new(pairs: &[TcPair], vars: &[String]) -> Rows {
        let get = |s: &Valuation, v: &String| s.get(v).cloned().unwrap_or_default();
        Rows {
            delta: pairs.iter().map(|p| vars.iter().map(|v| get(&p.s1, v) - get(&p.s2, v)).collect()).collect(),
            h1: pairs.iter().map(|p| vars.iter().map(|v| get(&p.s1, v)).collect()).collect(),
        }
    }

    /// Smallest admissible constant for `u`, or None if some pair does not decrease.
    fn constant_for(&self, u: &[i64]) -> Option<BigInt> {
        let dot = |h: &[BigInt]| -> BigInt { h.iter().zip(u).filter(|(_, &c)| c != 0).map(|(h, &c)| h * c).sum() };
        if self.delta.iter().any(|d| dot(d) < BigInt::one()) {
            return None;
        }
        let need = self.h1.iter().map(|h| -dot(h)).max().unwrap_or_default();
        Some(if need.is_positive() { need } else { BigInt::zero() })
    }
}

/// Calls `f` on every integer vector of length `n` with L1 norm exactly `d`.
fn for_each_norm(n: usize, d: u64, f: &mut dyn FnMut(&[i64]) -> bool) -> bool {
    fn rec(i: usize, left: u64, cur: &mut Vec<i64>, f: &mut dyn FnMut(&[i64]) -> bool) -> bool {
        if i + 1 == cur.len() {
            if left == 0 {
                cur[i] = 0;
                return f(cur);
            }
            for s in [1i64, -1] {
                cur[i] = s * left as i64;
                if !f(cur) {
                    return false;
                }
            }
            return true;
        }
        for a in 0..=left {
            let signs: &[i64] = if a == 0 { &[0] } else { &[1, -1] };
            for &s in signs {
                cur[i] = s * a as i64;
                if !rec(i + 1, left - a, cur, f) {
                    return false;
                }
            }
        }
        true
    }
    if n == 0 {
        return true;
    }
    rec(0, d, &mut alloc::vec![0; n], f)
}

/// Ordering among equal-norm candidates: smaller constant, then the
/// coefficient vector read from the last variable to the first.
fn tie_key(u: &[i64]) -> Vec<i64> {
    u.iter().rev().copied().collect()
}

/// Minimal-L1 integer solution of `rf(s1) ≥ rf(s2) + 1`, `rf(s1) ≥ 0` over all pairs.
pub fn solve_template(pairs: &[TcPair], vars: &[String]) -> Option<RankingFunction> {
    if pairs.is_empty() || vars.is_empty() {
        return None;
    }
    let rows = Rows::new(pairs, vars);
    let mut best: Option<(BigInt, BigInt, Vec<i64>)> = None;
    let mut tried = 0usize;
    let mut d = 1u64;
    loop {
        if let Some((total, _, _)) = &best {
            if BigInt::from(d) > *total {
                break;
            }
        }
        if d > ENUM_MAX_NORM || tried >= ENUM_BUDGET {
            break;
        }
        for_each_norm(vars.len(), d, &mut |u| {
            tried += 1;
            if let Some(u0) = rows.constant_for(u) {
                let total = &u0 + BigInt::from(d);
                let better = match &best {
                    None => true,
                    Some((bt, b0, bu)) => (&total, &u0, tie_key(u)) < (bt, b0, tie_key(bu)),
                };
                if better {
                    best = Some((total, u0, u.to_vec()));
                }
            }
            tried < ENUM_BUDGET
        });
        d += 1;
    }
    let rf = match best {
        Some((_, u0, u)) => RankingFunction::new(
            vars.iter().cloned().zip(u.into_iter().map(BigInt::from)).collect(),
            u0,
        ),
        None => solve_lp(&rows, vars)?,
    };
    debug_assert!(pairs.iter().all(|p| rf.ranks(&p.s1, &p.s2)));
    Some(rf)
}

/// Rational LP with L1 objective, scaled to coprime integers.
fn solve_lp(rows: &Rows, vars: &[String]) -> Option<RankingFunction> {
    // columns: p_1..p_n, q_1..q_n, u0p, u0q, then one slack per constraint
    let n = vars.len();
    let m = rows.delta.len() * 2;
    let cols = 2 * n + 2 + m;
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for (k, (d, h)) in rows.delta.iter().zip(&rows.h1).enumerate() {
        // u·d - s = 1
        let mut r = alloc::vec![Q::zero(); cols];
        for j in 0..n {
            r[j] = lp::qi(&d[j]);
            r[n + j] = -lp::qi(&d[j]);
        }
        r[2 * n + 2 + 2 * k] = lp::q(-1);
        a.push(r);
        b.push(lp::q(1));
        // u0 + u·h - s = 0
        let mut r = alloc::vec![Q::zero(); cols];
        for j in 0..n {
            r[j] = lp::qi(&h[j]);
            r[n + j] = -lp::qi(&h[j]);
        }
        r[2 * n] = lp::q(1);
        r[2 * n + 1] = lp::q(-1);
        r[2 * n + 3 + 2 * k] = lp::q(-1);
        a.push(r);
        b.push(lp::q(0));
    }
    let mut c = alloc::vec![Q::zero(); cols];
    for x in c.iter_mut().take(2 * n + 2) {
        *x = lp::q(1);
    }
    let LpResult::Optimal { x, .. } = lp::minimize(&a, &b, &c) else { return None };
    let mut vals: Vec<Q> = (0..n).map(|j| &x[j] - &x[n + j]).collect();
    vals.push(&x[2 * n] - &x[2 * n + 1]);
    let l = vals.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let mut ints: Vec<BigInt> = vals.iter().map(|v| (v * Q::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() {
        ints.iter_mut().for_each(|x| *x /= &g);
    }
    let u0 = ints.pop().unwrap_or_default();
    let rf = RankingFunction::new(vars.iter().cloned().zip(ints).collect(), u0);
    if rf.coeffs.is_empty() {
        return None;
    }
    Some(rf)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RfInference {
    pub rfs: RfSet,
    /// Every sampled pair, in sampling order.
    pub sample: Vec<TcPair>,
    pub discarded: Vec<TcPair>,
    pub low_confidence: bool,
}

/// Greedy cover of the sampled pairs by template solutions.
pub fn infer_rf(traces: &[LoopTrace], vars: &[String], k: usize, seed: u64) -> RfInference {
    let mut sample = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, t) in traces.iter().enumerate() {
        let s = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        for p in gen_tc_trans(t, k, s) {
            if seen.insert(p.clone()) {
                sample.push(p);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut pool = sample.clone();
    let mut rfs = RfSet::new();
    let mut discarded = Vec::new();
    while !pool.is_empty() {
        let i = rng.gen_range(0..pool.len());
        let p = pool.swap_remove(i);
        match solve_template(core::slice::from_ref(&p), vars) {
            Some(rf) => {
                pool.retain(|q| !rf.ranks(&q.s1, &q.s2));
                rfs.insert(rf);
            }
            None => discarded.push(p),
        }
    }
    let low_confidence = discarded.len() * 2 > sample.len();
    RfInference { rfs, sample, discarded, low_confidence }
}
