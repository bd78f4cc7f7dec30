//! Bounded model search over integer boxes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dinfer::solved_linear;
use crate::formula::{Atom, Conjunction, Formula, Rel};
use crate::poly::{CompiledPoly, Poly, Valuation};

/// DNF clauses explored before giving up on clause-wise search.
pub const DNF_CAP: usize = 64;
const COORD_LIMIT: i64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOpts {
    /// Half-width of the default box.
    pub bound: i64,
    /// Candidate evaluations.
    pub budget: u64,
    pub seed: u64,
}

impl SearchOpts {
    /// Counterexample search.
    pub const CEX: SearchOpts = SearchOpts { bound: 50, budget: 200_000, seed: 0 };
    /// Reachability witness search.
    pub const REACH: SearchOpts = SearchOpts { bound: 300, budget: 200_000, seed: 0 };

    pub fn with_seed(self, seed: u64) -> Self {
        SearchOpts { seed, ..self }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Valid,
    Sat(Valuation),
    Unsat,
    CexFound(Valuation),
    UnknownBounded(String),
}

impl CheckResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, CheckResult::Valid)
    }

    pub fn model(&self) -> Option<&Valuation> {
        match self {
            CheckResult::Sat(m) | CheckResult::CexFound(m) => Some(m),
            _ => None,
        }
    }
}

fn describe(opts: &SearchOpts, n: usize) -> String {
    alloc::format!("no model in [-{b},{b}]^{n} within {} evaluations", opts.budget, b = opts.bound)
}

/// One conjunctive clause prepared for search.
struct Clause {
    /// Eliminated variables, as polynomials over the rest.
    solved: BTreeMap<String, Poly>,
    vars: Vec<String>,
    atoms: Vec<(CompiledPoly, Rel)>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

fn clamp(x: &BigInt) -> i64 {
    x.to_i64().unwrap_or(if x.is_negative() { -COORD_LIMIT } else { COORD_LIMIT }).clamp(-COORD_LIMIT, COORD_LIMIT)
}

impl Clause {
    fn new(c: &Conjunction, all_vars: &[String], bound: i64) -> Option<Clause> {
        let solved = solved_linear(c.atoms());
        let atoms: Vec<Atom> = c.atoms().iter().map(|a| a.subst(&solved)).collect();
        if atoms.iter().any(|a| a.trivial() == Some(false)) {
            return None;
        }
        let atoms: Vec<Atom> = atoms.into_iter().filter(|a| a.trivial().is_none()).collect();
        let mut vars: Vec<String> = Vec::new();
        for a in &atoms {
            for v in a.vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars.sort_by_key(|v| all_vars.iter().position(|w| w == v).unwrap_or(usize::MAX));
        let mut lo_d: Vec<Option<i64>> = alloc::vec![None; vars.len()];
        let mut hi_d: Vec<Option<i64>> = alloc::vec![None; vars.len()];
        for a in &atoms {
            let Some((lin, b)) = a.poly.linear_parts() else { continue };
            if lin.len() != 1 {
                continue;
            }
            let (v, k) = lin.iter().next().unwrap();
            let i = vars.iter().position(|w| w == v).unwrap();
            // k*v + b REL 0
            let (lo_b, hi_b) = match a.rel {
                Rel::Eq => {
                    if !(-&b).is_multiple_of(k) {
                        return None;
                    }
                    let x = clamp(&(-&b / k));
                    (Some(x), Some(x))
                }
                Rel::Ge if k.is_positive() => (Some(clamp(&(-&b).div_ceil(k))), None),
                Rel::Ge => (None, Some(clamp(&b.div_floor(&-k)))),
            };
            if let Some(l) = lo_b {
                lo_d[i] = Some(lo_d[i].map_or(l, |x| x.max(l)));
            }
            if let Some(h) = hi_b {
                hi_d[i] = Some(hi_d[i].map_or(h, |x| x.min(h)));
            }
        }
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for i in 0..vars.len() {
            let (mut l, mut h) = (-bound, bound);
            if let Some(d) = lo_d[i] {
                if d > h {
                    l = d;
                    h = d.saturating_add(2 * bound);
                } else {
                    l = l.max(d);
                }
            }
            if let Some(d) = hi_d[i] {
                if d < l {
                    h = d;
                    l = d.saturating_sub(2 * bound);
                } else {
                    h = h.min(d);
                }
            }
            if let (Some(a), Some(b)) = (lo_d[i], hi_d[i]) {
                if a > b {
                    return None;
                }
                l = l.max(a);
                h = h.min(b);
            }
            if l > h {
                return None;
            }
            lo.push(l);
            hi.push(h);
        }
        let atoms = atoms
            .iter()
            .map(|a| (CompiledPoly::new(&a.poly, &vars).expect("vars collected"), a.rel))
            .collect();
        Some(Clause { solved, vars, atoms, lo, hi })
    }

    fn holds(&self, x: &[i64]) -> bool {
        self.atoms.iter().all(|(p, rel)| {
            let s = p.sign_i64(x);
            match rel {
                Rel::Eq => s == 0,
                Rel::Ge => s >= 0,
            }
        })
    }

    /// Distance from satisfaction, saturating.
    fn violation(&self, x: &[i64]) -> u128 {
        let mut acc: u128 = 0;
        for (p, rel) in &self.atoms {
            let v = match p.eval_small_i128(x) {
                Some(v) => v,
                None => return u128::MAX,
            };
            let d = match rel {
                Rel::Eq => v.unsigned_abs(),
                Rel::Ge if v < 0 => v.unsigned_abs(),
                Rel::Ge => 0,
            };
            acc = acc.saturating_add(d);
        }
        acc
    }

    fn model(&self, x: &[i64], all_vars: &[String]) -> Valuation {
        let mut m: Valuation = all_vars.iter().map(|v| (v.clone(), BigInt::zero())).collect();
        for (v, val) in self.vars.iter().zip(x) {
            m.insert(v.clone(), BigInt::from(*val));
        }
        for (v, p) in &self.solved {
            let val = p.eval(&m).expect("solutions range over clause vars");
            m.insert(v.clone(), val);
        }
        m
    }

    fn center(&self) -> Vec<i64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| 0i64.clamp(l, h)).collect()
    }
}

/// Visits points of the box by increasing Chebyshev distance from `c`.
pub(crate) fn shells(lo: &[i64], hi: &[i64], c: &[i64], f: &mut dyn FnMut(&[i64]) -> bool) {
    let n = lo.len();
    if n == 0 {
        f(&[]);
        return;
    }
    let rmax = (0..n).map(|i| (hi[i] - c[i]).max(c[i] - lo[i])).max().unwrap_or(0);
    let mut cur = alloc::vec![0i64; n];
    // `need`: some later coordinate must sit at distance exactly r
    fn rec(
        i: usize,
        r: i64,
        need: bool,
        lo: &[i64],
        hi: &[i64],
        c: &[i64],
        cur: &mut Vec<i64>,
        f: &mut dyn FnMut(&[i64]) -> bool,
    ) -> bool {
        let n = lo.len();
        let a = lo[i].max(c[i] - r);
        let b = hi[i].min(c[i] + r);
        if i + 1 == n {
            if need {
                for x in [c[i] - r, c[i] + r] {
                    if x >= a && x <= b && (r > 0 || x == c[i] - r) {
                        cur[i] = x;
                        if !f(cur) {
                            return false;
                        }
                    }
                    if r == 0 {
                        break;
                    }
                }
            } else {
                for x in a..=b {
                    cur[i] = x;
                    if !f(cur) {
                        return false;
                    }
                }
            }
            return true;
        }
        for x in a..=b {
            cur[i] = x;
            let at_r = (x - c[i]).abs() == r;
            if !rec(i + 1, r, need && !at_r, lo, hi, c, cur, f) {
                return false;
            }
        }
        true
    }
    for r in 0..=rmax {
        if !rec(0, r, true, lo, hi, c, &mut cur, f) {
            return;
        }
    }
}

fn search_clause(
    cl: &Clause,
    budget: u64,
    rng: &mut ChaCha8Rng,
    want: usize,
    out: &mut Vec<Vec<i64>>,
) {
    let n = cl.vars.len();
    let mut used = 0u64;
    if n <= 3 {
        shells(&cl.lo, &cl.hi, &cl.center(), &mut |x| {
            used += 1;
            if cl.holds(x) {
                out.push(x.to_vec());
            }
            out.len() < want && used < budget
        });
        return;
    }
    let steps = [1i64, 2, 5, 10, 50];
    while used < budget && out.len() < want {
        let mut x: Vec<i64> = (0..n).map(|i| rng.gen_range(cl.lo[i]..=cl.hi[i])).collect();
        let mut score = cl.violation(&x);
        used += 1;
        for _ in 0..200 {
            if score == 0 || used >= budget {
                break;
            }
            let mut best: Option<(u128, usize, i64)> = None;
            for i in 0..n {
                for &s in &steps {
                    for d in [s, -s] {
                        let y = x[i] + d;
                        if y < cl.lo[i] || y > cl.hi[i] {
                            continue;
                        }
                        x[i] = y;
                        let v = cl.violation(&x);
                        used += 1;
                        x[i] -= d;
                        if v < best.map_or(score, |b| b.0) {
                            best = Some((v, i, d));
                        }
                    }
                }
            }
            match best {
                Some((v, i, d)) => {
                    x[i] += d;
                    score = v;
                }
                None => break,
            }
        }
        if score == 0 && cl.holds(&x) && !out.contains(&x) {
            out.push(x);
        }
    }
}

/// Up to `want` distinct models of `f`, each re-checked by direct evaluation.
pub fn find_models(f: &Formula, vars: &[String], opts: &SearchOpts, want: usize) -> Vec<Valuation> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut models: Vec<Valuation> = Vec::new();
    let Some(clauses) = f.dnf(DNF_CAP) else {
        return models;
    };
    let prepared: Vec<Clause> = clauses.iter().filter_map(|c| Clause::new(c, vars, opts.bound)).collect();
    let share = opts.budget / (prepared.len().max(1) as u64);
    for cl in &prepared {
        let mut pts = Vec::new();
        search_clause(cl, share, &mut rng, want - models.len(), &mut pts);
        for x in pts {
            let m = cl.model(&x, vars);
            assert_eq!(f.eval(&m), Some(true), "search model must satisfy the formula");
            if !models.contains(&m) {
                models.push(m);
            }
        }
        if models.len() >= want {
            break;
        }
    }
    models
}

/// `Sat(model)` or `UnknownBounded`.
pub fn check_sat(f: &Formula, vars: &[String], opts: &SearchOpts) -> CheckResult {
    match find_models(f, vars, opts, 1).pop() {
        Some(m) => CheckResult::Sat(m),
        None => CheckResult::UnknownBounded(describe(opts, vars.len())),
    }
}
