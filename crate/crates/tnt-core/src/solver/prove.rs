//! Positive-combination implication prover and recurrent-set checking.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::dinfer::solved_linear;
use crate::formula::{Atom, Conjunction, Formula, Rel};
use crate::poly::{Monomial, Poly};
use crate::summary::{Path, TransitionRelation};

use super::lp::{self, Q};
use super::search::{check_sat, find_models, CheckResult, SearchOpts};

/// λ ≥ 0, μ free, c ≥ 0 with Σ λ·ge + Σ μ·eq + c ≡ target.
fn combination(ge: &[&Poly], eq: &[&Poly], target: &Poly) -> bool {
    let mut monos: BTreeSet<Monomial> = BTreeSet::new();
    for p in ge.iter().chain(eq).copied().chain(core::iter::once(target)) {
        monos.extend(p.terms().map(|(m, _)| m.clone()));
    }
    monos.insert(Monomial::one());
    let cols = ge.len() + 2 * eq.len() + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for m in &monos {
        let mut row = Vec::with_capacity(cols);
        row.extend(ge.iter().map(|p| lp::qi(&p.coeff(m))));
        for p in eq {
            let c = lp::qi(&p.coeff(m));
            row.push(c.clone());
            row.push(-c);
        }
        row.push(if m.is_one() { lp::q(1) } else { Q::zero() });
        a.push(row);
        b.push(lp::qi(&target.coeff(m)));
    }
    lp::feasible(&a, &b, cols).is_some()
}

struct Prepared {
    ge: Vec<Poly>,
    eq: Vec<Poly>,
    sub: alloc::collections::BTreeMap<String, Poly>,
    vacuous: bool,
}

fn prepare(hyps: &[Atom]) -> Prepared {
    let sub = solved_linear(hyps);
    let mut ge = Vec::new();
    let mut eq = Vec::new();
    let mut vacuous = false;
    for a in hyps {
        let a = a.subst(&sub);
        match a.trivial() {
            Some(true) => continue,
            Some(false) => vacuous = true,
            None => {}
        }
        match a.rel {
            Rel::Ge => ge.push(a.poly),
            Rel::Eq => eq.push(a.poly),
        }
    }
    Prepared { ge, eq, sub, vacuous }
}

impl Prepared {
    fn refs(&self) -> (Vec<&Poly>, Vec<&Poly>) {
        (self.ge.iter().collect(), self.eq.iter().collect())
    }

    fn contradictory(&self) -> bool {
        if self.vacuous {
            return true;
        }
        let (ge, eq) = self.refs();
        combination(&ge, &eq, &Poly::constant(-1))
    }
}

/// The hypotheses have no integer solution, by a linear certificate.
pub fn inconsistent(hyps: &[Atom]) -> bool {
    prepare(hyps).contradictory()
}

/// Symbolic proof that `hyps` imply `goal` over the integers.
pub fn entails(hyps: &[Atom], goal: &Atom) -> bool {
    let pr = prepare(hyps);
    if pr.contradictory() {
        return true;
    }
    let g = goal.subst(&pr.sub);
    if g.trivial() == Some(true) {
        return true;
    }
    let (ge, eq) = pr.refs();
    match g.rel {
        Rel::Ge => combination(&ge, &eq, &g.poly),
        Rel::Eq => combination(&ge, &eq, &g.poly) && combination(&ge, &eq, &g.poly.neg()),
    }
}

/// `hyp ∧ guard ⟹ concl[update]`.
pub fn check_implication(
    hyp: &Conjunction,
    path: &Path,
    concl: &Atom,
    vars: &[String],
    opts: &SearchOpts,
) -> CheckResult {
    let target = concl.subst(&path.update);
    let mut hs = hyp.clone();
    for a in path.guard.atoms() {
        hs.push(a.clone());
    }
    if entails(hs.atoms(), &target) {
        return CheckResult::Valid;
    }
    let f = Formula::and(alloc::vec![hs.to_formula(), Formula::not(Formula::Atom(target))]);
    match check_sat(&f, vars, opts) {
        CheckResult::Sat(m) => {
            assert_eq!(concl.holds(&path.apply(&m)), Some(false), "counterexample must violate");
            CheckResult::CexFound(m)
        }
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrentCheck {
    pub result: CheckResult,
    /// Offending path; None for a totality failure.
    pub path: Option<usize>,
    pub conjunct: Option<usize>,
}

/// Models of `r` probed for totality.
const TOTALITY_SAMPLES: usize = 32;

/// Closure of `r` under every path of `tloop`, plus a totality sweep.
pub fn check_recurrent(r: &Conjunction, tloop: &TransitionRelation, opts: &SearchOpts) -> RecurrentCheck {
    let mut unknown: Option<(usize, usize, String)> = None;
    for (pi, path) in tloop.paths.iter().enumerate() {
        let mut hyp = r.clone();
        for a in path.guard.atoms() {
            hyp.push(a.clone());
        }
        if inconsistent(hyp.atoms()) {
            continue;
        }
        for (ci, a) in r.atoms().iter().enumerate() {
            match check_implication(r, path, a, &tloop.vars, opts) {
                CheckResult::Valid => {}
                CheckResult::CexFound(m) => {
                    return RecurrentCheck { result: CheckResult::CexFound(m), path: Some(pi), conjunct: Some(ci) }
                }
                CheckResult::UnknownBounded(d) => {
                    unknown.get_or_insert((pi, ci, d));
                }
                other => unreachable!("implication result {other:?}"),
            }
        }
    }
    for m in find_models(&r.to_formula(), &tloop.vars, opts, TOTALITY_SAMPLES) {
        if !tloop.paths.iter().any(|p| p.enabled(&m)) {
            return RecurrentCheck { result: CheckResult::CexFound(m), path: None, conjunct: None };
        }
    }
    match unknown {
        None => RecurrentCheck { result: CheckResult::Valid, path: None, conjunct: None },
        Some((p, c, d)) => RecurrentCheck { result: CheckResult::UnknownBounded(d), path: Some(p), conjunct: Some(c) },
    }
}
