//! Bounded check of a ranking-function set against every ordered pair of
//! body states on an input grid.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::clock::Deadline;
use crate::exec::{project, InputVector, LoopTrace, Machine, RawRun, RawSnapshot};
use crate::lang::{InstrumentedCfa, Pos};
use crate::poly::Value;
use crate::rank::{RfSet, TcPair};

use super::search::shells;

/// Grid points explored at most.
pub const GRID_CAP: usize = 10_201;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RfCex {
    pub stem_input: InputVector,
    pub pair: TcPair,
    pub trace: LoopTrace,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RfValidation {
    /// No violation among the explored runs.
    Ok { runs: usize, traces: usize },
    Cex(RfCex),
    /// Deadline hit before the grid was covered.
    Interrupted { runs: usize },
}

/// Inputs in `[-g, g]^n`, nearest the origin first, at most `cap` of them.
pub fn grid_inputs(vars: &[alloc::string::String], g: i64, cap: usize) -> Vec<InputVector> {
    let n = vars.len();
    let mut out = Vec::new();
    let lo = alloc::vec![-g; n];
    let hi = alloc::vec![g; n];
    shells(&lo, &hi, &alloc::vec![0; n], &mut |x| {
        out.push(vars.iter().cloned().zip(x.iter().map(|&v| BigInt::from(v))).collect());
        out.len() < cap
    });
    out
}

/// rf values per body state, as i128 when possible.
fn values<V: Value>(rfs: &[(Vec<BigInt>, BigInt)], body: &[&RawSnapshot<V>]) -> Vec<Vec<BigInt>> {
    rfs.iter()
        .map(|(u, u0)| {
            body.iter()
                .map(|s| {
                    let mut acc = u0.clone();
                    for (c, v) in u.iter().zip(&s.vals) {
                        if !c.is_zero() {
                            acc += c * v.to_big();
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn values_small(rfs: &[(Vec<i128>, i128)], body: &[&RawSnapshot<i64>]) -> Option<Vec<Vec<i128>>> {
    rfs.iter()
        .map(|(u, u0)| {
            body.iter()
                .map(|s| {
                    let mut acc = *u0;
                    for (c, v) in u.iter().zip(&s.vals) {
                        acc = acc.checked_add(c.checked_mul(*v as i128)?)?;
                    }
                    Some(acc)
                })
                .collect()
        })
        .collect()
}

/// First uncovered pair `(i, j)`, `i < j`.
fn violation<T: Ord + Default>(vals: &[Vec<T>]) -> Option<(usize, usize)> {
    let len = vals.first().map_or(0, Vec::len);
    let zero = T::default();
    // a single member ranking the whole trace covers all pairs
    let whole = vals.iter().any(|v| {
        v.windows(2).all(|w| w[0] > w[1]) && v.iter().take(len.saturating_sub(1)).all(|x| *x >= zero)
    });
    if whole {
        return None;
    }
    for i in 0..len {
        for j in i + 1..len {
            if !vals.iter().any(|v| v[i] >= zero && v[i] > v[j]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn segments<V>(snaps: &[RawSnapshot<V>], loop_id: usize) -> Vec<Vec<&RawSnapshot<V>>> {
    let mut out: Vec<Vec<&RawSnapshot<V>>> = Vec::new();
    for s in snaps.iter().filter(|s| s.loop_id == loop_id) {
        if s.pos == Pos::Pre {
            out.push(Vec::new());
        }
        if s.pos == Pos::Body {
            if let Some(cur) = out.last_mut() {
                cur.push(s);
            }
        }
    }
    out
}

/// Checks `rfs` on every trace of `loop_id` from the inputs.
pub fn validate_rfs_on(
    ic: &InstrumentedCfa,
    loop_id: usize,
    rfs: &RfSet,
    inputs: &[InputVector],
    step_budget: u64,
    deadline: &Deadline<'_>,
) -> RfValidation {
    let m = Machine::new(ic);
    let vars = m.vars().to_vec();
    let big: Vec<(Vec<BigInt>, BigInt)> =
        rfs.iter().map(|rf| (vars.iter().map(|v| rf.coeff(v)).collect(), rf.constant.clone())).collect();
    let small: Option<Vec<(Vec<i128>, i128)>> = big
        .iter()
        .map(|(u, u0)| Some((u.iter().map(|c| c.to_i128()).collect::<Option<Vec<_>>>()?, u0.to_i128()?)))
        .collect();
    let mut traces = 0;
    for (idx, input) in inputs.iter().enumerate() {
        if deadline.expired() {
            return RfValidation::Interrupted { runs: idx };
        }
        let hit = match m.run_raw(input, step_budget) {
            RawRun::Small { snaps, .. } => segments(&snaps, loop_id).into_iter().enumerate().find_map(|(k, body)| {
                traces += 1;
                let v = match small.as_ref().and_then(|s| values_small(s, &body)) {
                    Some(v) => violation(&v),
                    None => violation(&values(&big, &body)),
                };
                v.map(|(i, j)| (k, i, j))
            }),
            RawRun::Big { snaps, .. } => segments(&snaps, loop_id).into_iter().enumerate().find_map(|(k, body)| {
                traces += 1;
                violation(&values(&big, &body)).map(|(i, j)| (k, i, j))
            }),
        };
        if let Some((k, i, j)) = hit {
            let run = m.run(idx, input, step_budget);
            let trace = project(core::slice::from_ref(&run), loop_id).swap_remove(k);
            let body: Vec<_> = trace.body().cloned().collect();
            let pair = TcPair { s1: body[i].clone(), s2: body[j].clone() };
            return RfValidation::Cex(RfCex { stem_input: input.clone(), pair, trace });
        }
    }
    RfValidation::Ok { runs: inputs.len(), traces }
}

/// Grid sweep over `[-grid, grid]` per input variable.
pub fn validate_rfs(
    ic: &InstrumentedCfa,
    loop_id: usize,
    rfs: &RfSet,
    grid: i64,
    step_budget: u64,
    deadline: &Deadline<'_>,
) -> RfValidation {
    let inputs = grid_inputs(&ic.cfa.inputs, grid, GRID_CAP);
    validate_rfs_on(ic, loop_id, rfs, &inputs, step_budget, deadline)
}
