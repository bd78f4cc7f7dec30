//! Exact two-phase simplex over the rationals (Bland's rule).

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qi(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x /= &p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over columns with `allowed[j]`; false if unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        loop {
            let mut enter = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    if !row[j].is_zero() {
                        r -= &cost[self.basis[i]] * &row[j];
                    }
                }
                if r.is_negative() {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((l, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, j),
                None => return false,
            }
        }
    }
}

/// Minimizes `c·x` subject to `a·x = b`, `x ≥ 0`.
pub fn minimize(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> LpResult {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let neg = b[i].is_negative();
        let mut row: Vec<Q> = Vec::with_capacity(cols + 1);
        for j in 0..n {
            row.push(if neg { -a[i][j].clone() } else { a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { Q::one() } else { Q::zero() });
        }
        row.push(if neg { -b[i].clone() } else { b[i].clone() });
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..cols).collect(), cols };
    let mut cost1 = alloc::vec![Q::zero(); cols];
    for x in cost1.iter_mut().skip(n) {
        *x = Q::one();
    }
    t.optimize(&cost1, &alloc::vec![true; cols]);
    let infeas: Q = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i).clone()).sum();
    if infeas.is_positive() {
        return LpResult::Infeasible;
    }
    // drive zero-valued artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut cost2 = c.to_vec();
    cost2.resize(cols, Q::zero());
    let allowed: Vec<bool> = (0..cols).map(|j| j < n).collect();
    if !t.optimize(&cost2, &allowed) {
        return LpResult::Unbounded;
    }
    let mut x = alloc::vec![Q::zero(); n];
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.rhs(i).clone();
        }
    }
    let value = x.iter().zip(c).map(|(x, c)| x * c).sum();
    LpResult::Optimal { x, value }
}

/// Some `x ≥ 0` with `a·x = b`.
pub fn feasible(a: &[Vec<Q>], b: &[Q], n: usize) -> Option<Vec<Q>> {
    match minimize(a, b, &alloc::vec![Q::zero(); n]) {
        LpResult::Optimal { x, .. } => Some(x),
        _ => None,
    }
}
