//! Exact multivariate integer polynomials.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Variable name to value.
pub type Valuation = BTreeMap<String, BigInt>;

/// Product of variables with positive exponents, sorted by name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(String, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(name: &str) -> Self {
        Monomial(alloc::vec![(name.into(), 1)])
    }

    /// Builds a monomial from (variable, exponent) pairs; zero exponents are dropped.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut m: BTreeMap<String, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *m.entry(v.into()).or_insert(0) += e;
            }
        }
        Monomial(m.into_iter().collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(String, u32)] {
        &self.0
    }

    pub fn exponent(&self, v: &str) -> u32 {
        self.0.iter().find(|(n, _)| n == v).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_pairs(self.0.iter().chain(other.0.iter()).map(|(v, e)| (v.clone(), *e)))
    }

    /// The single variable of a degree-one monomial.
    pub fn as_var(&self) -> Option<&str> {
        match self.0.as_slice() {
            [(v, 1)] => Some(v),
            _ => None,
        }
    }

    pub fn eval(&self, val: &Valuation) -> Option<BigInt> {
        let mut acc = BigInt::one();
        for (v, e) in &self.0 {
            acc *= num_traits::pow(val.get(v)?.clone(), *e as usize);
        }
        Some(acc)
    }
}

impl Ord for Monomial {
    // graded, then lexicographic over variables in name order
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial with integer coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigInt>,
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.terms.iter().rev().cmp(other.terms.iter().rev())
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant<T: Into<BigInt>>(c: T) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c.into());
        p
    }

    pub fn var(name: &str) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(name), BigInt::one());
        p
    }

    pub fn monomial(m: Monomial, c: BigInt) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> BigInt {
        self.coeff(&Monomial::one())
    }

    /// Some(c) if the polynomial is the constant c.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    /// Leading (largest) term.
    pub fn leading(&self) -> Option<(&Monomial, &BigInt)> {
        self.terms.iter().next_back()
    }

    pub fn vars(&self) -> Vec<String> {
        let mut vs: Vec<String> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| v.clone()))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn add_const<T: Into<BigInt>>(&self, c: T) -> Poly {
        let mut r = self.clone();
        r.add_term(Monomial::one(), c.into());
        r
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(m1.mul(m2), c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::constant(1);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Simultaneous substitution; variables not in `map` are kept.
    pub fn subst(&self, map: &BTreeMap<String, Poly>) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (v, e) in &m.0 {
                let base = match map.get(v) {
                    Some(p) => p.clone(),
                    None => Poly::var(v),
                };
                t = t.mul(&base.pow(*e));
            }
            r = r.add(&t);
        }
        r
    }

    pub fn rename(&self, f: impl Fn(&str) -> String) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            let nm = Monomial::from_pairs(m.0.iter().map(|(v, e)| (f(v), *e)));
            r.add_term(nm, c.clone());
        }
        r
    }

    /// None when a variable is unbound.
    pub fn eval(&self, val: &Valuation) -> Option<BigInt> {
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval(val)?;
        }
        Some(acc)
    }

    /// gcd of all coefficients (0 for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// gcd of the non-constant coefficients.
    pub fn nonconst_content(&self) -> BigInt {
        self.terms
            .iter()
            .filter(|(m, _)| !m.is_one())
            .fold(BigInt::zero(), |g, (_, c)| g.gcd(c))
    }

    /// Exact division of every coefficient by `k`.
    pub fn div_exact(&self, k: &BigInt) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c / k)).collect() }
    }

    /// Coprime coefficients with a positive leading coefficient.
    pub fn primitive(&self) -> Poly {
        let g = self.content();
        if g.is_zero() {
            return Poly::zero();
        }
        let p = self.div_exact(&g);
        match p.leading() {
            Some((_, c)) if c.is_negative() => p.neg(),
            _ => p,
        }
    }

    /// Linear coefficients if the polynomial has degree ≤ 1.
    pub fn linear_parts(&self) -> Option<(BTreeMap<String, BigInt>, BigInt)> {
        if !self.is_linear() {
            return None;
        }
        let mut lin = BTreeMap::new();
        for (m, c) in &self.terms {
            if let Some(v) = m.as_var() {
                lin.insert(String::from(v), c.clone());
            }
        }
        Some((lin, self.constant_term()))
    }

    pub fn max_abs_coeff(&self) -> BigInt {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_default()
    }

    pub fn to_i64_coeffs(&self) -> Option<Vec<(Monomial, i64)>> {
        self.terms.iter().map(|(m, c)| Some((m.clone(), c.to_i64()?))).collect()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial compiled against a fixed variable order for fast evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    small: Option<Vec<(i128, Vec<(usize, u32)>)>>,
    big: Vec<(BigInt, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    /// Fails if the polynomial mentions a variable outside `order`.
    pub fn new(p: &Poly, order: &[String]) -> Option<CompiledPoly> {
        let mut big = Vec::new();
        for (m, c) in p.terms() {
            let mut idx = Vec::new();
            for (v, e) in m.factors() {
                idx.push((order.iter().position(|o| o == v)?, *e));
            }
            big.push((c.clone(), idx));
        }
        let small = big
            .iter()
            .map(|(c, idx)| Some((c.to_i128()?, idx.clone())))
            .collect::<Option<Vec<_>>>();
        Some(CompiledPoly { small, big })
    }

    /// Evaluates with i128 when everything fits, else falls back to BigInt.
    pub fn eval_i64(&self, x: &[i64]) -> BigInt {
        if let Some(small) = &self.small {
            if let Some(v) = eval_small(small, x) {
                return BigInt::from(v);
            }
        }
        let xs: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        self.eval_big(&xs)
    }

    pub fn eval_big(&self, x: &[BigInt]) -> BigInt {
        let mut acc = BigInt::zero();
        for (c, idx) in &self.big {
            let mut t = c.clone();
            for &(i, e) in idx {
                t *= num_traits::pow(x[i].clone(), e as usize);
            }
            acc += t;
        }
        acc
    }

    /// i128 evaluation; None if a coefficient or an intermediate overflows.
    pub fn eval_small_i128(&self, x: &[i64]) -> Option<i128> {
        eval_small(self.small.as_ref()?, x)
    }

    /// Sign of the value: -1, 0 or 1.
    pub fn sign_i64(&self, x: &[i64]) -> i32 {
        if let Some(small) = &self.small {
            if let Some(v) = eval_small(small, x) {
                return v.signum() as i32;
            }
        }
        let v = self.eval_i64(x);
        if v.is_negative() {
            -1
        } else if v.is_zero() {
            0
        } else {
            1
        }
    }
}

fn eval_small(terms: &[(i128, Vec<(usize, u32)>)], x: &[i64]) -> Option<i128> {
    let mut acc: i128 = 0;
    for (c, idx) in terms {
        let mut t = *c;
        for &(i, e) in idx {
            for _ in 0..e {
                t = t.checked_mul(x[i] as i128)?;
            }
        }
        acc = acc.checked_add(t)?;
    }
    Some(acc)
}

impl CompiledPoly {
    /// Evaluates over machine integers; None on overflow of i64.
    pub fn eval_i64_checked(&self, x: &[i64]) -> Option<i64> {
        let v = self.eval_small_i128(x)?;
        i64::try_from(v).ok()
    }
}

/// Integer representation used by the interpreter.
pub trait Value: Clone + fmt::Debug {
    fn from_big(b: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn eval(p: &CompiledPoly, x: &[Self]) -> Option<Self>;
    fn sign(p: &CompiledPoly, x: &[Self]) -> i32;
}

impl Value for i64 {
    fn from_big(b: &BigInt) -> Option<Self> {
        b.to_i64()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn eval(p: &CompiledPoly, x: &[Self]) -> Option<Self> {
        p.eval_i64_checked(x)
    }
    fn sign(p: &CompiledPoly, x: &[Self]) -> i32 {
        p.sign_i64(x)
    }
}

impl Value for BigInt {
    fn from_big(b: &BigInt) -> Option<Self> {
        Some(b.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn eval(p: &CompiledPoly, x: &[Self]) -> Option<Self> {
        Some(p.eval_big(x))
    }
    fn sign(p: &CompiledPoly, x: &[Self]) -> i32 {
        let v = p.eval_big(x);
        if v.is_negative() {
            -1
        } else if v.is_zero() {
            0
        } else {
            1
        }
    }
}
