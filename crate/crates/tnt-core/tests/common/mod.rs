//! Shared test support: random program generator, a reference interpreter
//! working on its own AST, and a brute-force rational nullspace.
#![allow(dead_code)]

pub mod props;

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub const SEED: u64 = 0x5eed_2024;

pub fn proptest_config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(SEED), failure_persistence: None, ..Config::default() }
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub type State = BTreeMap<String, BigInt>;

pub fn state(pairs: &[(&str, i64)]) -> State {
    pairs.iter().map(|(k, v)| (k.to_string(), BigInt::from(*v))).collect()
}

// ---------------------------------------------------------------------------
// test-side AST

#[derive(Clone, Debug)]
pub enum GExpr {
    Int(i64),
    Var(usize),
    Neg(Box<GExpr>),
    Add(Box<GExpr>, Box<GExpr>),
    Sub(Box<GExpr>, Box<GExpr>),
    Mul(Box<GExpr>, Box<GExpr>),
}

#[derive(Clone, Copy, Debug)]
pub enum GOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug)]
pub enum GCond {
    True,
    False,
    Cmp(GExpr, GOp, GExpr),
    And(Box<GCond>, Box<GCond>),
    Or(Box<GCond>, Box<GCond>),
    Not(Box<GCond>),
}

#[derive(Clone, Debug)]
pub enum GStmt {
    Assign(usize, GExpr),
    If(GCond, Vec<GStmt>, Option<Vec<GStmt>>),
    While(GCond, Vec<GStmt>),
    Skip,
}

#[derive(Clone, Debug)]
pub struct GProg {
    pub nparams: usize,
    /// `None` is a `*` initializer.
    pub decls: Vec<Option<GExpr>>,
    pub body: Vec<GStmt>,
}

pub fn var_name(i: usize) -> String {
    format!("v{i}")
}

impl GExpr {
    pub fn src(&self) -> String {
        match self {
            GExpr::Int(n) if *n < 0 => format!("(-{})", -n),
            GExpr::Int(n) => n.to_string(),
            GExpr::Var(i) => var_name(*i),
            GExpr::Neg(e) => format!("(-{})", e.src()),
            GExpr::Add(a, b) => format!("({} + {})", a.src(), b.src()),
            GExpr::Sub(a, b) => format!("({} - {})", a.src(), b.src()),
            GExpr::Mul(a, b) => format!("({} * {})", a.src(), b.src()),
        }
    }

    pub fn eval(&self, s: &[BigInt]) -> BigInt {
        match self {
            GExpr::Int(n) => BigInt::from(*n),
            GExpr::Var(i) => s[*i].clone(),
            GExpr::Neg(e) => -e.eval(s),
            GExpr::Add(a, b) => a.eval(s) + b.eval(s),
            GExpr::Sub(a, b) => a.eval(s) - b.eval(s),
            GExpr::Mul(a, b) => a.eval(s) * b.eval(s),
        }
    }
}

impl GCond {
    pub fn src(&self) -> String {
        match self {
            GCond::True => "true".into(),
            GCond::False => "false".into(),
            GCond::Cmp(a, op, b) => {
                let o = match op {
                    GOp::Eq => "==",
                    GOp::Ne => "!=",
                    GOp::Lt => "<",
                    GOp::Le => "<=",
                    GOp::Gt => ">",
                    GOp::Ge => ">=",
                };
                format!("{} {o} {}", a.src(), b.src())
            }
            GCond::And(a, b) => format!("({} && {})", a.src(), b.src()),
            GCond::Or(a, b) => format!("({} || {})", a.src(), b.src()),
            GCond::Not(a) => format!("!({})", a.src()),
        }
    }

    pub fn eval(&self, s: &[BigInt]) -> bool {
        match self {
            GCond::True => true,
            GCond::False => false,
            GCond::Cmp(a, op, b) => {
                let (x, y) = (a.eval(s), b.eval(s));
                match op {
                    GOp::Eq => x == y,
                    GOp::Ne => x != y,
                    GOp::Lt => x < y,
                    GOp::Le => x <= y,
                    GOp::Gt => x > y,
                    GOp::Ge => x >= y,
                }
            }
            GCond::And(a, b) => a.eval(s) && b.eval(s),
            GCond::Or(a, b) => a.eval(s) || b.eval(s),
            GCond::Not(a) => !a.eval(s),
        }
    }
}

fn block_src(ss: &[GStmt], ind: usize, out: &mut String) {
    let pad = "  ".repeat(ind);
    for s in ss {
        match s {
            GStmt::Assign(v, e) => out.push_str(&format!("{pad}{} = {};\n", var_name(*v), e.src())),
            GStmt::Skip => out.push_str(&format!("{pad}skip;\n")),
            GStmt::If(c, t, e) => {
                out.push_str(&format!("{pad}if ({}) {{\n", c.src()));
                block_src(t, ind + 1, out);
                match e {
                    Some(e) => {
                        out.push_str(&format!("{pad}}} else {{\n"));
                        block_src(e, ind + 1, out);
                        out.push_str(&format!("{pad}}}\n"));
                    }
                    None => out.push_str(&format!("{pad}}}\n")),
                }
            }
            GStmt::While(c, b) => {
                out.push_str(&format!("{pad}while ({}) {{\n", c.src()));
                block_src(b, ind + 1, out);
                out.push_str(&format!("{pad}}}\n"));
            }
        }
    }
}

impl GProg {
    pub fn nvars(&self) -> usize {
        self.nparams + self.decls.len()
    }

    pub fn vars(&self) -> Vec<String> {
        (0..self.nvars()).map(var_name).collect()
    }

    pub fn inputs(&self) -> Vec<String> {
        let mut v: Vec<String> = (0..self.nparams).map(var_name).collect();
        for (i, d) in self.decls.iter().enumerate() {
            if d.is_none() {
                v.push(var_name(self.nparams + i));
            }
        }
        v
    }

    pub fn src(&self) -> String {
        let params: Vec<String> = (0..self.nparams).map(var_name).collect();
        let mut out = format!("fun p({}) {{\n", params.join(", "));
        for (i, d) in self.decls.iter().enumerate() {
            let init = d.as_ref().map(|e| e.src()).unwrap_or_else(|| "*".into());
            out.push_str(&format!("  int {} = {init};\n", var_name(self.nparams + i)));
        }
        block_src(&self.body, 1, &mut out);
        out.push_str("}\n");
        out
    }

    pub fn num_loops(&self) -> usize {
        fn count(ss: &[GStmt]) -> usize {
            ss.iter()
                .map(|s| match s {
                    GStmt::While(_, b) => 1 + count(b),
                    GStmt::If(_, t, e) => count(t) + e.as_deref().map(count).unwrap_or(0),
                    _ => 0,
                })
                .sum()
        }
        count(&self.body)
    }
}

// ---------------------------------------------------------------------------
// generator

fn arb_linear(nvars: usize) -> impl Strategy<Value = GExpr> {
    let leaf = prop_oneof![(-3i64..=3).prop_map(GExpr::Int), (0..nvars).prop_map(GExpr::Var)];
    leaf.prop_recursive(2, 6, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GExpr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GExpr::Sub(Box::new(a), Box::new(b))),
            ((-2i64..=2), inner.clone()).prop_map(|(k, b)| GExpr::Mul(Box::new(GExpr::Int(k)), Box::new(b))),
            inner.prop_map(|a| GExpr::Neg(Box::new(a))),
        ]
    })
}

/// Polynomial expressions of degree at most two, for conditions.
fn arb_quadratic(nvars: usize) -> impl Strategy<Value = GExpr> {
    prop_oneof![
        3 => arb_linear(nvars),
        1 => ((0..nvars), (0..nvars), arb_linear(nvars)).prop_map(|(a, b, c)| {
            GExpr::Add(Box::new(GExpr::Mul(Box::new(GExpr::Var(a)), Box::new(GExpr::Var(b)))), Box::new(c))
        }),
    ]
}

fn arb_op() -> impl Strategy<Value = GOp> {
    prop_oneof![Just(GOp::Eq), Just(GOp::Ne), Just(GOp::Lt), Just(GOp::Le), Just(GOp::Gt), Just(GOp::Ge)]
}

pub fn arb_cond(nvars: usize) -> impl Strategy<Value = GCond> {
    let cmp = (arb_quadratic(nvars), arb_op(), arb_linear(nvars)).prop_map(|(a, o, b)| GCond::Cmp(a, o, b));
    let leaf = prop_oneof![8 => cmp, 1 => Just(GCond::True), 1 => Just(GCond::False)];
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GCond::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GCond::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|a| GCond::Not(Box::new(a))),
        ]
    })
}

fn arb_block(nvars: usize, depth: u32, loops: bool) -> BoxedStrategy<Vec<GStmt>> {
    let assign = ((0..nvars), arb_linear(nvars)).prop_map(|(v, e)| GStmt::Assign(v, e));
    if depth == 0 {
        return prop::collection::vec(prop_oneof![6 => assign, 1 => Just(GStmt::Skip)], 1..4).boxed();
    }
    let inner = arb_block(nvars, depth - 1, loops);
    let iff = (arb_cond(nvars), inner.clone(), prop::option::of(inner.clone()))
        .prop_map(|(c, t, e)| GStmt::If(c, t, e));
    let stmt = if loops {
        let wh = (arb_cond(nvars), inner).prop_map(|(c, b)| GStmt::While(c, b));
        prop_oneof![5 => assign, 1 => Just(GStmt::Skip), 2 => iff, 2 => wh].boxed()
    } else {
        prop_oneof![5 => assign, 1 => Just(GStmt::Skip), 2 => iff].boxed()
    };
    prop::collection::vec(stmt, 1..4).boxed()
}

/// Programs over at most four variables, loops nested at most twice.
pub fn arb_program() -> impl Strategy<Value = GProg> {
    ((1usize..=3), (0usize..=2)).prop_flat_map(|(np, nd)| {
        let n = np + nd;
        // an initializer sees the params and earlier decls only
        let decls: Vec<_> = (0..nd)
            .map(|j| prop_oneof![1 => Just(None), 3 => arb_linear(np + j).prop_map(Some)].boxed())
            .collect();
        (Just(np), decls, arb_block(n, 2, true))
            .prop_map(|(nparams, decls, body)| GProg { nparams, decls, body })
    })
}

/// A single loop whose body has no loops.
pub fn arb_single_loop() -> impl Strategy<Value = GProg> {
    (1usize..=3).prop_flat_map(|np| {
        (arb_cond(np), arb_block(np, 1, false)).prop_map(move |(c, b)| GProg {
            nparams: np,
            decls: Vec::new(),
            body: vec![GStmt::While(c, b)],
        })
    })
}

pub fn arb_input(n: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-20i64..=20, n)
}

// ---------------------------------------------------------------------------
// reference interpreter

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OSnap {
    pub loop_id: usize,
    pub pos: &'static str,
    pub seq: u64,
    pub vals: State,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OEnd {
    Exit,
    Abort,
    /// Snapshot cap reached in unbounded mode.
    Cut,
}

struct Interp {
    bnd: Option<u64>,
    cap: usize,
    snaps: Vec<OSnap>,
}

enum Flow {
    Go,
    Stop(OEnd),
}

impl Interp {
    fn snap(&mut self, loop_id: usize, pos: &'static str, seq: u64, s: &[BigInt]) -> Flow {
        let vals = s.iter().enumerate().map(|(i, v)| (var_name(i), v.clone())).collect();
        self.snaps.push(OSnap { loop_id, pos, seq, vals });
        if self.snaps.len() >= self.cap {
            Flow::Stop(OEnd::Cut)
        } else {
            Flow::Go
        }
    }

    /// `base` is the preorder id of the first loop in `ss`.
    fn block(&mut self, ss: &[GStmt], base: usize, s: &mut Vec<BigInt>) -> Flow {
        let mut id = base;
        for st in ss {
            match st {
                GStmt::Assign(v, e) => s[*v] = e.eval(s),
                GStmt::Skip => {}
                GStmt::If(c, t, e) => {
                    let tn = count_loops(t);
                    let branch = if c.eval(s) { Some((t.as_slice(), id)) } else { e.as_deref().map(|e| (e, id + tn)) };
                    if let Some((b, at)) = branch {
                        if let Flow::Stop(x) = self.block(b, at, s) {
                            return Flow::Stop(x);
                        }
                    }
                    id += tn + e.as_deref().map(count_loops).unwrap_or(0);
                }
                GStmt::While(c, b) => {
                    let me = id;
                    let mut seq = 0;
                    let mut ctr = 0u64;
                    if let Flow::Stop(x) = self.snap(me, "pre", seq, s) {
                        return Flow::Stop(x);
                    }
                    loop {
                        seq += 1;
                        if !c.eval(s) {
                            if let Flow::Stop(x) = self.snap(me, "post", seq, s) {
                                return Flow::Stop(x);
                            }
                            break;
                        }
                        if self.bnd == Some(ctr) {
                            return Flow::Stop(OEnd::Abort);
                        }
                        ctr += 1;
                        if let Flow::Stop(x) = self.snap(me, "body", seq, s) {
                            return Flow::Stop(x);
                        }
                        if let Flow::Stop(x) = self.block(b, me + 1, s) {
                            return Flow::Stop(x);
                        }
                    }
                    id += 1 + count_loops(b);
                }
            }
        }
        Flow::Go
    }
}

fn count_loops(ss: &[GStmt]) -> usize {
    ss.iter()
        .map(|s| match s {
            GStmt::While(_, b) => 1 + count_loops(b),
            GStmt::If(_, t, e) => count_loops(t) + e.as_deref().map(count_loops).unwrap_or(0),
            _ => 0,
        })
        .sum()
}

/// Runs `p` on `input` (values for `p.inputs()` in order). With `bnd`, each
/// loop entry allows at most `bnd` iterations and a further one aborts.
pub fn oracle_run(p: &GProg, input: &[i64], bnd: Option<u64>, cap: usize) -> (Vec<OSnap>, OEnd) {
    let mut s = vec![BigInt::zero(); p.nvars()];
    let mut k = 0;
    for i in 0..p.nparams {
        s[i] = BigInt::from(input[k]);
        k += 1;
    }
    for (j, d) in p.decls.iter().enumerate() {
        let i = p.nparams + j;
        match d {
            None => {
                s[i] = BigInt::from(input[k]);
                k += 1;
            }
            Some(e) => s[i] = e.eval(&s),
        }
    }
    let mut it = Interp { bnd, cap, snaps: Vec::new() };
    let end = match it.block(&p.body, 0, &mut s) {
        Flow::Go => OEnd::Exit,
        Flow::Stop(e) => e,
    };
    (it.snaps, end)
}

pub fn input_vector(p: &GProg, input: &[i64]) -> State {
    p.inputs().into_iter().zip(input.iter().map(|v| BigInt::from(*v))).collect()
}

// ---------------------------------------------------------------------------
// brute-force nullspace over the rationals

/// Exponent vectors of all monomials of total degree <= d over `n` variables.
pub fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out
}

pub fn eval_monomial(e: &[u32], s: &[BigInt]) -> BigInt {
    e.iter().zip(s).fold(BigInt::one(), |acc, (&k, v)| acc * v.pow(k))
}

/// Basis of `{u : M u = 0}` by textbook row reduction.
pub fn nullspace(rows: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = BigRational::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = m[r][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    for f in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); cols];
        v[f] = BigRational::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[ri][f].clone();
        }
        basis.push(v);
    }
    basis
}

/// Rank of a set of rational vectors.
pub fn rank(vs: &[Vec<BigRational>], cols: usize) -> usize {
    let n = nullspace(vs, cols).len();
    cols - n
}

/// Integer vector scaled to coprime entries with a positive leading entry.
pub fn primitive(v: &[BigRational]) -> Vec<BigInt> {
    use num_integer::Integer;
    let l = v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    let mut out: Vec<BigInt> = ints.iter().map(|x| if g.is_zero() { x.clone() } else { x / &g }).collect();
    if out.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        out.iter_mut().for_each(|x| *x = -x.clone());
    }
    out
}
