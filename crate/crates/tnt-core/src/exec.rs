//! Interpreter for instrumented automata, input generation and trace handling.

use alloc::sync::Arc;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clock::Deadline;
use crate::formula::CompiledFormula;
use crate::lang::cfa::{Cfa, InstrumentedCfa, Loc, Pos, Stmt};
use crate::poly::{CompiledPoly, Valuation, Value};

/// Values for the program's input variables.
pub type InputVector = Valuation;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
/// Snapshots recorded per run; reaching it ends the run like an exhausted step budget.
pub const RUN_SNAPSHOT_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("malformed loop trace: {0}")]
    MalformedTrace(String),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("trace dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub loop_id: usize,
    pub pos: Pos,
    pub seq: u64,
    /// Shared so projected traces do not copy the valuation.
    pub vals: Arc<Valuation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunEnd {
    Exit,
    Abort,
    /// Step budget exhausted; `in_loop` tells whether control was inside a loop.
    Budget { in_loop: bool },
}

/// One run of the instrumented program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub input_index: usize,
    pub input: InputVector,
    pub snapshots: Vec<Snapshot>,
    pub end: RunEnd,
    pub steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceClass {
    Base,
    Term,
    MayLoop,
}

impl TraceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceClass::Base => "base",
            TraceClass::Term => "term",
            TraceClass::MayLoop => "mayloop",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopTrace {
    pub loop_id: usize,
    pub input_index: usize,
    pub input: InputVector,
    pub snapshots: Vec<Snapshot>,
}

impl LoopTrace {
    pub fn class(&self) -> Result<TraceClass, ExecError> {
        let s = &self.snapshots;
        let bad = |m: &str| Err(ExecError::MalformedTrace(format!("loop {}: {m}", self.loop_id)));
        if s.first().map(|x| x.pos) != Some(Pos::Pre) {
            return bad("does not start with pre");
        }
        let body: Vec<&Snapshot> = s.iter().filter(|x| x.pos == Pos::Body).collect();
        for w in body.windows(2) {
            if w[1].seq != w[0].seq + 1 {
                return bad("body sequence numbers not consecutive");
            }
        }
        let n = s.len();
        let last_post = s[n - 1].pos == Pos::Post;
        if s[1..n - usize::from(last_post)].iter().any(|x| x.pos != Pos::Body) {
            return bad("unexpected snapshot position");
        }
        match (body.len(), last_post) {
            (0, true) => Ok(TraceClass::Base),
            (_, true) => Ok(TraceClass::Term),
            (0, false) => bad("pre without body or post"),
            (_, false) => Ok(TraceClass::MayLoop),
        }
    }

    pub fn body(&self) -> impl Iterator<Item = &Valuation> {
        self.snapshots.iter().filter(|s| s.pos == Pos::Body).map(|s| &*s.vals)
    }

    pub fn at(&self, pos: Pos) -> impl Iterator<Item = &Valuation> {
        self.snapshots.iter().filter(move |s| s.pos == pos).map(|s| &*s.vals)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TracePartition {
    pub base: Vec<LoopTrace>,
    pub term: Vec<LoopTrace>,
    pub mayloop: Vec<LoopTrace>,
}

impl TracePartition {
    pub fn len(&self) -> usize {
        self.base.len() + self.term.len() + self.mayloop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// ---------------------------------------------------------------------------
// interpreter

#[derive(Clone, Debug)]
enum CStmt {
    Assign(usize, CompiledPoly),
    Havoc(usize),
    Assume(CompiledFormula),
    Skip,
    CtrReset(usize),
    CtrCheck(usize, bool),
    CtrIncr(usize),
    Snapshot(usize, Pos),
}

/// Pre-compiled instrumented automaton, reusable across many runs.
#[derive(Clone, Debug)]
pub struct Machine {
    vars: Vec<String>,
    inputs: Vec<usize>,
    out: Vec<Vec<(CStmt, Loc)>>,
    in_loop: Vec<bool>,
    entry: Loc,
    exit: Loc,
    abort: Loc,
    bnd: u64,
    nloops: usize,
}

/// Snapshot with values in `Machine::vars` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawSnapshot<V> {
    pub loop_id: usize,
    pub pos: Pos,
    pub seq: u64,
    pub vals: Vec<V>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawRun {
    Small { snaps: Vec<RawSnapshot<i64>>, end: RunEnd, steps: u64 },
    Big { snaps: Vec<RawSnapshot<BigInt>>, end: RunEnd, steps: u64 },
}

impl RawRun {
    pub fn end(&self) -> RunEnd {
        match self {
            RawRun::Small { end, .. } | RawRun::Big { end, .. } => *end,
        }
    }
}

fn locs_in_loops(c: &Cfa) -> Vec<bool> {
    let mut m = alloc::vec![false; c.num_locs];
    for lp in &c.loops {
        m[lp.header] = true;
        for e in c.body_edges(lp.id) {
            m[c.edges[e].from] = true;
        }
    }
    m
}

impl Machine {
    pub fn new(ic: &InstrumentedCfa) -> Machine {
        let c = &ic.cfa;
        let order = &c.vars;
        let idx = |v: &str| order.iter().position(|o| o == v).expect("declared variable");
        let mut out = alloc::vec![Vec::new(); c.num_locs];
        for e in &c.edges {
            let s = match &e.stmt {
                Stmt::Assign(v, p) => {
                    CStmt::Assign(idx(v), CompiledPoly::new(p, order).expect("program variables"))
                }
                Stmt::Havoc(v) => CStmt::Havoc(idx(v)),
                Stmt::Assume(f) => CStmt::Assume(CompiledFormula::new(f, order)),
                Stmt::Skip => CStmt::Skip,
                Stmt::CtrReset(i) => CStmt::CtrReset(*i),
                Stmt::CtrCheck { lp, at_bound } => CStmt::CtrCheck(*lp, *at_bound),
                Stmt::CtrIncr(i) => CStmt::CtrIncr(*i),
                Stmt::Snapshot(i, p) => CStmt::Snapshot(*i, *p),
            };
            out[e.from].push((s, e.to));
        }
        // instrumentation locations inherit the loop membership of the original ones
        let mut in_loop = locs_in_loops(&ic.strip());
        in_loop.resize(c.num_locs, false);
        for e in &c.edges {
            if e.from >= ic.base_locs && e.to < ic.base_locs && in_loop[e.to] {
                in_loop[e.from] = true;
            }
        }
        for lp in &c.loops {
            for e in [lp.enter_edge, lp.exit_edge] {
                let q = c.edges[e].to;
                if q >= ic.base_locs {
                    in_loop[q] = true;
                }
            }
        }
        Machine {
            vars: c.vars.clone(),
            inputs: c.inputs.iter().map(|v| idx(v)).collect(),
            out,
            in_loop,
            entry: c.entry,
            exit: c.exit,
            abort: ic.abort,
            bnd: ic.bnd,
            nloops: c.loops.len(),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Runs one input, preferring machine integers.
    pub fn run_raw(&self, input: &InputVector, budget: u64) -> RawRun {
        if let Some(init) = self.init::<i64>(input) {
            if let Some((snaps, end, steps)) = self.run_generic(init, budget, havoc_seed(input)) {
                return RawRun::Small { snaps, end, steps };
            }
        }
        let init = self.init::<BigInt>(input).expect("BigInt init");
        let (snaps, end, steps) =
            self.run_generic(init, budget, havoc_seed(input)).expect("BigInt never overflows");
        RawRun::Big { snaps, end, steps }
    }

    fn init<V: Value>(&self, input: &InputVector) -> Option<Vec<V>> {
        let zero = V::from_big(&BigInt::zero())?;
        let mut st = alloc::vec![zero; self.vars.len()];
        for &i in &self.inputs {
            let v = input.get(&self.vars[i]).cloned().unwrap_or_default();
            st[i] = V::from_big(&v)?;
        }
        Some(st)
    }

    #[allow(clippy::type_complexity)]
    fn run_generic<V: Value>(
        &self,
        st: Vec<V>,
        budget: u64,
        seed: u64,
    ) -> Option<(Vec<RawSnapshot<V>>, RunEnd, u64)> {
        let mut cur = Cursor::new(self, self.entry, st, seed);
        loop {
            if cur.loc == self.exit {
                return Some((cur.snaps, RunEnd::Exit, cur.steps));
            }
            if cur.loc == self.abort {
                return Some((cur.snaps, RunEnd::Abort, cur.steps));
            }
            if cur.steps >= budget || cur.snaps.len() >= RUN_SNAPSHOT_CAP {
                let in_loop = self.in_loop[cur.loc];
                return Some((cur.snaps, RunEnd::Budget { in_loop }, cur.steps));
            }
            cur.step(self)?;
        }
    }

    /// One iteration of loop `loop_id` from a header state: the state on the
    /// next return to the header, or None if the loop exits or the budget runs out.
    pub fn iterate(&self, ic: &InstrumentedCfa, loop_id: usize, state: &Valuation, budget: u64) -> Option<Valuation> {
        let header = ic.cfa.loops[loop_id].header;
        let st: Vec<BigInt> = self.vars.iter().map(|v| state.get(v).cloned().unwrap_or_default()).collect();
        let mut cur = Cursor::new(self, header, st, havoc_seed(state));
        while cur.steps < budget {
            cur.step(self)?;
            if let Some(s) = cur.snaps.last() {
                if s.loop_id == loop_id && s.pos == Pos::Post {
                    return None;
                }
            }
            if cur.loc == header {
                return Some(self.to_valuation(&cur.st));
            }
            if cur.loc == self.exit || cur.loc == self.abort {
                return None;
            }
        }
        None
    }

    pub fn to_valuation<V: Value>(&self, vals: &[V]) -> Valuation {
        self.vars.iter().cloned().zip(vals.iter().map(Value::to_big)).collect()
    }

    pub fn run(&self, input_index: usize, input: &InputVector, budget: u64) -> Run {
        let raw = self.run_raw(input, budget);
        let (snapshots, end, steps) = match raw {
            RawRun::Small { snaps, end, steps } => (self.cook(&snaps), end, steps),
            RawRun::Big { snaps, end, steps } => (self.cook(&snaps), end, steps),
        };
        Run { input_index, input: input.clone(), snapshots, end, steps }
    }

    fn cook<V: Value>(&self, snaps: &[RawSnapshot<V>]) -> Vec<Snapshot> {
        snaps
            .iter()
            .map(|s| Snapshot { loop_id: s.loop_id, pos: s.pos, seq: s.seq, vals: Arc::new(self.to_valuation(&s.vals)) })
            .collect()
    }
}

struct Cursor<V> {
    loc: Loc,
    st: Vec<V>,
    ctr: Vec<u64>,
    seq: Vec<u64>,
    snaps: Vec<RawSnapshot<V>>,
    rng: Option<ChaCha8Rng>,
    seed: u64,
    steps: u64,
}

impl<V: Value> Cursor<V> {
    fn new(m: &Machine, loc: Loc, st: Vec<V>, seed: u64) -> Self {
        Cursor {
            loc,
            st,
            ctr: alloc::vec![0; m.nloops],
            seq: alloc::vec![0; m.nloops],
            snaps: Vec::new(),
            rng: None,
            seed,
            steps: 0,
        }
    }

    /// Takes the enabled edge; None on overflow.
    fn step(&mut self, m: &Machine) -> Option<()> {
        self.steps += 1;
        let mut next = None;
        for (s, to) in &m.out[self.loc] {
            let enabled = match s {
                CStmt::Assume(f) => f.eval(&self.st),
                CStmt::CtrCheck(i, at) => (self.ctr[*i] == m.bnd) == *at,
                _ => true,
            };
            if enabled {
                next = Some((s, *to));
                break;
            }
        }
        let (s, to) = next.expect("deterministic automaton has an enabled edge");
        match s {
            CStmt::Assign(i, p) => self.st[*i] = V::eval(p, &self.st)?,
            CStmt::Havoc(i) => {
                let seed = self.seed;
                let r = self.rng.get_or_insert_with(|| ChaCha8Rng::seed_from_u64(seed));
                let v: i64 = r.gen_range(-100..=100);
                self.st[*i] = V::from_big(&BigInt::from(v))?;
            }
            CStmt::CtrReset(i) => {
                self.ctr[*i] = 0;
                self.seq[*i] = 0;
            }
            CStmt::CtrIncr(i) => self.ctr[*i] += 1,
            CStmt::Snapshot(i, pos) => {
                self.snaps.push(RawSnapshot { loop_id: *i, pos: *pos, seq: self.seq[*i], vals: self.st.clone() });
                self.seq[*i] += 1;
            }
            CStmt::Assume(_) | CStmt::Skip | CStmt::CtrCheck(..) => {}
        }
        self.loc = to;
        Some(())
    }
}

fn havoc_seed(input: &InputVector) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (k, v) in input {
        for b in k.bytes().chain(format!("{v}").bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Runs every input; one `Run` per input, in input order.
pub fn execute(ic: &InstrumentedCfa, inputs: &[InputVector], step_budget: u64) -> Vec<Run> {
    execute_until(ic, inputs, step_budget, &Deadline::never())
}

/// As `execute`, but starts no new run once `deadline` has passed.
pub fn execute_until(ic: &InstrumentedCfa, inputs: &[InputVector], step_budget: u64, deadline: &Deadline<'_>) -> Vec<Run> {
    let m = Machine::new(ic);
    let mut out = Vec::with_capacity(inputs.len());
    for (i, inp) in inputs.iter().enumerate() {
        if deadline.expired() {
            break;
        }
        out.push(m.run(i, inp, step_budget));
    }
    out
}

/// `n` vectors with coordinates uniform in `[-range, range]`.
pub fn gen_random_inputs(input_vars: &[String], n: usize, range: i64, seed: u64) -> Vec<InputVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            input_vars
                .iter()
                .map(|v| (v.clone(), BigInt::from(rng.gen_range(-range..=range))))
                .collect()
        })
        .collect()
}

/// Splits runs into per-entry traces of one loop.
pub fn project(runs: &[Run], loop_id: usize) -> Vec<LoopTrace> {
    let mut out = Vec::new();
    for r in runs {
        let mut cur: Option<LoopTrace> = None;
        for s in r.snapshots.iter().filter(|s| s.loop_id == loop_id) {
            if s.pos == Pos::Pre {
                if let Some(t) = cur.take() {
                    out.push(t);
                }
                cur = Some(LoopTrace {
                    loop_id,
                    input_index: r.input_index,
                    input: r.input.clone(),
                    snapshots: Vec::new(),
                });
            }
            if let Some(t) = cur.as_mut() {
                t.snapshots.push(s.clone());
            }
        }
        if let Some(t) = cur {
            out.push(t);
        }
    }
    out
}

pub fn partition(lts: &[LoopTrace]) -> Result<TracePartition, ExecError> {
    let mut p = TracePartition::default();
    for t in lts {
        match t.class()? {
            TraceClass::Base => p.base.push(t.clone()),
            TraceClass::Term => p.term.push(t.clone()),
            TraceClass::MayLoop => p.mayloop.push(t.clone()),
        }
    }
    Ok(p)
}

/// Like [`partition`], dropping malformed traces (a run cut by the step budget
/// between `pre` and the first body snapshot).
pub fn partition_lossy(lts: &[LoopTrace]) -> TracePartition {
    let ok: Vec<LoopTrace> = lts.iter().filter(|t| t.class().is_ok()).cloned().collect();
    partition(&ok).expect("filtered")
}

// ---------------------------------------------------------------------------
// dump format: `loop=<id> pos=<pre|body|post> seq=<k> <var>=<int> ...`

pub fn dump_snapshot(s: &Snapshot, order: &[String]) -> String {
    let mut line = format!("loop={} pos={} seq={}", s.loop_id, s.pos, s.seq);
    for v in order {
        if let Some(x) = s.vals.get(v) {
            line += &format!(" {v}={x}");
        }
    }
    line
}

pub fn dump_runs(runs: &[Run], order: &[String]) -> String {
    let mut out = String::new();
    for r in runs {
        for s in &r.snapshots {
            out += &dump_snapshot(s, order);
            out.push('\n');
        }
    }
    out
}

/// Parses dump lines; blank lines and `#` comments are skipped.
pub fn parse_dump(text: &str) -> Result<Vec<Snapshot>, ExecError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| ExecError::Dump { line: i + 1, msg };
        let mut loop_id = None;
        let mut pos = None;
        let mut seq = None;
        let mut vals = BTreeMap::new();
        for field in line.split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| err(format!("bad field '{field}'")))?;
            match k {
                "loop" => loop_id = Some(v.parse().map_err(|_| err(format!("bad loop id '{v}'")))?),
                "pos" => {
                    pos = Some(match v {
                        "pre" => Pos::Pre,
                        "body" => Pos::Body,
                        "post" => Pos::Post,
                        _ => return Err(err(format!("bad position '{v}'"))),
                    })
                }
                "seq" => seq = Some(v.parse().map_err(|_| err(format!("bad seq '{v}'")))?),
                _ => {
                    let n: BigInt = v.parse().map_err(|_| err(format!("bad integer '{v}'")))?;
                    vals.insert(String::from(k), n);
                }
            }
        }
        match (loop_id, pos, seq) {
            (Some(loop_id), Some(pos), Some(seq)) => out.push(Snapshot { loop_id, pos, seq, vals: Arc::new(vals) }),
            _ => return Err(err("missing loop, pos or seq".into())),
        }
    }
    Ok(out)
}
