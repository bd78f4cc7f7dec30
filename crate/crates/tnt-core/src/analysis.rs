//! ProveT, ProveNT with RefineRS, and the integrated ProveTNT driver.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::{Clock, Deadline};
use crate::dinfer::{dinfer, DinferOptions};
use crate::exec::{
    execute, execute_until, gen_random_inputs, partition_lossy, project, InputVector, LoopTrace, Machine, TraceClass, TracePartition,
    DEFAULT_STEP_BUDGET,
};
use crate::formula::{Atom, Conjunction, Formula};
use crate::lang::{get_loop_seq, instrument, to_cfa, Cfa, InstrumentedCfa, Pos, Program};
use crate::rank::{infer_rf, RfSet};
use crate::solver::{
    check_recurrent, check_sat, entails, export_obligation, find_models, inconsistent, validate_rfs, CheckResult,
    RfValidation, SearchOpts,
};
use crate::summary::{summarize_body, summarize_stem, SummaryError, TransitionRelation, Unsupported};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Term,
    NonTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub mode: Mode,
    pub seed: u64,
    pub bnd: u64,
    pub upperbound: usize,
    pub inputs: usize,
    pub range: i64,
    pub degree: u32,
    pub k_pairs: usize,
    pub timeout_ms: Option<u64>,
    pub cegis_rounds: usize,
    /// Half-width of the input grid for ranking-function validation.
    pub validate_grid: i64,
    pub step_budget: u64,
    pub cex_box: i64,
    pub reach_box: i64,
    pub search_budget: u64,
    /// Collect SMT-LIB scripts for recurrence obligations.
    pub emit_smt: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mode: Mode::Auto,
            seed: 1,
            bnd: 500,
            upperbound: 3,
            inputs: 100,
            range: 300,
            degree: 2,
            k_pairs: 200,
            timeout_ms: Some(400_000),
            cegis_rounds: 10,
            validate_grid: 50,
            step_budget: DEFAULT_STEP_BUDGET,
            cex_box: 50,
            reach_box: 300,
            search_budget: 200_000,
            emit_smt: false,
        }
    }
}

/// Inputs generated from one violating input during RefineRS.
const GUESS_INPUTS: usize = 20;
/// Neighbours of a ranking counterexample input.
const CEX_NEIGHBOURS: usize = 20;
const CEX_RADIUS: i64 = 5;
/// Candidate inputs tried when a recurrent set is reached concretely.
const REACH_RUNS: usize = 2_000;
/// Snapshots kept per loop and batch of runs; beyond it traces are thinned.
pub const SNAPSHOT_CAP: usize = 50_000;
/// Prover switches per loop. After the first, a switch needs fresh traces.
const MAX_SWITCHES: usize = 4;
/// States sampled when the loop body can only be run, not summarized.
const CONCRETE_SAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Confidence {
    Symbolic,
    Bounded,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Symbolic => "symbolic",
            Confidence::Bounded => "bounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonTermEvidence {
    pub r: Conjunction,
    pub witness: InputVector,
    pub depth: usize,
    pub confidence: Confidence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoopOutcome {
    Term(RfSet),
    NonTerm(NonTermEvidence),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopVerdict {
    pub loop_id: usize,
    pub outcome: LoopOutcome,
    pub base: usize,
    pub term: usize,
    pub mayloop: usize,
    pub nt_first: bool,
    pub switched: bool,
    /// Traces passed from the first prover to the second.
    pub handoff: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Term,
    NonTerm { loop_id: usize, evidence: NonTermEvidence },
    Unknown,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Term => "term",
            Outcome::NonTerm { .. } => "nonterm",
            Outcome::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Timings {
    pub learn_ms: u64,
    pub validate_ms: u64,
    pub total_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub confidence: Confidence,
    pub loops: Vec<LoopVerdict>,
    pub switches: usize,
    pub timings: Timings,
    pub timed_out: bool,
}

impl Verdict {
    /// Ranking functions per loop, when the verdict is Term.
    pub fn rfs(&self) -> Vec<(usize, &RfSet)> {
        self.loops
            .iter()
            .filter_map(|l| match &l.outcome {
                LoopOutcome::Term(r) => Some((l.loop_id, r)),
                _ => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProveTResult {
    pub rfs: Option<RfSet>,
    /// MayLoop traces met while validating, in discovery order.
    pub mayloop: Vec<LoopTrace>,
    pub rounds: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProveNtResult {
    pub found: Option<NonTermEvidence>,
    pub term: Vec<LoopTrace>,
    /// Candidates popped and examined.
    pub candidates: usize,
    pub note: Option<String>,
}

/// How the loop body is checked.
#[derive(Clone, Debug)]
pub enum BodyModel {
    Symbolic(TransitionRelation),
    /// Run one iteration in the interpreter; bounded confidence only.
    Concrete,
}

pub struct Analyzer<'a> {
    pub cfg: Config,
    pub cfa: Cfa,
    pub ic: InstrumentedCfa,
    machine: Machine,
    clock: &'a dyn Clock,
    deadline: Deadline<'a>,
    pub timings: Timings,
    /// (file name, script) pairs when `emit_smt` is set.
    pub obligations: Vec<(String, String)>,
    /// Every trace seen per loop, for concrete reachability.
    seen: Vec<Vec<LoopTrace>>,
    started_ms: u64,
}

/// Keeps every k-th trace so at most about `cap` snapshots remain.
pub fn thin(lts: Vec<LoopTrace>, cap: usize) -> Vec<LoopTrace> {
    let total: usize = lts.iter().map(|t| t.snapshots.len()).sum();
    if total <= cap {
        return lts;
    }
    let stride = total.div_ceil(cap.max(1));
    lts.into_iter().step_by(stride).collect()
}

/// Partition with each class thinned on its own, so a rare class keeps its traces.
pub fn thin_partition(p: TracePartition, cap: usize) -> TracePartition {
    TracePartition { base: thin(p.base, cap), term: thin(p.term, cap), mayloop: thin(p.mayloop, cap) }
}

fn cloop_clauses(c: &Formula) -> Vec<Conjunction> {
    c.dnf(crate::solver::search::DNF_CAP).unwrap_or_default()
}

impl<'a> Analyzer<'a> {
    pub fn new(p: &Program, cfg: Config, clock: &'a dyn Clock) -> Self {
        let cfa = to_cfa(p);
        let ic = instrument(&cfa, cfg.bnd);
        let machine = Machine::new(&ic);
        let deadline = Deadline::new(clock, cfg.timeout_ms);
        let n = cfa.loops.len();
        Analyzer {
            cfg,
            cfa,
            ic,
            machine,
            clock,
            deadline,
            timings: Timings::default(),
            obligations: Vec::new(),
            seen: alloc::vec![Vec::new(); n],
            started_ms: clock.now_ms(),
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.expired()
    }

    fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    fn cex_opts(&self, salt: u64) -> SearchOpts {
        SearchOpts { bound: self.cfg.cex_box, budget: self.cfg.search_budget, seed: self.cfg.seed ^ salt }
    }

    fn reach_opts(&self, salt: u64) -> SearchOpts {
        SearchOpts { bound: self.cfg.reach_box, budget: self.cfg.search_budget, seed: self.cfg.seed ^ salt }
    }

    fn dinfer_opts(&self, trend: bool) -> DinferOptions {
        DinferOptions { max_degree: self.cfg.degree, trend_filter: trend, ..DinferOptions::default() }
    }

    fn remember(&mut self, loop_id: usize, p: &TracePartition) {
        let seen = &mut self.seen[loop_id];
        seen.extend(p.base.iter().chain(&p.term).chain(&p.mayloop).cloned());
    }

    /// Executes, projects and partitions; remembers the traces.
    pub fn run_inputs(&mut self, loop_id: usize, inputs: &[InputVector]) -> TracePartition {
        let runs = execute_until(&self.ic, inputs, self.cfg.step_budget, &self.deadline);
        let part = thin_partition(partition_lossy(&project(&runs, loop_id)), SNAPSHOT_CAP);
        self.remember(loop_id, &part);
        part
    }

    /// Neighbourhood of a counterexample input.
    pub fn guess_inputs(&self, cex: &InputVector, salt: u64) -> Vec<InputVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x2545_F491_4F6C_DD1D));
        let mut out = alloc::vec![cex.clone()];
        for _ in 0..CEX_NEIGHBOURS {
            let n: InputVector = cex
                .iter()
                .map(|(k, v)| (k.clone(), v + BigInt::from(rng.gen_range(-CEX_RADIUS..=CEX_RADIUS))))
                .collect();
            if !out.contains(&n) {
                out.push(n);
            }
        }
        out
    }

    /// CEGIS over ranking functions.
    pub fn prove_t(&mut self, loop_id: usize, term: Vec<LoopTrace>) -> ProveTResult {
        let mut term = term;
        let mut rfset = RfSet::new();
        let mut mayloop = Vec::new();
        let vars = self.cfa.vars.clone();
        for round in 0..self.cfg.cegis_rounds {
            if self.expired() {
                return ProveTResult { rfs: None, mayloop, rounds: round };
            }
            let t0 = self.now();
            let inf = infer_rf(&term, &vars, self.cfg.k_pairs, self.cfg.seed.wrapping_add(round as u64));
            let mut added = false;
            for rf in inf.rfs.iter() {
                added |= rfset.insert(rf.clone());
            }
            let t1 = self.now();
            self.timings.learn_ms += t1 - t0;
            if !added {
                return ProveTResult { rfs: None, mayloop, rounds: round + 1 };
            }
            let v = validate_rfs(
                &self.ic,
                loop_id,
                &rfset,
                self.cfg.validate_grid,
                self.cfg.step_budget,
                &self.deadline,
            );
            self.timings.validate_ms += self.now() - t1;
            match v {
                RfValidation::Ok { .. } => return ProveTResult { rfs: Some(rfset), mayloop, rounds: round + 1 },
                RfValidation::Interrupted { .. } => return ProveTResult { rfs: None, mayloop, rounds: round + 1 },
                RfValidation::Cex(cex) => {
                    let inputs = self.guess_inputs(&cex.stem_input, round as u64);
                    let part = self.run_inputs(loop_id, &inputs);
                    term.extend(part.term);
                    mayloop.extend(part.mayloop);
                }
            }
        }
        ProveTResult { rfs: None, mayloop, rounds: self.cfg.cegis_rounds }
    }

    fn body_model(&self, loop_id: usize) -> Result<BodyModel, SummaryError> {
        match summarize_body(&self.cfa, loop_id) {
            Ok((_, t)) => Ok(BodyModel::Symbolic(t)),
            Err(SummaryError::Unsupported(Unsupported::Nondet)) => {
                Err(SummaryError::Unsupported(Unsupported::Nondet))
            }
            Err(_) => Ok(BodyModel::Concrete),
        }
    }

    /// `r ⟹ cloop`, proved symbolically.
    pub fn implies_cloop(&self, r: &Conjunction, cloop: &[Conjunction]) -> bool {
        cloop.iter().any(|cl| cl.atoms().iter().all(|a| r.atoms().contains(a) || entails(r.atoms(), a)))
    }

    /// One recurrence check, symbolic or by execution.
    fn validity(&mut self, loop_id: usize, r: &Conjunction, body: &BodyModel, salt: u64) -> CheckResult {
        match body {
            BodyModel::Symbolic(t) => {
                if self.cfg.emit_smt {
                    let k = self.obligations.len();
                    for (pi, p) in t.paths.iter().enumerate() {
                        for (ci, a) in r.atoms().iter().enumerate() {
                            let name = format!("loop{loop_id}_cand{k}_path{pi}_conj{ci}.smt2");
                            self.obligations.push((name, export_obligation(r, p, a, &t.vars)));
                        }
                    }
                }
                check_recurrent(r, t, &self.cex_opts(salt)).result
            }
            BodyModel::Concrete => {
                let models = find_models(&r.to_formula(), &self.cfa.vars, &self.cex_opts(salt), CONCRETE_SAMPLES);
                for m in models {
                    let next = self.machine.iterate(&self.ic, loop_id, &m, self.cfg.step_budget);
                    let stays = next.is_some_and(|s| r.holds(&s) == Some(true));
                    if !stays {
                        return CheckResult::CexFound(m);
                    }
                }
                CheckResult::UnknownBounded(String::from("closure held on sampled states"))
            }
        }
    }

    /// Inputs whose runs reach a state satisfying `f` at the loop header.
    fn inputs_reaching(
        &mut self,
        loop_id: usize,
        f: &Formula,
        stem: Option<&TransitionRelation>,
        want: usize,
        salt: u64,
    ) -> Vec<InputVector> {
        let inputs = self.cfa.inputs.clone();
        if let Some(stem) = stem {
            let g = Formula::or(
                stem.paths.iter().map(|p| Formula::and(alloc::vec![p.guard.to_formula(), f.subst(&p.update)])).collect(),
            );
            return find_models(&g, &inputs, &self.reach_opts(salt), want)
                .into_iter()
                .map(|m| inputs.iter().map(|v| (v.clone(), m[v].clone())).collect())
                .collect();
        }
        let mut out: Vec<InputVector> = Vec::new();
        let hit = |t: &LoopTrace| t.at(Pos::Body).chain(t.at(Pos::Pre)).any(|s| f.eval(s) == Some(true));
        for t in &self.seen[loop_id] {
            if out.len() < want && hit(t) && !out.contains(&t.input) {
                out.push(t.input.clone());
            }
        }
        let grid = crate::solver::grid_inputs(&inputs, self.cfg.reach_box, REACH_RUNS);
        for chunk in grid.chunks(64) {
            if out.len() >= want || self.expired() {
                break;
            }
            let runs = execute_until(&self.ic, chunk, self.cfg.step_budget, &self.deadline);
            for t in project(&runs, loop_id) {
                if out.len() < want && hit(&t) && !out.contains(&t.input) {
                    out.push(t.input.clone());
                }
            }
        }
        out
    }

    /// Concrete confirmation: the run reaches `r` and stays in the loop for `10·bnd` iterations.
    pub fn replay(&self, loop_id: usize, witness: &InputVector, r: &Conjunction) -> bool {
        let reached = execute(&self.ic, core::slice::from_ref(witness), self.cfg.step_budget)
            .iter()
            .flat_map(|run| project(core::slice::from_ref(run), loop_id))
            .any(|t| t.at(Pos::Body).any(|s| r.holds(s) == Some(true)));
        reached && replay_stays(&self.cfa, loop_id, witness, 10 * self.cfg.bnd)
    }

    fn reach(&mut self, loop_id: usize, r: &Conjunction, stem: Option<&TransitionRelation>, salt: u64) -> Option<InputVector> {
        let cands = self.inputs_reaching(loop_id, &r.to_formula(), stem, 5, salt);
        cands.into_iter().find(|w| self.replay(loop_id, w, r))
    }

    /// Candidate refinement from the inputs violating each conjunct.
    pub fn refine_rs(
        &mut self,
        r: &Conjunction,
        loop_id: usize,
        body: &BodyModel,
        stem: Option<&TransitionRelation>,
        salt: u64,
    ) -> (Vec<Conjunction>, Vec<LoopTrace>) {
        let mut children: Vec<Conjunction> = Vec::new();
        let mut keys = BTreeSet::new();
        let mut terms = Vec::new();
        let vars = self.cfa.vars.clone();
        for (i, ri) in r.atoms().iter().enumerate() {
            if self.expired() {
                break;
            }
            let t0 = self.now();
            let viol = match body {
                BodyModel::Symbolic(t) => {
                    let v = Formula::or(
                        t.paths
                            .iter()
                            .map(|p| {
                                let mut h = r.clone();
                                for a in p.guard.atoms() {
                                    h.push(a.clone());
                                }
                                Formula::and(alloc::vec![h.to_formula(), Formula::not(Formula::Atom(ri.subst(&p.update)))])
                            })
                            .collect(),
                    );
                    if !matches!(check_sat(&v, &vars, &self.cex_opts(salt ^ i as u64)), CheckResult::Sat(_)) {
                        self.timings.validate_ms += self.now() - t0;
                        continue;
                    }
                    v
                }
                BodyModel::Concrete => r.to_formula(),
            };
            let inps = self.inputs_reaching(loop_id, &viol, stem, GUESS_INPUTS, salt ^ (i as u64) << 8);
            let t1 = self.now();
            self.timings.validate_ms += t1 - t0;
            if inps.is_empty() {
                continue;
            }
            let part = self.run_inputs(loop_id, &inps);
            let cterm = dinfer(&part.term, Pos::Body, &vars, &self.dinfer_opts(false));
            terms.extend(part.term.iter().cloned());
            let mut push = |c: Conjunction| {
                if !c.is_empty() && !c.is_trivially_false() && keys.insert(c.key()) && !inconsistent(c.atoms()) {
                    children.push(c);
                }
            };
            for c in cterm.atoms() {
                for n in c.negate() {
                    push(r.with(n));
                }
            }
            if !part.mayloop.is_empty() {
                push(dinfer(&part.mayloop, Pos::Body, &vars, &self.dinfer_opts(true)));
            }
            self.timings.learn_ms += self.now() - t1;
        }
        (children, terms)
    }

    /// Work-stack search for a reachable recurrent set.
    pub fn prove_nt(&mut self, loop_id: usize, mayloop: &[LoopTrace]) -> ProveNtResult {
        let body = match self.body_model(loop_id) {
            Ok(b) => b,
            Err(e) => {
                return ProveNtResult { found: None, term: Vec::new(), candidates: 0, note: Some(format!("{e}")) }
            }
        };
        let stem = summarize_stem(&self.cfa, loop_id).ok();
        let cloop = cloop_clauses(&self.cfa.loops[loop_id].condition);
        let mut stack: Vec<(usize, Conjunction)> = Vec::new();
        if let BodyModel::Symbolic(_) = body {
            if !mayloop.is_empty() {
                let t0 = self.now();
                let cmay = dinfer(mayloop, Pos::Body, &self.cfa.vars, &self.dinfer_opts(true));
                self.timings.learn_ms += self.now() - t0;
                if !cmay.is_empty() {
                    stack.push((0, cmay));
                }
            }
        }
        for c in cloop.iter().rev() {
            stack.push((0, c.clone()));
        }
        let mut visited = BTreeSet::new();
        let mut term = Vec::new();
        let mut candidates = 0usize;
        while let Some((depth, r)) = stack.pop() {
            if self.expired() {
                break;
            }
            if depth > self.cfg.upperbound || !visited.insert(r.key()) {
                continue;
            }
            let t0 = self.now();
            if !self.implies_cloop(&r, &cloop) {
                self.timings.validate_ms += self.now() - t0;
                continue;
            }
            candidates += 1;
            let salt = candidates as u64;
            let v = self.validity(loop_id, &r, &body, salt);
            let confidence = match (&v, &body) {
                (CheckResult::Valid, BodyModel::Symbolic(_)) => Some(Confidence::Symbolic),
                (CheckResult::Valid, BodyModel::Concrete) | (CheckResult::UnknownBounded(_), _) => {
                    Some(Confidence::Bounded)
                }
                _ => None,
            };
            if let Some(confidence) = confidence {
                let w = self.reach(loop_id, &r, stem.as_ref(), salt);
                self.timings.validate_ms += self.now() - t0;
                if let Some(witness) = w {
                    let found = NonTermEvidence { r, witness, depth, confidence };
                    return ProveNtResult { found: Some(found), term, candidates, note: None };
                }
                if matches!(v, CheckResult::Valid) {
                    continue;
                }
            } else {
                self.timings.validate_ms += self.now() - t0;
            }
            let (children, traces) = self.refine_rs(&r, loop_id, &body, stem.as_ref(), salt);
            term.extend(traces);
            for c in children {
                stack.push((depth + 1, c));
            }
        }
        ProveNtResult { found: None, term, candidates, note: None }
    }

    /// The integrated driver over all loops, innermost first.
    pub fn prove_tnt(&mut self) -> Verdict {
        let inputs = gen_random_inputs(&self.cfa.inputs, self.cfg.inputs, self.cfg.range, self.cfg.seed);
        let runs = execute_until(&self.ic, &inputs, self.cfg.step_budget, &self.deadline);
        let mut loops = Vec::new();
        let mut switches = 0;
        let mut outcome = Outcome::Term;
        for lid in get_loop_seq(&self.cfa) {
            let full = partition_lossy(&project(&runs, lid));
            let (nb, nt, nm) = (full.base.len(), full.term.len(), full.mayloop.len());
            let part = thin_partition(full, SNAPSHOT_CAP);
            self.remember(lid, &part);
            let nt_first = match self.cfg.mode {
                Mode::Auto => nm > 4 * (nb + nt),
                Mode::NonTerm => true,
                Mode::Term => false,
            };
            let mut lv = LoopVerdict {
                loop_id: lid,
                outcome: LoopOutcome::Unknown,
                base: nb,
                term: nt,
                mayloop: nm,
                nt_first,
                switched: false,
                handoff: 0,
                note: None,
            };
            let mut switches_here = 0;
            let mut term = part.term.clone();
            let mut may = part.mayloop.clone();
            let mut nt_turn = nt_first;
            loop {
                // traces the failed prover hands to the other one
                let handed = if nt_turn {
                    let r = self.prove_nt(lid, &may);
                    if r.note.is_some() {
                        lv.note = r.note;
                    }
                    if let Some(ev) = r.found {
                        lv.outcome = LoopOutcome::NonTerm(ev.clone());
                        outcome = Outcome::NonTerm { loop_id: lid, evidence: ev };
                        break;
                    }
                    let n = r.term.len();
                    term.extend(r.term);
                    n
                } else {
                    let t = self.prove_t(lid, term.clone());
                    if let Some(rfs) = t.rfs {
                        lv.outcome = LoopOutcome::Term(rfs);
                        break;
                    }
                    let n = t.mayloop.len();
                    may.extend(t.mayloop);
                    n
                };
                let first = switches_here == 0;
                if self.cfg.mode != Mode::Auto || self.expired() || (!first && handed == 0) || switches_here >= MAX_SWITCHES {
                    break;
                }
                if first {
                    lv.handoff = handed;
                }
                switches_here += 1;
                lv.switched = true;
                nt_turn = !nt_turn;
            }
            switches += switches_here;
            let unresolved = lv.outcome == LoopOutcome::Unknown;
            loops.push(lv);
            if matches!(outcome, Outcome::NonTerm { .. }) {
                break;
            }
            if unresolved {
                outcome = Outcome::Unknown;
                break;
            }
        }
        let confidence = match &outcome {
            Outcome::NonTerm { evidence, .. } => evidence.confidence,
            Outcome::Term if loops.is_empty() => Confidence::Symbolic,
            _ => Confidence::Bounded,
        };
        self.timings.total_ms = self.now() - self.started_ms;
        Verdict { outcome, confidence, loops, switches, timings: self.timings, timed_out: self.expired() }
    }
}

impl Analyzer<'_> {
    /// Re-validates ranking functions for one loop over the configured grid.
    pub fn recheck_term(&self, loop_id: usize, rfs: &RfSet) -> Result<(), String> {
        if loop_id >= self.cfa.loops.len() {
            return Err(format!("no loop {loop_id}"));
        }
        match validate_rfs(&self.ic, loop_id, rfs, self.cfg.validate_grid, self.cfg.step_budget, &self.deadline) {
            RfValidation::Ok { .. } => Ok(()),
            RfValidation::Cex(c) => Err(format!("ranking functions fail from input {:?}", c.stem_input)),
            RfValidation::Interrupted { .. } => Err(String::from("validation interrupted")),
        }
    }

    /// Re-checks a recurrent set: loop condition, closure at the claimed
    /// confidence, and the witness replay.
    pub fn recheck_nonterm(&mut self, loop_id: usize, ev: &NonTermEvidence) -> Result<(), String> {
        if loop_id >= self.cfa.loops.len() {
            return Err(format!("no loop {loop_id}"));
        }
        let body = self.body_model(loop_id).map_err(|e| format!("{e}"))?;
        let cloop = cloop_clauses(&self.cfa.loops[loop_id].condition);
        if !self.implies_cloop(&ev.r, &cloop) {
            return Err(String::from("recurrent set does not imply the loop condition"));
        }
        let v = self.validity(loop_id, &ev.r, &body, 0);
        match (&v, ev.confidence) {
            (CheckResult::Valid, _) if matches!(body, BodyModel::Symbolic(_)) => {}
            (CheckResult::Valid | CheckResult::UnknownBounded(_), Confidence::Bounded) => {}
            (r, _) => return Err(format!("closure check: {r:?}")),
        }
        if !self.replay(loop_id, &ev.witness, &ev.r) {
            return Err(String::from("witness replay left the loop"));
        }
        Ok(())
    }
}

/// Runs with the bound raised to `iters` and checks the loop is still running.
pub fn replay_stays(cfa: &Cfa, loop_id: usize, witness: &InputVector, iters: u64) -> bool {
    let ic = instrument(cfa, iters);
    let per_iter = cfa.edges.len() as u64 + 8;
    let budget = iters.saturating_mul(per_iter).saturating_add(DEFAULT_STEP_BUDGET);
    let runs = execute(&ic, core::slice::from_ref(witness), budget);
    let lts = project(&runs, loop_id);
    lts.iter().any(|t| {
        t.class() == Ok(TraceClass::MayLoop) && t.at(Pos::Body).count() as u64 >= iters
    })
}

/// Convenience wrapper: analyze `p` under `cfg`.
pub fn prove_tnt(p: &Program, cfg: Config, clock: &dyn Clock) -> (Verdict, Vec<(String, String)>) {
    let mut a = Analyzer::new(p, cfg, clock);
    let v = a.prove_tnt();
    (v, a.obligations)
}

/// The atom set of a conjunction, order-insensitive.
pub fn atom_set(c: &Conjunction) -> BTreeSet<Atom> {
    c.atoms().iter().cloned().collect()
}
