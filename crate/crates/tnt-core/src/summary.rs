//! Loop summaries by symbolic execution of loop-free fragments.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::formula::{Conjunction, Formula};
use crate::lang::cfa::Stmt;
use crate::lang::{Cfa, Loc};
use crate::poly::{Poly, Valuation};
use crate::solver::prove::inconsistent;

pub const MAX_PATHS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unsupported {
    NestedBody,
    LoopyStem,
    Nondet,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("unsupported: {0:?}")]
    Unsupported(Unsupported),
    #[error("more than {MAX_PATHS} paths")]
    PathExplosion,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub guard: Conjunction,
    /// Total over the relation's variables.
    pub update: BTreeMap<String, Poly>,
}

impl Path {
    pub fn identity(vars: &[String]) -> Path {
        Path { guard: Conjunction::top(), update: vars.iter().map(|v| (v.clone(), Poly::var(v))).collect() }
    }

    pub fn enabled(&self, s: &Valuation) -> bool {
        self.guard.holds(s) == Some(true)
    }

    pub fn apply(&self, s: &Valuation) -> Valuation {
        self.update.iter().map(|(v, p)| (v.clone(), p.eval(s).expect("state covers vars"))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionRelation {
    pub vars: Vec<String>,
    pub paths: Vec<Path>,
}

impl TransitionRelation {
    pub fn identity(vars: &[String]) -> Self {
        TransitionRelation { vars: vars.to_vec(), paths: alloc::vec![Path::identity(vars)] }
    }

    /// `self` then `t2`.
    pub fn compose(&self, t2: &TransitionRelation) -> Result<TransitionRelation, SummaryError> {
        let mut paths = Vec::new();
        for p1 in &self.paths {
            for p2 in &t2.paths {
                let mut guard = p1.guard.clone();
                for a in p2.guard.subst(&p1.update).atoms() {
                    guard.push(a.clone());
                }
                if guard.is_trivially_false() || inconsistent(guard.atoms()) {
                    continue;
                }
                let update = p2.update.iter().map(|(v, p)| (v.clone(), p.subst(&p1.update))).collect();
                paths.push(Path { guard, update });
                if paths.len() > MAX_PATHS {
                    return Err(SummaryError::PathExplosion);
                }
            }
        }
        Ok(TransitionRelation { vars: self.vars.clone(), paths })
    }

    /// The unique enabled path's successor, if exactly one path is enabled.
    pub fn step(&self, s: &Valuation) -> Option<Valuation> {
        let mut it = self.paths.iter().filter(|p| p.enabled(s));
        let p = it.next()?;
        Some(p.apply(s))
    }
}

impl fmt::Display for TransitionRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.paths.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[{}]", p.guard)?;
            for (v, e) in &p.update {
                if *e != Poly::var(v) {
                    write!(f, " {v}' = {e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSummary {
    /// From program entry (non-inputs zeroed) to the loop header.
    pub tstem: TransitionRelation,
    pub cloop: Formula,
    pub tloop: TransitionRelation,
    pub exact: bool,
}

fn header_of(c: &Cfa, l: Loc) -> Option<usize> {
    c.loops.iter().position(|lp| lp.header == l)
}

/// Symbolically executes from `start` (after taking `first`, if given) until `stop`.
fn explore(
    c: &Cfa,
    start: Loc,
    first: Option<usize>,
    stop: Loc,
    init: Path,
    loop_err: Unsupported,
) -> Result<Vec<Path>, SummaryError> {
    let mut done = Vec::new();
    let mut work: Vec<(Loc, Path)> = Vec::new();
    match first {
        Some(e) => {
            for p in take_edge(c, e, &init)? {
                work.push((c.edges[e].to, p));
            }
        }
        None => work.push((start, init)),
    }
    while let Some((l, p)) = work.pop() {
        if l == stop {
            done.push(p);
            if done.len() > MAX_PATHS {
                return Err(SummaryError::PathExplosion);
            }
            continue;
        }
        if header_of(c, l).is_some() {
            return Err(SummaryError::Unsupported(loop_err));
        }
        for (i, e) in c.outgoing(l) {
            for q in take_edge(c, i, &p)? {
                work.push((e.to, q));
            }
        }
        if work.len() > 4 * MAX_PATHS {
            return Err(SummaryError::PathExplosion);
        }
    }
    done.reverse();
    Ok(done)
}

fn take_edge(c: &Cfa, e: usize, p: &Path) -> Result<Vec<Path>, SummaryError> {
    Ok(match &c.edges[e].stmt {
        Stmt::Assign(v, e) => {
            let mut q = p.clone();
            q.update.insert(v.clone(), e.subst(&p.update));
            alloc::vec![q]
        }
        Stmt::Havoc(_) => return Err(SummaryError::Unsupported(Unsupported::Nondet)),
        Stmt::Assume(f) => {
            let clauses = f.subst(&p.update).dnf(MAX_PATHS).ok_or(SummaryError::PathExplosion)?;
            let mut out = Vec::new();
            for cl in clauses {
                let mut g = p.guard.clone();
                for a in cl.atoms() {
                    g.push(a.clone());
                }
                if g.is_trivially_false() || inconsistent(g.atoms()) {
                    continue;
                }
                out.push(Path { guard: g, update: p.update.clone() });
            }
            out
        }
        _ => alloc::vec![p.clone()],
    })
}

/// Body relation: enter guard plus one path per branch combination.
pub fn summarize_body(c: &Cfa, loop_id: usize) -> Result<(Formula, TransitionRelation), SummaryError> {
    let lp = c.loop_info(loop_id);
    let paths = explore(c, lp.header, Some(lp.enter_edge), lp.header, Path::identity(&c.vars), Unsupported::NestedBody)?;
    Ok((lp.condition.clone(), TransitionRelation { vars: c.vars.clone(), paths }))
}

/// Stem relation over the program inputs.
pub fn summarize_stem(c: &Cfa, loop_id: usize) -> Result<TransitionRelation, SummaryError> {
    let lp = c.loop_info(loop_id);
    let mut init = Path::identity(&c.vars);
    for v in &c.vars {
        if !c.inputs.contains(v) {
            init.update.insert(v.clone(), Poly::zero());
        }
    }
    let paths = explore(c, c.entry, None, lp.header, init, Unsupported::LoopyStem)?;
    Ok(TransitionRelation { vars: c.vars.clone(), paths })
}

pub fn summarize(c: &Cfa, loop_id: usize) -> Result<LoopSummary, SummaryError> {
    let (cloop, tloop) = summarize_body(c, loop_id)?;
    let tstem = summarize_stem(c, loop_id)?;
    Ok(LoopSummary { tstem, cloop, tloop, exact: true })
}
