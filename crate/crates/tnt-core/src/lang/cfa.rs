//! Control-flow automata, loop discovery and the tracing instrumentation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::Formula;
use crate::poly::Poly;

use super::ast::{Init, Program, Stmt as AstStmt};

pub type Loc = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    Pre,
    Body,
    Post,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Pre => "pre",
            Pos::Body => "body",
            Pos::Post => "post",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, Poly),
    Havoc(String),
    Assume(Formula),
    Skip,
    /// `ctr_i = 0`
    CtrReset(usize),
    /// `assume(ctr_i == bnd)` when `at_bound`, else `assume(ctr_i != bnd)`.
    CtrCheck { lp: usize, at_bound: bool },
    /// `ctr_i = ctr_i + 1`
    CtrIncr(usize),
    Snapshot(usize, Pos),
}

impl Stmt {
    pub fn is_instrumentation(&self) -> bool {
        matches!(
            self,
            Stmt::CtrReset(_) | Stmt::CtrCheck { .. } | Stmt::CtrIncr(_) | Stmt::Snapshot(..)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: Loc,
    pub to: Loc,
    pub stmt: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopInfo {
    pub id: usize,
    pub header: Loc,
    pub body_entry: Loc,
    pub exit: Loc,
    pub condition: Formula,
    pub depth: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Edge from the stem into the header.
    pub entry_edge: usize,
    /// `assume(cond)` edge from the header into the body.
    pub enter_edge: usize,
    /// `assume(!cond)` edge from the header to `exit`.
    pub exit_edge: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfa {
    pub num_locs: usize,
    pub entry: Loc,
    pub exit: Loc,
    pub edges: Vec<Edge>,
    /// All program variables, parameters first.
    pub vars: Vec<String>,
    pub inputs: Vec<String>,
    pub loops: Vec<LoopInfo>,
}

impl Cfa {
    pub fn outgoing(&self, l: Loc) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.from == l)
    }

    pub fn loop_info(&self, id: usize) -> &LoopInfo {
        &self.loops[id]
    }

    /// Edge indices inside the body of `id` (including nested loops).
    pub fn body_edges(&self, id: usize) -> Vec<usize> {
        let lp = &self.loops[id];
        let mut seen = alloc::vec![false; self.num_locs];
        let mut stack = alloc::vec![lp.body_entry];
        let mut out = Vec::new();
        while let Some(l) = stack.pop() {
            if l == lp.header || seen[l] {
                continue;
            }
            seen[l] = true;
            for (i, e) in self.outgoing(l) {
                out.push(i);
                stack.push(e.to);
            }
        }
        out.sort_unstable();
        out
    }
}

struct Builder {
    num_locs: usize,
    edges: Vec<Edge>,
    loops: Vec<LoopInfo>,
    stack: Vec<usize>,
}

impl Builder {
    fn fresh(&mut self) -> Loc {
        self.num_locs += 1;
        self.num_locs - 1
    }

    fn edge(&mut self, from: Loc, to: Loc, stmt: Stmt) -> usize {
        self.edges.push(Edge { from, to, stmt });
        self.edges.len() - 1
    }

    fn block(&mut self, ss: &[AstStmt], mut at: Loc) -> Loc {
        for s in ss {
            at = self.stmt(s, at);
        }
        at
    }

    fn stmt(&mut self, s: &AstStmt, at: Loc) -> Loc {
        match s {
            AstStmt::Assign(v, e) => {
                let n = self.fresh();
                self.edge(at, n, Stmt::Assign(v.clone(), e.to_poly()));
                n
            }
            AstStmt::Havoc(v) => {
                let n = self.fresh();
                self.edge(at, n, Stmt::Havoc(v.clone()));
                n
            }
            AstStmt::Skip => {
                let n = self.fresh();
                self.edge(at, n, Stmt::Skip);
                n
            }
            AstStmt::If(c, t, e) => {
                let f = c.to_formula();
                let (qt, qe) = (self.fresh(), self.fresh());
                self.edge(at, qt, Stmt::Assume(f.clone()));
                self.edge(at, qe, Stmt::Assume(Formula::not(f)));
                let te = self.block(t, qt);
                let ee = match e {
                    Some(e) => self.block(e, qe),
                    None => qe,
                };
                let join = self.fresh();
                self.edge(te, join, Stmt::Skip);
                self.edge(ee, join, Stmt::Skip);
                join
            }
            AstStmt::While(c, body) => {
                let f = c.to_formula();
                let id = self.loops.len();
                let parent = self.stack.last().copied();
                let header = self.fresh();
                let entry_edge = self.edge(at, header, Stmt::Skip);
                let body_entry = self.fresh();
                let exit = self.fresh();
                let enter_edge = self.edge(header, body_entry, Stmt::Assume(f.clone()));
                let exit_edge = self.edge(header, exit, Stmt::Assume(Formula::not(f.clone())));
                self.loops.push(LoopInfo {
                    id,
                    header,
                    body_entry,
                    exit,
                    condition: f,
                    depth: self.stack.len(),
                    parent,
                    children: Vec::new(),
                    entry_edge,
                    enter_edge,
                    exit_edge,
                });
                if let Some(p) = parent {
                    self.loops[p].children.push(id);
                }
                self.stack.push(id);
                let end = self.block(body, body_entry);
                self.stack.pop();
                self.edge(end, header, Stmt::Skip);
                exit
            }
        }
    }
}

/// Lowers a structured program; loops are numbered in source order.
pub fn to_cfa(p: &Program) -> Cfa {
    let mut b = Builder { num_locs: 1, edges: Vec::new(), loops: Vec::new(), stack: Vec::new() };
    let mut at = 0;
    for d in &p.decls {
        if let Init::Expr(e) = &d.init {
            let n = b.fresh();
            b.edge(at, n, Stmt::Assign(d.name.clone(), e.to_poly()));
            at = n;
        }
    }
    let exit = b.block(&p.body, at);
    Cfa {
        num_locs: b.num_locs,
        entry: 0,
        exit,
        edges: b.edges,
        vars: p.vars(),
        inputs: p.inputs(),
        loops: b.loops,
    }
}

/// Post-order over the loop-nesting forest, siblings in source order.
pub fn get_loop_seq(c: &Cfa) -> Vec<usize> {
    fn visit(c: &Cfa, id: usize, out: &mut Vec<usize>) {
        for &ch in &c.loops[id].children {
            visit(c, ch, out);
        }
        out.push(id);
    }
    let mut out = Vec::new();
    for lp in c.loops.iter().filter(|l| l.parent.is_none()) {
        visit(c, lp.id, &mut out);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrumentedCfa {
    pub cfa: Cfa,
    pub bnd: u64,
    /// Target of counter aborts; terminal like `cfa.exit`.
    pub abort: Loc,
    /// Locations below this index belong to the original automaton.
    pub base_locs: usize,
}

/// Applies the per-loop tracing and truncation transformation.
pub fn instrument(c: &Cfa, bnd: u64) -> InstrumentedCfa {
    assert!(bnd >= 1, "bnd must be positive");
    let mut cfa = c.clone();
    let base_locs = cfa.num_locs;
    let mut fresh = || {
        cfa.num_locs += 1;
        cfa.num_locs - 1
    };
    let abort = fresh();
    let mut plan = Vec::new();
    for lp in &c.loops {
        let q: Vec<Loc> = (0..6).map(|_| fresh()).collect();
        plan.push((lp.clone(), q));
    }
    for (lp, q) in plan {
        let i = lp.id;
        // q -s-> q0 -ctr=0-> q1 -pre-> head
        cfa.edges[lp.entry_edge].to = q[0];
        cfa.edges.push(Edge { from: q[0], to: q[1], stmt: Stmt::CtrReset(i) });
        cfa.edges.push(Edge { from: q[1], to: lp.header, stmt: Stmt::Snapshot(i, Pos::Pre) });
        // head -b-> q2 -(ctr==bnd)-> abort ; q2 -(ctr!=bnd)-> q3 -ctr++-> q4 -body-> body_entry
        cfa.edges[lp.enter_edge].to = q[2];
        cfa.edges.push(Edge { from: q[2], to: abort, stmt: Stmt::CtrCheck { lp: i, at_bound: true } });
        cfa.edges.push(Edge { from: q[2], to: q[3], stmt: Stmt::CtrCheck { lp: i, at_bound: false } });
        cfa.edges.push(Edge { from: q[3], to: q[4], stmt: Stmt::CtrIncr(i) });
        cfa.edges.push(Edge { from: q[4], to: lp.body_entry, stmt: Stmt::Snapshot(i, Pos::Body) });
        // head -!b-> q5 -post-> exit
        cfa.edges[lp.exit_edge].to = q[5];
        cfa.edges.push(Edge { from: q[5], to: lp.exit, stmt: Stmt::Snapshot(i, Pos::Post) });
    }
    InstrumentedCfa { cfa, bnd, abort, base_locs }
}

impl InstrumentedCfa {
    /// Removes all instrumentation, recovering the original automaton.
    pub fn strip(&self) -> Cfa {
        let follow = |mut l: Loc| {
            while l >= self.base_locs {
                let next = self.cfa.edges.iter().find(|e| {
                    e.from == l
                        && e.stmt.is_instrumentation()
                        && !matches!(e.stmt, Stmt::CtrCheck { at_bound: true, .. })
                });
                match next {
                    Some(e) => l = e.to,
                    None => break,
                }
            }
            l
        };
        let edges = self
            .cfa
            .edges
            .iter()
            .filter(|e| !e.stmt.is_instrumentation())
            .map(|e| Edge { from: e.from, to: follow(e.to), stmt: e.stmt.clone() })
            .collect();
        Cfa { num_locs: self.base_locs, edges, ..self.cfa.clone() }
    }
}
