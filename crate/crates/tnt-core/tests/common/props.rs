//! Property checks as plain functions, so several test targets can run them
//! with their own case counts.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tnt_core::exec::{execute, partition, project, RunEnd, TraceClass};
use tnt_core::lang::{instrument, parse_program, pretty, to_cfa, Pos};
use tnt_core::rank::infer_rf;
use tnt_core::solver::{
    check_implication, check_sat, export_smtlib, find_models, parse_smtlib, CheckResult, SearchOpts,
};
use tnt_core::summary::{summarize_body, Path};
use tnt_core::{Atom, Conjunction, Formula, Poly};

use super::*;

pub type PropResult = Result<(), String>;

fn run<S: Strategy>(cases: u32, s: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> PropResult
where
    S::Value: std::fmt::Debug,
{
    run_with(proptest_config(cases), s, f)
}

fn run_with<S: Strategy>(cfg: Config, s: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> PropResult
where
    S::Value: std::fmt::Debug,
{
    let mut r = TestRunner::new(cfg);
    r.run(&s, f).map_err(|e| e.to_string())
}

pub fn lib_poly(e: &GExpr) -> Poly {
    match e {
        GExpr::Int(n) => Poly::constant(*n),
        GExpr::Var(i) => Poly::var(&var_name(*i)),
        GExpr::Neg(a) => lib_poly(a).neg(),
        GExpr::Add(a, b) => lib_poly(a).add(&lib_poly(b)),
        GExpr::Sub(a, b) => lib_poly(a).sub(&lib_poly(b)),
        GExpr::Mul(a, b) => lib_poly(a).mul(&lib_poly(b)),
    }
}

/// The library's reading of a condition, obtained through the parser.
pub fn lib_formula(c: &GCond, nvars: usize) -> Formula {
    let params: Vec<String> = (0..nvars).map(var_name).collect();
    let src = format!("fun p({}) {{ while ({}) {{ skip; }} }}", params.join(", "), c.src());
    let p = parse_program(&src).expect("generated condition parses");
    to_cfa(&p).loops[0].condition.clone()
}

fn slice(s: &State, nvars: usize) -> Vec<BigInt> {
    (0..nvars).map(|i| s[&var_name(i)].clone()).collect()
}

const BND: u64 = 6;

/// Each trace of every loop lands in exactly one class, the class matches
/// the snapshot shape, and nothing is lost.
pub fn partition_disjoint_exhaustive(cases: u32) -> PropResult {
    let s = arb_program().prop_flat_map(|p| {
        let n = p.inputs().len();
        (Just(p), prop::collection::vec(arb_input(n), 1..4))
    });
    run(cases, s, |(g, inputs)| {
        let p = parse_program(&g.src()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let cfa = to_cfa(&p);
        let ic = instrument(&cfa, BND);
        let ivs: Vec<State> = inputs.iter().map(|i| input_vector(&g, i)).collect();
        let runs = execute(&ic, &ivs, 1_000_000);
        for l in 0..cfa.loops.len() {
            let lts = project(&runs, l);
            let total: usize = runs.iter().map(|r| r.snapshots.iter().filter(|s| s.loop_id == l).count()).sum();
            let kept: usize = lts.iter().map(|t| t.snapshots.len()).sum();
            prop_assert_eq!(total, kept, "projection dropped snapshots");
            let part = partition(&lts).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(part.base.len() + part.term.len() + part.mayloop.len(), lts.len());
            for (class, set) in [(TraceClass::Base, &part.base), (TraceClass::Term, &part.term), (TraceClass::MayLoop, &part.mayloop)] {
                for t in set {
                    let body = t.snapshots.iter().filter(|s| s.pos == Pos::Body).count();
                    let post = t.snapshots.last().map(|s| s.pos) == Some(Pos::Post);
                    let expect = match (body, post) {
                        (0, true) => TraceClass::Base,
                        (_, true) => TraceClass::Term,
                        _ => TraceClass::MayLoop,
                    };
                    prop_assert_eq!(class, expect);
                }
            }
            // every projected trace is in exactly one class
            let mut count = BTreeMap::new();
            for t in part.base.iter().chain(&part.term).chain(&part.mayloop) {
                *count.entry((t.input_index, t.snapshots[0].vals.clone(), t.snapshots.len())).or_insert(0) += 1;
            }
            let mut want = BTreeMap::new();
            for t in &lts {
                *want.entry((t.input_index, t.snapshots[0].vals.clone(), t.snapshots.len())).or_insert(0) += 1;
            }
            prop_assert_eq!(count, want);
        }
        Ok(())
    })
}

/// Instrumented snapshots equal the reference interpreter's bounded run, and
/// are a prefix of its unbounded run.
pub fn instrumentation_prefix_fidelity(cases: u32) -> PropResult {
    let s = arb_program().prop_flat_map(|p| {
        let n = p.inputs().len();
        (Just(p), arb_input(n))
    });
    run(cases, s, |(g, input)| {
        let p = parse_program(&g.src()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let cfa = to_cfa(&p);
        let ic = instrument(&cfa, BND);
        let r = &execute(&ic, &[input_vector(&g, &input)], 1_000_000)[0];
        prop_assume!(!matches!(r.end, RunEnd::Budget { .. }));
        let got: Vec<OSnap> = r
            .snapshots
            .iter()
            .map(|s| OSnap { loop_id: s.loop_id, pos: s.pos.as_str(), seq: s.seq, vals: (*s.vals).clone() })
            .collect();
        let (bounded, bend) = oracle_run(&g, &input, Some(BND), usize::MAX);
        prop_assert_eq!(&got, &bounded);
        prop_assert_eq!(r.end == RunEnd::Abort, bend == OEnd::Abort);
        let (free, fend) = oracle_run(&g, &input, None, got.len() + 1);
        // pre/body/post positions agree up to the truncation point
        prop_assert!(free.len() >= got.len());
        prop_assert_eq!(&free[..got.len()], &got[..]);
        if r.end == RunEnd::Exit {
            prop_assert_eq!(fend, OEnd::Exit);
            prop_assert_eq!(free.len(), got.len());
        }
        Ok(())
    })
}

/// Every sampled pair is ranked by some returned function or was discarded,
/// and every returned function ranks at least one sampled pair.
pub fn infer_rf_cover(cases: u32) -> PropResult {
    let s = arb_single_loop().prop_flat_map(|p| {
        let n = p.inputs().len();
        (Just(p), prop::collection::vec(arb_input(n), 1..6), any::<u64>())
    });
    run(cases, s, |(g, inputs, seed)| {
        let p = parse_program(&g.src()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let cfa = to_cfa(&p);
        let ic = instrument(&cfa, 20);
        let ivs: Vec<State> = inputs.iter().map(|i| input_vector(&g, i)).collect();
        let runs = execute(&ic, &ivs, 1_000_000);
        let part = partition(&project(&runs, 0)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let inf = infer_rf(&part.term, &cfa.vars, 30, seed);
        for q in &inf.sample {
            let ranked = inf.rfs.iter().any(|rf| {
                let (a, b) = (rf.eval(&q.s1), rf.eval(&q.s2));
                a >= BigInt::from(0) && a > b
            });
            prop_assert!(ranked || inf.discarded.contains(q), "pair left uncovered: {q:?}");
        }
        for rf in inf.rfs.iter() {
            prop_assert!(inf.sample.iter().any(|q| rf.ranks(&q.s1, &q.s2)));
        }
        prop_assert_eq!(inf.low_confidence, inf.discarded.len() * 2 > inf.sample.len());
        Ok(())
    })
}

/// Models returned by the solver satisfy the formula under the reference evaluator.
pub fn model_honesty(cases: u32) -> PropResult {
    let s = (1usize..=3).prop_flat_map(|n| (Just(n), arb_cond(n), any::<u64>()));
    run(cases, s, |(n, c, seed)| {
        let f = lib_formula(&c, n);
        let vars: Vec<String> = (0..n).map(var_name).collect();
        let opts = SearchOpts { bound: 20, budget: 20_000, seed };
        if let CheckResult::Sat(m) = check_sat(&f, &vars, &opts) {
            prop_assert!(c.eval(&slice(&m, n)), "model {m:?} violates {}", c.src());
        }
        for m in find_models(&f, &vars, &opts, 5) {
            prop_assert!(c.eval(&slice(&m, n)), "model {m:?} violates {}", c.src());
        }
        Ok(())
    })
}

#[derive(Clone, Debug)]
struct Implication {
    n: usize,
    hyp: Vec<(GExpr, bool)>,
    update: Vec<GExpr>,
    concl: GExpr,
    concl_eq: bool,
}

fn arb_implication() -> impl Strategy<Value = Implication> {
    (1usize..=3).prop_flat_map(|n| {
        let lin = || {
            (prop::collection::vec(-3i64..=3, n), -6i64..=6).prop_map(move |(cs, k)| {
                cs.iter().enumerate().fold(GExpr::Int(k), |acc, (i, &c)| {
                    GExpr::Add(Box::new(acc), Box::new(GExpr::Mul(Box::new(GExpr::Int(c)), Box::new(GExpr::Var(i)))))
                })
            })
        };
        let atom = (lin(), prop::bool::weighted(0.2));
        let hyp = prop::collection::vec(atom, 1..4);
        // half the updates are translations x_i + c_i, the rest arbitrary linear maps
        let shift = prop::option::weighted(0.5, prop::collection::vec(-3i64..=3, n));
        let update = prop::collection::vec(lin(), n);
        // the conclusion is often a nonnegative combination of hypotheses plus slack
        let combo = (prop::collection::vec(0i64..=2, 3), 0i64..=2, lin(), prop::bool::weighted(0.6), prop::bool::weighted(0.1));
        (Just(n), hyp, shift, update, combo).prop_map(|(n, hyp, shift, update, (ws, slack, other, derived, eq))| {
            let update = match &shift {
                Some(cs) => cs
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| GExpr::Add(Box::new(GExpr::Var(i)), Box::new(GExpr::Int(c))))
                    .collect(),
                None => update,
            };
            let concl = if derived {
                let d = hyp.iter().zip(ws.iter()).fold(GExpr::Int(0), |acc, ((h, _), &w)| {
                    GExpr::Add(Box::new(acc), Box::new(GExpr::Mul(Box::new(GExpr::Int(w)), Box::new(h.clone()))))
                });
                // under a translation, pre-shift the constant so d(x + c) + k = d(x) + slack
                let k = match &shift {
                    Some(cs) => {
                        let c: Vec<BigInt> = cs.iter().map(|&v| BigInt::from(v)).collect();
                        let zero = vec![BigInt::from(0); n];
                        BigInt::from(slack) - (d.eval(&c) - d.eval(&zero))
                    }
                    None => BigInt::from(slack),
                };
                let k: i64 = k.try_into().expect("small constant");
                GExpr::Add(Box::new(d), Box::new(GExpr::Int(k)))
            } else {
                other
            };
            Implication { n, hyp, update, concl, concl_eq: eq }
        })
    })
}

/// Whenever the implication prover answers Valid, 10^4 sampled states
/// satisfying the hypothesis all satisfy the conclusion after the update.
pub fn implication_soundness(cases: u32, samples: usize) -> PropResult {
    let cfg = Config { max_global_rejects: 50 * cases, ..proptest_config(cases) };
    run_with(cfg, (arb_implication(), any::<u64>()), |(imp, seed)| {
        let n = imp.n;
        let vars: Vec<String> = (0..n).map(var_name).collect();
        let mk = |e: &GExpr, eq: bool| if eq { Atom::eq(lib_poly(e)) } else { Atom::ge(lib_poly(e)) };
        let hyp = Conjunction::from_atoms(imp.hyp.iter().map(|(e, eq)| mk(e, *eq)));
        let update: BTreeMap<String, Poly> = vars.iter().cloned().zip(imp.update.iter().map(lib_poly)).collect();
        let path = Path { guard: Conjunction::top(), update };
        let concl = mk(&imp.concl, imp.concl_eq);
        let res = check_implication(&hyp, &path, &concl, &vars, &SearchOpts { bound: 10, budget: 5_000, seed });
        // every counted case is a Valid answer
        prop_assume!(res == CheckResult::Valid);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let holds = |e: &GExpr, eq: bool, s: &[BigInt]| {
            let v = e.eval(s);
            if eq { v == BigInt::from(0) } else { v >= BigInt::from(0) }
        };
        for _ in 0..samples {
            let s: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(-50i64..=50))).collect();
            if !imp.hyp.iter().all(|(e, eq)| holds(e, *eq, &s)) {
                continue;
            }
            let next: Vec<BigInt> = imp.update.iter().map(|e| e.eval(&s)).collect();
            prop_assert!(holds(&imp.concl, imp.concl_eq, &next), "Valid claimed but {s:?} violates {imp:?}");
        }
        Ok(())
    })
}

/// Exported SMT-LIB parses back to an equivalent formula.
pub fn smt_round_trip(cases: u32) -> PropResult {
    let s = (1usize..=3).prop_flat_map(|n| (Just(n), arb_cond(n), prop::collection::vec(arb_input(n), 30)));
    run(cases, s, |(n, c, points)| {
        let f = lib_formula(&c, n);
        let vars: Vec<String> = (0..n).map(var_name).collect();
        let text = export_smtlib(&f, &vars);
        let g = parse_smtlib(&text).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
        for p in &points {
            let st: State = vars.iter().cloned().zip(p.iter().map(|v| BigInt::from(*v))).collect();
            prop_assert_eq!(g.eval(&st), Some(c.eval(&slice(&st, n))), "{}", text);
        }
        prop_assert_eq!(export_smtlib(&g, &vars), export_smtlib(&parse_smtlib(&export_smtlib(&g, &vars)).unwrap(), &vars));
        Ok(())
    })
}

/// Printing a parsed program and parsing it again gives the same AST.
pub fn parse_print_parse(cases: u32) -> PropResult {
    run(cases, arb_program(), |g| {
        let p = parse_program(&g.src()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let printed = pretty(&p);
        let q = parse_program(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(&p, &q);
        prop_assert_eq!(printed, pretty(&q));
        Ok(())
    })
}

/// Removing the instrumentation recovers the original automaton.
pub fn strip_round_trip(cases: u32) -> PropResult {
    run(cases, (arb_program(), 1u64..1000), |(g, bnd)| {
        let p = parse_program(&g.src()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let cfa = to_cfa(&p);
        prop_assert_eq!(cfa.loops.len(), g.num_loops());
        prop_assert_eq!(instrument(&cfa, bnd).strip(), cfa);
        Ok(())
    })
}

/// One step of the symbolic body summary agrees with one concrete iteration.
pub fn summary_exactness(cases: u32) -> PropResult {
    let s = arb_single_loop().prop_flat_map(|p| {
        let n = p.nvars();
        (Just(p), prop::collection::vec(arb_input(n), 20))
    });
    run(cases, s, |(g, states)| {
        let p = parse_program(&g.src()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let cfa = to_cfa(&p);
        let (_, t) = summarize_body(&cfa, 0).map_err(|e| TestCaseError::fail(format!("{e:?}: {}", g.src())))?;
        let GStmt::While(c, body) = &g.body[0] else { unreachable!() };
        for st in &states {
            let start: Vec<BigInt> = st.iter().map(|v| BigInt::from(*v)).collect();
            let expect = if c.eval(&start) {
                let one = GProg { nparams: g.nparams, decls: Vec::new(), body: body.clone() };
                let (_, end) = oracle_run(&one, st, None, usize::MAX);
                prop_assert_eq!(end, OEnd::Exit);
                Some(exec_block(body, start.clone()))
            } else {
                None
            };
            let lib = t.step(&input_vector(&g, st)).map(|s| slice(&s, g.nvars()));
            prop_assert_eq!(lib, expect, "{}", g.src());
        }
        Ok(())
    })
}

fn exec_block(ss: &[GStmt], mut s: Vec<BigInt>) -> Vec<BigInt> {
    for st in ss {
        match st {
            GStmt::Assign(v, e) => s[*v] = e.eval(&s),
            GStmt::Skip => {}
            GStmt::If(c, t, e) => {
                if c.eval(&s) {
                    s = exec_block(t, s);
                } else if let Some(e) = e {
                    s = exec_block(e, s);
                }
            }
            GStmt::While(..) => unreachable!("loop-free body"),
        }
    }
    s
}
