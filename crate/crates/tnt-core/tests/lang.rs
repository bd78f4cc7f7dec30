mod common;

use common::*;
use num_bigint::BigInt;
use tnt_core::lang::{get_loop_seq, instrument, parse_program, pretty, to_cfa, ParseError};

#[test]
fn minimal_loop_parses() {
    let p = parse_program("int x = *; while (x >= 0) { x = x + 1; }").unwrap();
    let c = to_cfa(&p);
    assert_eq!(c.loops.len(), 1);
    assert_eq!(c.vars, vec!["x".to_string()]);
    assert_eq!(c.inputs, vec!["x".to_string()]);
}

#[test]
fn sqrt1_condition_matches_hand_evaluation() {
    let c = to_cfa(&parse_program(&corpus("sqrt1-term.imp")).unwrap());
    let cond = &c.loops[0].condition;
    for s in -4i64..=4 {
        for t in -4i64..=4 {
            for (cv, k) in [(0i64, 0i64), (3, -2), (-5, 7)] {
                let st = state(&[("s", s), ("t", t), ("c", cv), ("k", k)]);
                let want = t * t - 4 * s + 2 * t + 1 + cv <= k;
                assert_eq!(cond.eval(&st), Some(want), "s={s} t={t} c={cv} k={k}");
            }
        }
    }
}

#[test]
fn quadratic_guard_condition() {
    let c = to_cfa(&parse_program(&corpus("quadratic-guard.imp")).unwrap());
    for (t, n) in [(0i64, 0i64), (2, 1), (3, 1), (26, 5), (27, 5), (-9, -3)] {
        let st = state(&[("t", t), ("n", n), ("m", 0)]);
        assert_eq!(c.loops[0].condition.eval(&st), Some(t <= n * n + 1));
    }
}

#[test]
fn division_is_unsupported() {
    match parse_program("int x = 1 / 2;") {
        Err(ParseError::Unsupported { .. }) => {}
        other => panic!("expected unsupported feature, got {other:?}"),
    }
}

#[test]
fn malformed_sources_are_rejected() {
    for src in [
        "while (x >= 0) { x = x + 1; }",
        "int x = 0; int x = 1;",
        "int x = 0; while (x >= 0 { x = x + 1; }",
        "int x = 0; x = x +;",
        "int a[3];",
        "int x = f(1);",
    ] {
        assert!(parse_program(src).is_err(), "accepted: {src}");
    }
}

#[test]
fn header_edges_are_complementary() {
    let c = to_cfa(&parse_program("int x = *; while (x >= 0) { x = x - 1; }").unwrap());
    let h = c.loops[0].header;
    assert_eq!(c.outgoing(h).count(), 2);
}

#[test]
fn loop_sequences() {
    let seq = |src: &str| get_loop_seq(&to_cfa(&parse_program(src).unwrap()));
    assert_eq!(seq("int x = *; while (x > 0) { x = x - 1; }"), vec![0]);
    assert_eq!(
        seq("int x = *; int y = *; while (x > 0) { y = x; while (y > 0) { y = y - 1; } x = x - 1; }"),
        vec![1, 0]
    );
    assert_eq!(
        seq("int x = *; while (x > 0) { x = x - 1; } while (x < 5) { while (x < 0) { x = x + 1; } x = x + 1; }"),
        vec![0, 2, 1]
    );
    let c = to_cfa(&parse_program("int x = *; int y = *; while (x > 0) { while (y > 0) { y = y - 1; } x = x - 1; }").unwrap());
    assert_eq!(c.loops[0].children, vec![1]);
    assert_eq!(c.loops[1].parent, Some(0));
}

#[test]
fn corpus_pretty_round_trips() {
    let mut n = 0;
    for e in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = e.unwrap().path();
        if path.extension().is_some_and(|x| x == "imp") {
            let p = parse_program(&std::fs::read_to_string(&path).unwrap()).unwrap();
            let q = parse_program(&pretty(&p)).unwrap();
            assert_eq!(p, q, "{}", path.display());
            assert_eq!(instrument(&to_cfa(&p), 7).strip(), to_cfa(&p));
            n += 1;
        }
    }
    assert_eq!(n, 12);
}

#[test]
fn parse_print_parse_property() {
    props::parse_print_parse(200).unwrap();
}

#[test]
fn strip_property() {
    props::strip_round_trip(200).unwrap();
}

#[test]
fn big_literals_survive() {
    let p = parse_program("int x = 123456789012345678901234567890; while (x > 0) { x = x - 1; }").unwrap();
    let q = parse_program(&pretty(&p)).unwrap();
    assert_eq!(p, q);
    assert!(pretty(&p).contains(&BigInt::parse_bytes(b"123456789012345678901234567890", 10).unwrap().to_string()));
}
