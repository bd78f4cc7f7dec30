//! Machine-readable analysis report (JSON) and its text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tnt_core::analysis::{Config, Confidence, LoopOutcome, Mode, NonTermEvidence, Outcome, Verdict};
use tnt_core::rank::{RankingFunction, RfSet};
use tnt_core::solver::{formula_sexpr, parse_smtlib};
use tnt_core::{Atom, Conjunction, Formula};

/// Bumped whenever a field changes meaning or disappears.
pub const REPORT_VERSION: u32 = 1;

/// Integer that serializes as a JSON number when it fits in i64, else as a decimal string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Int(pub BigInt);

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => {
                n.as_i64().map(|v| Int(v.into())).ok_or_else(|| D::Error::custom("integer expected"))
            }
            serde_json::Value::String(s) => s.parse().map(Int).map_err(D::Error::custom),
            _ => Err(D::Error::custom("integer expected")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub file: String,
    pub verdict: String,
    pub confidence: String,
    pub seed: u64,
    pub config: ConfigEcho,
    pub evidence: Evidence,
    pub loops: Vec<LoopRow>,
    pub switches: usize,
    pub timings: TimingsEcho,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: String,
    pub bnd: u64,
    pub upperbound: usize,
    pub inputs: usize,
    pub range: i64,
    pub degree: u32,
    pub k_pairs: usize,
    pub timeout_secs: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Evidence {
    Term { loops: Vec<LoopRfs> },
    Nonterm { loop_id: usize, depth: usize, recurrent_set: Vec<AtomEcho>, witness: BTreeMap<String, Int> },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRfs {
    pub loop_id: usize,
    pub rfs: Vec<RfEcho>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfEcho {
    pub coeffs: BTreeMap<String, Int>,
    pub constant: Int,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomEcho {
    pub smt: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRow {
    pub loop_id: usize,
    pub outcome: String,
    pub base: usize,
    pub term: usize,
    pub mayloop: usize,
    pub nt_first: bool,
    pub switched: bool,
    pub handoff: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingsEcho {
    pub learn_s: f64,
    pub validate_s: f64,
    pub total_s: f64,
}

pub fn mode_str(m: Mode) -> &'static str {
    match m {
        Mode::Auto => "auto",
        Mode::Term => "term",
        Mode::NonTerm => "nonterm",
    }
}

pub fn parse_mode(s: &str) -> Option<Mode> {
    match s {
        "auto" => Some(Mode::Auto),
        "term" => Some(Mode::Term),
        "nonterm" => Some(Mode::NonTerm),
        _ => None,
    }
}

fn rf_echo(rf: &RankingFunction) -> RfEcho {
    RfEcho {
        coeffs: rf.coeffs.iter().map(|(k, v)| (k.clone(), Int(v.clone()))).collect(),
        constant: Int(rf.constant.clone()),
        text: rf.to_string(),
    }
}

fn secs(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

impl Report {
    pub fn new(file: &str, cfg: &Config, v: &Verdict) -> Report {
        let evidence = match &v.outcome {
            Outcome::Term => Evidence::Term {
                loops: v
                    .rfs()
                    .into_iter()
                    .map(|(loop_id, r)| LoopRfs { loop_id, rfs: r.iter().map(rf_echo).collect() })
                    .collect(),
            },
            Outcome::NonTerm { loop_id, evidence } => Evidence::Nonterm {
                loop_id: *loop_id,
                depth: evidence.depth,
                recurrent_set: evidence
                    .r
                    .atoms()
                    .iter()
                    .map(|a| AtomEcho { smt: formula_sexpr(&Formula::Atom(a.clone())), text: a.to_string() })
                    .collect(),
                witness: evidence.witness.iter().map(|(k, v)| (k.clone(), Int(v.clone()))).collect(),
            },
            Outcome::Unknown => Evidence::None,
        };
        let loops = v
            .loops
            .iter()
            .map(|l| LoopRow {
                loop_id: l.loop_id,
                outcome: match l.outcome {
                    LoopOutcome::Term(_) => "term",
                    LoopOutcome::NonTerm(_) => "nonterm",
                    LoopOutcome::Unknown => "unknown",
                }
                .into(),
                base: l.base,
                term: l.term,
                mayloop: l.mayloop,
                nt_first: l.nt_first,
                switched: l.switched,
                handoff: l.handoff,
                note: l.note.clone(),
            })
            .collect();
        Report {
            version: REPORT_VERSION,
            file: file.into(),
            verdict: v.outcome.as_str().into(),
            confidence: v.confidence.as_str().into(),
            seed: cfg.seed,
            config: ConfigEcho {
                mode: mode_str(cfg.mode).into(),
                bnd: cfg.bnd,
                upperbound: cfg.upperbound,
                inputs: cfg.inputs,
                range: cfg.range,
                degree: cfg.degree,
                k_pairs: cfg.k_pairs,
                timeout_secs: cfg.timeout_ms.map(|t| t / 1000),
            },
            evidence,
            loops,
            switches: v.switches,
            timings: TimingsEcho {
                learn_s: secs(v.timings.learn_ms),
                validate_s: secs(v.timings.validate_ms),
                total_s: secs(v.timings.total_ms),
            },
            timed_out: v.timed_out,
        }
    }

    /// Analysis configuration this report was produced under.
    pub fn core_config(&self) -> Result<Config, String> {
        let c = &self.config;
        Ok(Config {
            mode: parse_mode(&c.mode).ok_or_else(|| format!("unknown mode '{}'", c.mode))?,
            seed: self.seed,
            bnd: c.bnd,
            upperbound: c.upperbound,
            inputs: c.inputs,
            range: c.range,
            degree: c.degree,
            k_pairs: c.k_pairs,
            timeout_ms: c.timeout_secs.map(|s| s * 1000),
            ..Config::default()
        })
    }

    pub fn rfsets(&self) -> Vec<(usize, RfSet)> {
        match &self.evidence {
            Evidence::Term { loops } => loops
                .iter()
                .map(|l| {
                    let set = l
                        .rfs
                        .iter()
                        .map(|r| {
                            let coeffs = r.coeffs.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect();
                            RankingFunction::new(coeffs, r.constant.0.clone())
                        })
                        .collect();
                    (l.loop_id, set)
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn nonterm(&self) -> Result<Option<(usize, NonTermEvidence)>, String> {
        let Evidence::Nonterm { loop_id, depth, recurrent_set, witness } = &self.evidence else {
            return Ok(None);
        };
        let mut atoms: Vec<Atom> = Vec::new();
        for a in recurrent_set {
            let f = parse_smtlib(&format!("(assert {})", a.smt)).map_err(|e| format!("atom '{}': {e}", a.smt))?;
            match f {
                Formula::Atom(x) => atoms.push(x),
                Formula::True => {}
                other => return Err(format!("atom '{}' parsed to {other:?}", a.smt)),
            }
        }
        let confidence = match self.confidence.as_str() {
            "symbolic" => Confidence::Symbolic,
            _ => Confidence::Bounded,
        };
        let ev = NonTermEvidence {
            r: Conjunction::from_atoms(atoms),
            witness: witness.iter().map(|(k, v)| (k.clone(), v.0.clone())).collect(),
            depth: *depth,
            confidence,
        };
        Ok(Some((*loop_id, ev)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "file: {}", self.file);
        let _ = writeln!(s, "verdict: {} ({})", self.verdict, self.confidence);
        match &self.evidence {
            Evidence::Term { loops } => {
                for l in loops {
                    let rfs: Vec<&str> = l.rfs.iter().map(|r| r.text.as_str()).collect();
                    let _ = writeln!(s, "loop {}: ranking functions {{{}}}", l.loop_id, rfs.join(", "));
                }
            }
            Evidence::Nonterm { loop_id, depth, recurrent_set, witness } => {
                let atoms: Vec<&str> = recurrent_set.iter().map(|a| a.text.as_str()).collect();
                let r = if atoms.is_empty() { String::from("true") } else { atoms.join(" && ") };
                let _ = writeln!(s, "loop {loop_id}: recurrent set {r} (depth {depth})");
                let w: Vec<String> = witness.iter().map(|(k, v)| format!("{k}={}", v.0)).collect();
                let _ = writeln!(s, "witness: {}", w.join(" "));
            }
            Evidence::None => {}
        }
        for l in &self.loops {
            let _ = write!(
                s,
                "loop {}: {} base={} term={} mayloop={} first={}",
                l.loop_id,
                l.outcome,
                l.base,
                l.term,
                l.mayloop,
                if l.nt_first { "nonterm" } else { "term" }
            );
            if let Some(n) = &l.note {
                let _ = write!(s, " note: {n}");
            }
            s.push('\n');
        }
        let t = &self.timings;
        let _ = writeln!(
            s,
            "switches: {}  learn {:.3}s  validate {:.3}s  total {:.3}s{}",
            self.switches,
            t.learn_s,
            t.validate_s,
            t.total_s,
            if self.timed_out { "  (timed out)" } else { "" }
        );
        let _ = writeln!(s, "seed: {}", self.seed);
        s
    }
}
