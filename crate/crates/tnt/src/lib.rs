//! Std companion to `tnt-core`: wall clock, file loading, reports, and the
//! `prove`, `bench`, `trace` and `check` commands.

pub mod report;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use thiserror::Error;
use tnt_core::analysis::{Analyzer, Config};
use tnt_core::clock::Clock;
use tnt_core::exec::{dump_runs, execute, gen_random_inputs};
use tnt_core::lang::{instrument, parse_program, to_cfa, Program};

pub use report::Report;

pub const CSV_HEADER: [&str; 7] = ["name", "verdict", "confidence", "learn_s", "validate_s", "total_s", "switches"];

/// Milliseconds since construction.
pub struct StdClock {
    origin: Instant,
}

impl StdClock {
    pub fn new() -> Self {
        StdClock { origin: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{0}")]
    Report(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_program(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), msg: e.to_string() })
}

/// Exit status for a verdict string.
pub fn exit_code(verdict: &str) -> i32 {
    match verdict {
        "term" => 0,
        "nonterm" => 1,
        _ => 2,
    }
}

/// Runs the analysis; returns the report and any SMT-LIB obligations.
pub fn prove_file(path: &Path, cfg: &Config) -> Result<(Report, Vec<(String, String)>), CliError> {
    let p = load_program(path)?;
    let clock = StdClock::new();
    let mut a = Analyzer::new(&p, cfg.clone(), &clock);
    let v = a.prove_tnt();
    Ok((Report::new(&path.display().to_string(), cfg, &v), std::mem::take(&mut a.obligations)))
}

pub fn write_obligations(dir: &Path, stem: &str, obligations: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, text) in obligations {
        let path = dir.join(format!("{stem}_{name}"));
        std::fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub verdict: String,
    pub confidence: String,
    pub learn_s: f64,
    pub validate_s: f64,
    pub total_s: f64,
    pub switches: usize,
}

impl BenchRow {
    fn record(&self) -> [String; 7] {
        [
            self.name.clone(),
            self.verdict.clone(),
            self.confidence.clone(),
            format!("{:.3}", self.learn_s),
            format!("{:.3}", self.validate_s),
            format!("{:.3}", self.total_s),
            self.switches.to_string(),
        ]
    }
}

fn bench_one(path: &Path, cfg: &Config) -> BenchRow {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    match prove_file(path, cfg) {
        Ok((r, _)) => BenchRow {
            name,
            verdict: r.verdict,
            confidence: r.confidence,
            learn_s: r.timings.learn_s,
            validate_s: r.timings.validate_s,
            total_s: r.timings.total_s,
            switches: r.switches,
        },
        Err(_) => BenchRow {
            name,
            verdict: "error".into(),
            confidence: String::new(),
            learn_s: 0.0,
            validate_s: 0.0,
            total_s: 0.0,
            switches: 0,
        },
    }
}

/// Analyzes every `.imp` file in `dir`; rows sorted by name.
pub fn bench_rows(dir: &Path, cfg: &Config, jobs: usize) -> Result<Vec<BenchRow>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "imp"))
        .collect();
    files.sort();
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(files.len()));
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(f) = files.get(i) else { break };
                let row = bench_one(f, cfg);
                rows.lock().expect("bench worker panicked").push(row);
            });
        }
    });
    let mut rows = rows.into_inner().expect("bench worker panicked");
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Snapshot dump of the instrumented program on the configured random inputs.
pub fn trace_file(path: &Path, cfg: &Config) -> Result<String, CliError> {
    let p = load_program(path)?;
    let cfa = to_cfa(&p);
    let ic = instrument(&cfa, cfg.bnd);
    let n = if cfa.inputs.is_empty() { 1 } else { cfg.inputs };
    let inputs = gen_random_inputs(&cfa.inputs, n, cfg.range, cfg.seed);
    Ok(dump_runs(&execute(&ic, &inputs, cfg.step_budget), &cfa.vars))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Agree(String),
    Disagree(String),
}

/// Re-validates the evidence in a JSON report against its program.
pub fn check_report(report_path: &Path) -> Result<CheckOutcome, CliError> {
    let text = std::fs::read_to_string(report_path).map_err(io_err(report_path))?;
    let r: Report = serde_json::from_str(&text).map_err(|e| CliError::Report(format!("bad report: {e}")))?;
    if r.version != report::REPORT_VERSION {
        return Err(CliError::Report(format!("unsupported report version {}", r.version)));
    }
    let mut file = PathBuf::from(&r.file);
    if !file.exists() {
        if let Some(dir) = report_path.parent() {
            file = dir.join(&r.file);
        }
    }
    let p = load_program(&file)?;
    let cfg = r.core_config().map_err(CliError::Report)?;
    let clock = StdClock::new();
    let mut a = Analyzer::new(&p, Config { timeout_ms: None, ..cfg }, &clock);
    let res = match r.verdict.as_str() {
        "term" => {
            let sets = r.rfsets();
            if sets.len() != a.cfa.loops.len() {
                Err(format!("{} loops but evidence for {}", a.cfa.loops.len(), sets.len()))
            } else {
                sets.iter().try_for_each(|(l, s)| a.recheck_term(*l, s).map_err(|e| format!("loop {l}: {e}")))
            }
        }
        "nonterm" => match r.nonterm().map_err(CliError::Report)? {
            Some((l, ev)) => a.recheck_nonterm(l, &ev).map_err(|e| format!("loop {l}: {e}")),
            None => Err(String::from("nonterm verdict without evidence")),
        },
        "unknown" => Ok(()),
        v => return Err(CliError::Report(format!("unknown verdict '{v}'"))),
    };
    Ok(match res {
        Ok(()) => CheckOutcome::Agree(format!("{}: evidence confirms {}", r.file, r.verdict)),
        Err(e) => CheckOutcome::Disagree(format!("{}: {e}", r.file)),
    })
}
