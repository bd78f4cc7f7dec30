use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tnt::{bench_csv, bench_rows, check_report, exit_code, prove_file, trace_file, write_obligations, CheckOutcome};
use tnt_core::analysis::{Config, Mode};

#[derive(Parser)]
#[command(name = "tnt", version, about = "Termination and non-termination prover for small integer programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prove termination or non-termination of one program.
    Prove {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
        /// Write SMT-LIB recurrence obligations into this directory.
        #[arg(long)]
        emit_smt: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        report: Format,
    },
    /// Analyze every .imp file in a directory and print a CSV table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Dump the snapshots recorded on random inputs.
    Trace {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Re-validate the evidence in a JSON report.
    Check { report: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Term,
    Nonterm,
}

#[derive(Args)]
struct Opts {
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    bnd: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    upperbound: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    inputs: u64,
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(i64).range(1..))]
    range: i64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    degree: u32,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    k_pairs: u64,
    /// Seconds per program.
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
    timeout: u64,
}

impl Opts {
    fn config(&self) -> Config {
        Config {
            mode: match self.mode {
                ModeArg::Auto => Mode::Auto,
                ModeArg::Term => Mode::Term,
                ModeArg::Nonterm => Mode::NonTerm,
            },
            seed: self.seed,
            bnd: self.bnd,
            upperbound: self.upperbound as usize,
            inputs: self.inputs as usize,
            range: self.range,
            degree: self.degree,
            k_pairs: self.k_pairs as usize,
            timeout_ms: Some(self.timeout * 1000),
            ..Config::default()
        }
    }
}

fn run(cli: Cli) -> Result<i32, tnt::CliError> {
    match cli.cmd {
        Cmd::Prove { file, opts, emit_smt, report } => {
            let cfg = Config { emit_smt: emit_smt.is_some(), ..opts.config() };
            let (r, obligations) = prove_file(&file, &cfg)?;
            if let Some(dir) = emit_smt {
                let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                write_obligations(&dir, &stem, &obligations)?;
            }
            match report {
                Format::Text => print!("{}", r.to_text()),
                Format::Json => println!("{}", r.to_json()),
            }
            Ok(exit_code(&r.verdict))
        }
        Cmd::Bench { dir, opts, jobs } => {
            let rows = bench_rows(&dir, &opts.config(), jobs)?;
            print!("{}", bench_csv(&rows)?);
            Ok(0)
        }
        Cmd::Trace { file, opts } => {
            print!("{}", trace_file(&file, &opts.config())?);
            Ok(0)
        }
        Cmd::Check { report } => match check_report(&report)? {
            CheckOutcome::Agree(m) => {
                println!("ok: {m}");
                Ok(0)
            }
            CheckOutcome::Disagree(m) => {
                println!("mismatch: {m}");
                Ok(1)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
