use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fpsat::oracle;
use fpsat::{Formula, Mode, ResourceModel, SolveConfig, Status};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_UNKNOWN: u8 = 0;
const EXIT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "fpsat", version, about = "Hybrid K-SAT solver with a simulated fixed-point quantum search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a DIMACS CNF formula.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliMode {
    Hybrid,
    Classical,
    /// Exhaustive search, for reference.
    Brute,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// DIMACS file; standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of decomposition variables.
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Qubit fraction c in A·γ·log2(1/γ) + B·γ = c.
    #[arg(long, conflicts_with = "r_max")]
    c: Option<f64>,
    /// Largest radius handed to the quantum search.
    #[arg(long)]
    r_max: Option<usize>,
    /// Binary cover radius fraction [default: 1/K].
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long = "A", default_value_t = 1.0)]
    a: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    /// Parallel workers [default: 2^k].
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 3)]
    retries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CliMode::Hybrid)]
    mode: CliMode,
    /// Write one JSON object per search call to this file.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Directory for constructed covering codes.
    #[arg(long)]
    cover_cache: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let Command::Solve(args) = cli.command;
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn read_formula(input: Option<&PathBuf>) -> anyhow::Result<Formula> {
    let (text, name) = match input {
        Some(path) => (
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            path.display().to_string(),
        ),
        None => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text).context("reading standard input")?;
            (text, "<stdin>".to_string())
        }
    };
    Formula::parse_dimacs(&text).with_context(|| format!("parsing {name}"))
}

fn run(args: &SolveArgs) -> anyhow::Result<u8> {
    let f = read_formula(args.input.as_ref())?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    writeln!(out, "c {} variables, {} clauses", f.num_vars(), f.num_clauses())?;

    if let CliMode::Brute = args.mode {
        let model = match oracle::brute_sat(&f) {
            Ok(m) => m,
            Err(e) => return unknown(&mut out, &e),
        };
        if let Some(stats) = &args.stats {
            fs::write(stats, "")?;
        }
        return match model {
            Some(m) => print_model(&mut out, &f, &m),
            None => {
                writeln!(out, "s UNSATISFIABLE")?;
                writeln!(out, "c one-sided: failure-prob <= 0")?;
                Ok(EXIT_UNSAT)
            }
        };
    }

    let rm = match ResourceModel::solve(args.a, args.b, args.c.unwrap_or(0.3)) {
        Ok(rm) => rm,
        Err(e) => return unknown(&mut out, &e),
    };
    let cfg = SolveConfig {
        k: args.k,
        clause_width: None,
        epsilon: args.epsilon,
        rho: args.rho,
        cover_blocks: 1,
        workers: args.workers,
        retries: args.retries,
        seed: args.seed,
        mode: match args.mode {
            CliMode::Classical => Mode::Classical,
            _ => Mode::Hybrid,
        },
        r_max: args.r_max,
        cover_cache: args.cover_cache.clone(),
    };
    let result = match fpsat::solve(&f, &cfg, &rm) {
        Ok(r) => r,
        Err(e) => return unknown(&mut out, &e),
    };
    if let Some(wall) = result.stats.wall_time {
        log::info!("solved in {wall:?}");
    }

    if let Some(path) = &args.stats {
        let mut w = BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        for rec in &result.records {
            serde_json::to_writer(&mut w, rec)?;
            writeln!(w)?;
        }
        w.flush()?;
    }

    let s = &result.stats;
    writeln!(
        out,
        "c K = {}, radius = {}, r_max = {}, cover = {}, prefixes = {}, dispatches = {}",
        s.clause_width, s.radius, s.r_max, s.cover_size, s.prefixes_tried, s.dispatches
    )?;
    writeln!(
        out,
        "c branches = {}, quantum calls = {}, queries = {}",
        s.branches, s.quantum_calls, s.total_queries
    )?;
    match (result.status, &result.model) {
        (Status::Sat, Some(m)) => print_model(&mut out, &f, m),
        _ => {
            writeln!(out, "s UNSATISFIABLE")?;
            writeln!(out, "c one-sided: failure-prob <= {:.3e}", s.false_bound)?;
            Ok(EXIT_UNSAT)
        }
    }
}

fn print_model(out: &mut impl Write, f: &Formula, m: &fpsat::Assignment) -> anyhow::Result<u8> {
    anyhow::ensure!(f.evaluate(m)?, "model failed re-verification against the input");
    writeln!(out, "s SATISFIABLE")?;
    let lits: Vec<String> = m.to_dimacs_lits().iter().map(i64::to_string).collect();
    writeln!(out, "v {} 0", lits.join(" "))?;
    Ok(EXIT_SAT)
}

fn unknown(out: &mut impl Write, e: &fpsat::Error) -> anyhow::Result<u8> {
    writeln!(out, "c {e}")?;
    writeln!(out, "s UNKNOWN")?;
    Ok(EXIT_UNKNOWN)
}
