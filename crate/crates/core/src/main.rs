use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddfw::cnf::parse_dimacs;
use ddfw::engine::{Engine, Limits, Pick, SolverConfig, Status};
use ddfw::harness::{self, to_tsv, Budget, Tsv};
use ddfw::restart::RestartSchedule;
use ddfw::weights::TransferPolicy;

#[derive(Parser)]
#[command(
    name = "ddfw",
    version,
    about = "Clause-weighting local search SAT solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one DIMACS CNF file. Exits 10 when satisfiable, 0 otherwise.
    Solve(SolveArgs),
    /// Run one configuration over every *.cnf file in a directory.
    Bench(BenchArgs),
    /// PAR-2 over a grid of linear transfer parameters (a, c).
    Grid(GridArgs),
    /// PAR-2 for a range of cspt values.
    Csptsweep(SweepArgs),
    /// Write planted random k-SAT instances.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Configuration string W-cC-P, e.g. lw-ith-c.1-wrnd. Applied before the
    /// individual options below.
    #[arg(long)]
    config: Option<String>,
    /// Transfer rule: fixed, lw-itl, lw-ite, lw-ith or custom:a_gt,a_eq,c_gt,c_eq.
    #[arg(long)]
    wt: Option<TransferPolicy>,
    #[arg(long)]
    cspt: Option<f64>,
    #[arg(long)]
    spt: Option<f64>,
    /// grdy or wrnd.
    #[arg(long)]
    pick: Option<Pick>,
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iterations per try, or `inf`.
    #[arg(long, value_parser = parse_flips)]
    maxflips: Option<FlipLimit>,
    #[arg(long)]
    maxtries: Option<u64>,
    #[arg(long, value_parser = parse_on_off)]
    restarts: Option<bool>,
    #[arg(long)]
    restart_sched: Option<RestartSchedule>,
    #[arg(long)]
    restart_base: Option<u64>,
    /// Disable sideways moves.
    #[arg(long)]
    no_sideways: bool,
}

#[derive(Clone, Copy)]
struct FlipLimit(Option<u64>);

fn parse_flips(s: &str) -> Result<FlipLimit, String> {
    if s == "inf" {
        return Ok(FlipLimit(None));
    }
    s.parse::<u64>()
        .map(|n| FlipLimit(Some(n)))
        .map_err(|e| format!("{e} (expected a count or `inf`)"))
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err("expected on or off".into()),
    }
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(label) = &self.config {
            cfg.apply_label(label)?;
        }
        if let Some(p) = self.wt {
            cfg.policy = p;
        }
        if let Some(c) = self.cspt {
            cfg.coins.cspt = c;
        }
        if let Some(s) = self.spt {
            cfg.coins.spt = s;
        }
        if let Some(p) = self.pick {
            cfg.pick = p;
        }
        if let Some(w0) = self.w0 {
            if !(w0 > 0.0 && w0.is_finite()) {
                bail!("--w0 must be positive");
            }
            cfg.w0 = w0;
        }
        cfg.seed = self.seed;
        if let Some(FlipLimit(m)) = self.maxflips {
            cfg.max_flips = m;
        }
        if let Some(t) = self.maxtries {
            cfg.max_tries = t;
        }
        if let Some(on) = self.restarts {
            cfg.restart.enabled = on;
        }
        if let Some(s) = self.restart_sched {
            cfg.restart.schedule = s;
        }
        if let Some(b) = self.restart_base {
            if b == 0 {
                bail!("--restart-base must be positive");
            }
            cfg.restart.base = b;
        }
        cfg.sideways = !self.no_sideways;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Write sideways moves per window of flips as TSV.
    #[arg(long)]
    trace_sideways: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    trace_window: u64,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    timeout: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    timeout: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    a_max: f64,
    #[arg(long, default_value_t = 0.05)]
    a_step: f64,
    #[arg(long, default_value_t = 2.0)]
    c_max: f64,
    #[arg(long, default_value_t = 0.25)]
    c_step: f64,
}

#[derive(Args)]
struct SweepArgs {
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    timeout: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    vars: usize,
    #[arg(long)]
    clauses: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn timeout(secs: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(secs).context("timeout must be a nonnegative number of seconds")
}

fn write_tsv<T: Tsv>(path: &Path, rows: &[T]) -> Result<()> {
    fs::write(path, to_tsv(rows)).with_context(|| format!("writing {}", path.display()))
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let cfg = args.solver.config()?;
    let bytes = fs::read(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let formula =
        parse_dimacs(&bytes).with_context(|| format!("parsing {}", args.file.display()))?;
    let limit = args.timeout.map(timeout).transpose()?;
    if args.threads == 0 {
        bail!("--threads must be at least 1");
    }

    let out = io::stdout();
    let mut out = BufWriter::new(out.lock());
    writeln!(
        out,
        "c ddfw {} seed {} threads {}",
        cfg.label(),
        cfg.seed,
        args.threads
    )?;
    writeln!(
        out,
        "c {} variables, {} clauses",
        formula.num_vars(),
        formula.num_clauses()
    )?;
    out.flush()?;

    let result = match &args.trace_sideways {
        Some(path) => {
            if args.threads != 1 {
                bail!("--trace-sideways requires --threads 1");
            }
            let mut engine =
                Engine::new(&formula, cfg.clone(), 0).with_sideways_trace(args.trace_window);
            let result = engine.run(&Limits::timeout(limit));
            let rows = harness::trace_rows(&engine);
            write_tsv(path, &rows)?;
            result
        }
        None => harness::solve_portfolio(&formula, &cfg, args.threads, limit),
    };

    let c = &result.counters;
    writeln!(
        out,
        "c flips {} tries {} time {:.3}s local_minima {} sideways {} transfers {}",
        result.flips,
        result.tries,
        result.elapsed.as_secs_f64(),
        c.local_minima,
        c.sideways,
        c.transfers
    )?;
    match (&result.status, &result.model) {
        (Status::Sat, Some(model)) => {
            debug_assert_eq!(formula.verify_model(model), Ok(true));
            writeln!(out, "s SATISFIABLE")?;
            let lits: Vec<String> = model.lits().map(|l| l.to_string()).collect();
            for chunk in lits.chunks(16) {
                writeln!(out, "v {}", chunk.join(" "))?;
            }
            writeln!(out, "v 0")?;
            out.flush()?;
            Ok(ExitCode::from(10))
        }
        _ => {
            writeln!(out, "s UNKNOWN")?;
            out.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = args.solver.config()?;
    let instances = harness::load_instances(&args.dir)?;
    let budget = Budget::timeout(timeout(args.timeout)?);
    let records = harness::bench(&instances, &cfg, &budget);
    write_tsv(&args.out, &records)?;
    let s = harness::par2(&records, args.timeout)?;
    println!(
        "{}\tsolved {}/{}\tpar2 {:.3}",
        cfg.label(),
        s.solved,
        s.total,
        s.par2
    );
    Ok(())
}

fn grid(args: GridArgs) -> Result<()> {
    let cfg = args.solver.config()?;
    let instances = harness::load_instances(&args.dir)?;
    let a = harness::steps(0.0, args.a_max, args.a_step);
    let c = harness::steps(0.0, args.c_max, args.c_step);
    let rows = harness::grid_search(
        &instances,
        &a,
        &c,
        &cfg,
        &Budget::timeout(timeout(args.timeout)?),
    )?;
    write_tsv(&args.out, &rows)
}

fn csptsweep(args: SweepArgs) -> Result<()> {
    let cfg = args.solver.config()?;
    let instances = harness::load_instances(&args.dir)?;
    let values = harness::steps(args.from, args.to, args.step);
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        bail!("cspt values must lie in [0, 1]");
    }
    let rows = harness::cspt_sweep(
        &instances,
        &values,
        &cfg,
        &Budget::timeout(timeout(args.timeout)?),
    )?;
    write_tsv(&args.out, &rows)
}

fn generate(args: GenArgs) -> Result<()> {
    if args.k == 0 || args.k > args.vars {
        bail!("--k must be between 1 and --vars");
    }
    fs::create_dir_all(&args.out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for i in 0..args.count {
        let (formula, _) = harness::planted_ksat(args.vars, args.clauses, args.k, &mut rng);
        let path = args.out_dir.join(format!(
            "planted-{}-{}-{:03}.cnf",
            args.vars, args.clauses, i
        ));
        let text = format!(
            "c planted {}-SAT seed {} index {}\n{}",
            args.k,
            args.seed,
            i,
            formula.to_dimacs()
        );
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args).map(|_| ExitCode::SUCCESS),
        Command::Grid(args) => grid(args).map(|_| ExitCode::SUCCESS),
        Command::Csptsweep(args) => csptsweep(args).map(|_| ExitCode::SUCCESS),
        Command::Gen(args) => generate(args).map(|_| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("c error: {e:#}");
        ExitCode::from(1)
    })
}
