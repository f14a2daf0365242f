//! Command-line front end: `run`, `batch` and `validate`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::config::Config;
use crate::simulation::{run_simulation, write_trajectory_jsonl, OutcomeKind, Regime};
use crate::stats::{emit_outputs, run_batch, BatchOptions, ConditionGrid, RunRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "aif-traffic", version, about = "Active inference agents negotiating an unsignalized intersection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a single interaction.
    Run(RunArgs),
    /// Repeat simulations over a grid of conditions.
    Batch(BatchArgs),
    /// Check a configuration and print every resolved parameter.
    Validate(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// TOML configuration file; defaults are used for missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `KEY=VALUE`, where KEY is a dotted path or an unambiguous leaf name.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Include every belief particle in the trajectory log.
    #[arg(long)]
    pub debug_particles: bool,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Repetitions per condition.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Initial distance differences [m]; defaults to the regime's standard grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub deltas: Option<Vec<f64>>,
    /// Spacing of the adversarial sweep over [-10, 0] m.
    #[arg(long, default_value_t = 0.5)]
    pub sweep_step: f64,
    /// Run all cooperative regimes instead of the configured one.
    #[arg(long)]
    pub all_regimes: bool,
}

fn load(common: &CommonArgs) -> Result<Config, String> {
    if let Some(p) = &common.config {
        if !p.exists() {
            return Err(format!("config file {} does not exist", p.display()));
        }
    }
    let mut ov = common.overrides.clone();
    if let Some(r) = common.regime {
        ov.push(format!("scenario.regime=\"{}\"", r.name()));
    }
    if let Some(s) = common.seed {
        ov.push(format!("scenario.seed={s}"));
    }
    Config::load(common.config.as_deref(), &ov).map_err(|e| e.to_string())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn cmd_validate(args: &CommonArgs) -> i32 {
    match load(args) {
        Ok(cfg) => {
            println!("# resolved configuration (valid)");
            println!("# surprise drift lambda = 10^{} = {:e}", cfg.policy.lambda_log10, cfg.policy.lambda());
            print!("{}", cfg.to_toml());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    let mut cfg = match load(&args.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    cfg.scenario.debug_particles |= args.debug_particles;
    info!("running {} with delta_d0={} seed={}", cfg.scenario.regime, cfg.scenario.delta_d0, cfg.scenario.seed);
    let res = match run_simulation(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let written = fs::create_dir_all(&args.out)
        .map_err(|e| format!("{}: {e}", args.out.display()))
        .and_then(|_| write_file(&args.out.join("trajectory.jsonl"), |w| write_trajectory_jsonl(w, &res)))
        .and_then(|_| {
            write_file(&args.out.join("outcome.json"), |w| {
                serde_json::to_writer_pretty(&mut *w, &res.outcome)?;
                w.write_all(b"\n")
            })
        });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    let o = &res.outcome;
    let fmt_t = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t:.1}s"));
    println!(
        "outcome={} t_end={:.1}s cross_a={} cross_b={} min_gap={:.2}m replans_a={} replans_b={}",
        o.kind,
        o.t_end,
        fmt_t(o.t_cross_a),
        fmt_t(o.t_cross_b),
        o.min_gap,
        res.replan_times[0].len(),
        res.replan_times[1].len()
    );
    EXIT_OK
}

fn print_summary(table: &crate::stats::OutcomeTable) {
    for row in &table.rows {
        let mut line = format!("{:<20} dD0={:>6.1} n={:<3}", row.regime.name(), row.delta_d0, row.n);
        for k in OutcomeKind::ALL {
            let (lo, hi) = row.interval(k).unwrap_or((f64::NAN, f64::NAN));
            line.push_str(&format!("  {}={:.2} [{:.2},{:.2}]", k.name(), row.proportion(k), lo, hi));
        }
        if row.failed > 0 {
            line.push_str(&format!("  FAILED={}", row.failed));
        }
        println!("{line}");
    }
}

pub fn cmd_batch(args: &BatchArgs, stop: &AtomicBool) -> i32 {
    let cfg = match load(&args.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if args.reps == 0 || !(args.sweep_step > 0.0) {
        eprintln!("error: --reps and --sweep-step must be positive");
        return EXIT_CONFIG;
    }
    let regime = cfg.scenario.regime;
    let mut grid = if regime == Regime::Adversarial {
        ConditionGrid::adversarial(args.sweep_step, args.reps)
    } else if args.all_regimes {
        ConditionGrid::cooperative(&Regime::COOPERATIVE, args.reps)
    } else {
        ConditionGrid::cooperative(&[regime], args.reps)
    };
    if let Some(d) = &args.deltas {
        grid.delta_d0 = d.clone();
    }
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return EXIT_RUNTIME;
    }
    // streamed so an interrupted batch leaves its finished runs behind
    let partial_path = args.out.join("runs.partial.jsonl");
    let mut partial = match File::create(&partial_path) {
        Ok(f) => BufWriter::new(f),
        Err(e) => {
            eprintln!("error: {}: {e}", partial_path.display());
            return EXIT_RUNTIME;
        }
    };
    let total = grid.len();
    let mut done = 0usize;
    let opts = BatchOptions { base_seed: cfg.scenario.seed, jobs, stop: Some(stop) };
    let result = run_batch(&cfg, &grid, opts, |r: &RunRecord| {
        done += 1;
        info!("[{done}/{total}] {} dD0={} rep={} -> {:?}", r.regime, r.delta_d0, r.rep, r.kind);
        let line = serde_json::to_string(r).unwrap_or_default();
        if writeln!(partial, "{line}").and_then(|_| partial.flush()).is_err() {
            warn!("could not append to {}", partial_path.display());
        }
    });
    drop(partial);
    let batch = match result {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match emit_outputs(&args.out, &batch.table, &batch.records) {
        Ok(p) => {
            let _ = fs::remove_file(&partial_path);
            print_summary(&batch.table);
            println!("wrote {}, {}, {}", p.table.display(), p.raw.display(), p.plot.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    }
    if !batch.complete {
        eprintln!("error: batch interrupted after {}/{} runs; partial results written", batch.records.len(), total);
        return EXIT_RUNTIME;
    }
    if batch.table.failures() > 0 {
        warn!("{} runs failed; see the error field in runs.jsonl", batch.table.failures());
    }
    EXIT_OK
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Batch(a) => {
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                warn!("cannot install interrupt handler: {e}");
            }
            cmd_batch(&a, &stop)
        }
    }
}
