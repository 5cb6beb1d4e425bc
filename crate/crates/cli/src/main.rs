//! `sumbound`: forward-error bounds for sequential summation.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 validation failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sumbound::bounds::DEFAULT_FAILURE_PROB;
use sumbound::experiments::DEFAULT_SEED;
use sumbound::io::{parse_vector, read_sweep_csv, write_sweep_csv};
use sumbound::validation::{run_validation, ValidationOptions};
use sumbound::{
    analyze, estimate_failure_rate, run_sweep, AnalysisOptions, BoundId, DetVariant, Distribution,
    ExperimentConfig, FloatFormat, NGrid, WorkingPrecision,
};

#[derive(Parser, Debug)]
#[command(
    name = "sumbound",
    version,
    about = "Forward-error bounds for sequential floating-point summation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sum a vector file and report the realized error and all three bounds.
    Analyze(AnalyzeArgs),
    /// Run seeded random summations over a grid of n and write CSV.
    Sweep(SweepArgs),
    /// Run the exact-arithmetic oracle suites.
    Validate(ValidateArgs),
    /// Estimate how often a probabilistic bound is violated.
    FailureRate(FailureRateArgs),
    /// Render a sweep CSV as a log-log SVG chart.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Target format: half, single or double.
    #[arg(long, default_value = "single")]
    precision: FloatFormat,
    /// Failure probability of the probabilistic bounds, in (0, 1).
    #[arg(long, default_value_t = DEFAULT_FAILURE_PROB)]
    delta: f64,
    /// Deterministic bound form: theorem (Σc/|z|) or graphs (√n Σc/|z|).
    #[arg(long, default_value = "theorem")]
    det_variant: DetVariant,
    /// Accumulate bound sums in exact rational arithmetic.
    #[arg(long)]
    exact: bool,
}

impl BoundArgs {
    fn working(&self) -> WorkingPrecision {
        if self.exact {
            WorkingPrecision::Exact
        } else {
            WorkingPrecision::default_for(self.precision)
        }
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// File with one number per line; `#` starts a comment.
    input: PathBuf,
    #[command(flatten)]
    bounds: BoundArgs,
    /// Also write the result as a one-row sweep CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    bounds: BoundArgs,
    /// Summand distribution: normal or uniform.
    #[arg(long, default_value = "normal")]
    dist: Distribution,
    /// Grid of lengths, `start:end:step` or a single `n`.
    #[arg(long, default_value = "100:10000:100")]
    n: NGrid,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Independent trials per grid point.
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Write zero in the timing columns so output is reproducible.
    #[arg(long)]
    no_timings: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Vector length for the exhaustive enumeration (at most 12).
    #[arg(long, default_value_t = 8)]
    exhaustive_n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Skip the half-precision uniform sweep observation.
    #[arg(long)]
    skip_observations: bool,
}

#[derive(Args, Debug)]
struct FailureRateArgs {
    #[command(flatten)]
    bounds: BoundArgs,
    #[arg(long, default_value = "normal")]
    dist: Distribution,
    /// Vector length.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Bound to test: azuma or martingale. Both when absent.
    #[arg(long)]
    bound: Option<BoundId>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Sweep CSV produced by `sumbound sweep`.
    input: PathBuf,
    /// SVG destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 1,
            error: error.into(),
        }
    }

    fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }
}

impl From<sumbound::Error> for Failure {
    fn from(e: sumbound::Error) -> Self {
        match e {
            sumbound::Error::Config(_) | sumbound::Error::FailureProbability(_) => {
                Failure::usage(e)
            }
            _ => Failure::input(e),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn emit(out: Option<&Path>, body: &[u8]) -> CliResult {
    match out {
        Some(path) => fs::write(path, body)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::input),
        None => io::stdout().write_all(body).map_err(Failure::input),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))
        .map_err(Failure::input)?;
    let values = parse_vector(&text)?;
    let options = AnalysisOptions {
        format: args.bounds.precision,
        failure_prob: args.bounds.delta,
        det_variant: args.bounds.det_variant,
        working: args.bounds.working(),
    };
    let a = analyze(&values, &options)?;
    let r = &a.report;
    for w in &a.warnings {
        eprintln!("warning: {w}");
    }
    let kind = if r.zero_sum { "absolute" } else { "relative" };
    let mut s = String::new();
    s += &format!("precision          {}\n", r.format);
    s += &format!("n                  {}\n", r.n);
    s += &format!("rounded inputs     {}\n", a.rounded_inputs);
    s += &format!("computed sum       {:e}\n", r.z_hat_n);
    s += &format!("exact sum          {}\n", r.z_n_exact);
    s += &format!("true {kind} error  {:e}\n", r.true_rel_err);
    s += &format!("deterministic ({})  {:e}\n", r.det_variant, r.det_bound);
    s += &format!("azuma (delta={:e})  {:e}\n", r.failure_prob, r.azuma_bound);
    s += &format!(
        "martingale (delta={:e})  {:e}\n",
        r.failure_prob, r.martingale_bound
    );
    if let Some(m) = a.max_delta_over_u {
        s += &format!("max |delta_k|/u    {m:.6}\n");
    }
    let flags = a.to_row().flags;
    if !flags.is_empty() {
        s += &format!("flags              {flags}\n");
    }
    emit(None, s.as_bytes())?;
    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[a.to_row()])?;
        emit(Some(out), &buf)?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    let mut config = ExperimentConfig::new(args.bounds.precision, args.dist, args.n);
    config.failure_prob = args.bounds.delta;
    config.seed = args.seed;
    config.trials_per_point = args.trials;
    config.det_variant = args.bounds.det_variant;
    config.working = args.bounds.working();
    config.record_timings = !args.no_timings;
    let rows = run_sweep(&config)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows)?;
    emit(args.out.as_deref(), &buf)
}

fn cmd_validate(args: ValidateArgs) -> CliResult<bool> {
    if args.exhaustive_n == 0 || args.exhaustive_n > 12 {
        return Err(Failure::usage(anyhow::anyhow!(
            "--exhaustive-n must lie in 1..=12, got {}",
            args.exhaustive_n
        )));
    }
    let options = ValidationOptions {
        exhaustive_n: args.exhaustive_n,
        seed: args.seed,
        observe_uniform_half: !args.skip_observations,
        ..ValidationOptions::default()
    };
    let report = run_validation(&options)?;
    emit(None, report.to_string().as_bytes())?;
    Ok(report.passed())
}

fn cmd_failure_rate(args: FailureRateArgs) -> CliResult {
    let grid = NGrid::single(args.n)?;
    let mut config = ExperimentConfig::new(args.bounds.precision, args.dist, grid);
    config.failure_prob = args.bounds.delta;
    config.seed = args.seed;
    config.det_variant = args.bounds.det_variant;
    config.working = args.bounds.working();
    let bounds = match args.bound {
        Some(b) => vec![b],
        None => vec![BoundId::Azuma, BoundId::Martingale],
    };
    let mut s =
        String::from("bound,precision,distribution,n,delta,seed,trials,violations,rate,upper99\n");
    for b in bounds {
        let r = estimate_failure_rate(&config, b, args.n, args.trials)?;
        s += &format!(
            "{},{},{},{},{:e},{},{},{},{:e},{:e}\n",
            r.bound,
            r.format,
            r.distribution,
            r.n,
            r.failure_prob,
            r.seed,
            r.trials,
            r.violations,
            r.empirical_rate,
            r.upper_confidence
        );
    }
    emit(None, s.as_bytes())
}

fn cmd_plot(args: PlotArgs) -> CliResult {
    let file = fs::File::open(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))
        .map_err(Failure::input)?;
    let rows = read_sweep_csv(file)?;
    if rows.is_empty() {
        return Err(Failure::input(anyhow::anyhow!(
            "{} contains no rows",
            args.input.display()
        )));
    }
    let svg = sumbound::plot::render_svg(&rows)?;
    emit(args.out.as_deref(), svg.as_bytes())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
        Command::FailureRate(a) => cmd_failure_rate(a).map(|_| true),
        Command::Plot(a) => cmd_plot(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(3)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
