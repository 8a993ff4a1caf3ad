//! `tcusum` — detection and estimation of transient changes from the
//! command line.
//!
//! Exit codes: 0 success, 2 malformed input or usage, 3 model/domain
//! errors, 4 resource limits (state explosion). Results go to stdout as
//! a single document; diagnostics and machine-readable errors go to
//! stderr.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tcusum_core::error::Error;
use tcusum_core::exactdist::{asymptotic_mle_pmf, ple_joint_probability, LatticePair, Side};
use tcusum_core::glr::{estimated_cusum_at, glr_stopping_time, Baseline, GlrConfig};
use tcusum_core::harness::{export_results, run_experiment, ExperimentConfig, ExportFormat};
use tcusum_core::io::{parse_pair_json, parse_series_csv, trace_to_csv};
use tcusum_core::model::{DistributionPair, ExponentialFamilyModel};
use tcusum_core::multi::{
    familywise_thresholds, mle_k_intervals, sequential_detect, DetectorConfig,
};
use tcusum_core::single::{false_alarm_threshold, mle_interval, ThresholdMethod};
use tcusum_core::walks::{random_walk, renewed_cusum, Direction};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "tcusum",
    version,
    about = "Transient change detection and estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Retrospective interval MLE (single interval, or K intervals).
    Detect(DetectArgs),
    /// Sequential detection with familywise error control.
    Monitor(MonitorArgs),
    /// GLR detection with nuisance parameters in an exponential family.
    Glr(GlrArgs),
    /// False-alarm-controlled thresholds.
    Threshold(ThresholdArgs),
    /// Run a Monte Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Exact and asymptotic estimation-error distributions.
    Exactdist(ExactdistArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Series CSV: one observation per line, optional `x` header.
    #[arg(long)]
    series: PathBuf,
    /// Distribution pair JSON: {"base": {...}, "change": {...}}.
    #[arg(long)]
    pair: PathBuf,
    /// Number of change intervals; omitted or 1 gives the single-interval MLE.
    #[arg(long)]
    k: Option<usize>,
    /// Recompute the likelihood gain from the raw series and fail on mismatch.
    #[arg(long)]
    verify: bool,
    /// Write a (t, s, w, w_rev) trace CSV for plotting.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    pair: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Threshold method: exact lattice DP or Monte Carlo moments.
    #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
    method: MethodChoice,
    /// Seed for Monte Carlo thresholds (required with them).
    #[arg(long)]
    seed: Option<u64>,
    /// Replicates for Monte Carlo moments.
    #[arg(long, default_value_t = 100_000)]
    mc_reps: usize,
    /// Override the disorder threshold directly (skips calibration).
    #[arg(long)]
    h_alpha: Option<f64>,
    /// Override the readjustment threshold directly.
    #[arg(long)]
    h_beta: Option<f64>,
    /// Write a (t, w, w_tilde, regime) CSV of the detector's run.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct GlrArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long, value_enum)]
    family: FamilyChoice,
    #[arg(long, default_value_t = 0.6)]
    omega: f64,
    #[arg(long)]
    threshold: f64,
    /// Known baseline natural parameter; omitted = estimated.
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long, default_value_t = 2)]
    min_segment: usize,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    pair: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    /// Also compute the readjustment threshold at this level.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
    method: MethodChoice,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    replicates: usize,
    /// Disable the 2-SE conservative inflation of Monte Carlo moments.
    #[arg(long)]
    no_conservative: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the timestamped JSON + CSV results.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExactdistArgs {
    #[command(subcommand)]
    what: ExactdistCommand,
}

#[derive(Subcommand)]
enum ExactdistCommand {
    /// CSV of (l, r, p_lr) over all feasible offsets.
    Ple {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV of (offset, p_r, q_l, bracket) at a truncation horizon.
    Asymptotic {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_offset: i64,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodChoice {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyChoice {
    NormalUnitVariance,
    Bernoulli,
    Poisson,
    Exponential,
}

impl From<FamilyChoice> for ExponentialFamilyModel {
    fn from(f: FamilyChoice) -> Self {
        match f {
            FamilyChoice::NormalUnitVariance => ExponentialFamilyModel::NormalUnitVariance,
            FamilyChoice::Bernoulli => ExponentialFamilyModel::Bernoulli,
            FamilyChoice::Poisson => ExponentialFamilyModel::Poisson,
            FamilyChoice::Exponential => ExponentialFamilyModel::Exponential,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = classify(&err);
            eprintln!(
                "{}",
                serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "error": {"kind": kind, "message": err.to_string()},
                })
            );
            ExitCode::from(code)
        }
    }
}

fn classify(err: &Error) -> (&'static str, u8) {
    match err {
        Error::InvalidInput(_) | Error::Io(_) => ("input", 2),
        Error::ZeroProbabilityObservation(_) | Error::BoundaryMle(_) | Error::UnboundedMoment => {
            ("model", 3)
        }
        Error::StateExplosion { .. } | Error::GridOverflow(_) => ("resource", 4),
    }
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::invalid_input(format!("{}: {e}", path.display())))
}

fn load_series(path: &Path) -> Result<Vec<f64>, Error> {
    parse_series_csv(&read_file(path)?)
}

fn load_pair(path: &Path) -> Result<DistributionPair, Error> {
    parse_pair_json(&read_file(path)?)
}

fn is_lattice(pair: &DistributionPair) -> bool {
    pair.base.finite_support().is_some() && pair.change.finite_support().is_some()
}

fn resolve_method(
    choice: MethodChoice,
    pair: &DistributionPair,
    seed: Option<u64>,
) -> Result<(ThresholdMethod, u64), Error> {
    let method = match choice {
        MethodChoice::Exact => {
            if !is_lattice(pair) {
                return Err(Error::invalid_input(
                    "--method exact needs finite-lattice densities on both sides; \
                     use monte-carlo for continuous pairs",
                ));
            }
            ThresholdMethod::ExactLattice
        }
        MethodChoice::MonteCarlo => ThresholdMethod::MonteCarlo,
        MethodChoice::Auto => {
            if is_lattice(pair) {
                ThresholdMethod::ExactLattice
            } else {
                ThresholdMethod::MonteCarlo
            }
        }
    };
    let seed = match (method, seed) {
        (ThresholdMethod::MonteCarlo, None) => {
            return Err(Error::invalid_input(
                "Monte Carlo thresholds require an explicit --seed",
            ))
        }
        (ThresholdMethod::MonteCarlo, Some(s)) => s,
        (ThresholdMethod::ExactLattice, _) => 0,
    };
    Ok((method, seed))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Detect(args) => detect(args),
        Command::Monitor(args) => monitor(args),
        Command::Glr(args) => glr(args),
        Command::Threshold(args) => threshold(args),
        Command::Simulate(args) => simulate(args),
        Command::Exactdist(args) => exactdist(args),
    }
}

fn detect(args: DetectArgs) -> Result<(), Error> {
    let series = load_series(&args.series)?;
    let pair = load_pair(&args.pair)?;
    let walk = random_walk(&pair, &series)?;
    if let Some(path) = &args.trace_out {
        std::fs::write(path, trace_to_csv(&walk))?;
    }
    match args.k {
        None | Some(1) => {
            let est = mle_interval(&walk);
            if args.verify {
                let s = walk.values();
                let recomputed = s[est.b_hat] - s[est.a_hat];
                if (recomputed - est.lambda).abs() > 1e-9 {
                    return Err(Error::invalid_input(format!(
                        "verification failed: lambda {} vs recomputed {recomputed}",
                        est.lambda
                    )));
                }
            }
            println!(
                "{}",
                serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "a_hat": est.a_hat,
                    "b_hat": est.b_hat,
                    "lambda": est.lambda,
                    "no_change": est.no_change,
                })
            );
        }
        Some(0) => return Err(Error::invalid_input("--k must be at least 1")),
        Some(k) => {
            let est = mle_k_intervals(&walk, k)?;
            if args.verify {
                let s = walk.values();
                let recomputed: f64 = est.intervals.iter().map(|&(a, b)| s[b] - s[a]).sum();
                if (recomputed - est.total_gain).abs() > 1e-9 {
                    return Err(Error::invalid_input("verification failed on total gain"));
                }
            }
            println!(
                "{}",
                serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "intervals": est.intervals,
                    "total_gain": est.total_gain,
                    "saturated": est.saturated,
                })
            );
        }
    }
    Ok(())
}

fn monitor(args: MonitorArgs) -> Result<(), Error> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) || !(args.beta > 0.0 && args.beta < 1.0) {
        return Err(Error::invalid_input("alpha and beta must be in (0, 1)"));
    }
    let series = load_series(&args.series)?;
    let pair = load_pair(&args.pair)?;
    let n = series.len();
    let config = match (args.h_alpha, args.h_beta) {
        (Some(ha), Some(hb)) => DetectorConfig {
            alpha: args.alpha,
            beta: args.beta,
            h_alpha: ha,
            h_beta_tilde: hb,
            n,
            moment_f: f64::NAN,
            moment_g: f64::NAN,
        },
        (None, None) => {
            let (method, seed) = resolve_method(args.method, &pair, args.seed)?;
            familywise_thresholds(
                &pair,
                n,
                args.alpha,
                args.beta,
                method,
                seed,
                args.mc_reps,
                true,
            )?
        }
        _ => {
            return Err(Error::invalid_input(
                "--h-alpha and --h-beta must be given together",
            ))
        }
    };
    let walk = random_walk(&pair, &series)?;
    let report = sequential_detect(&walk, &config);

    if let Some(path) = &args.trace_out {
        std::fs::write(path, monitor_trace_csv(&walk, &report))?;
    }
    let mut doc = serde_json::to_value(&report)
        .map_err(|e| Error::invalid_input(format!("serialization: {e}")))?;
    doc.as_object_mut()
        .expect("report serializes to an object")
        .insert("schema_version".into(), SCHEMA_VERSION.into());
    println!("{doc}");
    Ok(())
}

/// Per-index detector trace: the active renewed CUSUM value on each
/// side and which regime the detector believed at each time. Segment
/// boundaries belong to the segment that starts there.
fn monitor_trace_csv(
    walk: &tcusum_core::walks::WalkTrace,
    report: &tcusum_core::multi::DetectionReport,
) -> String {
    let n = walk.len();
    // (start, end, direction) for each alternating stretch.
    let mut segments = Vec::new();
    let mut origin = 0usize;
    let mut pending = false;
    for ev in &report.events {
        segments.push((origin, ev.tau, Direction::Forward));
        let end = ev.tau_tilde.unwrap_or(n);
        segments.push((ev.tau, end, Direction::Reverse));
        origin = end;
        pending = ev.tau_tilde.is_none();
    }
    if !pending {
        segments.push((origin, n, Direction::Forward));
    }

    let mut rows: Vec<String> = vec![String::new(); n + 1];
    for (start, end, dir) in segments {
        let trace = renewed_cusum(walk, start, dir).expect("start in range");
        let regime = match dir {
            Direction::Forward => "in_control",
            Direction::Reverse => "out_of_control",
        };
        let span = end.min(n) - start;
        for (local, &v) in trace.values()[..=span].iter().enumerate() {
            let t = start + local;
            let (w, wt) = match dir {
                Direction::Forward => (v, 0.0),
                Direction::Reverse => (0.0, v),
            };
            rows[t] = format!("{t},{w},{wt},{regime}\n");
        }
    }
    let mut out = String::from("t,w,w_tilde,regime\n");
    for row in rows {
        out.push_str(&row);
    }
    out
}

fn glr(args: GlrArgs) -> Result<(), Error> {
    let series = load_series(&args.series)?;
    let family: ExponentialFamilyModel = args.family.into();
    let baseline = match args.theta0 {
        Some(theta0) => Baseline::Known(theta0),
        None => Baseline::Unknown,
    };
    let config = GlrConfig::new(args.omega, args.threshold, baseline, args.min_segment)?;
    let stopping_time = glr_stopping_time(&series, family, &config)?;
    let mut w_hat = Vec::with_capacity(series.len());
    for t in 1..=series.len() {
        w_hat.push(estimated_cusum_at(&series, family, &config, t)?.value);
    }
    println!(
        "{}",
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "stopping_time": stopping_time,
            "w_hat": w_hat,
        })
    );
    Ok(())
}

fn threshold(args: ThresholdArgs) -> Result<(), Error> {
    let pair = load_pair(&args.pair)?;
    let (method, seed) = resolve_method(args.method, &pair, args.seed)?;
    let conservative = !args.no_conservative;
    let doc = match args.beta {
        None => {
            let spec = false_alarm_threshold(
                &pair,
                args.n,
                args.alpha,
                method,
                seed,
                args.replicates,
                conservative,
            )?;
            let mut v = serde_json::to_value(&spec)
                .map_err(|e| Error::invalid_input(format!("serialization: {e}")))?;
            v.as_object_mut()
                .unwrap()
                .insert("schema_version".into(), SCHEMA_VERSION.into());
            v
        }
        Some(beta) => {
            let cfg = familywise_thresholds(
                &pair,
                args.n,
                args.alpha,
                beta,
                method,
                seed,
                args.replicates,
                conservative,
            )?;
            let mut v = serde_json::to_value(&cfg)
                .map_err(|e| Error::invalid_input(format!("serialization: {e}")))?;
            v.as_object_mut()
                .unwrap()
                .insert("schema_version".into(), SCHEMA_VERSION.into());
            v
        }
    };
    println!("{doc}");
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let config: ExperimentConfig = serde_json::from_str(&read_file(&args.config)?)
        .map_err(|e| Error::invalid_input(format!("config JSON: {e}")))?;
    let result = run_experiment(&config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let kind = serde_json::to_value(config.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| "experiment".into());
    let base = args.out_dir.join(format!("tcusum-{kind}-{stamp}"));
    export_results(&result, &base.with_extension("json"), ExportFormat::Json)?;
    export_results(&result, &base.with_extension("csv"), ExportFormat::Csv)?;
    let mut doc = serde_json::to_value(&result)
        .map_err(|e| Error::invalid_input(format!("serialization: {e}")))?;
    doc.as_object_mut()
        .unwrap()
        .insert("schema_version".into(), SCHEMA_VERSION.into());
    println!("{doc}");
    Ok(())
}

fn exactdist(args: ExactdistArgs) -> Result<(), Error> {
    match args.what {
        ExactdistCommand::Ple { pair, n, a, b, out } => {
            let pair = load_pair(&pair)?;
            let lp = LatticePair::from_pair(&pair)?;
            let mut csv = String::from("l,r,p_lr\n");
            for l in -(a as i64)..=(n as i64 - a as i64) {
                for r in -(b as i64)..=(n as i64 - b as i64) {
                    let cap_a = a as i64 + l;
                    let cap_b = b as i64 + r;
                    if cap_a < 0 || cap_b > n as i64 || cap_a >= cap_b {
                        continue;
                    }
                    let p = ple_joint_probability(&lp, l, r, a, b, n)?;
                    csv.push_str(&format!("{l},{r},{p}\n"));
                }
            }
            emit(csv, out)
        }
        ExactdistCommand::Asymptotic {
            pair,
            max_offset,
            horizon,
            out,
        } => {
            let pair = load_pair(&pair)?;
            let lp = LatticePair::from_pair(&pair)?;
            let mut csv = String::from("offset,p_r,q_l,bracket\n");
            for offset in -max_offset..=max_offset {
                let pr = asymptotic_mle_pmf(&lp, offset, Side::B, horizon)?;
                let ql = asymptotic_mle_pmf(&lp, offset, Side::A, horizon)?;
                csv.push_str(&format!(
                    "{offset},{},{},{}\n",
                    pr.value,
                    ql.value,
                    pr.bracket.max(ql.bracket)
                ));
            }
            emit(csv, out)
        }
    }
}

fn emit(csv: String, out: Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => {
            std::fs::write(path, csv)?;
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
