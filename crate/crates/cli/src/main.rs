//! Command-line front end: simulation, estimation, the Monte Carlo study,
//! and the tick-data pipeline, each emitting CSV files plus one JSON run
//! manifest into the output directory.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use jumpact::{
    avg_estimator, beta_hat_two_cutoffs, beta_hat_two_scales, calibrate_lambda, calibrate_theta,
    clean_ticks, descriptive_stats, fit_bias_regression, group_days, histogram_data, parse_ticks,
    regression_correction, rolling_estimates, run_cell, run_comparison, sample_calendar,
    select_cutoffs, simulate_sv_path, CompoundPoissonSpec, DescriptiveStats, EstimateResult,
    EstimatorConfig, Histogram, JumpMode, McCellResult, McConfig, Method, PathGrid, PriceJumpSpec,
    SVModelSpec, SessionSpec, SizeLaw, AVG_RATIOS, AVG_SD_MULTIPLES, REGRESSION_SD_MULTIPLES,
    SECONDS_PER_DAY,
};

#[derive(Parser)]
#[command(
    name = "jumpact",
    version,
    about = "Estimate the jump activity index of a price process from counts of large increments"
)]
struct Cli {
    /// Master seed for all randomness (overrides any seed in --config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for all output files; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// JSON configuration file (schema depends on the subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a stochastic-volatility-with-jumps log-price path.
    Simulate(SimulateArgs),
    /// Estimate the activity index from a sampled path or a tick file.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo study: summary tables and histogram data.
    Montecarlo(MontecarloArgs),
    /// Clean, sample, and analyze a raw tick CSV.
    Ticks(TicksArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Named configuration, e.g. `table1-beta1.0-p1pct` (stochastic
    /// volatility plus jumps calibrated so 1% of increments exceed the
    /// default cutoff).
    #[arg(long)]
    preset: Option<String>,

    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 1.0)]
    delta_seconds: f64,

    /// Horizon in trading days (one day = 6.5 hours).
    #[arg(long, default_value_t = 1.0)]
    horizon_days: f64,

    /// Simulate the jump component as an explicit event series and export it
    /// to jumps.csv (slower; needed for jump-level diagnostics).
    #[arg(long)]
    exact_jumps: bool,

    /// Smallest jump magnitude retained when --exact-jumps is on.
    #[arg(long, default_value_t = 1e-4)]
    jump_floor: f64,

    /// Output file name for the path CSV.
    #[arg(long, default_value = "path.csv")]
    output: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV: a sampled path (`t,x` header, t in days) or raw ticks
    /// (`timestamp,price[,status]` header).
    input: PathBuf,

    /// Truncation exponent: cutoffs scale as delta^varpi. Must be in (0, 1/2).
    #[arg(long, default_value_t = 0.2)]
    varpi: f64,

    /// Explicit lower cutoff coefficient; overrides --sd-multiples.
    #[arg(long)]
    alpha: Option<f64>,

    /// Ratio of the upper to the lower cutoff.
    #[arg(long, default_value_t = 2.0)]
    alpha_ratio: f64,

    /// Comma-separated multiples of the estimated per-increment volatility
    /// at which to place the lower cutoff.
    #[arg(long, value_delimiter = ',', default_value = "7")]
    sd_multiples: Vec<f64>,

    /// Also report the average over the standard cutoff grid
    /// (7/8/9 volatilities x ratios 1.5..4).
    #[arg(long)]
    avg: bool,

    /// Also report the regression-based bias-corrected estimate
    /// (written to corrected.csv).
    #[arg(long)]
    bias_correct: bool,

    /// Also report the two-sampling-frequencies estimate.
    #[arg(long)]
    two_scale: bool,

    /// Calendar sampling step in seconds (tick input only).
    #[arg(long, default_value_t = 5.0)]
    step_seconds: f64,

    /// Session open, seconds after midnight (tick input only).
    #[arg(long, default_value_t = 34_200.0)]
    session_open: f64,

    /// Session close, seconds after midnight (tick input only).
    #[arg(long, default_value_t = 57_600.0)]
    session_close: f64,

    /// Output file name.
    #[arg(long, default_value = "estimates.csv")]
    output: String,
}

#[derive(Args)]
struct MontecarloArgs {
    /// Restrict the run to one cell, e.g. `beta=1.0,p=0.01,delta=1s`.
    #[arg(long)]
    cell: Option<String>,

    /// Override the number of replications per cell.
    #[arg(long)]
    reps: Option<usize>,

    /// Number of histogram bins for the per-replication estimates.
    #[arg(long, default_value_t = 30)]
    bins: usize,

    /// Skip the estimator-comparison table (table2.csv).
    #[arg(long)]
    no_table2: bool,
}

#[derive(Args)]
struct TicksArgs {
    /// Raw tick CSV: `timestamp,price[,status]`.
    input: PathBuf,

    /// Symbol used in output file names.
    #[arg(long, default_value = "series")]
    symbol: String,

    /// Write descriptive statistics of the sampled log-returns.
    #[arg(long)]
    stats: bool,

    /// Rolling-window estimation; window length in trading days, e.g. `10d`.
    #[arg(long)]
    rolling: Option<String>,

    /// Calendar sampling step in seconds.
    #[arg(long, default_value_t = 5.0)]
    step_seconds: f64,

    /// Session open, seconds after midnight.
    #[arg(long, default_value_t = 34_200.0)]
    session_open: f64,

    /// Session close, seconds after midnight.
    #[arg(long, default_value_t = 57_600.0)]
    session_close: f64,

    /// Truncation exponent.
    #[arg(long, default_value_t = 0.2)]
    varpi: f64,
}

/// Record of one CLI run: enough to rerun it bit-exactly.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    master_seed: u64,
    artifact_version: String,
    outputs: Vec<String>,
    status: String,
}

/// JSON schema for `simulate --config`.
#[derive(Serialize, Deserialize)]
struct SimConfig {
    model: SVModelSpec,
    #[serde(default = "default_one")]
    delta_seconds: f64,
    #[serde(default = "default_one")]
    horizon_days: f64,
}

fn default_one() -> f64 {
    1.0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut manifest = RunManifest {
        command: match &cli.command {
            Command::Simulate(_) => "simulate",
            Command::Estimate(_) => "estimate",
            Command::Montecarlo(_) => "montecarlo",
            Command::Ticks(_) => "ticks",
        }
        .to_string(),
        config: serde_json::Value::Null,
        master_seed: cli.seed.unwrap_or(0),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: Vec::new(),
        status: "ok".to_string(),
    };

    let result = fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("cannot create output directory {}", cli.out_dir.display()))
        .and_then(|_| run(&cli, &mut manifest));

    if let Err(e) = &result {
        manifest.status = format!("error: {e:#}");
    }
    // The manifest is written even when the command itself failed, so a
    // partial run still records what it produced.
    if let Ok(json) = serde_json::to_string_pretty(&manifest) {
        let _ = fs::write(cli.out_dir.join("manifest.json"), json + "\n");
    }

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli, manifest: &mut RunManifest) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(cli, args, manifest),
        Command::Estimate(args) => cmd_estimate(cli, args, manifest),
        Command::Montecarlo(args) => cmd_montecarlo(cli, args, manifest),
        Command::Ticks(args) => cmd_ticks(cli, args, manifest),
    }
}

fn write_output(
    out_dir: &Path,
    name: &str,
    content: &str,
    manifest: &mut RunManifest,
) -> Result<()> {
    let path = out_dir.join(name);
    fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

/// The stochastic-volatility model of the simulation study, without jumps.
fn base_model() -> SVModelSpec {
    McConfig::study_defaults(0).model
}

/// Expand a preset name like `table1-beta1.0-p1pct`: the study model with
/// jumps calibrated so a fraction p of increments at `delta` exceeds the
/// default cutoff. `beta0` selects fixed-size compound Poisson jumps.
fn expand_preset(name: &str, delta: f64) -> Result<SVModelSpec> {
    let rest = name
        .strip_prefix("table1-beta")
        .with_context(|| format!("unknown preset `{name}` (expected table1-beta<B>-p<P>pct)"))?;
    let (beta_s, p_s) = rest
        .split_once("-p")
        .with_context(|| format!("malformed preset `{name}`"))?;
    let pct_s = p_s
        .strip_suffix("pct")
        .with_context(|| format!("malformed preset `{name}`"))?;
    let beta: f64 = beta_s.parse().with_context(|| format!("bad beta in preset `{name}`"))?;
    let p: f64 = pct_s.parse::<f64>().with_context(|| format!("bad tail in preset `{name}`"))?
        / 100.0;

    let mut model = base_model();
    let defaults = McConfig::study_defaults(0);
    model.price_jumps = if beta == 0.0 {
        let lambda = calibrate_lambda(p, delta)?;
        PriceJumpSpec::CompoundPoisson(CompoundPoissonSpec::new(
            lambda,
            SizeLaw::Fixed(defaults.cp_jump_size),
        )?)
    } else {
        let theta = calibrate_theta(beta, defaults.alpha, defaults.varpi, delta, p)?;
        PriceJumpSpec::Stable { beta, theta }
    };
    Ok(model)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, manifest: &mut RunManifest) -> Result<()> {
    let config = match &cli.config {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("cannot open config {}", path.display()))?;
            serde_json::from_reader::<_, SimConfig>(BufReader::new(file))
                .with_context(|| format!("cannot parse config {}", path.display()))?
        }
        None => {
            let delta = args.delta_seconds / SECONDS_PER_DAY;
            let model = match &args.preset {
                Some(name) => expand_preset(name, delta)?,
                None => base_model(),
            };
            SimConfig {
                model,
                delta_seconds: args.delta_seconds,
                horizon_days: args.horizon_days,
            }
        }
    };
    manifest.config = serde_json::to_value(&config)?;

    let delta = config.delta_seconds / SECONDS_PER_DAY;
    let mode = if args.exact_jumps {
        JumpMode::Exact { floor: args.jump_floor }
    } else {
        JumpMode::PerIncrement
    };
    let mut rng = ChaCha8Rng::seed_from_u64(manifest.master_seed);
    let path = simulate_sv_path(&config.model, config.horizon_days, delta, mode, &mut rng)?;

    let out = cli.out_dir.join(&args.output);
    let file = File::create(&out).with_context(|| format!("cannot write {}", out.display()))?;
    path.write_csv(BufWriter::new(file))?;
    manifest.outputs.push(args.output.clone());

    if let Some(jumps) = &path.jumps {
        let mut csv = String::from("time,size\n");
        for (t, s) in jumps.times.iter().zip(&jumps.sizes) {
            csv.push_str(&format!("{t},{s}\n"));
        }
        write_output(&cli.out_dir, "jumps.csv", &csv, manifest)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate

/// Increments and their spacing (in days), from either input format.
fn load_returns(args: &EstimateArgs) -> Result<(Vec<f64>, f64)> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let header = text.lines().next().unwrap_or("").trim();

    if header.starts_with("t,") {
        // sampled path: t in days, x the log-price
        let mut ts = Vec::new();
        let mut xs = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let t: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .with_context(|| format!("bad t field at line {}", i + 1))?;
            let x: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .with_context(|| format!("bad x field at line {}", i + 1))?;
            ts.push(t);
            xs.push(x);
        }
        if xs.len() < 2 {
            bail!("path file has fewer than 2 observations");
        }
        let delta = ts[1] - ts[0];
        if !(delta > 0.0) {
            bail!("path times must be strictly increasing");
        }
        for w in ts.windows(2) {
            if ((w[1] - w[0]) - delta).abs() > 1e-9 * delta.max(1.0) {
                bail!("path times must be equally spaced");
            }
        }
        let returns = xs.windows(2).map(|w| w[1] - w[0]).collect();
        Ok((returns, delta))
    } else if header.starts_with("timestamp") {
        let session = SessionSpec {
            open: args.session_open,
            close: args.session_close,
            step: args.step_seconds,
        };
        session.validate()?;
        let ticks = parse_ticks(BufReader::new(File::open(&args.input)?))?;
        let clean = clean_ticks(&ticks);
        let mut returns = Vec::new();
        for day in group_days(&clean) {
            let grid = sample_calendar(&day, &session)?;
            returns.extend(grid.returns());
        }
        Ok((returns, args.step_seconds / SECONDS_PER_DAY))
    } else {
        bail!("unrecognized input header `{header}` (expected `t,x` or `timestamp,price[,status]`)")
    }
}

/// Placeholder row for a series too degenerate for cutoff selection.
fn degenerate_row(varpi: f64, delta: f64) -> EstimateResult {
    EstimateResult {
        method: Method::TwoCutoffs,
        varpi,
        alpha: 0.0,
        alpha_prime: None,
        delta,
        u_low: 0,
        u_high: 0,
        beta_hat: 0.0,
        std_error: None,
        flag_zero_count: true,
        flag_ge_two: false,
    }
}

fn cmd_estimate(cli: &Cli, args: &EstimateArgs, manifest: &mut RunManifest) -> Result<()> {
    if !(args.varpi > 0.0 && args.varpi < 0.5) {
        bail!("varpi must lie in (0, 1/2), got {}", args.varpi);
    }
    manifest.config = serde_json::json!({
        "input": args.input.display().to_string(),
        "varpi": args.varpi,
        "alpha": args.alpha,
        "alpha_ratio": args.alpha_ratio,
        "sd_multiples": args.sd_multiples,
        "avg": args.avg,
        "bias_correct": args.bias_correct,
        "two_scale": args.two_scale,
    });

    let (returns, delta) = load_returns(args)?;
    let grid: Vec<EstimatorConfig> = if let Some(alpha) = args.alpha {
        vec![EstimatorConfig::new(args.varpi, alpha, args.alpha_ratio * alpha, delta)?]
    } else if args.avg {
        select_cutoffs(&returns, delta, args.varpi, &AVG_SD_MULTIPLES, &AVG_RATIOS)?
    } else {
        select_cutoffs(&returns, delta, args.varpi, &args.sd_multiples, &[args.alpha_ratio])?
    };

    let mut csv = String::from(EstimateResult::csv_header());
    csv.push('\n');

    if grid.is_empty() {
        // zero estimated volatility: report a flagged zero row, not a failure
        csv.push_str(&degenerate_row(args.varpi, delta).csv_row());
        csv.push('\n');
        write_output(&cli.out_dir, &args.output, &csv, manifest)?;
        return Ok(());
    }

    let estimates: Vec<EstimateResult> = grid
        .iter()
        .map(|cfg| beta_hat_two_cutoffs(&returns, cfg))
        .collect::<jumpact::Result<_>>()?;
    for e in &estimates {
        csv.push_str(&e.csv_row());
        csv.push('\n');
    }
    let avg = args.avg.then(|| avg_estimator(&estimates)).transpose()?;
    if let Some(a) = &avg {
        csv.push_str(&a.csv_row());
        csv.push('\n');
    }
    if args.two_scale {
        let ts = beta_hat_two_scales(&returns, args.varpi, grid[0].alpha, delta)?;
        csv.push_str(&ts.csv_row());
        csv.push('\n');
    }
    write_output(&cli.out_dir, &args.output, &csv, manifest)?;

    if args.bias_correct {
        let base = &grid[0];
        let beta_raw = avg.as_ref().map_or(estimates[0].beta_hat, |a| a.beta_hat);
        let mut row = format!("{},{},{beta_raw},", base.alpha, base.alpha_prime);
        if beta_raw > 0.0 && beta_raw < 2.0 {
            // ladder of single cutoffs around the base one, in estimated-sd units
            let base_multiple = if args.alpha.is_some() {
                7.0
            } else if args.avg {
                AVG_SD_MULTIPLES[0]
            } else {
                args.sd_multiples[0]
            };
            let sigma_alpha = base.alpha / base_multiple;
            let alphas: Vec<f64> =
                REGRESSION_SD_MULTIPLES.iter().map(|m| m * sigma_alpha).collect();
            let fit = fit_bias_regression(&returns, &alphas, beta_raw, args.varpi, delta);
            match fit {
                Ok(fit) => {
                    let outcome = regression_correction(beta_raw, &fit, base)?;
                    row.push_str(&format!(
                        "{},{},{},{},{},{},{}",
                        outcome.beta, outcome.applied, fit.a0, fit.a1, fit.a2, fit.rss, fit.n_points
                    ));
                }
                Err(jumpact::Error::DegenerateDesign(_)) => {
                    row.push_str(&format!("{beta_raw},false,,,,,"));
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            row.push_str(&format!("{beta_raw},false,,,,,"));
        }
        let csv = format!(
            "alpha,alpha_prime,beta_raw,beta_corrected,applied,a0,a1,a2,rss,n_points\n{row}\n"
        );
        write_output(&cli.out_dir, "corrected.csv", &csv, manifest)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// montecarlo

/// Parse `beta=1.0,p=0.01,delta=1s` into (beta, tail prob, delta in days).
fn parse_cell(spec: &str) -> Result<(f64, f64, f64)> {
    let mut beta = None;
    let mut p = None;
    let mut delta = None;
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("malformed cell component `{part}`"))?;
        match key.trim() {
            "beta" => beta = Some(value.trim().parse::<f64>()?),
            "p" => p = Some(value.trim().parse::<f64>()?),
            "delta" => {
                let v = value.trim();
                let secs: f64 = v.strip_suffix('s').unwrap_or(v).parse()?;
                delta = Some(secs / SECONDS_PER_DAY);
            }
            other => bail!("unknown cell key `{other}`"),
        }
    }
    match (beta, p, delta) {
        (Some(b), Some(p), Some(d)) => Ok((b, p, d)),
        _ => bail!("cell must specify beta=, p=, and delta="),
    }
}

/// A short file-name tag for one cell, e.g. `beta1.5_p0.01_d1s`.
fn cell_tag(beta: f64, tail_prob: f64, delta: f64) -> String {
    format!("beta{}_p{}_d{}s", beta, tail_prob, delta * SECONDS_PER_DAY)
}

fn cmd_montecarlo(cli: &Cli, args: &MontecarloArgs, manifest: &mut RunManifest) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("cannot open config {}", path.display()))?;
            serde_json::from_reader::<_, McConfig>(BufReader::new(file))
                .with_context(|| format!("cannot parse config {}", path.display()))?
        }
        None => McConfig::study_defaults(0),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(cell) = &args.cell {
        let (beta, p, delta) = parse_cell(cell)?;
        config.beta_values = vec![beta];
        config.tail_probs = vec![p];
        config.deltas = vec![delta];
    }
    if let Some(reps) = args.reps {
        config.n_reps = reps;
    }
    config.validate()?;
    manifest.master_seed = config.master_seed;
    manifest.config = serde_json::to_value(&config)?;
    if args.bins == 0 {
        bail!("need at least one histogram bin");
    }

    let mut table1 = String::from(McCellResult::csv_header());
    table1.push('\n');
    let mut hists: Vec<(String, String)> = Vec::new();
    for (i, cell) in config.cells().iter().enumerate() {
        let result = run_cell(&config, cell, i as u64)?;
        table1.push_str(&result.csv_row());
        table1.push('\n');
        if !result.per_rep_estimates.is_empty() {
            let hist = histogram_data(&result.per_rep_estimates, args.bins)?;
            let name = format!("hist_{}.csv", cell_tag(cell.beta, cell.tail_prob, cell.delta));
            let mut csv = String::from(Histogram::csv_header());
            csv.push('\n');
            csv.push_str(&hist.csv_rows());
            hists.push((name, csv));
        }
    }
    write_output(&cli.out_dir, "table1.csv", &table1, manifest)?;
    for (name, csv) in &hists {
        write_output(&cli.out_dir, name, csv, manifest)?;
    }

    if !args.no_table2 {
        let rows = run_comparison(&config)?;
        let mut table2 = String::from(jumpact::ComparisonRow::csv_header());
        table2.push('\n');
        for row in &rows {
            table2.push_str(&row.csv_row());
            table2.push('\n');
        }
        write_output(&cli.out_dir, "table2.csv", &table2, manifest)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ticks

fn parse_window(spec: &str) -> Result<usize> {
    let days = spec.strip_suffix('d').unwrap_or(spec);
    days.parse::<usize>()
        .with_context(|| format!("bad rolling window `{spec}` (expected e.g. `10d`)"))
}

fn cmd_ticks(cli: &Cli, args: &TicksArgs, manifest: &mut RunManifest) -> Result<()> {
    if !(args.varpi > 0.0 && args.varpi < 0.5) {
        bail!("varpi must lie in (0, 1/2), got {}", args.varpi);
    }
    let session = SessionSpec {
        open: args.session_open,
        close: args.session_close,
        step: args.step_seconds,
    };
    session.validate()?;
    manifest.config = serde_json::json!({
        "input": args.input.display().to_string(),
        "symbol": args.symbol,
        "session_open": session.open,
        "session_close": session.close,
        "step_seconds": session.step,
        "varpi": args.varpi,
        "rolling": args.rolling,
    });

    let file =
        File::open(&args.input).with_context(|| format!("cannot read {}", args.input.display()))?;
    let ticks = parse_ticks(BufReader::new(file))?;
    let clean = clean_ticks(&ticks);
    if clean.is_empty() {
        bail!("no valid ticks after cleaning");
    }
    let days: Vec<PathGrid> = group_days(&clean)
        .iter()
        .map(|day| sample_calendar(day, &session))
        .collect::<jumpact::Result<_>>()?;
    let delta = args.step_seconds / SECONDS_PER_DAY;
    let mut returns = Vec::new();
    for day in &days {
        returns.extend(day.returns());
    }

    if args.stats {
        let stats = descriptive_stats(&returns)?;
        let csv = format!("{}\n{}\n", DescriptiveStats::csv_header(), stats.csv_row());
        write_output(&cli.out_dir, &format!("stats_{}.csv", args.symbol), &csv, manifest)?;
    }

    // full-sample estimation over the standard grid
    let grid = select_cutoffs(&returns, delta, args.varpi, &AVG_SD_MULTIPLES, &AVG_RATIOS)?;
    let mut csv = String::from(EstimateResult::csv_header());
    csv.push('\n');
    if grid.is_empty() {
        csv.push_str(&degenerate_row(args.varpi, delta).csv_row());
        csv.push('\n');
    } else {
        let estimates: Vec<EstimateResult> = grid
            .iter()
            .map(|cfg| beta_hat_two_cutoffs(&returns, cfg))
            .collect::<jumpact::Result<_>>()?;
        for e in &estimates {
            csv.push_str(&e.csv_row());
            csv.push('\n');
        }
        csv.push_str(&avg_estimator(&estimates)?.csv_row());
        csv.push('\n');
    }
    write_output(&cli.out_dir, &format!("estimates_{}.csv", args.symbol), &csv, manifest)?;

    if let Some(window) = &args.rolling {
        let window_days = parse_window(window)?;
        let rolling = rolling_estimates(&days, window_days, args.varpi)?;
        let mut csv =
            String::from("start_day,n_days,beta_avg,dispersion,beta_corrected,u_low,flags\n");
        for r in &rolling {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.start_day,
                r.n_days,
                r.avg.beta_hat,
                r.avg.std_error.map_or(String::new(), |s| s.to_string()),
                r.corrected.map_or(String::new(), |c| c.to_string()),
                r.avg.u_low,
                if r.avg.is_flagged() { "flagged" } else { "-" },
            ));
        }
        write_output(&cli.out_dir, &format!("rolling_{}.csv", args.symbol), &csv, manifest)?;
    }
    Ok(())
}
