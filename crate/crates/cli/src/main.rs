//! `thermoloop` command-line tool.

mod serve;

use std::fmt::Debug;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thermoloop::comfort::{compute_pmv, pmv_to_ppd, ComfortError};
use thermoloop::predictor::{read_dataset_csv, train_tci_model, training_set_from_rows, FeatureVector};
use thermoloop::profile::{estimate_neutral_temp, Sweep};
use thermoloop::sim::{diff_commands, read_trace_csv, replay, run_scenario, ScenarioConfig, ScenarioSummary};
use thermoloop::{PmvInputs, TciModel};

#[derive(Parser)]
#[command(name = "thermoloop", version, about = "Physiology-driven group thermostat")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write its trace and summary.
    Simulate(SimulateArgs),
    /// Fit a TCI model on a labelled CSV dataset.
    Train(TrainArgs),
    /// Compute PMV and PPD for one set of conditions.
    Pmv(PmvArgs),
    /// Estimate the neutral temperature implied by a model.
    Profile(ProfileArgs),
    /// Run the telemetry gateway.
    Serve(serve::ServeArgs),
    /// Re-run the controller over a recorded trace and compare commands.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// CSV with columns occupant_id,timestamp,hr,gsr,clo,met,air_temp,mrt,rh,vel,tci_label.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = thermoloop::predictor::DEFAULT_RIDGE_STRENGTH)]
    ridge: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Aggregation window, seconds.
    #[arg(long, default_value_t = thermoloop::predictor::DEFAULT_WINDOW_SECS)]
    window: f64,
    /// Skip windows whose label sits at the ends of the TCI scale.
    #[arg(long)]
    drop_saturated: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PmvArgs {
    /// Air temperature, °C.
    #[arg(long, allow_hyphen_values = true)]
    ta: f64,
    /// Mean radiant temperature, °C.
    #[arg(long, allow_hyphen_values = true)]
    tr: f64,
    /// Air velocity, m/s.
    #[arg(long, allow_hyphen_values = true)]
    vel: f64,
    /// Relative humidity, %.
    #[arg(long, allow_hyphen_values = true)]
    rh: f64,
    /// Metabolic rate, met.
    #[arg(long, allow_hyphen_values = true)]
    met: f64,
    /// Clothing insulation, clo.
    #[arg(long, allow_hyphen_values = true)]
    clo: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ProfileArgs {
    /// Model JSON produced by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Air temperature sweep as lo:hi:step.
    #[arg(long, default_value = "16:30:0.5", value_parser = parse_sweep)]
    sweep: (f64, f64, f64),
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trace CSV written by `simulate`.
    #[arg(long)]
    trace: PathBuf,
    /// Summary JSON; defaults to summary.json beside the trace.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn parse_sweep(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err("expected lo:hi:step".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"));
    Ok((num(lo)?, num(hi)?, num(step)?))
}

/// Name of an error enum variant, e.g. `NoNeutralPoint`.
fn variant<E: Debug>(e: &E) -> String {
    format!("{e:?}")
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect()
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&args.config).with_context(|| format!("simulate: {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let trace = run_scenario(&cfg).context("simulate: run_scenario")?;
    trace
        .write_to_dir(&args.out)
        .with_context(|| format!("simulate: writing {}", args.out.display()))?;
    let s = &trace.summary;
    if args.json {
        return print_json(s);
    }
    match s.final_t0 {
        Some(t0) => println!("final t0: {t0:.3} °C"),
        None => println!("final t0: none"),
    }
    match s.convergence_time {
        Some(t) => println!("converged: true at {t} s"),
        None => println!("converged: false"),
    }
    println!("discomfort integral: {:.3} TCI²·s", s.discomfort_integral);
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    windows: usize,
    intercept: f64,
    coefficients: Vec<(&'a str, f64)>,
}

fn train(args: TrainArgs) -> Result<()> {
    let file = fs::File::open(&args.data).with_context(|| format!("train: {}", args.data.display()))?;
    let rows = read_dataset_csv::<f64, _>(file).context("train: read_dataset_csv")?;
    let mut set = training_set_from_rows(&rows, args.window).context("train: training_set_from_rows")?;
    if args.drop_saturated {
        set.retain(|(_, y)| y.value().abs() < thermoloop::comfort::TCI_LIMIT);
    }
    let model = train_tci_model(&set, args.ridge, args.seed).context("train: train_tci_model")?;
    fs::write(&args.out, model.to_json()).with_context(|| format!("train: writing {}", args.out.display()))?;

    let (raw, intercept) = model.raw_coefficients();
    let report = TrainReport {
        windows: set.len(),
        intercept,
        coefficients: thermoloop::predictor::FEATURE_NAMES.iter().copied().zip(raw).collect(),
    };
    if args.json {
        return print_json(&report);
    }
    println!("trained on {} windows", report.windows);
    println!("intercept: {intercept:.6}");
    for (name, c) in &report.coefficients {
        println!("{name}: {c:.6}");
    }
    Ok(())
}

fn flag_for(field: &str) -> &'static str {
    match field {
        "air_temp" => "--ta",
        "mean_radiant_temp" => "--tr",
        "air_velocity" => "--vel",
        "rel_humidity" => "--rh",
        "metabolic_rate" => "--met",
        "clothing_insulation" => "--clo",
        _ => "input",
    }
}

fn pmv(args: PmvArgs) -> Result<()> {
    let inputs = PmvInputs {
        air_temp: args.ta,
        mean_radiant_temp: args.tr,
        air_velocity: args.vel,
        rel_humidity: args.rh,
        metabolic_rate: args.met,
        clothing_insulation: args.clo,
    };
    let pmv = compute_pmv(&inputs).map_err(|e| match e {
        ComfortError::OutOfRange { field, value, min, max } => {
            anyhow!("pmv: OutOfRange: {} = {value} outside {min}..={max}", flag_for(field))
        }
        other => anyhow!("pmv: {}: {other}", variant(&other)),
    })?;
    let ppd = pmv_to_ppd(pmv);
    if args.json {
        return print_json(&serde_json::json!({ "pmv": pmv, "ppd": ppd }));
    }
    println!("PMV: {pmv:.3}");
    println!("PPD: {ppd:.3}");
    Ok(())
}

fn profile(args: ProfileArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("profile: {}", args.model.display()))?;
    let model = TciModel::from_json(&text).context("profile: loading model")?;
    let (lo, hi, step) = args.sweep;
    let sweep = Sweep::new(lo, hi, step).map_err(|e| anyhow!("profile: {}: {e}", variant(&e)))?;

    let mut base = [0.0; thermoloop::predictor::FEATURE_COUNT];
    base.copy_from_slice(model.feature_mean());
    let at = |t: f64| {
        let mut f = FeatureVector(base);
        f.0[FeatureVector::<f64>::AIR_TEMP] = t;
        f
    };
    let np = estimate_neutral_temp(&model, at, sweep)
        .map_err(|e| anyhow!("profile: estimate_neutral_temp: {}: {e}", variant(&e)))?;
    if args.json {
        return print_json(&np);
    }
    println!("neutral temperature: {:.3} °C", np.neutral_temp);
    println!("sensitivity: {:.4} TCI/°C", np.sensitivity);
    Ok(())
}

#[derive(Serialize)]
struct ReplayOutput {
    evaluations: usize,
    commands: usize,
    diffs: Vec<String>,
}

fn replay_cmd(args: ReplayArgs) -> Result<bool> {
    let file = fs::File::open(&args.trace).with_context(|| format!("replay: {}", args.trace.display()))?;
    let rows = read_trace_csv(file).context("replay: read_trace_csv")?;
    let summary_path = args
        .summary
        .unwrap_or_else(|| args.trace.parent().unwrap_or(Path::new(".")).join("summary.json"));
    let summary: ScenarioSummary = serde_json::from_str(
        &fs::read_to_string(&summary_path).with_context(|| format!("replay: {}", summary_path.display()))?,
    )
    .with_context(|| format!("replay: parsing {}", summary_path.display()))?;

    let report = replay(&rows, &summary.group_changes, summary.controller).context("replay")?;
    let mut diffs = report.diffs.clone();
    diffs.extend(diff_commands(&summary.commands, &report.commands));
    let out = ReplayOutput {
        evaluations: report.evaluations,
        commands: report.commands.len(),
        diffs,
    };
    if args.json {
        print_json(&out)?;
    } else {
        println!(
            "{} evaluations, {} commands, {} diffs",
            out.evaluations,
            out.commands,
            out.diffs.len()
        );
        for d in &out.diffs {
            println!("  {d}");
        }
    }
    Ok(out.diffs.is_empty())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Pmv(a) => pmv(a),
        Command::Profile(a) => profile(a),
        Command::Serve(a) => serve::run(a),
        Command::Replay(a) => {
            if replay_cmd(a)? {
                Ok(())
            } else {
                bail!("replay: trace does not reproduce")
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
