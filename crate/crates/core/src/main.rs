use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use adsb_osp::commands;
use adsb_osp::config::{RunConfig, ScenarioKind};
use adsb_osp::nsga2::GenerationRecord;
use adsb_osp::OspError;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Plan ADS-B receiver deployments that resist jamming.
#[derive(Debug, Parser)]
#[command(name = "osp", version)]
struct Cli {
    /// Worker threads for fitness evaluation; defaults to available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for receiver placements from scratch.
    Optimize(RunArgs),
    /// Add receivers to an existing deployment.
    Augment(AugmentArgs),
    /// Score an existing set of receivers.
    Evaluate(EvaluateArgs),
    /// Summarize a front and pick one member.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`, then `osp-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `ga.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Deployed receivers; defaults to the config's `scenario.deployed_path`.
    #[arg(long)]
    sensors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    sensors: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding `pareto.csv` and the solution files.
    #[arg(long)]
    out: PathBuf,
    /// Largest acceptable number of receivers.
    #[arg(long)]
    budget: Option<usize>,
    /// Weights of the normalized OF1, OF2, OF3 scores, e.g. `1,0,0`;
    /// equal weights by default.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<[f64; 3]>,
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parsed: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parsed
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated weights, got {}", v.len()))
}

fn exit_code(e: &OspError) -> u8 {
    match e {
        OspError::InvalidConfig { .. }
        | OspError::Input { .. }
        | OspError::InvalidInput(_)
        | OspError::Json(_)
        | OspError::Csv(_) => EXIT_USAGE,
        OspError::NoFeasibleSolution(_) => EXIT_INFEASIBLE,
        OspError::DegenerateGeometry(_) | OspError::Io(_) => EXIT_RUNTIME,
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> adsb_osp::Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = seed {
        config.ga.seed = seed;
    }
    Ok(config)
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("osp-out"))
}

fn progress(record: &GenerationRecord) {
    let line = serde_json::to_string(record).expect("progress record serializes");
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

fn run_optimize(args: RunArgs, deployed_flag: Option<Option<PathBuf>>) -> adsb_osp::Result<()> {
    let config = load_config(&args.config, args.seed)?;
    let deployed = match deployed_flag {
        None => Vec::new(),
        Some(flag) => {
            let path = flag
                .or_else(|| match &config.scenario {
                    // Relative to the config file, not the working directory.
                    ScenarioKind::Augment { deployed_path } => deployed_path
                        .as_ref()
                        .map(|p| args.config.parent().unwrap_or(Path::new("")).join(p)),
                    ScenarioKind::Scratch => None,
                })
                .ok_or_else(|| {
                    OspError::config(
                        "scenario.deployed_path",
                        "augment needs --sensors or a deployed_path in the config",
                    )
                })?;
            commands::read_deployed(&path)?
        }
    };
    let out = out_dir(args.out, &config);
    commands::check_out_dir(&out)?;
    let result = commands::optimize(&config, &deployed, &out, progress)?;
    info!(
        "{} front members after {} generations",
        result.rows.len(),
        result.front.generations_run
    );
    println!(
        "wrote {} solutions to {} (config {})",
        result.rows.len(),
        out.display(),
        result.config_hash
    );
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> adsb_osp::Result<()> {
    let config = load_config(&args.config, None)?;
    let out = out_dir(args.out, &config);
    commands::check_out_dir(&out)?;
    let result = commands::evaluate(&config, &args.sensors, &out)?;
    let s = &result.scores;
    println!(
        "n_sensors={} of1={} of2={} of3={} penalty={} max_jammer_affected={}",
        s.n_sensors,
        adsb_osp::io::fmt_score(s.of1),
        adsb_osp::io::fmt_score(s.of2),
        adsb_osp::io::fmt_score(s.of3),
        adsb_osp::io::fmt_score(s.penalty),
        result.jam.max_affected
    );
    Ok(())
}

fn run_report(args: ReportArgs) -> adsb_osp::Result<()> {
    let report = commands::report(&args.out, args.budget, args.weights.unwrap_or([1.0 / 3.0; 3]))?;
    print!("{}", commands::format_table(&report.rows));
    println!("solution files: {}", report.solution_files);
    let id = report.selected?;
    println!(
        "selected: {id} ({})",
        args.out.join(commands::solution_file(id)).display()
    );
    Ok(())
}

fn run(cli: Cli) -> adsb_osp::Result<()> {
    match cli.command {
        Command::Optimize(args) => run_optimize(args, None),
        Command::Augment(args) => run_optimize(args.run, Some(args.sensors)),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Report(args) => run_report(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OSP_LOG", "warn")).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            error!("--threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            error!("cannot start worker threads: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("osp: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
