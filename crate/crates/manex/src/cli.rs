//! Command-line interface: `validate`, `extract`, `analyze`, `evaluate` and
//! `synth` subcommands.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! input validation errors, 3 when the sequence-search guard tripped on
//! every processed agent.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::matching::MatchConfig;
use crate::metrics::{bin_label, GroupDimension, StdKind};
use crate::pipeline::{
    run_evaluate, run_extract, summarize, AgentReport, AnalysisReport, EvalError,
    ExtractionOutcome,
};
use crate::report;
use crate::scene::{load_scenes, scene_paths, LoadError, PredictionFile, SceneFile};
use crate::svg;
use crate::synth::{synth_predictions, synth_scene, Recipe, SynthOptions};

#[derive(Parser)]
#[command(
    name = "manex",
    version,
    about = "Maneuver extraction, dataset analysis and prediction evaluation \
             for trajectory datasets with lane-graph maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check scene files against the schema and lane-graph invariants.
    Validate(ValidateArgs),
    /// Extract maneuver labels from agent trajectories.
    Extract(ExtractArgs),
    /// Analyze dynamics and maneuver distributions of a scene set.
    Analyze(AnalyzeArgs),
    /// Evaluate multi-modal predictions, grouped by dynamics and maneuvers.
    Evaluate(EvaluateArgs),
    /// Generate synthetic scenes with known maneuver labels.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Scene files or directories containing scene .json files.
    #[arg(required = true)]
    scenes: Vec<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Distance threshold of the assignment confidence, meters.
    #[arg(long = "d-th", default_value_t = 5.0)]
    d_th: f64,
    /// Confidence threshold; assignments must exceed it strictly.
    #[arg(long = "p-th", default_value_t = 0.5)]
    p_th: f64,
    /// Process every agent instead of the declared target agents only.
    #[arg(long)]
    all_agents: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct BinArgs {
    /// Velocity bin edges, comma-separated (m/s).
    #[arg(long, value_delimiter = ',')]
    bins_velocity: Option<Vec<f64>>,
    /// Acceleration bin edges, comma-separated (m/s^2).
    #[arg(long, value_delimiter = ',')]
    bins_acceleration: Option<Vec<f64>>,
    /// Curvature bin edges, comma-separated (1/m).
    #[arg(long, value_delimiter = ',')]
    bins_curvature: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExtractArgs {
    /// Scene files or directories containing scene .json files.
    #[arg(required = true)]
    scenes: Vec<PathBuf>,
    #[command(flatten)]
    matching: MatchArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scene files or directories containing scene .json files.
    #[arg(required = true)]
    scenes: Vec<PathBuf>,
    #[command(flatten)]
    matching: MatchArgs,
    #[command(flatten)]
    bins: BinArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for SVG bar charts of all distributions.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Scene files or directories containing scene .json files.
    #[arg(required = true)]
    scenes: Vec<PathBuf>,
    /// Prediction file to evaluate.
    #[arg(long)]
    predictions: PathBuf,
    #[command(flatten)]
    matching: MatchArgs,
    #[command(flatten)]
    bins: BinArgs,
    /// Expected number of predicted modes.
    #[arg(long, default_value_t = 6)]
    modes: usize,
    /// Observed (history) timesteps before the prediction horizon.
    #[arg(long, default_value_t = 20)]
    obs_steps: usize,
    /// Prediction horizon in timesteps.
    #[arg(long, default_value_t = 30)]
    pred_steps: usize,
    /// Standard deviation estimator for the grouped tables.
    #[arg(long, value_enum, default_value_t = StdArg::Population)]
    std: StdArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Directory for one table file per grouping dimension; stdout when
    /// omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StdArg {
    Population,
    Sample,
}

#[derive(Args)]
struct SynthArgs {
    /// Maneuver recipe, or `mixed` to cycle through all recipes.
    #[arg(long, default_value = "mixed")]
    recipe: String,
    /// Number of scenes to generate.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Base seed; scene i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of isotropic position noise, meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Output directory for scene files and the label manifest.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write a synthetic prediction file for the generated scenes.
    #[arg(long)]
    with_predictions: bool,
    /// History length used for the synthetic predictions.
    #[arg(long, default_value_t = 20)]
    obs_steps: usize,
    /// Horizon used for the synthetic predictions.
    #[arg(long, default_value_t = 30)]
    pred_steps: usize,
    /// Modes per synthetic prediction.
    #[arg(long, default_value_t = 6)]
    modes: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Load(#[from] LoadError),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Load(_) | CliError::Eval(_) | CliError::Io { .. } => 2,
        }
    }
}

/// Parses arguments, runs the selected command and returns the process exit
/// code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn build_config(matching: &MatchArgs, bins: Option<&BinArgs>) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig {
        matching: MatchConfig::with_thresholds(matching.d_th, matching.p_th),
        all_agents: matching.all_agents,
        ..PipelineConfig::default()
    };
    if let Some(bins) = bins {
        if let Some(edges) = &bins.bins_velocity {
            cfg.grouping.velocity_edges = edges.clone();
        }
        if let Some(edges) = &bins.bins_acceleration {
            cfg.grouping.acceleration_edges = edges.clone();
        }
        if let Some(edges) = &bins.bins_curvature {
            cfg.grouping.curvature_edges = edges.clone();
        }
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Exit code 3 when every processed agent tripped the sequence-search guard.
fn guard_code(reports: &[AgentReport]) -> i32 {
    let all_exploded = !reports.is_empty()
        && reports
            .iter()
            .all(|r| matches!(r.outcome, ExtractionOutcome::PathExplosion));
    if all_exploded {
        3
    } else {
        0
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<i32, CliError> {
    let paths = scene_paths(&args.scenes)?;
    let mut failures = 0usize;
    let mut ids = std::collections::HashMap::new();
    for path in &paths {
        match SceneFile::load(path) {
            Ok(scene) => {
                if let Some(previous) = ids.insert(scene.scene_id.clone(), path.clone()) {
                    failures += 1;
                    println!(
                        "{}: duplicate scene id `{}` (also in {})",
                        path.display(),
                        scene.scene_id,
                        previous.display()
                    );
                } else {
                    println!("{}: ok", path.display());
                }
            }
            Err(err) => {
                failures += 1;
                println!("{err}");
            }
        }
    }
    println!("{} of {} scene files valid", paths.len() - failures, paths.len());
    Ok(if failures == 0 { 0 } else { 2 })
}

fn cmd_extract(args: ExtractArgs) -> Result<i32, CliError> {
    let cfg = build_config(&args.matching, None)?;
    let scenes = load_scenes(&args.scenes)?;
    let reports = run_extract(&scenes, &cfg, args.matching.workers);
    let content = match args.format {
        Format::Csv => report::extract_csv(&reports),
        Format::Json => report::extract_json(&reports),
    };
    write_output(args.out.as_deref(), &content)?;
    Ok(guard_code(&reports))
}

fn write_analysis_svgs(dir: &Path, analysis: &AnalysisReport) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut charts: Vec<(&str, &str, Vec<String>, Vec<u64>)> = Vec::new();
    for (name, title, hist, scale) in [
        ("velocity", GroupDimension::Velocity.title(), &analysis.velocity, 1.0),
        (
            "acceleration",
            GroupDimension::Acceleration.title(),
            &analysis.acceleration,
            1.0,
        ),
        (
            "curvature",
            GroupDimension::Curvature.title(),
            &analysis.curvature,
            100.0,
        ),
    ] {
        let mut labels: Vec<String> = (0..hist.counts.len())
            .map(|i| bin_label(&hist.edges, i, scale))
            .collect();
        let mut values = hist.counts.clone();
        labels.push("underflow".into());
        values.push(hist.underflow);
        labels.push("overflow".into());
        values.push(hist.overflow);
        charts.push((name, title, labels, values));
    }
    for (name, title, counts) in [
        ("turn", GroupDimension::Turn.title(), &analysis.turn),
        (
            "lane_change",
            GroupDimension::LaneChange.title(),
            &analysis.lane_change,
        ),
    ] {
        charts.push((
            name,
            title,
            counts.iter().map(|c| c.label.clone()).collect(),
            counts.iter().map(|c| c.count).collect(),
        ));
    }
    for (name, title, labels, values) in charts {
        let path = dir.join(format!("{name}.svg"));
        fs::write(&path, svg::bar_chart(title, &labels, &values))
            .map_err(|source| CliError::Io { path, source })?;
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<i32, CliError> {
    let cfg = build_config(&args.matching, Some(&args.bins))?;
    let scenes = load_scenes(&args.scenes)?;
    let reports = run_extract(&scenes, &cfg, args.matching.workers);
    let analysis = summarize(&reports, scenes.len(), &cfg)?;
    let content = match args.format {
        Format::Csv => report::analysis_csv(&analysis),
        Format::Json => report::analysis_json(&analysis),
    };
    write_output(args.out.as_deref(), &content)?;
    if let Some(dir) = &args.svg {
        write_analysis_svgs(dir, &analysis)?;
    }
    Ok(guard_code(&reports))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32, CliError> {
    let mut cfg = build_config(&args.matching, Some(&args.bins))?;
    cfg.modes = args.modes;
    cfg.obs_steps = args.obs_steps;
    cfg.pred_steps = args.pred_steps;
    cfg.grouping.std_kind = match args.std {
        StdArg::Population => StdKind::Population,
        StdArg::Sample => StdKind::Sample,
    };
    cfg.validate().map_err(CliError::Config)?;

    let scenes = load_scenes(&args.scenes)?;
    let predictions = PredictionFile::load(&args.predictions)?;
    let output = run_evaluate(&scenes, &predictions, &cfg, args.matching.workers)?;

    match (&args.out, args.format) {
        (Some(dir), Format::Csv) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            for grouped in &output.reports {
                let path = dir.join(format!("evaluate_{}.csv", grouped.dimension.key()));
                fs::write(&path, report::grouped_csv(grouped))
                    .map_err(|source| CliError::Io { path, source })?;
            }
        }
        (Some(dir), Format::Json) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = dir.join("evaluation.json");
            fs::write(&path, report::evaluation_json(&output))
                .map_err(|source| CliError::Io { path, source })?;
        }
        (None, Format::Csv) => print!("{}", report::evaluation_text(&output)),
        (None, Format::Json) => print!("{}", report::evaluation_json(&output)),
    }
    Ok(0)
}

fn cmd_synth(args: SynthArgs) -> Result<i32, CliError> {
    let recipes: Vec<Recipe> = if args.recipe == "mixed" {
        Recipe::ALL.to_vec()
    } else {
        vec![args.recipe.parse().map_err(CliError::Config)?]
    };
    if !(args.noise >= 0.0) {
        return Err(CliError::Config(ConfigError(format!(
            "noise must be >= 0, got {}",
            args.noise
        ))));
    }

    let scene_dir = args.out_dir.join("scenes");
    fs::create_dir_all(&scene_dir).map_err(|source| CliError::Io {
        path: scene_dir.clone(),
        source,
    })?;

    let mut manifest = String::from("scene_id,agent_id,recipe,turn,lane_change\n");
    let mut scenes = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let recipe = recipes[i % recipes.len()];
        let opts = SynthOptions {
            recipe,
            seed: args.seed + i as u64,
            noise_sigma: args.noise,
        };
        let (scene, label) = synth_scene(&opts);
        let path = scene_dir.join(format!("{}.json", scene.scene_id));
        scene.save(&path)?;
        manifest.push_str(&format!(
            "{},{},{},{},{}\n",
            scene.scene_id,
            scene.targets[0],
            recipe.slug(),
            label.turn.label(),
            label.lane_change.label()
        ));
        scenes.push(scene);
    }

    let manifest_path = args.out_dir.join("labels.csv");
    fs::write(&manifest_path, manifest).map_err(|source| CliError::Io {
        path: manifest_path,
        source,
    })?;

    if args.with_predictions {
        let file = synth_predictions(
            &scenes,
            args.obs_steps,
            args.pred_steps,
            args.modes,
            args.seed,
        )
        .map_err(CliError::Config)?;
        file.save(args.out_dir.join("predictions.json"))?;
    }

    println!(
        "wrote {} scenes to {}",
        args.count,
        args.out_dir.display()
    );
    Ok(0)
}
