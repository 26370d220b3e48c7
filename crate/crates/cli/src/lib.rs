//! Experiment runner behind the `kpref` binary.
//!
//! Each command reads an optional TOML config, runs the simulator and writes
//! CSV tables, SVG charts and a `manifest.json` listing every artifact with
//! its content hash. Output bytes depend only on the config and the seed.

pub mod config;
pub mod output;
pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use kaczmarz_pref::simulator::{
    noise_sweep, run_experiment, ExperimentReport, LabelRule, SamplingMode, SimConfig,
};
use kaczmarz_pref::updaters::decay_table;
use kaczmarz_pref::Execution;

use config::{ConfigError, RunConfig, Source};
use output::{decay_csv, metrics_csv, noise_csv, trace_csv, ArtifactWriter, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("simulation failed: {0}")]
    Runtime(#[from] kaczmarz_pref::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) | CliError::Runtime(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

/// Options shared by the simulation commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
    pub label_rule: Option<LabelRule>,
    pub sampling: Option<SamplingMode>,
    pub no_cooldown: bool,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions {
            config: None,
            out: out.into(),
            seed: 42,
            workers: None,
            label_rule: None,
            sampling: None,
            no_cooldown: false,
        }
    }

    fn execution(&self) -> Execution {
        Execution::with_workers(self.workers)
    }

    fn apply_overrides(&self, sim: &mut SimConfig) {
        if let Some(rule) = self.label_rule {
            sim.label_rule = rule;
        }
        if let Some(sampling) = self.sampling {
            sim.sampling = sampling;
        }
        if self.no_cooldown {
            sim.cooldown = None;
        }
    }
}

struct Loaded {
    path: Option<PathBuf>,
    file: RunConfig,
    text: String,
    sim: SimConfig,
}

impl Loaded {
    fn source(&self) -> Source<'_> {
        Source {
            file: self.path.as_deref(),
            text: &self.text,
        }
    }
}

fn load(opts: &RunOptions) -> Result<Loaded, CliError> {
    let text = match &opts.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    let source = Source {
        file: opts.config.as_deref(),
        text: &text,
    };
    let file = config::parse(&source)?;
    let mut sim = file.to_sim_config(opts.seed, &source)?;
    opts.apply_overrides(&mut sim);
    sim.validate().map_err(|e| ConfigError {
        file: opts.config.clone(),
        line: None,
        key: String::new(),
        message: format!("after command-line overrides: {e}"),
    })?;
    Ok(Loaded {
        path: opts.config.clone(),
        file,
        text,
        sim,
    })
}

fn snapshot(file: &RunConfig, sim: &SimConfig) -> serde_json::Value {
    serde_json::to_value(file.with_sim(sim)).expect("config serializes")
}

fn check_invariants(report: &ExperimentReport) -> Result<(), CliError> {
    if report.schedules_shared() == Some(false) {
        return Err(CliError::Invariant(
            "methods did not see identical candidate and flip sequences".into(),
        ));
    }
    let violations = report.norm_bound_violations();
    if violations > 0 {
        return Err(CliError::Invariant(format!(
            "norm bound failed on {violations} trajectories"
        )));
    }
    Ok(())
}

/// Writes `metrics.csv` and `trace.csv` for the configured condition.
pub fn cmd_simulate(opts: &RunOptions) -> Result<RunManifest, CliError> {
    let loaded = load(opts)?;
    let report = run_experiment(&loaded.sim, opts.execution())?;
    let mut out = ArtifactWriter::create(&opts.out)?;
    out.write("metrics.csv", &metrics_csv(&report.metrics))?;
    out.write("trace.csv", &trace_csv(&report.metrics))?;
    let manifest = out.finish("simulate", Some(opts.seed), snapshot(&loaded.file, &loaded.sim))?;
    check_invariants(&report)?;
    Ok(manifest)
}

/// Writes `noise.csv` and `fig_noise.svg` over the configured flip ratios.
pub fn cmd_noise_sweep(opts: &RunOptions) -> Result<RunManifest, CliError> {
    let loaded = load(opts)?;
    loaded.file.validate_flips(&loaded.source())?;
    let points = noise_sweep(&loaded.sim, &loaded.file.noise.flips, opts.execution())?;
    let svg = plot::noise_figure(&points).map_err(CliError::Invariant)?;
    let mut out = ArtifactWriter::create(&opts.out)?;
    out.write("noise.csv", &noise_csv(&points))?;
    out.write("fig_noise.svg", svg.as_bytes())?;
    out.finish("noise-sweep", Some(opts.seed), snapshot(&loaded.file, &loaded.sim))
}

/// Runs the row-norm condition and its adaptive counterpart (twice the
/// sessions at half the length) and writes `trace_adaptive.csv`,
/// `metrics_adaptive.csv` and the two-panel `fig_alignment.svg`.
pub fn cmd_adaptive(opts: &RunOptions) -> Result<RunManifest, CliError> {
    let loaded = load(opts)?;
    let base = SimConfig {
        sampling: SamplingMode::RowNorm,
        ..loaded.sim.clone()
    };
    let mut adaptive = base.adaptive_condition();
    if let Some(rule) = opts.label_rule {
        adaptive.label_rule = rule;
    }
    adaptive.validate().map_err(|e| ConfigError {
        file: opts.config.clone(),
        line: None,
        key: String::new(),
        message: format!("adaptive condition: {e}"),
    })?;
    let row_norm = run_experiment(&base, opts.execution())?;
    let adaptive_report = run_experiment(&adaptive, opts.execution())?;
    let svg = plot::alignment_figure(
        (&row_norm.metrics, base.swipes_per_session),
        (&adaptive_report.metrics, adaptive.swipes_per_session),
    ).map_err(CliError::Invariant)?;
    let mut out = ArtifactWriter::create(&opts.out)?;
    out.write("trace_adaptive.csv", &trace_csv(&adaptive_report.metrics))?;
    out.write("metrics_adaptive.csv", &metrics_csv(&adaptive_report.metrics))?;
    out.write("fig_alignment.svg", svg.as_bytes())?;
    let manifest = out.finish("adaptive", Some(opts.seed), snapshot(&loaded.file, &adaptive))?;
    check_invariants(&row_norm)?;
    check_invariants(&adaptive_report)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayOptions {
    pub eta: f64,
    pub steps: usize,
    pub dimension: usize,
    pub out: PathBuf,
}

/// Writes `decay.csv`: the weight of the starting vector under repeated
/// normalized updates along fresh orthogonal directions.
pub fn cmd_decay_demo(opts: &DecayOptions) -> Result<RunManifest, CliError> {
    let table = decay_table(opts.eta, opts.steps, opts.dimension).map_err(|e| {
        let key = match &e {
            kaczmarz_pref::Error::InvalidParameter { name, .. } => format!("--{name}"),
            _ => "--steps".to_string(),
        };
        ConfigError {
            file: None,
            line: None,
            key,
            message: e.to_string(),
        }
    })?;
    let mut out = ArtifactWriter::create(&opts.out)?;
    out.write("decay.csv", &decay_csv(&table))?;
    let config = serde_json::json!({
        "eta": opts.eta,
        "steps": opts.steps,
        "dimension": opts.dimension,
    });
    out.finish("decay-demo", None, config)
}
