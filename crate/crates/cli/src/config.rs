//! TOML run configuration. Every section and key is optional and falls back
//! to the simulator defaults; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use kaczmarz_pref::simulator::{InitStrategy, LabelRule, SamplingMode, SimConfig};
use kaczmarz_pref::updaters::{MethodKind, UpdateMethod};
use kaczmarz_pref::{Error, HyperParams};

pub const DEFAULT_FLIPS: [f64; 7] = [0.0, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub population: PopulationSection,
    pub schedule: ScheduleSection,
    pub labels: LabelSection,
    pub methods: MethodSection,
    pub noise: NoiseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    pub size: usize,
    pub active_users: usize,
    pub dimension: usize,
    pub init: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub sessions: usize,
    pub swipes_per_session: usize,
    pub sampling: String,
    /// Stage-one draw of adaptive sampling; the subsample is one session.
    pub adaptive_pool: usize,
    pub cooldown: bool,
    pub cooldown_window: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelSection {
    pub rule: String,
    pub theta: f64,
    pub p_flip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodSection {
    pub names: Vec<String>,
    pub alpha: f64,
    pub delta: f64,
    pub nk_eta: f64,
    pub ogd_eta: f64,
    pub block_k: usize,
    pub drop_satisfied_rows: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub flips: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let params = HyperParams::default();
        RunConfig {
            population: PopulationSection {
                size: sim.population,
                active_users: sim.active_users,
                dimension: sim.dimension,
                init: sim.init.to_string(),
            },
            schedule: ScheduleSection {
                sessions: sim.sessions,
                swipes_per_session: sim.swipes_per_session,
                sampling: sim.sampling.to_string(),
                adaptive_pool: sim.adaptive_pool,
                cooldown: sim.cooldown.is_some(),
                cooldown_window: sim.cooldown.unwrap_or(14),
            },
            labels: LabelSection {
                rule: sim.label_rule.to_string(),
                theta: sim.theta,
                p_flip: sim.p_flip,
            },
            methods: MethodSection {
                names: MethodKind::ALL.iter().map(|k| k.name().to_string()).collect(),
                alpha: params.alpha,
                delta: params.delta,
                nk_eta: 0.5,
                ogd_eta: 0.1,
                block_k: params.block_k,
                drop_satisfied_rows: sim.drop_satisfied_rows,
            },
            noise: NoiseSection {
                flips: DEFAULT_FLIPS.to_vec(),
            },
        }
    }
}
impl Default for PopulationSection {
    fn default() -> Self {
        RunConfig::default().population
    }
}
impl Default for ScheduleSection {
    fn default() -> Self {
        RunConfig::default().schedule
    }
}
impl Default for LabelSection {
    fn default() -> Self {
        RunConfig::default().labels
    }
}
impl Default for MethodSection {
    fn default() -> Self {
        RunConfig::default().methods
    }
}
impl Default for NoiseSection {
    fn default() -> Self {
        RunConfig::default().noise
    }
}

/// A configuration problem, anchored to the offending line when the key
/// appears in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, "{}:{line}: ", file.display())?,
            (Some(file), None) => write!(f, "{}: ", file.display())?,
            (None, Some(line)) => write!(f, "line {line}: ")?,
            (None, None) => {}
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Configuration text plus where it came from, for anchoring errors.
pub struct Source<'a> {
    pub file: Option<&'a Path>,
    pub text: &'a str,
}

impl Source<'_> {
    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.file.map(Path::to_path_buf),
            line: find_key_line(self.text, key),
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// 1-based line on which `section.key` is assigned, if it is.
fn find_key_line(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = dotted.split_once('.')?;
    let mut current = "";
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse(source: &Source<'_>) -> Result<RunConfig, ConfigError> {
    toml::from_str(source.text).map_err(|e| ConfigError {
        file: source.file.map(Path::to_path_buf),
        line: e.span().map(|s| line_of_offset(source.text, s.start)),
        key: String::new(),
        message: e.message().trim().to_string(),
    })
}

/// Config key reporting a simulator parameter error.
fn key_for(param: &str, kind: Option<MethodKind>) -> &'static str {
    match (param, kind) {
        ("population", _) => "population.size",
        ("active_users", _) => "population.active_users",
        ("dimension", _) => "population.dimension",
        ("init", _) => "population.init",
        ("sessions", _) => "schedule.sessions",
        ("swipes_per_session" | "adaptive_k", _) => "schedule.swipes_per_session",
        ("adaptive_pool", _) => "schedule.adaptive_pool",
        ("sampling", _) => "schedule.sampling",
        ("label_rule", _) => "labels.rule",
        ("theta", _) => "labels.theta",
        ("p_flip", _) => "labels.p_flip",
        ("eta", Some(MethodKind::Ogd)) => "methods.ogd_eta",
        ("eta", _) => "methods.nk_eta",
        ("alpha", _) => "methods.alpha",
        ("delta", _) => "methods.delta",
        ("block_k", _) => "methods.block_k",
        _ => "methods.names",
    }
}

fn sim_error(source: &Source<'_>, e: Error, kind: Option<MethodKind>) -> ConfigError {
    match e {
        Error::InvalidParameter { name, reason } => source.error(key_for(name, kind), reason),
        other => source.error("", other.to_string()),
    }
}

fn parse_field<T: FromStr<Err = Error>>(source: &Source<'_>, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => source.error(key, reason),
        other => source.error(key, other.to_string()),
    })
}

impl RunConfig {
    /// Resolves the file into a validated simulator configuration.
    pub fn to_sim_config(&self, seed: u64, source: &Source<'_>) -> Result<SimConfig, ConfigError> {
        let init: InitStrategy = parse_field(source, "population.init", &self.population.init)?;
        let sampling: SamplingMode = parse_field(source, "schedule.sampling", &self.schedule.sampling)?;
        let label_rule: LabelRule = parse_field(source, "labels.rule", &self.labels.rule)?;

        let m = &self.methods;
        let mut methods = Vec::with_capacity(m.names.len());
        for name in &m.names {
            let kind: MethodKind = parse_field(source, "methods.names", name)?;
            if methods.iter().any(|x: &UpdateMethod| x.kind == kind) {
                return Err(source.error("methods.names", format!("`{name}` is listed twice")));
            }
            let eta = match kind {
                MethodKind::Ogd => m.ogd_eta,
                MethodKind::Nk => m.nk_eta,
                _ => HyperParams::default().eta,
            };
            let method = UpdateMethod::new(
                kind,
                HyperParams {
                    alpha: m.alpha,
                    eta,
                    theta: self.labels.theta,
                    delta: m.delta,
                    block_k: m.block_k,
                },
            );
            method.validate().map_err(|e| sim_error(source, e, Some(kind)))?;
            methods.push(method);
        }

        let sim = SimConfig {
            population: self.population.size,
            active_users: self.population.active_users,
            dimension: self.population.dimension,
            sessions: self.schedule.sessions,
            swipes_per_session: self.schedule.swipes_per_session,
            theta: self.labels.theta,
            p_flip: self.labels.p_flip,
            label_rule,
            sampling,
            adaptive_pool: self.schedule.adaptive_pool,
            adaptive_k: self.schedule.swipes_per_session,
            cooldown: self.schedule.cooldown.then_some(self.schedule.cooldown_window),
            init,
            drop_satisfied_rows: m.drop_satisfied_rows,
            master_seed: seed,
            methods,
        };
        sim.validate().map_err(|e| sim_error(source, e, None))?;
        Ok(sim)
    }

    pub fn validate_flips(&self, source: &Source<'_>) -> Result<(), ConfigError> {
        if self.noise.flips.is_empty() {
            return Err(source.error("noise.flips", "at least one flip probability is required"));
        }
        if let Some(p) = self.noise.flips.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(source.error("noise.flips", format!("{p} is outside [0, 1)")));
        }
        Ok(())
    }

    /// Same configuration, written back with every default filled in.
    pub fn with_sim(&self, sim: &SimConfig) -> RunConfig {
        let mut out = self.clone();
        out.population.size = sim.population;
        out.population.active_users = sim.active_users;
        out.population.dimension = sim.dimension;
        out.population.init = sim.init.to_string();
        out.schedule.sessions = sim.sessions;
        out.schedule.swipes_per_session = sim.swipes_per_session;
        out.schedule.sampling = sim.sampling.to_string();
        out.schedule.adaptive_pool = sim.adaptive_pool;
        out.schedule.cooldown = sim.cooldown.is_some();
        if let Some(w) = sim.cooldown {
            out.schedule.cooldown_window = w;
        }
        out.labels.rule = sim.label_rule.to_string();
        out.labels.p_flip = sim.p_flip;
        out
    }
}
