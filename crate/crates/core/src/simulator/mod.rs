//! Population-scale simulation: synthetic users with latent soulmate
//! vectors, noisy like/pass labels, and one learner per (user, method).

mod config;
mod metrics;
mod population;
mod schedule;
mod trajectory;

pub use config::{InitStrategy, LabelRule, SamplingMode, SimConfig};
pub use metrics::{compute_align_at, compute_direction_stability, ExperimentMetrics, MeanStd};
pub use population::{
    flip_coins, flip_label, generate_population, label_oracle, FlipCoin, Population, SimulatedUser,
};
pub use schedule::{row_norm_schedule, PresentationSchedule};
pub use trajectory::{run_adaptive_trajectory, run_user_trajectory, NormBoundStatus, UserTrace};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::updaters::MethodKind;

/// Result of one experiment: metrics per method, in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: SimConfig,
    pub metrics: Vec<ExperimentMetrics>,
    /// `presentation_digests[m][u]` is the digest of what method `m`
    /// showed active user `u`.
    pub presentation_digests: Vec<Vec<u64>>,
}

impl ExperimentReport {
    pub fn metrics_for(&self, kind: MethodKind) -> Option<&ExperimentMetrics> {
        self.metrics.iter().find(|m| m.method.kind == kind)
    }

    /// Whether every method saw the same candidates and flips per user.
    /// `None` under adaptive sampling, where sequences differ by design.
    pub fn schedules_shared(&self) -> Option<bool> {
        if self.config.sampling == SamplingMode::Adaptive {
            return None;
        }
        let first = self.presentation_digests.first()?;
        Some(self.presentation_digests.iter().all(|d| d == first))
    }

    pub fn norm_bound_violations(&self) -> usize {
        self.metrics.iter().map(|m| m.norm_bound_violations).sum()
    }
}

/// Runs every active user's trajectories at the given noise level and
/// returns them as `traces[method]`, each in active-user order.
fn simulate(
    population: &Population,
    config: &SimConfig,
    flips: &[f64],
    execution: Execution,
) -> Result<Vec<Vec<Vec<UserTrace>>>> {
    let active = population.active();
    // per user: [flip][method]
    let per_user = map_indexed(active.len(), execution, |i| {
        let u = active[i];
        match config.sampling {
            SamplingMode::RowNorm => {
                let schedule = row_norm_schedule(population, u, config)?;
                flips
                    .iter()
                    .map(|&p| {
                        let cfg = config.with_p_flip(p);
                        cfg.methods
                            .iter()
                            .map(|m| run_user_trajectory(population, u, m, &schedule, &cfg))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            }
            SamplingMode::Adaptive => {
                let coins = flip_coins(config.master_seed, population.user(u).id, config.total_swipes());
                flips
                    .iter()
                    .map(|&p| {
                        let cfg = config.with_p_flip(p);
                        cfg.methods
                            .iter()
                            .enumerate()
                            .map(|(mi, m)| run_adaptive_trajectory(population, u, mi, m, &coins, &cfg))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            }
        }
    })?;
    // transpose to [flip][method][user]
    let mut out: Vec<Vec<Vec<UserTrace>>> = flips
        .iter()
        .map(|_| config.methods.iter().map(|_| Vec::with_capacity(active.len())).collect())
        .collect();
    for user in per_user {
        for (f, methods) in user.into_iter().enumerate() {
            for (m, trace) in methods.into_iter().enumerate() {
                out[f][m].push(trace);
            }
        }
    }
    Ok(out)
}

/// Runs the configured methods for every active user and aggregates the
/// metrics. Output is identical for every `execution`.
pub fn run_experiment(config: &SimConfig, execution: Execution) -> Result<ExperimentReport> {
    config.validate()?;
    let population = generate_population(config)?;
    let mut traces = simulate(&population, config, &[config.p_flip], execution)?;
    let traces = traces.pop().expect("one noise level");
    let metrics = config
        .methods
        .iter()
        .zip(&traces)
        .map(|(m, t)| ExperimentMetrics::aggregate(*m, t))
        .collect();
    let presentation_digests = traces
        .iter()
        .map(|t| t.iter().map(|u| u.presentation_digest).collect())
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        metrics,
        presentation_digests,
    })
}

/// Final alignment of one method at one noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePoint {
    pub method: crate::updaters::UpdateMethod,
    pub p_flip: f64,
    /// `None` when the run has no swipes.
    pub final_alignment: Option<MeanStd>,
}

/// Reruns the experiment at each flip probability. Candidate schedules and
/// flip coins are drawn once, so only the flip decisions change between
/// levels. Points are ordered by flip level, then method.
pub fn noise_sweep(config: &SimConfig, flips: &[f64], execution: Execution) -> Result<Vec<NoisePoint>> {
    if flips.is_empty() {
        return Err(Error::invalid("flips", "at least one flip probability is required"));
    }
    for &p in flips {
        config.with_p_flip(p).validate()?;
    }
    config.validate()?;
    let population = generate_population(config)?;
    let traces = simulate(&population, config, flips, execution)?;
    let mut points = Vec::with_capacity(flips.len() * config.methods.len());
    for (&p, per_method) in flips.iter().zip(&traces) {
        for (m, users) in config.methods.iter().zip(per_method) {
            points.push(NoisePoint {
                method: *m,
                p_flip: p,
                final_alignment: MeanStd::of(users.iter().filter_map(|t| t.alignment.last().copied())),
            });
        }
    }
    Ok(points)
}
