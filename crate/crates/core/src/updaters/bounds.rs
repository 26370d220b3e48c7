//! Executable forms of the two analytic properties of the update rules:
//! the norm-growth bound of Tikhonov–Kaczmarz and the forgetting rate of
//! normalized Kaczmarz.

use super::{nk_update, tk_update};
use crate::error::{Error, Result};
use crate::vector::{l2_norm, CandidateId, PreferenceState, TagVector};

/// Slack allowed when comparing `|v_T|` against the bound.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormBoundOutcome {
    /// `lhs = |v_T|`, `rhs = |v_0| + R_T / (1 + alpha)`.
    Applicable { lhs: f64, rhs: f64, holds: bool },
    /// Some row violates `|a| >= max(1, alpha)`, so
    /// `|a| / (|a|^2 + alpha) <= 1 / (1 + alpha)` is not guaranteed.
    NotApplicable,
}

impl NormBoundOutcome {
    pub fn holds(&self) -> Option<bool> {
        match self {
            NormBoundOutcome::Applicable { holds, .. } => Some(*holds),
            NormBoundOutcome::NotApplicable => None,
        }
    }
}

/// Online form of the norm bound for one Tikhonov–Kaczmarz trajectory.
///
/// Feed every step through [`observe`](Self::observe), then compare the
/// current norm with [`check`](Self::check).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBoundTracker {
    initial_norm: f64,
    alpha: f64,
    residual_sum: f64,
    applicable: bool,
}

impl NormBoundTracker {
    pub fn new(initial_norm: f64, alpha: f64) -> Self {
        NormBoundTracker {
            initial_norm,
            alpha,
            residual_sum: 0.0,
            applicable: alpha >= 0.0,
        }
    }

    pub fn observe(&mut self, residual: f64, row_norm: f64) {
        if row_norm < 1.0 || self.alpha > row_norm {
            self.applicable = false;
        }
        self.residual_sum += residual.abs();
    }

    pub fn bound(&self) -> f64 {
        self.initial_norm + self.residual_sum / (1.0 + self.alpha)
    }

    pub fn check(&self, current_norm: f64) -> NormBoundOutcome {
        if !self.applicable {
            return NormBoundOutcome::NotApplicable;
        }
        let rhs = self.bound();
        NormBoundOutcome::Applicable {
            lhs: current_norm,
            rhs,
            holds: current_norm <= rhs + BOUND_SLACK,
        }
    }
}

/// Replays a Tikhonov–Kaczmarz trajectory from `v0` and checks
/// `|v_T| <= |v_0| + sum|r_t| / (1 + alpha)` at its end.
pub fn norm_bound_check<R: AsRef<[f64]>>(
    trajectory: &[(f64, R)],
    v0: &PreferenceState,
    alpha: f64,
) -> NormBoundOutcome {
    let mut tracker = NormBoundTracker::new(v0.norm(), alpha);
    let mut v = v0.clone();
    for (r, a) in trajectory {
        let a = a.as_ref();
        tracker.observe(*r, l2_norm(a));
        v = tk_update(&v, a, *r, alpha);
    }
    tracker.check(v.norm())
}

/// Weight of `v_0` in the NK iterate under the orthogonal worst case.
///
/// Starts from `e_0` and applies `steps` NK updates with residual 1 along
/// `e_1, e_2, ...`; since every direction is orthogonal to `e_0` the
/// weight of `v_0` is the first coordinate. Returns `steps + 1` values,
/// beginning with `w_0 = 1`.
pub fn decay_measurement(eta: f64, steps: usize, dimension: usize) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    let available = dimension.saturating_sub(1);
    if steps > available {
        return Err(Error::TooManySteps { steps, available });
    }
    let mut raw = vec![0.0; dimension];
    raw[0] = 1.0;
    let mut v = PreferenceState::new(raw)?;
    let mut weights = Vec::with_capacity(steps + 1);
    weights.push(v.raw()[0]);
    for t in 1..=steps {
        let direction = TagVector::from_indices(CandidateId(t as u32), dimension, &[t])?;
        v = nk_update(&v, &direction, 1.0, eta)?;
        weights.push(v.raw()[0]);
    }
    Ok(weights)
}

/// One row of the forgetting table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub step: usize,
    pub measured_weight: f64,
    /// `eta^step`.
    pub eta_pow_envelope: f64,
    /// `(1 + eta^2)^(-step/2)`, the per-step contraction compounded.
    pub contraction_envelope: f64,
}

pub fn decay_table(eta: f64, steps: usize, dimension: usize) -> Result<Vec<DecayPoint>> {
    let measured = decay_measurement(eta, steps, dimension)?;
    let per_step = 1.0 / (1.0 + eta * eta).sqrt();
    Ok(measured
        .into_iter()
        .enumerate()
        .map(|(step, measured_weight)| DecayPoint {
            step,
            measured_weight,
            eta_pow_envelope: eta.powi(step as i32),
            contraction_envelope: per_step.powi(step as i32),
        })
        .collect())
}
