use super::trajectory::{consecutive_dots, NormBoundStatus, UserTrace};
use crate::error::{Error, Result};
use crate::updaters::UpdateMethod;

/// Mean and population standard deviation over active users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// `None` for an empty sample.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<MeanStd> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }
}

/// Aggregate metrics of one method over all active users. Metrics that
/// are undefined for the run (no swipes, fewer than two sessions) are
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentMetrics {
    pub method: UpdateMethod,
    pub alignment_trace: Vec<MeanStd>,
    pub align_at_20: Option<f64>,
    pub direction_stability: Option<f64>,
    pub like_rate: Option<f64>,
    pub final_alignment: Option<MeanStd>,
    pub degenerate_skips: u64,
    /// Users whose norm bound was checked and held.
    pub norm_bound_held: usize,
    pub norm_bound_violations: usize,
}

impl ExperimentMetrics {
    pub fn aggregate(method: UpdateMethod, traces: &[UserTrace]) -> ExperimentMetrics {
        let len = traces.iter().map(|t| t.alignment.len()).min().unwrap_or(0);
        let alignment_trace: Vec<MeanStd> = (0..len)
            .filter_map(|i| MeanStd::of(traces.iter().map(|t| t.alignment[i])))
            .collect();
        let swipes: u64 = traces.iter().map(|t| t.swipes).sum();
        let likes: u64 = traces.iter().map(|t| t.likes).sum();
        let sessions: Vec<&[Vec<f64>]> = traces.iter().map(|t| t.session_ends.as_slice()).collect();
        let count = |f: fn(&NormBoundStatus) -> bool| traces.iter().filter(|t| f(&t.norm_bound)).count();
        ExperimentMetrics {
            method,
            align_at_20: compute_align_at(&alignment_trace, 20).ok(),
            direction_stability: compute_direction_stability(&sessions),
            like_rate: (swipes > 0).then(|| likes as f64 / swipes as f64),
            final_alignment: alignment_trace.last().copied(),
            alignment_trace,
            degenerate_skips: traces.iter().map(|t| t.degenerate_skips).sum(),
            norm_bound_held: count(|s| *s == NormBoundStatus::Held),
            norm_bound_violations: count(|s| matches!(s, NormBoundStatus::Violated { .. })),
        }
    }

    /// Mean alignment at 1-based swipe `t`.
    pub fn alignment_at(&self, t: usize) -> Result<f64> {
        compute_align_at(&self.alignment_trace, t)
    }
}

/// Mean over users of the mean `v_s . v_{s+1}` over consecutive session
/// ends. `None` if any user has fewer than two sessions.
pub fn compute_direction_stability<V: AsRef<[Vec<f64>]>>(session_ends: &[V]) -> Option<f64> {
    let per_user: Option<Vec<f64>> = session_ends
        .iter()
        .map(|s| {
            let s = s.as_ref();
            (s.len() >= 2).then(|| consecutive_dots(s).sum::<f64>() / (s.len() - 1) as f64)
        })
        .collect();
    MeanStd::of(per_user?).map(|m| m.mean)
}

/// Mean alignment at 1-based swipe slot `t`.
pub fn compute_align_at(trace: &[MeanStd], t: usize) -> Result<f64> {
    if t == 0 || t > trace.len() {
        return Err(Error::invalid(
            "t",
            format!("swipe {t} outside the trace of length {}", trace.len()),
        ));
    }
    Ok(trace[t - 1].mean)
}
