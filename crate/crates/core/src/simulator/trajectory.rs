use super::config::SimConfig;
use super::population::{flip_label, label_oracle, FlipCoin, Population};
use super::schedule::{AdaptiveSource, PresentationDigest, PresentationSchedule, SessionSource};
use crate::error::{Error, Result};
use crate::updaters::{MethodKind, NormBoundOutcome, NormBoundTracker, SessionBatch, UpdateMethod};
use crate::vector::{cosine_score, dot, l2_norm, CandidateId, Label, PreferenceState};

/// Outcome of the online norm-bound check on one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormBoundStatus {
    /// Only Tikhonov–Kaczmarz trajectories are checked.
    NotTracked,
    Held,
    /// 1-based swipe slot at which the bound first failed.
    Violated { swipe: usize },
    /// A row broke the precondition of the bound.
    NotApplicable,
}

/// Everything one (user, method) trajectory contributes to the metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTrace {
    pub user: CandidateId,
    /// `cos(v_t, g)` after every swipe slot.
    pub alignment: Vec<f64>,
    /// Normalized preference at the end of each session.
    pub session_ends: Vec<Vec<f64>>,
    pub likes: u64,
    pub swipes: u64,
    pub degenerate_skips: u64,
    pub norm_bound: NormBoundStatus,
    /// Hash of the observed (candidate, flip decision) sequence.
    pub presentation_digest: u64,
    pub final_preference: PreferenceState,
}

/// Runs `method` for the user at population index `user` over a fixed
/// row-norm schedule.
pub fn run_user_trajectory(
    population: &Population,
    user: usize,
    method: &UpdateMethod,
    schedule: &PresentationSchedule,
    config: &SimConfig,
) -> Result<UserTrace> {
    if schedule.sessions() != config.sessions
        || schedule.swipes_per_session() != config.swipes_per_session
    {
        return Err(Error::invalid(
            "schedule",
            format!(
                "{} x {} does not match the configured {} x {}",
                schedule.sessions(),
                schedule.swipes_per_session(),
                config.sessions,
                config.swipes_per_session
            ),
        ));
    }
    run_with_source(population, user, method, schedule, schedule.coins(), config)
}

/// Runs `method` for one user under adaptive sampling. `method_index`
/// selects the sampling stream, so each method draws its own candidates.
pub fn run_adaptive_trajectory(
    population: &Population,
    user: usize,
    method_index: usize,
    method: &UpdateMethod,
    coins: &[FlipCoin],
    config: &SimConfig,
) -> Result<UserTrace> {
    let source = AdaptiveSource::new(population, user, method_index, config)?;
    run_with_source(population, user, method, source, coins, config)
}

fn run_with_source<S: SessionSource>(
    population: &Population,
    user: usize,
    method: &UpdateMethod,
    mut source: S,
    coins: &[FlipCoin],
    config: &SimConfig,
) -> Result<UserTrace> {
    let viewer = population.checked_user(user)?;
    let total = config.total_swipes();
    if coins.len() < total {
        return Err(Error::invalid(
            "coins",
            format!("{} flip coins for {total} swipes", coins.len()),
        ));
    }
    let mut v = viewer.preference.clone();
    let mut tracker = (method.kind == MethodKind::Tk)
        .then(|| NormBoundTracker::new(v.norm(), method.params.alpha));
    let mut norm_bound = if tracker.is_some() {
        NormBoundStatus::Held
    } else {
        NormBoundStatus::NotTracked
    };
    let mut alignment = Vec::with_capacity(total);
    let mut session_ends = Vec::with_capacity(config.sessions);
    let mut digest = PresentationDigest::default();
    let mut likes = 0u64;
    let mut degenerate_skips = 0u64;
    let block_k = method.params.block_k;
    let mut batch = SessionBatch::with_capacity(block_k.min(config.swipes_per_session));
    let mut slot = 0usize;

    for session in 0..config.sessions {
        let shown = source.next_session(session, &v)?;
        let last = shown.len().saturating_sub(1);
        for (i, &c) in shown.iter().enumerate() {
            let candidate = population.checked_user(c as usize)?;
            let coin = coins[slot];
            let clean = label_oracle(&viewer.soulmate, &candidate.tags, config.label_rule, config.theta);
            let label = flip_label(clean, config.p_flip, coin);
            digest.record(c, coin.fires(config.p_flip));
            if label == Label::Like {
                likes += 1;
            }
            let row = candidate.tags.values();
            // block residuals are all taken against the block-start vector
            let r = method.residual(cosine_score(&v, row)?, label);
            slot += 1;

            if method.kind.is_block() {
                batch.push(row, r);
                if batch.len() == block_k || i == last {
                    let outcome = if config.drop_satisfied_rows {
                        let kept = batch.without_satisfied_rows();
                        (!kept.is_empty()).then(|| method.block_step(&v, &kept))
                    } else {
                        Some(method.block_step(&v, &batch))
                    };
                    match outcome {
                        None => {}
                        Some(Ok(next)) => v = next,
                        Some(Err(Error::DegenerateUpdate)) => {
                            log::debug!("degenerate block update for user {} at swipe {slot}", viewer.id);
                            degenerate_skips += 1;
                        }
                        Some(Err(e)) => return Err(e),
                    }
                    batch.clear();
                }
            } else {
                match method.step(&v, row, r) {
                    Ok(next) => {
                        if let Some(t) = tracker.as_mut() {
                            t.observe(r, l2_norm(row));
                        }
                        v = next;
                    }
                    Err(Error::DegenerateUpdate) => {
                        log::debug!("degenerate update for user {} at swipe {slot}", viewer.id);
                        degenerate_skips += 1;
                    }
                    Err(e) => return Err(e),
                }
                if let (Some(t), NormBoundStatus::Held) = (tracker.as_ref(), norm_bound) {
                    match t.check(v.norm()) {
                        NormBoundOutcome::Applicable { holds: false, .. } => {
                            norm_bound = NormBoundStatus::Violated { swipe: slot }
                        }
                        NormBoundOutcome::NotApplicable => norm_bound = NormBoundStatus::NotApplicable,
                        NormBoundOutcome::Applicable { .. } => {}
                    }
                }
            }
            alignment.push(cosine_score(&v, &viewer.soulmate)?);
        }
        session_ends.push(v.direction()?);
    }

    Ok(UserTrace {
        user: viewer.id,
        alignment,
        session_ends,
        likes,
        swipes: slot as u64,
        degenerate_skips,
        norm_bound,
        presentation_digest: digest.finish(),
        final_preference: v,
    })
}

/// `cos` between consecutive session-end directions, which are unit vectors.
pub(crate) fn consecutive_dots(session_ends: &[Vec<f64>]) -> impl Iterator<Item = f64> + '_ {
    session_ends.windows(2).map(|w| dot(&w[0], &w[1]).clamp(-1.0, 1.0))
}
