//! Candidate pipeline: hard filtering, cooldown exclusion, sampling and
//! display ordering.

mod filter;

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::Rng;

pub use filter::{AgeRange, Demographics, FilterPredicate, MutualInterest, SelfExclusion};

use crate::error::{Error, Result};
use crate::vector::{cosine_score, CandidateId, PreferenceState, TagVector};

/// A profile as seen by the pipeline: its tags, and the preference vector
/// used when it in turn scores the viewer.
#[derive(Debug, Clone, Copy)]
pub struct Profile<'a> {
    pub id: CandidateId,
    pub tags: &'a TagVector,
    pub preference: &'a PreferenceState,
}

#[derive(Debug, Clone, Default)]
pub struct CandidatePool<'a> {
    entries: Vec<Profile<'a>>,
}

impl<'a> CandidatePool<'a> {
    pub fn new(entries: Vec<Profile<'a>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.id) {
                return Err(Error::DuplicateCandidate(e.id.0));
            }
        }
        Ok(CandidatePool { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Profile<'a>] {
        &self.entries
    }

    pub fn contains(&self, id: CandidateId) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    fn retain(&self, mut keep: impl FnMut(&Profile<'a>) -> bool) -> Self {
        CandidatePool {
            entries: self.entries.iter().filter(|e| keep(e)).copied().collect(),
        }
    }
}

/// Keeps the candidates every predicate admits. The viewer is always
/// removed, whether or not [`SelfExclusion`] is in the list.
pub fn hard_filter<'a>(
    pool: &CandidatePool<'a>,
    viewer: &Profile<'_>,
    predicates: &[&dyn FilterPredicate],
) -> CandidatePool<'a> {
    pool.retain(|c| {
        SelfExclusion.admits(viewer, c) && predicates.iter().all(|p| p.admits(viewer, c))
    })
}

/// Geometric mean of the two directed scores, each clamped to `[0, 1]`.
pub fn geometric_mean_score(forward: f64, backward: f64) -> f64 {
    (forward.clamp(0.0, 1.0) * backward.clamp(0.0, 1.0)).sqrt()
}

/// Reciprocal compatibility of viewer and candidate.
pub fn bidirectional_score(viewer: &Profile<'_>, candidate: &Profile<'_>) -> Result<f64> {
    let forward = cosine_score(viewer.preference, candidate.tags)?;
    let backward = cosine_score(candidate.preference, viewer.tags)?;
    Ok(geometric_mean_score(forward, backward))
}

/// Last session in which each (viewer, candidate) pair interacted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooldownLedger {
    window: u32,
    records: HashMap<(CandidateId, CandidateId), u32>,
}

impl CooldownLedger {
    pub const DEFAULT_WINDOW: u32 = 14;

    pub fn new(window: u32) -> Self {
        CooldownLedger {
            window,
            records: HashMap::new(),
        }
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    /// Records an interaction. Earlier session indices never overwrite
    /// later ones.
    pub fn record(&mut self, viewer: CandidateId, candidate: CandidateId, session: u32) {
        let last = self.records.entry((viewer, candidate)).or_insert(session);
        *last = (*last).max(session);
    }

    pub fn last_seen(&self, viewer: CandidateId, candidate: CandidateId) -> Option<u32> {
        self.records.get(&(viewer, candidate)).copied()
    }

    /// True if the pair interacted within the last `window` sessions.
    pub fn is_cooling(&self, viewer: CandidateId, candidate: CandidateId, session: u32) -> bool {
        self.last_seen(viewer, candidate)
            .is_some_and(|last| last <= session && session - last <= self.window)
    }
}

impl Default for CooldownLedger {
    fn default() -> Self {
        CooldownLedger::new(Self::DEFAULT_WINDOW)
    }
}

/// Drops recently seen candidates, unless that would leave fewer than
/// `batch_size`, in which case the input pool is returned unchanged.
pub fn cooldown_filter<'a>(
    pool: &CandidatePool<'a>,
    viewer: CandidateId,
    ledger: &CooldownLedger,
    session: u32,
    batch_size: usize,
) -> CandidatePool<'a> {
    let filtered = pool.retain(|c| !ledger.is_cooling(viewer, c.id, session));
    if filtered.len() < batch_size {
        pool.clone()
    } else {
        filtered
    }
}

/// Draws `n` distinct indices, sequentially, each with probability
/// proportional to its weight among those not yet drawn. Once the
/// remaining weight is zero the rest are drawn uniformly.
fn draw_weighted_distinct<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(n <= weights.len());
    let mut w: Vec<f64> = weights.iter().map(|&x| x.max(0.0)).collect();
    let mut taken = vec![false; w.len()];
    let mut total: f64 = w.iter().sum();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &x) in w.iter().enumerate() {
                if x > 0.0 {
                    acc += x;
                    chosen = Some(i);
                    if target < acc {
                        break;
                    }
                }
            }
            chosen.expect("positive total has a positive entry")
        } else {
            let free: Vec<usize> = (0..w.len()).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[pick] = true;
        total -= w[pick];
        w[pick] = 0.0;
        if w.iter().all(|&x| x == 0.0) {
            total = 0.0;
        }
        out.push(pick);
    }
    out
}

/// Sorts a batch by bidirectional score, highest first, ties by id.
pub fn order_for_display<'a>(batch: Vec<Profile<'a>>, viewer: &Profile<'_>) -> Result<Vec<Profile<'a>>> {
    let mut scored = batch
        .into_iter()
        .map(|c| Ok((bidirectional_score(viewer, &c)?, c)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.partial_cmp(sa)
            .unwrap_or(Ordering::Equal)
            .then(a.id.cmp(&b.id))
    });
    Ok(scored.into_iter().map(|(_, c)| c).collect())
}

/// Samples `n` distinct candidates with probability proportional to tag
/// count, returned in display order.
pub fn row_norm_sample<'a, R: Rng + ?Sized>(
    pool: &CandidatePool<'a>,
    viewer: &Profile<'_>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Profile<'a>>> {
    if pool.len() < n {
        return Err(Error::PoolExhausted {
            requested: n,
            available: pool.len(),
        });
    }
    let weights: Vec<f64> = pool
        .entries()
        .iter()
        .map(|c| c.tags.tag_count() as f64)
        .collect();
    let picks = draw_weighted_distinct(&weights, n, rng);
    order_for_display(picks.into_iter().map(|i| pool.entries()[i]).collect(), viewer)
}

/// Two-stage adaptive sampling: `pool_draw` candidates uniformly, then `k`
/// of those with weights `max(0, cos(direction, a))`. Returned in display
/// order.
pub fn cosine_subsample<'a, R: Rng + ?Sized>(
    pool: &CandidatePool<'a>,
    viewer: &Profile<'_>,
    direction: &[f64],
    pool_draw: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Profile<'a>>> {
    if k > pool_draw {
        return Err(Error::invalid(
            "adaptive_k",
            format!("subsample size {k} exceeds stage-one draw {pool_draw}"),
        ));
    }
    if pool.len() < pool_draw {
        return Err(Error::PoolExhausted {
            requested: pool_draw,
            available: pool.len(),
        });
    }
    let stage_one = rand::seq::index::sample(rng, pool.len(), pool_draw);
    let candidates: Vec<Profile<'a>> = stage_one.iter().map(|i| pool.entries()[i]).collect();
    let weights = candidates
        .iter()
        .map(|c| Ok(cosine_score(direction, c.tags)?.max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let picks = draw_weighted_distinct(&weights, k, rng);
    order_for_display(picks.into_iter().map(|i| candidates[i]).collect(), viewer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        tags: Vec<TagVector>,
        prefs: Vec<PreferenceState>,
    }

    impl Fixture {
        fn new(tag_sets: &[&[usize]], dim: usize) -> Self {
            let tags: Vec<TagVector> = tag_sets
                .iter()
                .enumerate()
                .map(|(i, s)| TagVector::from_indices(CandidateId(i as u32), dim, s).unwrap())
                .collect();
            let prefs = tags.iter().map(|_| PreferenceState::uniform(dim)).collect();
            Fixture { tags, prefs }
        }

        fn profile(&self, i: usize) -> Profile<'_> {
            Profile {
                id: CandidateId(i as u32),
                tags: &self.tags[i],
                preference: &self.prefs[i],
            }
        }

        fn pool(&self) -> CandidatePool<'_> {
            CandidatePool::new((0..self.tags.len()).map(|i| self.profile(i)).collect()).unwrap()
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = Fixture::new(&[&[0], &[1]], 2);
        let p = f.profile(0);
        assert_eq!(
            CandidatePool::new(vec![p, p]).unwrap_err(),
            Error::DuplicateCandidate(0)
        );
    }

    #[test]
    fn hard_filter_always_excludes_viewer() {
        let f = Fixture::new(&[&[0], &[1], &[0, 1]], 2);
        let pool = f.pool();
        let viewer = f.profile(1);
        let out = hard_filter(&pool, &viewer, &[]);
        assert_eq!(out.len(), 2);
        assert!(!out.contains(CandidateId(1)));
        let reject_all = |_: &Profile<'_>, _: &Profile<'_>| false;
        assert!(hard_filter(&pool, &viewer, &[&reject_all]).is_empty());
    }

    #[test]
    fn geometric_mean_examples() {
        assert!((geometric_mean_score(0.64, 0.64) - 0.64).abs() < 1e-15);
        assert!((geometric_mean_score(1.0, 0.25) - 0.5).abs() < 1e-15);
        assert_eq!(geometric_mean_score(0.8, -0.3), 0.0);
    }

    #[test]
    fn bidirectional_score_is_symmetric() {
        let f = Fixture::new(&[&[0, 1, 2], &[2, 3]], 4);
        let prefs = [
            PreferenceState::new(vec![0.2, 0.9, 0.1, 0.4]).unwrap(),
            PreferenceState::new(vec![0.7, 0.1, 0.3, 0.3]).unwrap(),
        ];
        let a = Profile {
            preference: &prefs[0],
            ..f.profile(0)
        };
        let b = Profile {
            preference: &prefs[1],
            ..f.profile(1)
        };
        let ab = bidirectional_score(&a, &b).unwrap();
        let ba = bidirectional_score(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn cooldown_boundaries() {
        let f = Fixture::new(&[&[0], &[1], &[0, 1], &[1, 2]], 3);
        let pool = f.pool();
        let viewer = CandidateId(99);
        let mut ledger = CooldownLedger::new(14);
        assert_eq!(cooldown_filter(&pool, viewer, &ledger, 20, 1).len(), 4);

        ledger.record(viewer, CandidateId(0), 5); // 15 sessions before 20
        ledger.record(viewer, CandidateId(1), 6); // 14 sessions before 20
        let out = cooldown_filter(&pool, viewer, &ledger, 20, 1);
        assert!(out.contains(CandidateId(0)));
        assert!(!out.contains(CandidateId(1)));
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn cooldown_relaxes_when_pool_too_small() {
        let f = Fixture::new(&[&[0], &[1], &[0, 1]], 2);
        let pool = f.pool();
        let viewer = CandidateId(7);
        let mut ledger = CooldownLedger::default();
        for i in 0..3 {
            ledger.record(viewer, CandidateId(i), 3);
        }
        assert_eq!(cooldown_filter(&pool, viewer, &ledger, 4, 2).len(), 3);
    }

    #[test]
    fn ledger_is_monotone() {
        let mut ledger = CooldownLedger::new(2);
        let (v, c) = (CandidateId(0), CandidateId(1));
        ledger.record(v, c, 9);
        ledger.record(v, c, 4);
        assert_eq!(ledger.last_seen(v, c), Some(9));
    }

    #[test]
    fn row_norm_sample_whole_pool_is_score_ordered() {
        let f = Fixture::new(&[&[0], &[0, 1, 2], &[1, 2], &[3], &[0, 3]], 4);
        let pool = f.pool();
        let viewer = Profile {
            id: CandidateId(100),
            tags: &f.tags[1],
            preference: &f.prefs[1],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch = row_norm_sample(&pool, &viewer, 5, &mut rng).unwrap();
        assert_eq!(batch.len(), 5);
        let scores: Vec<f64> = batch
            .iter()
            .map(|c| bidirectional_score(&viewer, c).unwrap())
            .collect();
        for (i, w) in scores.windows(2).enumerate() {
            assert!(w[0] >= w[1]);
            if w[0] == w[1] {
                assert!(batch[i].id < batch[i + 1].id);
            }
        }
        assert!(matches!(
            row_norm_sample(&pool, &viewer, 6, &mut rng),
            Err(Error::PoolExhausted { requested: 6, available: 5 })
        ));
    }

    #[test]
    fn cosine_subsample_fallback_and_sole_positive() {
        let f = Fixture::new(&[&[1], &[2], &[3], &[1, 2], &[0]], 4);
        let pool = f.pool();
        let viewer = Profile {
            id: CandidateId(100),
            tags: &f.tags[4],
            preference: &f.prefs[4],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // direction orthogonal to all but candidate 4
        let dir = [1.0, 0.0, 0.0, 0.0];
        for _ in 0..50 {
            let out = cosine_subsample(&pool, &viewer, &dir, 5, 2, &mut rng).unwrap();
            assert!(out.iter().any(|c| c.id == CandidateId(4)));
        }
        // every stage-one candidate orthogonal: uniform fallback still fills the batch
        let sub = CandidatePool::new((0..4).map(|i| f.profile(i)).collect()).unwrap();
        let out = cosine_subsample(&sub, &viewer, &dir, 4, 3, &mut rng).unwrap();
        assert_eq!(out.len(), 3);
        assert!(cosine_subsample(&sub, &viewer, &dir, 5, 3, &mut rng).is_err());
        assert!(cosine_subsample(&sub, &viewer, &dir, 2, 3, &mut rng).is_err());
    }

    #[test]
    fn weighted_draws_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let mut picks = draw_weighted_distinct(&[0.0, 3.0, 1.0, 0.0, 2.0, 0.5], 6, &mut rng);
            // positives come before the uniform fallback
            assert!(picks[..4].iter().all(|&i| i != 0 && i != 3));
            picks.sort_unstable();
            assert_eq!(picks, vec![0, 1, 2, 3, 4, 5]);
        }
    }
}
