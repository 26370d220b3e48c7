use std::hash::{DefaultHasher, Hash, Hasher};

use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::population::{flip_coins, FlipCoin, Population};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::sampling::{
    cooldown_filter, cosine_subsample, hard_filter, row_norm_sample, CandidatePool, CooldownLedger,
    Profile,
};
use crate::vector::{CandidateId, PreferenceState};

/// Candidates and flip coins for every swipe slot of one viewer.
///
/// Built once per viewer and replayed for every method, so all methods see
/// the same candidates in the same order with the same label flips.
#[derive(Debug, Clone, PartialEq)]
pub struct PresentationSchedule {
    swipes_per_session: usize,
    candidates: Vec<u32>,
    coins: Vec<FlipCoin>,
}

impl PresentationSchedule {
    /// Schedule from a flat list of population indices, `swipes_per_session`
    /// per session, and one flip coin per slot.
    pub fn new(swipes_per_session: usize, candidates: Vec<u32>, coins: Vec<FlipCoin>) -> Result<Self> {
        if swipes_per_session == 0 || candidates.len() % swipes_per_session != 0 {
            return Err(Error::invalid(
                "candidates",
                format!("{} slots do not split into sessions of {swipes_per_session}", candidates.len()),
            ));
        }
        if coins.len() != candidates.len() {
            return Err(Error::invalid(
                "coins",
                format!("{} flip coins for {} slots", coins.len(), candidates.len()),
            ));
        }
        Ok(PresentationSchedule {
            swipes_per_session,
            candidates,
            coins,
        })
    }

    pub fn sessions(&self) -> usize {
        self.candidates.len() / self.swipes_per_session
    }

    pub fn swipes_per_session(&self) -> usize {
        self.swipes_per_session
    }

    /// Population indices shown in `session`, in display order.
    pub fn session(&self, session: usize) -> &[u32] {
        let k = self.swipes_per_session;
        &self.candidates[session * k..(session + 1) * k]
    }

    pub fn coins(&self) -> &[FlipCoin] {
        &self.coins
    }

    /// Digest of the (candidate, flip decision) sequence at noise `p_flip`,
    /// comparable with [`UserTrace::presentation_digest`](super::UserTrace).
    pub fn digest(&self, p_flip: f64) -> u64 {
        let mut d = PresentationDigest::default();
        for (&c, coin) in self.candidates.iter().zip(&self.coins) {
            d.record(c, coin.fires(p_flip));
        }
        d.finish()
    }
}

#[derive(Default)]
pub(crate) struct PresentationDigest(DefaultHasher);

impl PresentationDigest {
    pub(crate) fn record(&mut self, candidate: u32, flipped: bool) {
        (candidate, flipped).hash(&mut self.0);
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0.finish()
    }
}

fn base_pool<'p>(population: &'p Population, viewer: &Profile<'_>) -> Result<CandidatePool<'p>> {
    let all = CandidatePool::new(population.users().iter().map(|u| u.profile()).collect())?;
    Ok(hard_filter(&all, viewer, &[]))
}

/// Row-norm schedule of the user at population index `viewer`.
pub fn row_norm_schedule(
    population: &Population,
    viewer: usize,
    config: &SimConfig,
) -> Result<PresentationSchedule> {
    let user = population.checked_user(viewer)?;
    let profile = user.profile();
    let pool = base_pool(population, &profile)?;
    let mut rng = substream(config.master_seed, Stream::Schedule { user: user.id.0 });
    let mut ledger = config.cooldown.map(CooldownLedger::new);
    let k = config.swipes_per_session;
    let mut candidates = Vec::with_capacity(config.total_swipes());
    for session in 0..config.sessions {
        let s = session as u32;
        let batch = match &ledger {
            Some(l) => {
                let eligible = cooldown_filter(&pool, user.id, l, s, k);
                row_norm_sample(&eligible, &profile, k, &mut rng)?
            }
            None => row_norm_sample(&pool, &profile, k, &mut rng)?,
        };
        for c in &batch {
            if let Some(l) = ledger.as_mut() {
                l.record(user.id, c.id, s);
            }
            candidates.push(c.id.0);
        }
    }
    Ok(PresentationSchedule {
        swipes_per_session: k,
        candidates,
        coins: flip_coins(config.master_seed, user.id, config.total_swipes()),
    })
}

/// Supplies the candidates of each session to a trajectory.
pub(crate) trait SessionSource {
    fn next_session(&mut self, session: usize, current: &PreferenceState) -> Result<Vec<u32>>;
}

impl SessionSource for &PresentationSchedule {
    fn next_session(&mut self, session: usize, _current: &PreferenceState) -> Result<Vec<u32>> {
        Ok(self.session(session).to_vec())
    }
}

/// Cosine subsampling against the learner's current direction.
pub(crate) struct AdaptiveSource<'p> {
    viewer: Profile<'p>,
    pool: CandidatePool<'p>,
    ledger: Option<CooldownLedger>,
    rng: ChaCha8Rng,
    pool_draw: usize,
    k: usize,
}

impl<'p> AdaptiveSource<'p> {
    pub(crate) fn new(
        population: &'p Population,
        viewer: usize,
        method_index: usize,
        config: &SimConfig,
    ) -> Result<Self> {
        let profile = population.checked_user(viewer)?.profile();
        let user = profile.id.0;
        Ok(AdaptiveSource {
            viewer: profile,
            pool: base_pool(population, &profile)?,
            ledger: config.cooldown.map(CooldownLedger::new),
            rng: substream(
                config.master_seed,
                Stream::Adaptive {
                    user,
                    method: method_index as u8,
                },
            ),
            pool_draw: config.adaptive_pool,
            k: config.adaptive_k,
        })
    }
}

impl SessionSource for AdaptiveSource<'_> {
    fn next_session(&mut self, session: usize, current: &PreferenceState) -> Result<Vec<u32>> {
        let s = session as u32;
        let direction = current.direction()?;
        let viewer_id: CandidateId = self.viewer.id;
        let batch = match &self.ledger {
            Some(l) => {
                let eligible = cooldown_filter(&self.pool, viewer_id, l, s, self.pool_draw);
                cosine_subsample(&eligible, &self.viewer, &direction, self.pool_draw, self.k, &mut self.rng)?
            }
            None => cosine_subsample(&self.pool, &self.viewer, &direction, self.pool_draw, self.k, &mut self.rng)?,
        };
        if let Some(l) = self.ledger.as_mut() {
            for c in &batch {
                l.record(viewer_id, c.id, s);
            }
        }
        Ok(batch.iter().map(|c| c.id.0).collect())
    }
}
