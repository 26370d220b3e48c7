use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{InitStrategy, LabelRule, SimConfig};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::sampling::Profile;
use crate::vector::{cosine_score, dot, normalize, CandidateId, Label, PreferenceState, TagVector};

/// One member of the simulated population.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUser {
    pub id: CandidateId,
    /// What others see when this user is a candidate.
    pub tags: TagVector,
    /// Latent ground-truth preference driving the label oracle.
    pub soulmate: TagVector,
    /// Starting preference vector. It is also the fixed vector used when
    /// this user scores a viewer for display ordering.
    pub preference: PreferenceState,
}

impl SimulatedUser {
    pub fn profile(&self) -> Profile<'_> {
        Profile {
            id: self.id,
            tags: &self.tags,
            preference: &self.preference,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    users: Vec<SimulatedUser>,
    active: Vec<usize>,
}

impl Population {
    /// Population from explicit users. User ids must equal their index and
    /// `active` must hold distinct valid indices.
    pub fn new(users: Vec<SimulatedUser>, active: Vec<usize>) -> Result<Self> {
        for (i, u) in users.iter().enumerate() {
            if u.id.0 as usize != i {
                return Err(Error::invalid("users", format!("user at index {i} has id {}", u.id)));
            }
        }
        let mut seen = vec![false; users.len()];
        for &a in &active {
            if a >= users.len() || std::mem::replace(&mut seen[a], true) {
                return Err(Error::invalid("active", format!("index {a} is out of range or repeated")));
            }
        }
        Ok(Population { users, active })
    }

    pub fn users(&self) -> &[SimulatedUser] {
        &self.users
    }

    /// Indices of the users whose learners are simulated, in metric order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn user(&self, index: usize) -> &SimulatedUser {
        &self.users[index]
    }

    pub(crate) fn checked_user(&self, index: usize) -> Result<&SimulatedUser> {
        self.users
            .get(index)
            .ok_or_else(|| Error::invalid("user", format!("index {index} is outside the population")))
    }
}

fn fair_coin_vector<R: Rng + ?Sized>(rng: &mut R, id: CandidateId, dim: usize) -> TagVector {
    loop {
        let bits: Vec<bool> = (0..dim).map(|_| rng.random_bool(0.5)).collect();
        if let Ok(v) = TagVector::from_bits(id, &bits) {
            return v;
        }
    }
}

/// Draws tags and soulmate vectors from independent fair coins (all-zero
/// draws are redrawn) and picks the active users from a seeded
/// permutation.
pub fn generate_population(config: &SimConfig) -> Result<Population> {
    config.validate()?;
    let d = config.dimension;
    let mut rng = substream(config.master_seed, Stream::Population);
    let mut users = Vec::with_capacity(config.population);
    for i in 0..config.population {
        let id = CandidateId(i as u32);
        let tags = fair_coin_vector(&mut rng, id, d);
        let soulmate = fair_coin_vector(&mut rng, id, d);
        let preference = match config.init {
            InitStrategy::AllOnes => PreferenceState::uniform(d),
            InitStrategy::OwnTags => PreferenceState::new(normalize(tags.values())?)?,
            InitStrategy::RandomBinary => {
                let mut init_rng = substream(config.master_seed, Stream::Init { user: id.0 });
                let v = fair_coin_vector(&mut init_rng, id, d);
                PreferenceState::new(normalize(v.values())?)?
            }
        };
        users.push(SimulatedUser {
            id,
            tags,
            soulmate,
            preference,
        });
    }
    let mut order: Vec<usize> = (0..config.population).collect();
    order.shuffle(&mut substream(config.master_seed, Stream::ActiveSelection));
    order.truncate(config.active_users);
    Ok(Population {
        users,
        active: order,
    })
}

/// Clean label the user with soulmate `g` gives candidate `a`.
pub fn label_oracle(g: &TagVector, a: &TagVector, rule: LabelRule, theta: f64) -> Label {
    let score = match rule {
        LabelRule::RawDot => dot(g.values(), a.values()),
        LabelRule::NormalizedCosine => {
            cosine_score(g, a).expect("tag vectors always have a set coordinate")
        }
    };
    if score >= theta {
        Label::Like
    } else {
        Label::Pass
    }
}

/// Pre-drawn uniform variate attached to one swipe slot. The label of that
/// slot is flipped at noise level `p` iff the variate is below `p`, so the
/// flip decision belongs to the slot, not to the method observing it, and
/// flip sets are nested across noise levels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FlipCoin(pub f64);

impl FlipCoin {
    pub fn fires(self, p_flip: f64) -> bool {
        self.0 < p_flip
    }
}

pub fn flip_label(label: Label, p_flip: f64, coin: FlipCoin) -> Label {
    if coin.fires(p_flip) {
        label.negate()
    } else {
        label
    }
}

/// Flip coins of one viewer, one per swipe slot.
pub fn flip_coins(master_seed: u64, user: CandidateId, slots: usize) -> Vec<FlipCoin> {
    let mut rng = substream(master_seed, Stream::Flips { user: user.0 });
    (0..slots).map(|_| FlipCoin(rng.random::<f64>())).collect()
}
