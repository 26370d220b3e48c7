use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampling::CooldownLedger;
use crate::updaters::UpdateMethod;

/// How the simulated user decides to like a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelRule {
    /// Like iff `g . a >= theta` on the raw binary vectors. With about 30
    /// tags per side this is almost always a like.
    RawDot,
    /// Like iff `cos(g, a) >= theta`.
    NormalizedCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingMode {
    /// Tag-count-proportional sampling; one schedule per user, shared by
    /// every method.
    RowNorm,
    /// Uniform stage-one draw then cosine-weighted subsample; schedules
    /// depend on each method's current preference.
    Adaptive,
}

/// Starting preference vector of every simulated learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    /// All-ones, unit-normalized.
    AllOnes,
    /// The user's own tag vector, normalized.
    OwnTags,
    /// A fresh random binary vector, normalized.
    RandomBinary,
}

macro_rules! string_enum {
    ($ty:ident, $param:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::invalid(
                        $param,
                        format!(concat!("expected one of ", $("`", $text, "` ",)+ "got `{}`"), other),
                    )),
                }
            }
        }
    };
}

string_enum!(LabelRule, "label_rule", { RawDot => "raw-dot", NormalizedCosine => "normalized-cos" });
string_enum!(SamplingMode, "sampling", { RowNorm => "row-norm", Adaptive => "adaptive" });
string_enum!(InitStrategy, "init", {
    AllOnes => "all-ones",
    OwnTags => "own-tags",
    RandomBinary => "random-binary",
});

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub population: usize,
    pub active_users: usize,
    pub dimension: usize,
    pub sessions: usize,
    pub swipes_per_session: usize,
    /// Like threshold of the label oracle.
    pub theta: f64,
    pub p_flip: f64,
    pub label_rule: LabelRule,
    pub sampling: SamplingMode,
    /// Stage-one uniform draw of adaptive sampling.
    pub adaptive_pool: usize,
    /// Stage-two subsample of adaptive sampling; equals the session length.
    pub adaptive_k: usize,
    /// Cooldown window in sessions, `None` to disable.
    pub cooldown: Option<u32>,
    pub init: InitStrategy,
    /// Drop zero-residual rows before each block solve.
    pub drop_satisfied_rows: bool,
    pub master_seed: u64,
    pub methods: Vec<UpdateMethod>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            population: 2000,
            active_users: 100,
            dimension: 60,
            sessions: 200,
            swipes_per_session: 32,
            theta: 0.52,
            p_flip: 0.2,
            label_rule: LabelRule::RawDot,
            sampling: SamplingMode::RowNorm,
            adaptive_pool: 32,
            adaptive_k: 16,
            cooldown: Some(CooldownLedger::DEFAULT_WINDOW),
            init: InitStrategy::AllOnes,
            drop_satisfied_rows: false,
            master_seed: 42,
            methods: UpdateMethod::standard_suite(0.52, 0.05),
        }
    }
}

impl SimConfig {
    pub fn total_swipes(&self) -> usize {
        self.sessions * self.swipes_per_session
    }

    /// The adaptive-sampling counterpart of this configuration: twice the
    /// sessions at half the length (same total swipes), cosine
    /// subsampling, and the normalized-cosine label rule.
    pub fn adaptive_condition(&self) -> SimConfig {
        let swipes = (self.swipes_per_session / 2).max(1);
        SimConfig {
            sessions: self.total_swipes() / swipes,
            swipes_per_session: swipes,
            sampling: SamplingMode::Adaptive,
            label_rule: LabelRule::NormalizedCosine,
            adaptive_k: swipes,
            ..self.clone()
        }
    }

    pub fn with_p_flip(&self, p_flip: f64) -> SimConfig {
        SimConfig {
            p_flip,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if self.population < 2 {
            return Err(Error::invalid("population", "needs at least 2 users"));
        }
        if self.active_users == 0 || self.active_users > self.population {
            return Err(Error::invalid(
                "active_users",
                format!(
                    "must lie in [1, population = {}], got {}",
                    self.population, self.active_users
                ),
            ));
        }
        if self.population > u32::MAX as usize {
            return Err(Error::invalid("population", "exceeds the id space"));
        }
        if self.swipes_per_session == 0 {
            return Err(Error::invalid("swipes_per_session", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.p_flip) {
            return Err(Error::invalid(
                "p_flip",
                format!("must lie in [0, 1), got {}", self.p_flip),
            ));
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        let pool = self.population - 1;
        match self.sampling {
            SamplingMode::RowNorm if self.swipes_per_session > pool => {
                return Err(Error::invalid(
                    "swipes_per_session",
                    format!("exceeds the {pool} candidates available to each viewer"),
                ));
            }
            SamplingMode::Adaptive => {
                if self.adaptive_k != self.swipes_per_session {
                    return Err(Error::invalid(
                        "adaptive_k",
                        format!(
                            "must equal swipes_per_session ({}) under adaptive sampling, got {}",
                            self.swipes_per_session, self.adaptive_k
                        ),
                    ));
                }
                if self.adaptive_pool < self.adaptive_k || self.adaptive_pool > pool {
                    return Err(Error::invalid(
                        "adaptive_pool",
                        format!(
                            "must lie in [adaptive_k = {}, {pool}], got {}",
                            self.adaptive_k, self.adaptive_pool
                        ),
                    ));
                }
            }
            _ => {}
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "at least one method is required"));
        }
        if self.methods.len() > u8::MAX as usize {
            return Err(Error::invalid("methods", "too many methods"));
        }
        for m in &self.methods {
            m.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.total_swipes(), 6400);
        assert_eq!(c.methods.len(), 6);
    }

    #[test]
    fn adaptive_condition_keeps_total_swipes() {
        let a = SimConfig::default().adaptive_condition();
        a.validate().unwrap();
        assert_eq!((a.sessions, a.swipes_per_session), (400, 16));
        assert_eq!(a.total_swipes(), 6400);
        assert_eq!(a.label_rule, LabelRule::NormalizedCosine);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let bad = |f: fn(&mut SimConfig)| {
            let mut c = SimConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        bad(|c| c.p_flip = 1.0);
        bad(|c| c.active_users = 2001);
        bad(|c| c.methods.clear());
        bad(|c| c.methods[0].params.alpha = 0.0);
        bad(|c| c.swipes_per_session = 0);
        bad(|c| {
            c.sampling = SamplingMode::Adaptive;
            c.adaptive_k = 8;
        });
    }

    #[test]
    fn enum_strings() {
        assert_eq!("raw-dot".parse::<LabelRule>().unwrap(), LabelRule::RawDot);
        assert_eq!(
            "normalized-cos".parse::<LabelRule>().unwrap(),
            LabelRule::NormalizedCosine
        );
        assert_eq!("adaptive".parse::<SamplingMode>().unwrap(), SamplingMode::Adaptive);
        assert_eq!("own-tags".parse::<InitStrategy>().unwrap(), InitStrategy::OwnTags);
        let err = "cosine".parse::<LabelRule>().unwrap_err().to_string();
        assert!(err.contains("raw-dot"), "{err}");
    }
}
