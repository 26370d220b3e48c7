//! Kaczmarz-family online preference learning.
//!
//! A user's taste is a real vector over binary candidate tags, scored by
//! cosine similarity and updated from swipes through a signed hinge
//! residual. [`updaters`] holds the update rules, from per-swipe
//! Tikhonov–Kaczmarz to the session-level Block-NK; [`sampling`] the
//! candidate pipeline; [`simulator`] a seeded population simulation that
//! compares the rules on identical swipe sequences.
//!
//! Per-user simulation work fans out over rayon when the default
//! `parallel` feature is on. Outputs are bit-identical for any worker count.

pub mod error;
pub mod exec;
pub mod rng;
pub mod sampling;
pub mod simulator;
pub mod updaters;
pub mod vector;

pub use error::{Error, Result};
pub use exec::Execution;
pub use updaters::{MethodKind, UpdateMethod};
pub use vector::{
    cosine_score, normalize, row_norm_sq, CandidateId, HyperParams, Label, PreferenceState,
    TagVector,
};
