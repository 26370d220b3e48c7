use std::collections::HashMap;

use super::Profile;
use crate::vector::CandidateId;

/// A hard constraint on who may be shown to whom. Must be deterministic.
pub trait FilterPredicate: Sync {
    fn admits(&self, viewer: &Profile<'_>, candidate: &Profile<'_>) -> bool;
}

impl<F> FilterPredicate for F
where
    F: Fn(&Profile<'_>, &Profile<'_>) -> bool + Sync,
{
    fn admits(&self, viewer: &Profile<'_>, candidate: &Profile<'_>) -> bool {
        self(viewer, candidate)
    }
}

/// Nobody is shown their own profile.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelfExclusion;

impl FilterPredicate for SelfExclusion {
    fn admits(&self, viewer: &Profile<'_>, candidate: &Profile<'_>) -> bool {
        viewer.id != candidate.id
    }
}

/// Attributes the demographic predicates look up by profile id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Demographics {
    pub age: u32,
    /// Bit identifying the profile's gender.
    pub gender: u8,
    /// Mask of genders the profile wants to see.
    pub seeks: u8,
}

/// Candidate age must fall in `[min, max]`. Profiles without attributes
/// are rejected.
#[derive(Debug, Clone, Copy)]
pub struct AgeRange<'a> {
    pub attributes: &'a HashMap<CandidateId, Demographics>,
    pub min: u32,
    pub max: u32,
}

impl FilterPredicate for AgeRange<'_> {
    fn admits(&self, _viewer: &Profile<'_>, candidate: &Profile<'_>) -> bool {
        self.attributes
            .get(&candidate.id)
            .is_some_and(|d| (self.min..=self.max).contains(&d.age))
    }
}

/// Each side's gender must be in the other side's `seeks` mask.
#[derive(Debug, Clone, Copy)]
pub struct MutualInterest<'a> {
    pub attributes: &'a HashMap<CandidateId, Demographics>,
}

impl FilterPredicate for MutualInterest<'_> {
    fn admits(&self, viewer: &Profile<'_>, candidate: &Profile<'_>) -> bool {
        match (
            self.attributes.get(&viewer.id),
            self.attributes.get(&candidate.id),
        ) {
            (Some(v), Some(c)) => v.seeks & c.gender != 0 && c.seeks & v.gender != 0,
            _ => false,
        }
    }
}
