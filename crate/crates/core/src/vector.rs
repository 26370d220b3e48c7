//! Domain types and the elementary vector operations every other module
//! builds on.
//!
//! Vectors are dense `f64` slices. The dimension is a run-time value so the
//! same code serves the 60-tag simulation and the two- or four-dimensional
//! hand-checked cases in the tests.

use std::fmt;

use crate::error::{Error, Result};

/// Opaque identifier of a user or candidate profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateId(pub u32);

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binary attribute vector of a candidate, kept raw (not normalized).
///
/// At least one coordinate is set, so the vector always has a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TagVector {
    id: CandidateId,
    values: Vec<f64>,
    tag_count: usize,
}

impl TagVector {
    pub fn from_bits(id: CandidateId, bits: &[bool]) -> Result<Self> {
        let values: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let tag_count = bits.iter().filter(|&&b| b).count();
        if tag_count == 0 {
            return Err(Error::EmptyTagVector);
        }
        Ok(TagVector {
            id,
            values,
            tag_count,
        })
    }

    /// Builds a `dim`-dimensional vector with the listed coordinates set.
    pub fn from_indices(id: CandidateId, dim: usize, set: &[usize]) -> Result<Self> {
        let mut bits = vec![false; dim];
        for &i in set {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i + 1,
                });
            }
            bits[i] = true;
        }
        Self::from_bits(id, &bits)
    }

    pub fn id(&self) -> CandidateId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn tag_count(&self) -> usize {
        self.tag_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_set(&self, index: usize) -> bool {
        self.values.get(index).is_some_and(|&x| x != 0.0)
    }

    pub fn norm(&self) -> f64 {
        (self.tag_count as f64).sqrt()
    }
}

impl AsRef<[f64]> for TagVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// A user's learned preference vector.
///
/// The raw vector keeps whatever magnitude the update rule gives it; scoring
/// reads the direction through [`PreferenceState::direction`] or
/// [`cosine_score`].
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceState {
    raw: Vec<f64>,
    update_count: u64,
}

impl PreferenceState {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if l2_norm(&raw) == 0.0 {
            return Err(Error::DegenerateVector("initial preference vector"));
        }
        Ok(PreferenceState {
            raw,
            update_count: 0,
        })
    }

    /// The all-ones vector scaled to unit norm.
    pub fn uniform(dim: usize) -> Self {
        let x = 1.0 / (dim as f64).sqrt();
        PreferenceState {
            raw: vec![x; dim],
            update_count: 0,
        }
    }

    pub(crate) fn from_parts(raw: Vec<f64>, update_count: u64) -> Self {
        PreferenceState { raw, update_count }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn dim(&self) -> usize {
        self.raw.len()
    }

    /// Number of updates applied with a nonzero residual.
    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.raw)
    }

    pub fn direction(&self) -> Result<Vec<f64>> {
        normalize(&self.raw)
    }
}

impl AsRef<[f64]> for PreferenceState {
    fn as_ref(&self) -> &[f64] {
        &self.raw
    }
}

/// Hyperparameters shared by the update rules. Each rule reads only the
/// fields it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    /// Tikhonov constant added to the projection denominator.
    pub alpha: f64,
    /// Fixed step size of the normalized Kaczmarz and OGD rules.
    pub eta: f64,
    /// Swipe threshold on the cosine score.
    pub theta: f64,
    /// Hinge margin around `theta`.
    pub delta: f64,
    /// Maximum number of swipes folded into one block update.
    pub block_k: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 1.0,
            eta: 0.5,
            theta: 0.52,
            delta: 0.05,
            block_k: 32,
        }
    }
}

impl HyperParams {
    /// Checks the threshold window and block size; `alpha`/`eta` are
    /// checked per update rule.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.theta - self.delta, self.theta + self.delta);
        if !(self.delta >= 0.0 && lo > -1.0 && hi < 1.0) {
            return Err(Error::invalid(
                "theta",
                format!("theta +/- delta must lie in (-1, 1), got [{lo}, {hi}]"),
            ));
        }
        if self.block_k == 0 {
            return Err(Error::invalid("block_k", "must be at least 1"));
        }
        Ok(())
    }
}

/// Binary swipe outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Like,
    Pass,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Like => 1.0,
            Label::Pass => -1.0,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Label::Like => Label::Pass,
            Label::Pass => Label::Like,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit Euclidean norm.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = l2_norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateVector("vector"));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Cosine similarity between a preference vector and a candidate vector.
pub fn cosine_score(v: impl AsRef<[f64]>, a: impl AsRef<[f64]>) -> Result<f64> {
    let (v, a) = (v.as_ref(), a.as_ref());
    if v.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            actual: a.len(),
        });
    }
    let nv = l2_norm(v);
    if nv == 0.0 {
        return Err(Error::DegenerateVector("preference vector"));
    }
    let na = l2_norm(a);
    if na == 0.0 {
        return Err(Error::DegenerateVector("candidate vector"));
    }
    Ok((dot(v, a) / (nv * na)).clamp(-1.0, 1.0))
}

/// Squared norm of a tag vector, which for binary tags is the tag count.
pub fn row_norm_sq(a: &TagVector) -> f64 {
    a.tag_count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(dim: usize, set: &[usize]) -> TagVector {
        TagVector::from_indices(CandidateId(0), dim, set).unwrap()
    }

    #[test]
    fn normalize_three_four_five() {
        let u = normalize(&[3.0, 4.0]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert_eq!(normalize(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert!(matches!(
            normalize(&[0.0, 0.0]),
            Err(Error::DegenerateVector(_))
        ));
    }

    #[test]
    fn cosine_examples() {
        let a = tags(4, &[0, 2]);
        assert!((cosine_score(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_score([0.0, 1.0, 0.0, 0.0], &a).unwrap(), 0.0);
        let b = tags(4, &[1, 2]);
        let s = cosine_score([1.0, 1.0, 0.0, 0.0], &b).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        let a = tags(2, &[0]);
        assert!(cosine_score([0.0, 0.0], &a).is_err());
        assert!(matches!(
            cosine_score([1.0, 0.0, 0.0], &a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn row_norm_is_tag_count() {
        assert_eq!(row_norm_sq(&tags(60, &[0, 3, 9, 12, 40, 41, 59])), 7.0);
        assert_eq!(row_norm_sq(&tags(60, &[17])), 1.0);
        let all: Vec<usize> = (0..60).collect();
        assert_eq!(row_norm_sq(&tags(60, &all)), 60.0);
    }

    #[test]
    fn empty_tag_vector_rejected() {
        assert_eq!(
            TagVector::from_bits(CandidateId(1), &[false; 5]),
            Err(Error::EmptyTagVector)
        );
        assert!(TagVector::from_indices(CandidateId(1), 3, &[3]).is_err());
    }

    #[test]
    fn uniform_preference_is_unit() {
        let p = PreferenceState::uniform(60);
        assert!((p.norm() - 1.0).abs() < 1e-12);
        assert!(PreferenceState::new(vec![0.0; 3]).is_err());
    }

    #[test]
    fn hyperparams_window() {
        assert!(HyperParams::default().validate().is_ok());
        let bad = HyperParams {
            theta: 0.98,
            delta: 0.05,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn nonzero_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..16)
            .prop_filter("nonzero", |v| l2_norm(v) > 1e-6)
    }

    fn binary_vec() -> impl Strategy<Value = Vec<bool>> {
        prop::collection::vec(any::<bool>(), 1..64).prop_filter("nonempty", |b| b.contains(&true))
    }

    proptest! {
        #[test]
        fn normalize_is_unit_and_idempotent(v in nonzero_vec()) {
            let u = normalize(&v).unwrap();
            prop_assert!((l2_norm(&u) - 1.0).abs() < 1e-12);
            let uu = normalize(&u).unwrap();
            for (x, y) in u.iter().zip(&uu) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn cosine_is_scale_invariant(
            v in prop::collection::vec(0.01f64..10.0, 8),
            bits in prop::collection::vec(any::<bool>(), 8).prop_filter("nonempty", |b| b.contains(&true)),
            c in 1e-3f64..1e3,
        ) {
            let a = TagVector::from_bits(CandidateId(0), &bits).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let s1 = cosine_score(&v, &a).unwrap();
            let s2 = cosine_score(&scaled, &a).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&s1));
        }

        #[test]
        fn row_norm_counts_bits_exactly(bits in binary_vec()) {
            let a = TagVector::from_bits(CandidateId(0), &bits).unwrap();
            let count = bits.iter().filter(|&&b| b).count();
            prop_assert_eq!(row_norm_sq(&a), count as f64);
            prop_assert_eq!(dot(a.values(), a.values()), count as f64);
        }
    }
}
