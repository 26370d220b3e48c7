//! Preference update rules.
//!
//! Sequential rules take one candidate row and one hinge residual per swipe:
//!
//! | rule        | step                                   | post-step        |
//! |-------------|----------------------------------------|------------------|
//! | TK          | `r / (|a|^2 + alpha) * a`              | none             |
//! | K-NoNorm    | `r / |a|^2 * a`                        | none             |
//! | OGD         | `eta * r * a_hat`                      | none             |
//! | NK          | `eta * r * a_hat`                      | l2-normalize     |
//!
//! The block rules fold a whole session into one regularized Gram solve,
//! `v + A^T (A A^T + alpha I)^-1 r`; Block-NK normalizes the result once.
//!
//! Rows are any `AsRef<[f64]>`, so pre-normalized real rows can be fed to
//! the same code as raw [`TagVector`](crate::TagVector)s.

mod bounds;
mod gram;

use std::fmt;
use std::str::FromStr;

pub use bounds::{
    decay_measurement, decay_table, norm_bound_check, DecayPoint, NormBoundOutcome,
    NormBoundTracker,
};
pub use gram::{gram_solve, regularized_gram, GramDiagnostics, GramSolution};

use crate::error::{Error, Result};
use crate::vector::{l2_norm, HyperParams, Label, PreferenceState};

/// Signed hinge residual of a swipe.
///
/// Likes below `theta + delta` pull the vector toward the candidate, passes
/// above `theta - delta` push it away, and anything inside the margin
/// yields exactly zero.
pub fn hinge_residual(score: f64, label: Label, theta: f64, delta: f64) -> f64 {
    match label {
        Label::Like => ((theta + delta) - score).max(0.0),
        Label::Pass => -(score - (theta - delta)).max(0.0),
    }
}

fn add_scaled(v: &PreferenceState, coeff: f64, row: &[f64], informative: bool) -> PreferenceState {
    debug_assert_eq!(v.dim(), row.len());
    let raw = v
        .raw()
        .iter()
        .zip(row)
        .map(|(x, a)| x + coeff * a)
        .collect();
    PreferenceState::from_parts(raw, v.update_count() + u64::from(informative))
}

fn row_norm(row: &[f64]) -> Result<f64> {
    let n = l2_norm(row);
    if n == 0.0 {
        return Err(Error::DegenerateVector("candidate vector"));
    }
    Ok(n)
}

/// Tikhonov–Kaczmarz step on a raw candidate row. No normalization.
pub fn tk_update(v: &PreferenceState, a: impl AsRef<[f64]>, r: f64, alpha: f64) -> PreferenceState {
    if r == 0.0 {
        return v.clone();
    }
    let a = a.as_ref();
    let norm_sq: f64 = a.iter().map(|x| x * x).sum();
    add_scaled(v, r / (norm_sq + alpha), a, true)
}

/// Kaczmarz step with neither normalization nor Tikhonov term.
pub fn k_nonorm_update(v: &PreferenceState, a: impl AsRef<[f64]>, r: f64) -> Result<PreferenceState> {
    if r == 0.0 {
        return Ok(v.clone());
    }
    let a = a.as_ref();
    let norm = row_norm(a)?;
    Ok(add_scaled(v, r / (norm * norm), a, true))
}

/// Fixed-rate online gradient step along the normalized candidate.
pub fn ogd_update(v: &PreferenceState, a: impl AsRef<[f64]>, r: f64, eta: f64) -> Result<PreferenceState> {
    if r == 0.0 {
        return Ok(v.clone());
    }
    let a = a.as_ref();
    let norm = row_norm(a)?;
    Ok(add_scaled(v, eta * r / norm, a, true))
}

/// Normalized Kaczmarz: OGD step followed by l2 re-normalization.
///
/// A zero residual still renormalizes the input.
pub fn nk_update(v: &PreferenceState, a: impl AsRef<[f64]>, r: f64, eta: f64) -> Result<PreferenceState> {
    let a = a.as_ref();
    let stepped = if r == 0.0 {
        v.clone()
    } else {
        add_scaled(v, eta * r / row_norm(a)?, a, true)
    };
    renormalize(stepped)
}

fn renormalize(v: PreferenceState) -> Result<PreferenceState> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateUpdate);
    }
    let count = v.update_count();
    let raw = v.raw().iter().map(|x| x / n).collect();
    Ok(PreferenceState::from_parts(raw, count))
}

/// Rows and hinge residuals gathered over one session (or block).
///
/// Rows with a zero residual are kept unless explicitly dropped.
#[derive(Debug, Clone, Default)]
pub struct SessionBatch<'a> {
    rows: Vec<&'a [f64]>,
    residuals: Vec<f64>,
}

impl<'a> SessionBatch<'a> {
    pub fn new(rows: Vec<&'a [f64]>, residuals: Vec<f64>) -> Result<Self> {
        if rows.len() != residuals.len() {
            return Err(Error::BatchShape {
                rows: rows.len(),
                residuals: residuals.len(),
            });
        }
        Ok(SessionBatch { rows, residuals })
    }

    pub fn with_capacity(k: usize) -> Self {
        SessionBatch {
            rows: Vec::with_capacity(k),
            residuals: Vec::with_capacity(k),
        }
    }

    pub fn push(&mut self, row: &'a [f64], residual: f64) {
        self.rows.push(row);
        self.residuals.push(residual);
    }

    pub fn clear(&mut self) {
        self.rows.clear();
        self.residuals.clear();
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[&'a [f64]] {
        &self.rows
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Copy of the batch without the margin-satisfied (zero-residual) rows.
    pub fn without_satisfied_rows(&self) -> SessionBatch<'a> {
        let (rows, residuals) = self
            .rows
            .iter()
            .zip(&self.residuals)
            .filter(|(_, &r)| r != 0.0)
            .map(|(&row, &r)| (row, r))
            .unzip();
        SessionBatch { rows, residuals }
    }

    fn informative(&self) -> u64 {
        self.residuals.iter().filter(|&&r| r != 0.0).count() as u64
    }
}

/// Block Tikhonov–Kaczmarz: one regularized projection for the whole batch.
pub fn block_tk_update(v: &PreferenceState, batch: &SessionBatch<'_>, alpha: f64) -> Result<PreferenceState> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.residuals().iter().all(|&r| r == 0.0) {
        return Ok(v.clone());
    }
    let coefficients = gram::solve_coefficients(batch, alpha)?;
    let mut raw = v.raw().to_vec();
    for (row, c) in batch.rows().iter().zip(&coefficients) {
        for (x, a) in raw.iter_mut().zip(row.iter()) {
            *x += c * a;
        }
    }
    Ok(PreferenceState::from_parts(
        raw,
        v.update_count() + batch.informative(),
    ))
}

/// Block-TK followed by a single l2 normalization.
pub fn block_nk_update(v: &PreferenceState, batch: &SessionBatch<'_>, alpha: f64) -> Result<PreferenceState> {
    renormalize(block_tk_update(v, batch, alpha)?)
}

/// Which update rule a learner runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Tk,
    BlockTk,
    BlockNk,
    Nk,
    KNoNorm,
    Ogd,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Tk,
        MethodKind::BlockTk,
        MethodKind::BlockNk,
        MethodKind::Nk,
        MethodKind::KNoNorm,
        MethodKind::Ogd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Tk => "TK",
            MethodKind::BlockTk => "Block-TK",
            MethodKind::BlockNk => "Block-NK",
            MethodKind::Nk => "NK",
            MethodKind::KNoNorm => "K-NoNorm",
            MethodKind::Ogd => "OGD",
        }
    }

    pub fn is_block(self) -> bool {
        matches!(self, MethodKind::BlockTk | MethodKind::BlockNk)
    }

    /// NK and OGD step along the normalized candidate; the others use the
    /// raw tag vector.
    pub fn uses_normalized_rows(self) -> bool {
        matches!(self, MethodKind::Nk | MethodKind::Ogd)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("method", format!("unknown method `{s}`")))
    }
}

/// An update rule together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateMethod {
    pub kind: MethodKind,
    pub params: HyperParams,
}

impl UpdateMethod {
    pub fn new(kind: MethodKind, params: HyperParams) -> Self {
        UpdateMethod { kind, params }
    }

    /// The six learners compared in the experiments: alpha = 1 for the
    /// Tikhonov rules, eta = 0.5 for NK, eta = 0.1 for OGD, blocks of 32.
    pub fn standard_suite(theta: f64, delta: f64) -> Vec<UpdateMethod> {
        let base = HyperParams {
            theta,
            delta,
            ..HyperParams::default()
        };
        MethodKind::ALL
            .into_iter()
            .map(|kind| {
                let eta = match kind {
                    MethodKind::Ogd => 0.1,
                    MethodKind::Nk => 0.5,
                    _ => base.eta,
                };
                UpdateMethod::new(kind, HyperParams { eta, ..base })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let p = &self.params;
        match self.kind {
            MethodKind::Tk | MethodKind::BlockTk | MethodKind::BlockNk if !(p.alpha > 0.0) => {
                Err(Error::invalid("alpha", format!("must be > 0, got {}", p.alpha)))
            }
            MethodKind::Nk if !(p.eta > 0.0 && p.eta <= 1.0) => {
                Err(Error::invalid("eta", format!("NK needs eta in (0, 1], got {}", p.eta)))
            }
            MethodKind::Ogd if !(p.eta > 0.0) => {
                Err(Error::invalid("eta", format!("OGD needs eta > 0, got {}", p.eta)))
            }
            _ => Ok(()),
        }
    }

    pub fn residual(&self, score: f64, label: Label) -> f64 {
        hinge_residual(score, label, self.params.theta, self.params.delta)
    }

    /// Applies one sequential step. Block rules have no per-swipe step.
    pub fn step(&self, v: &PreferenceState, a: &[f64], r: f64) -> Result<PreferenceState> {
        let p = &self.params;
        match self.kind {
            MethodKind::Tk => Ok(tk_update(v, a, r, p.alpha)),
            MethodKind::KNoNorm => k_nonorm_update(v, a, r),
            MethodKind::Ogd => ogd_update(v, a, r, p.eta),
            MethodKind::Nk => nk_update(v, a, r, p.eta),
            MethodKind::BlockTk | MethodKind::BlockNk => Err(Error::invalid(
                "method",
                format!("{} updates once per block, not per swipe", self.kind),
            )),
        }
    }

    /// Applies the block update of Block-TK or Block-NK.
    pub fn block_step(&self, v: &PreferenceState, batch: &SessionBatch<'_>) -> Result<PreferenceState> {
        match self.kind {
            MethodKind::BlockTk => block_tk_update(v, batch, self.params.alpha),
            MethodKind::BlockNk => block_nk_update(v, batch, self.params.alpha),
            _ => Err(Error::invalid(
                "method",
                format!("{} is a sequential rule", self.kind),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{normalize, CandidateId, TagVector};
    use proptest::prelude::*;

    const THETA: f64 = 0.52;
    const DELTA: f64 = 0.05;

    fn state(raw: &[f64]) -> PreferenceState {
        PreferenceState::new(raw.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn hinge_examples() {
        assert!((hinge_residual(0.50, Label::Like, THETA, DELTA) - 0.07).abs() < 1e-12);
        assert_eq!(hinge_residual(0.60, Label::Like, THETA, DELTA), 0.0);
        assert!((hinge_residual(0.60, Label::Pass, THETA, DELTA) + 0.13).abs() < 1e-12);
        assert_eq!(hinge_residual(0.40, Label::Pass, THETA, DELTA), 0.0);
    }

    #[test]
    fn tk_examples() {
        let v = state(&[1.0, 0.0]);
        let out = tk_update(&v, [1.0, 1.0], 0.3, 1.0);
        assert!(close(out.raw(), &[1.1, 0.1], 1e-15));
        assert_eq!(out.update_count(), 1);

        let same = tk_update(&v, [1.0, 1.0], 0.0, 1.0);
        assert_eq!(same, v);
        assert_eq!(same.update_count(), 0);
    }

    #[test]
    fn tk_step_fraction_at_unit_norm() {
        // |a|^2 = 1, alpha = 1: the step is half the residual.
        let v = state(&[1.0, 0.0, 0.0]);
        let out = tk_update(&v, [0.0, 1.0, 0.0], 1.0, 1.0);
        assert_eq!(out.raw()[1], 0.5);
    }

    #[test]
    fn nk_examples() {
        let v = state(&[1.0, 0.0]);
        let out = nk_update(&v, [0.0, 1.0], 1.0, 0.5).unwrap();
        let s = 1.25f64.sqrt();
        assert!(close(out.raw(), &[1.0 / s, 0.5 / s], 1e-15));

        let w = state(&[3.0, 4.0]);
        let out = nk_update(&w, [1.0, 0.0], 0.0, 0.5).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-15);
        assert_eq!(out.update_count(), 0);
    }

    #[test]
    fn nk_exact_cancellation_is_degenerate() {
        let v = state(&[0.5, 0.0]);
        assert_eq!(
            nk_update(&v, [1.0, 0.0], -1.0, 0.5),
            Err(Error::DegenerateUpdate)
        );
    }

    #[test]
    fn k_nonorm_examples() {
        let v = state(&[1.0, 0.0]);
        let out = k_nonorm_update(&v, [1.0, 1.0], 0.3).unwrap();
        assert!(close(out.raw(), &[1.15, 0.15], 1e-15));
        assert_eq!(k_nonorm_update(&v, [1.0, 1.0], 0.0).unwrap(), v);

        let unit_row = [0.0, 1.0];
        assert_eq!(
            k_nonorm_update(&v, unit_row, 0.7).unwrap(),
            tk_update(&v, unit_row, 0.7, 0.0)
        );
    }

    #[test]
    fn ogd_examples() {
        let v = state(&[1.0, 0.0]);
        let out = ogd_update(&v, [0.0, 1.0], 1.0, 0.1).unwrap();
        assert!(close(out.raw(), &[1.0, 0.1], 1e-15));
        assert_eq!(ogd_update(&v, [0.0, 1.0], 0.0, 0.1).unwrap(), v);

        for alpha in [0.01, 0.1, 1.0, 9.0] {
            let tk = tk_update(&v, [0.0, 1.0], 0.37, alpha);
            let ogd = ogd_update(&v, [0.0, 1.0], 0.37, 1.0 / (1.0 + alpha)).unwrap();
            assert!(close(tk.raw(), ogd.raw(), 1e-15));
        }
    }

    #[test]
    fn block_k2_orthogonal_rows() {
        let v = state(&[1.0, 1.0, 1.0]);
        let a1 = [1.0, 0.0, 0.0];
        let a2 = [0.0, 2.0, 0.0];
        let batch = SessionBatch::new(vec![&a1, &a2], vec![1.0, 1.0]).unwrap();
        let out = block_tk_update(&v, &batch, 1.0).unwrap();
        assert!(close(out.raw(), &[1.5, 1.4, 1.0], 1e-14));
        assert_eq!(out.update_count(), 2);
    }

    #[test]
    fn block_zero_residuals_leave_vector_unchanged() {
        let v = state(&[0.3, 0.7]);
        let a = [1.0, 1.0];
        let batch = SessionBatch::new(vec![&a, &a], vec![0.0, 0.0]).unwrap();
        assert_eq!(block_tk_update(&v, &batch, 1.0).unwrap(), v);
        let nk = block_nk_update(&v, &batch, 1.0).unwrap();
        assert!(close(nk.raw(), &normalize(v.raw()).unwrap(), 1e-15));
    }

    #[test]
    fn block_nk_differs_from_nk_for_multi_tag_rows() {
        let v = PreferenceState::uniform(6);
        let a = TagVector::from_indices(CandidateId(0), 6, &[0, 1, 2, 3]).unwrap();
        let batch = SessionBatch::new(vec![a.values()], vec![0.3]).unwrap();
        let block = block_nk_update(&v, &batch, 1.0).unwrap();
        let nk = nk_update(&v, &a, 0.3, 0.5).unwrap();
        let diff: f64 = block
            .raw()
            .iter()
            .zip(nk.raw())
            .map(|(x, y)| (x - y).abs())
            .sum();
        assert!(diff > 1e-6, "diff {diff}");
    }

    #[test]
    fn empty_batch_is_an_error() {
        let v = state(&[1.0]);
        assert_eq!(
            block_tk_update(&v, &SessionBatch::default(), 1.0),
            Err(Error::EmptyBatch)
        );
        assert!(SessionBatch::new(vec![&[1.0][..]], vec![]).is_err());
    }

    #[test]
    fn drop_satisfied_rows() {
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        let batch = SessionBatch::new(vec![&a, &b], vec![0.0, 0.2]).unwrap();
        let kept = batch.without_satisfied_rows();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.residuals(), &[0.2]);
    }

    #[test]
    fn method_names_round_trip() {
        for kind in MethodKind::ALL {
            assert_eq!(kind.name().parse::<MethodKind>().unwrap(), kind);
        }
        assert!("SGD".parse::<MethodKind>().is_err());
    }

    #[test]
    fn standard_suite_parameters() {
        let suite = UpdateMethod::standard_suite(THETA, DELTA);
        assert_eq!(suite.len(), 6);
        for m in &suite {
            m.validate().unwrap();
            assert_eq!(m.params.alpha, 1.0);
            assert_eq!(m.params.block_k, 32);
        }
        let eta = |k| suite.iter().find(|m| m.kind == k).unwrap().params.eta;
        assert_eq!(eta(MethodKind::Nk), 0.5);
        assert_eq!(eta(MethodKind::Ogd), 0.1);
        assert!(suite[1].step(&state(&[1.0]), &[1.0], 0.1).is_err());
    }

    fn binary_row(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(any::<bool>(), dim)
            .prop_filter("nonempty", |b| b.contains(&true))
            .prop_map(|b| b.into_iter().map(|x| if x { 1.0 } else { 0.0 }).collect())
    }

    proptest! {
        #[test]
        fn zero_residual_is_a_no_op_for_every_rule(
            raw in prop::collection::vec(0.1f64..2.0, 6),
            row in binary_row(6),
        ) {
            let v = state(&raw);
            let mut params = HyperParams::default();
            params.block_k = 1;
            for kind in MethodKind::ALL {
                let m = UpdateMethod::new(kind, params);
                let out = if kind.is_block() {
                    let batch = SessionBatch::new(vec![&row], vec![0.0]).unwrap();
                    m.block_step(&v, &batch).unwrap()
                } else {
                    m.step(&v, &row, 0.0).unwrap()
                };
                match kind {
                    // these renormalize by definition
                    MethodKind::Nk | MethodKind::BlockNk => {
                        prop_assert!(close(out.raw(), &normalize(&raw).unwrap(), 1e-15))
                    }
                    _ => prop_assert_eq!(out.raw(), v.raw()),
                }
            }
        }

        #[test]
        fn block_k1_matches_tk(
            raw in prop::collection::vec(-1.0f64..1.0, 8).prop_filter("nonzero", |v| l2_norm(v) > 1e-3),
            row in binary_row(8),
            r in -1.0f64..1.0,
            alpha in 0.05f64..10.0,
        ) {
            let v = state(&raw);
            let batch = SessionBatch::new(vec![&row], vec![r]).unwrap();
            let block = block_tk_update(&v, &batch, alpha).unwrap();
            let seq = tk_update(&v, &row, r, alpha);
            prop_assert!(close(block.raw(), seq.raw(), 1e-12));
        }

        #[test]
        fn block_nk_is_unit_norm(
            raw in prop::collection::vec(0.01f64..1.0, 6),
            rows in prop::collection::vec(binary_row(6), 1..6),
            rs in prop::collection::vec(-0.5f64..0.5, 6),
        ) {
            let v = state(&raw);
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let batch = SessionBatch::new(refs, rs[..rows.len()].to_vec()).unwrap();
            if let Ok(out) = block_nk_update(&v, &batch, 1.0) {
                prop_assert!((out.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn tk_step_shrinks_with_alpha_by_exact_ratio(
            row in binary_row(10),
            r in prop::sample::select(vec![-0.4, -0.1, 0.05, 0.3]),
            alpha in 0.01f64..20.0,
        ) {
            let v = PreferenceState::uniform(10);
            let step = |alpha: f64| {
                let out = tk_update(&v, &row, r, alpha);
                let d: Vec<f64> = out.raw().iter().zip(v.raw()).map(|(x, y)| x - y).collect();
                l2_norm(&d)
            };
            let norm_sq: f64 = row.iter().sum();
            let (s1, s2) = (step(alpha), step(2.0 * alpha));
            prop_assert!(s2 < s1);
            let expected = (norm_sq + alpha) / (norm_sq + 2.0 * alpha);
            prop_assert!((s2 / s1 - expected).abs() < 1e-12);
        }
    }
}
