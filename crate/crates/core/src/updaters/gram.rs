//! Regularized Gram solve for the block updates.

use super::SessionBatch;
use crate::error::{Error, Result};
use crate::vector::dot;

/// Spectrum summary of `A A^T + alpha I`, estimated from its Cholesky
/// factor. Exposed for monitoring only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramDiagnostics {
    pub condition_number: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSolution {
    pub coefficients: Vec<f64>,
    pub diagnostics: GramDiagnostics,
}

/// `A A^T + alpha I` for the batch rows, row-major `k x k`.
pub fn regularized_gram(rows: &[&[f64]], alpha: f64) -> Vec<f64> {
    let k = rows.len();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let x = dot(rows[i], rows[j]);
            g[i * k + j] = x;
            g[j * k + i] = x;
        }
        g[i * k + i] += alpha;
    }
    g
}

/// Lower-triangular factor `L` with `G = L L^T`.
struct Cholesky {
    k: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(g: &[f64], k: usize) -> Result<Self> {
        let mut l = vec![0.0; k * k];
        for j in 0..k {
            let mut d = g[j * k + j];
            for p in 0..j {
                d -= l[j * k + p] * l[j * k + p];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Factorization {
                    pivot: j,
                    gram: g.to_vec(),
                });
            }
            let d = d.sqrt();
            l[j * k + j] = d;
            for i in j + 1..k {
                let mut s = g[i * k + j];
                for p in 0..j {
                    s -= l[i * k + p] * l[j * k + p];
                }
                l[i * k + j] = s / d;
            }
        }
        Ok(Cholesky { k, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (k, l) = (self.k, &self.l);
        let mut y = b.to_vec();
        for i in 0..k {
            for p in 0..i {
                y[i] -= l[i * k + p] * y[p];
            }
            y[i] /= l[i * k + i];
        }
        for i in (0..k).rev() {
            for p in i + 1..k {
                y[i] -= l[p * k + i] * y[p];
            }
            y[i] /= l[i * k + i];
        }
        y
    }
}

fn check_batch(batch: &SessionBatch<'_>, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let dim = batch.rows()[0].len();
    if let Some(bad) = batch.rows().iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(())
}

pub(super) fn solve_coefficients(batch: &SessionBatch<'_>, alpha: f64) -> Result<Vec<f64>> {
    check_batch(batch, alpha)?;
    let k = batch.len();
    let g = regularized_gram(batch.rows(), alpha);
    Ok(Cholesky::factor(&g, k)?.solve(batch.residuals()))
}

/// Solves `(A A^T + alpha I) c = r` for the batch and reports the spectrum
/// of the regularized Gram matrix.
pub fn gram_solve(batch: &SessionBatch<'_>, alpha: f64) -> Result<GramSolution> {
    check_batch(batch, alpha)?;
    let k = batch.len();
    let g = regularized_gram(batch.rows(), alpha);
    let chol = Cholesky::factor(&g, k)?;
    let coefficients = chol.solve(batch.residuals());
    let eig = symmetric_eigenvalues(&g, k);
    let max_eigenvalue = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min).max(alpha);
    Ok(GramSolution {
        coefficients,
        diagnostics: GramDiagnostics {
            condition_number: (max_eigenvalue / min_eigenvalue).max(1.0),
            min_eigenvalue,
            max_eigenvalue: max_eigenvalue.max(min_eigenvalue),
        },
    })
}

/// Eigenvalues of a symmetric `k x k` matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues(g: &[f64], k: usize) -> Vec<f64> {
    const MAX_SWEEPS: usize = 100;
    let mut a = g.to_vec();
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * k + j] * a[i * k + j])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[p * k + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * k + q] - a[p * k + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (arp, arq) = (a[r * k + p], a[r * k + q]);
                    a[r * k + p] = c * arp - s * arq;
                    a[r * k + q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let (apr, aqr) = (a[p * k + r], a[q * k + r]);
                    a[p * k + r] = c * apr - s * aqr;
                    a[q * k + r] = s * apr + c * aqr;
                }
            }
        }
    }
    (0..k).map(|i| a[i * k + i]).collect()
}
