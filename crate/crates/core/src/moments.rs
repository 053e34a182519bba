//! Robust estimation of the degree-`k` monomial correlation matrix and the
//! spectral maximization primitive built on top of it.
//!
//! `estimate_moments` partitions the reference sample into `floor(sqrt(N))`
//! blocks, computes empirical correlation matrices per block and returns a
//! block that agrees with at least 80% of the others up to the 99/100–101/100
//! PSD bracket. At practical sample sizes the bracket certification rarely
//! succeeds (block matrices fluctuate far more than 1%), in which case the
//! estimator falls back to the mean over all partitioned points and flags the
//! result.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::poly::{MonomialBasis, Polynomial};

/// Relative eigenvalue cutoff for the pseudo-inverse.
pub const RANK_CUTOFF_RATIO: f64 = 1e-10;

/// Relative PSD comparison tolerance used by the block certification scan.
pub const PSD_TOL_RATIO: f64 = 1e-9;

/// Symmetric PSD estimate of `E[(x^{(k)})(x^{(k)})^T]` with cached
/// eigendecomposition and pseudo-inverse square root.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    basis: Arc<MonomialBasis>,
    matrix: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    sqrt_inv: DMatrix<f64>,
    rank: usize,
    rank_cutoff_ratio: f64,
    fallback: bool,
}

impl MomentMatrix {
    /// Build the caches from a symmetric matrix. Eigenvalues at or below
    /// `rank_cutoff_ratio * lambda_max` (and negative round-off) are clipped
    /// to zero and excluded from the pseudo-inverse.
    pub fn from_matrix(
        basis: Arc<MonomialBasis>,
        matrix: DMatrix<f64>,
        rank_cutoff_ratio: f64,
        fallback: bool,
    ) -> Result<Self> {
        let t = basis.size();
        if matrix.nrows() != t || matrix.ncols() != t {
            return Err(Error::ShapeMismatch(format!(
                "moment matrix {}x{} for basis of size {t}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let sym = symmetrize(&matrix);
        let eig = sym.clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = rank_cutoff_ratio * lambda_max;
        let mut eigenvalues = eig.eigenvalues.clone();
        let mut rank = 0;
        for v in eigenvalues.iter_mut() {
            if *v > cutoff {
                rank += 1;
            } else {
                *v = 0.0;
            }
        }
        let mut scaled = eig.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            let lambda = eigenvalues[j];
            let s = if lambda > 0.0 { lambda.powf(-0.25) } else { 0.0 };
            col *= s;
        }
        // psi = V diag(lambda^{-1/2}) V^T, computed as (V D^{-1/4})(V D^{-1/4})^T
        // so it is symmetric PSD by construction.
        let sqrt_inv = &scaled * scaled.transpose();
        Ok(Self {
            basis,
            matrix: sym,
            eigenvalues,
            eigenvectors: eig.eigenvectors,
            sqrt_inv,
            rank,
            rank_cutoff_ratio,
            fallback,
        })
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_cutoff_ratio(&self) -> f64 {
        self.rank_cutoff_ratio
    }

    /// True when the pairwise block certification failed and the estimate is
    /// the plain mean over the partitioned sample.
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    /// The pseudo-inverse square root `M^{-1/2}` (zero on the null space).
    pub fn pseudo_sqrt_inv(&self) -> &DMatrix<f64> {
        &self.sqrt_inv
    }

    /// `v^T M^+ v`, the degree-`k` leverage of a feature vector. Equals
    /// `max_{p: p^T M p <= 1} (p . v)^2` restricted to the retained
    /// eigenspace; a feature vector with mass on the null space has infinite
    /// leverage and is reported as such.
    pub fn leverage(&self, features: &DVector<f64>) -> f64 {
        let w = &self.sqrt_inv * features;
        let lev = w.norm_squared();
        if self.rank == self.basis.size() {
            return lev;
        }
        // Null-space mass check: ||v||^2 - ||V_retained^T v||^2 > 0.
        let proj = self.eigenvectors.transpose() * features;
        let mut retained = 0.0;
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            if lambda > 0.0 {
                retained += proj[j] * proj[j];
            }
        }
        let total = features.norm_squared();
        let null_mass = total - retained;
        if null_mass > 1e-9 * total.max(1.0) {
            f64::INFINITY
        } else {
            lev
        }
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// True iff `A - B` is PSD up to `tol`: min eigenvalue of the difference is
/// at least `-tol`.
pub fn psd_dominates(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "psd comparison of {:?} against {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let diff = symmetrize(&(a - b));
    let eig = diff.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(min >= -tol)
}

/// Cheap sound rejections for the bracket test; `None` means undecided.
fn fast_fail_not_dominated(diff: &DMatrix<f64>, tol: f64) -> Option<bool> {
    // The minimum eigenvalue is at most the minimum diagonal entry.
    let mut min_diag = f64::INFINITY;
    for i in 0..diff.nrows() {
        min_diag = min_diag.min(diff[(i, i)]);
    }
    if min_diag < -tol {
        return Some(false);
    }
    // A few shifted power iterations; any Rayleigh quotient upper-bounds the
    // minimum eigenvalue, so a quotient below -tol is a certain failure.
    let n = diff.nrows();
    let shift = diff
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut w = DVector::from_fn(n, |i, _| {
        (if i % 2 == 0 { 1.0 } else { -1.0 }) + 0.01 * (i as f64 + 1.0)
    });
    w /= w.norm();
    for _ in 0..6 {
        // w <- (shift I - diff) w
        let mut next = diff * &w;
        next *= -1.0;
        next.axpy(shift, &w, 1.0);
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        w = next / norm;
    }
    let quotient = (diff * &w).dot(&w);
    if quotient < -tol {
        return Some(false);
    }
    None
}

fn bracket_tol(b: &DMatrix<f64>) -> f64 {
    PSD_TOL_RATIO * b.trace().abs()
}

/// One side of the block bracket: `A >= scale*B - tol` in the PSD order.
fn dominates_scaled(a: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) -> Result<bool> {
    let scaled = b * scale;
    let tol = bracket_tol(&scaled);
    let diff = symmetrize(&(a - &scaled));
    if let Some(ans) = fast_fail_not_dominated(&diff, tol) {
        return Ok(ans);
    }
    psd_dominates(a, &scaled, tol)
}

/// Estimate the monomial correlation matrix from a clean reference sample.
///
/// The confidence parameter `delta` is part of the contract but does not
/// change the computation; it is recorded for diagnostics only.
pub fn estimate_moments(
    data: &Dataset,
    basis: &Arc<MonomialBasis>,
    delta: f64,
) -> Result<MomentMatrix> {
    if delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "confidence delta must be in (0,1), got {delta}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.len() < 4 {
        return Err(Error::DatasetTooSmall {
            min: 4,
            got: data.len(),
        });
    }
    if data.dimension() != basis.dimension() {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            got: data.dimension(),
        });
    }
    let block = (data.len() as f64).sqrt().floor() as usize;
    let used = block * block;
    // Points beyond floor(sqrt(N))^2 are discarded.
    let features = basis.feature_matrix(data.points().take(used));
    let blocks: Vec<DMatrix<f64>> = (0..block)
        .map(|i| {
            let rows = features.rows(i * block, block);
            rows.transpose() * rows / block as f64
        })
        .collect();

    let quota = (0.8 * block as f64).ceil() as usize;
    let max_failures = block - quota;
    for (i, cand) in blocks.iter().enumerate() {
        let mut ok = 0usize;
        let mut failed = 0usize;
        for other in blocks.iter() {
            let lower = dominates_scaled(cand, other, 0.99)?;
            let upper = lower && dominates_scaled(&(other * 1.01), cand, 1.0)?;
            if upper {
                ok += 1;
            } else {
                failed += 1;
                if failed > max_failures {
                    break;
                }
            }
        }
        if ok >= quota {
            log::debug!("moment estimate: block {i} certified against {ok}/{block} blocks");
            return MomentMatrix::from_matrix(
                basis.clone(),
                blocks[i].clone(),
                RANK_CUTOFF_RATIO,
                false,
            );
        }
    }
    // No block is certifiable at this sample size; average everything that
    // was partitioned and flag the result.
    log::debug!(
        "moment estimate: no block certified at N={}, falling back to the {used}-point mean",
        data.len()
    );
    let mean = features.transpose() * &features / used as f64;
    MomentMatrix::from_matrix(basis.clone(), mean, RANK_CUTOFF_RATIO, true)
}

/// Maximize `p^T Q p` subject to `p^T M p <= 1`.
///
/// Returns the maximizer and the value, computed as the leading eigenpair of
/// `M^{-1/2} Q M^{-1/2}` with the pseudo-inverse square root.
pub fn max_ratio_polynomial(
    moments: &MomentMatrix,
    q: &DMatrix<f64>,
) -> Result<(Polynomial, f64)> {
    let t = moments.basis().size();
    if q.nrows() != t || q.ncols() != t {
        return Err(Error::ShapeMismatch(format!(
            "Q is {}x{}, basis size {t}",
            q.nrows(),
            q.ncols()
        )));
    }
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..t {
        for j in (i + 1)..t {
            if (q[(i, j)] - q[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::NonSymmetricMatrix);
            }
        }
    }
    let psi = moments.pseudo_sqrt_inv();
    let sandwiched = symmetrize(&(psi * q * psi));
    let eig = sandwiched.symmetric_eigen();
    let mut best = 0usize;
    let mut mu = f64::NEG_INFINITY;
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        if v > mu {
            mu = v;
            best = j;
        }
    }
    let direction = eig.eigenvectors.column(best).into_owned();
    let coeffs = psi * direction;
    let polynomial = Polynomial::new(moments.basis().clone(), coeffs)?;
    Ok((polynomial, mu))
}
