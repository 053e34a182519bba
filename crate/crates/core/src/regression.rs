//! Box-constrained polynomial regression.
//!
//! `l2_box_regression` minimizes mean squared error over degree-`k`
//! polynomials with every coefficient in `[-B, B]` by projected gradient with
//! step `1/lambda_max` of the quadratic's curvature; the box is honored
//! exactly by the projection and the run is certified by a projection
//! residual.
//!
//! `l1_regression_with_threshold` minimizes mean absolute error over the same
//! box (smoothed minimization with a shrinking Huber width, certified by
//! objective stall), then picks the best sign threshold by exhaustive scan.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::poly::{MonomialBasis, Polynomial};

/// Parameters shared by both solvers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegressionConfig {
    /// Polynomial degree `k`.
    pub degree: usize,
    /// Coefficient box bound `B`.
    pub coefficient_bound: f64,
    /// Optimization tolerance; defaults to `1e-5 * (1 + initial objective)`.
    pub tolerance: Option<f64>,
    /// Iteration cap across all stages.
    pub max_iterations: usize,
}

impl RegressionConfig {
    pub fn new(degree: usize, coefficient_bound: f64) -> Self {
        Self {
            degree,
            coefficient_bound,
            tolerance: None,
            max_iterations: 100_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::InvalidParameter("degree must be positive".into()));
        }
        if !(self.coefficient_bound > 0.0 && self.coefficient_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coefficient bound must be positive and finite, got {}",
                self.coefficient_bound
            )));
        }
        Ok(())
    }
}

/// Sign of a polynomial against a threshold; `sign(0) = +1`.
#[derive(Clone, Debug)]
pub struct PolynomialHypothesis {
    pub polynomial: Polynomial,
    pub threshold: f64,
}

impl PolynomialHypothesis {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let v = self.polynomial.eval(x)?;
        Ok(sign_pm1(v - self.threshold))
    }

    pub fn empirical_error(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut wrong = 0usize;
        for (i, x) in data.points().points().enumerate() {
            if self.predict(x)? != data.label(i) {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / data.len() as f64)
    }
}

pub fn sign_pm1(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

struct Problem {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    curvature: f64,
}

fn build_problem(data: &LabeledDataset, basis: &std::sync::Arc<MonomialBasis>) -> Problem {
    let n = data.len() as f64;
    let features = basis.feature_matrix(data.points().points());
    let labels = DVector::from_column_slice(data.labels());
    let gram = features.transpose() * &features / n;
    let cross = features.transpose() * &labels / n;
    let curvature = symmetric_lambda_max(&gram).max(f64::MIN_POSITIVE);
    Problem {
        features,
        labels,
        gram,
        cross,
        curvature,
    }
}

fn symmetric_lambda_max(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
}

fn clamp_box(p: &mut DVector<f64>, bound: f64) {
    for v in p.iter_mut() {
        *v = v.clamp(-bound, bound);
    }
}

fn check_inputs(data: &LabeledDataset, config: &RegressionConfig) -> Result<()> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // LabeledDataset enforces {-1,+1} labels at construction.
    Ok(())
}

/// Minimize `(1/n) sum (y - p(x))^2` over the coefficient box.
pub fn l2_box_regression(data: &LabeledDataset, config: &RegressionConfig) -> Result<Polynomial> {
    check_inputs(data, config)?;
    let basis = MonomialBasis::shared(data.dimension(), config.degree, data.domain());
    let prob = build_problem(data, &basis);
    let bound = config.coefficient_bound;
    let n = data.len() as f64;

    let y_norm = prob.labels.norm_squared() / n;
    let tolerance = config.tolerance.unwrap_or(1e-5 * (1.0 + y_norm));

    // Objective (1/n)||F p - y||^2 has curvature 2 * lambda_max(Gram).
    let step = 1.0 / (2.0 * prob.curvature);
    let mut p = DVector::zeros(basis.size());
    for _ in 0..config.max_iterations {
        // grad = 2 (Gram p - cross)
        let mut grad = &prob.gram * &p;
        grad -= &prob.cross;
        grad *= 2.0;
        let mut next = &p - &grad * step;
        clamp_box(&mut next, bound);
        // Projection residual at unit step certifies stationarity.
        let mut probe = &p - &grad;
        clamp_box(&mut probe, bound);
        let residual = (&probe - &p).norm();
        p = next;
        if residual <= tolerance {
            break;
        }
    }
    Polynomial::new(basis, p)
}

/// Squared-error objective of a coefficient vector, for diagnostics/tests.
pub fn l2_objective(data: &LabeledDataset, polynomial: &Polynomial) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (i, x) in data.points().points().enumerate() {
        let r = data.label(i) - polynomial.eval(x)?;
        total += r * r;
    }
    Ok(total / data.len() as f64)
}

/// Mean absolute error of a coefficient vector.
pub fn l1_objective(data: &LabeledDataset, polynomial: &Polynomial) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (i, x) in data.points().points().enumerate() {
        total += (data.label(i) - polynomial.eval(x)?).abs();
    }
    Ok(total / data.len() as f64)
}

/// Minimize `(1/n) sum |y - p(x)|` over the box, then choose the sign
/// threshold minimizing empirical 0-1 error among the midpoints of sorted
/// fitted values (plus sentinels below and above).
pub fn l1_regression_with_threshold(
    data: &LabeledDataset,
    config: &RegressionConfig,
) -> Result<PolynomialHypothesis> {
    check_inputs(data, config)?;
    let basis = MonomialBasis::shared(data.dimension(), config.degree, data.domain());
    let prob = build_problem(data, &basis);
    let bound = config.coefficient_bound;
    let n = data.len() as f64;

    let initial_obj = data.labels().iter().map(|y| y.abs()).sum::<f64>() / n;
    let tolerance = config.tolerance.unwrap_or(1e-5 * (1.0 + initial_obj));

    let mut p = DVector::zeros(basis.size());
    let mut best = p.clone();
    let mut best_obj = l1_value(&prob, &p, n);
    let mut spent = 0usize;

    // Huber smoothing with a shrinking width; each stage runs projected
    // gradient on the smoothed objective until its own stall test.
    let widths = [0.5, 0.1, 0.02, 4e-3, 1e-3];
    'stages: for &width in &widths {
        let step = width / prob.curvature;
        let mut last_stage_obj = f64::INFINITY;
        let mut since_check = 0usize;
        loop {
            if spent >= config.max_iterations {
                break 'stages;
            }
            spent += 1;
            since_check += 1;

            // grad of (1/n) sum H_width(y - p.x) is -(1/n) F^T psi(residual)
            let mut residual = &prob.features * &p;
            residual -= &prob.labels;
            // residual now holds p(x) - y; psi is odd so signs carry through.
            for r in residual.iter_mut() {
                *r = (*r / width).clamp(-1.0, 1.0);
            }
            let grad = prob.features.transpose() * &residual / n;
            let mut next = &p - &grad * step;
            clamp_box(&mut next, bound);
            p = next;

            if since_check >= 25 {
                since_check = 0;
                let obj = l1_value(&prob, &p, n);
                if obj < best_obj {
                    best_obj = obj;
                    best.copy_from(&p);
                }
                if (last_stage_obj - obj).abs() <= tolerance {
                    break;
                }
                last_stage_obj = obj;
            }
        }
    }
    let final_obj = l1_value(&prob, &p, n);
    if final_obj < best_obj {
        best = p;
    }

    let polynomial = Polynomial::new(basis, best)?;
    let threshold = best_threshold(&prob.features, data.labels(), polynomial.coefficients());
    Ok(PolynomialHypothesis {
        polynomial,
        threshold,
    })
}

fn l1_value(prob: &Problem, p: &DVector<f64>, n: f64) -> f64 {
    let fitted = &prob.features * p;
    fitted
        .iter()
        .zip(prob.labels.iter())
        .map(|(f, y)| (y - f).abs())
        .sum::<f64>()
        / n
}

/// Exhaustive scan over candidate thresholds: midpoints between consecutive
/// distinct fitted values plus one sentinel on each side. Returns the global
/// best (ties: smallest threshold).
fn best_threshold(features: &DMatrix<f64>, labels: &[f64], coeffs: &DVector<f64>) -> f64 {
    let fitted = features * coeffs;
    let mut order: Vec<usize> = (0..fitted.len()).collect();
    order.sort_by(|&a, &b| fitted[a].total_cmp(&fitted[b]));

    // For threshold t, predictions are +1 iff fitted >= t. Walking t upward
    // through the sorted values flips one point at a time to -1.
    // errors(t) = #{fitted >= t, y = -1} + #{fitted < t, y = +1}.
    let total_neg = labels.iter().filter(|&&y| y == -1.0).count();
    let mut candidates: Vec<f64> = Vec::with_capacity(fitted.len() + 1);
    let lo = fitted[order[0]];
    let hi = fitted[order[order.len() - 1]];
    candidates.push(lo - 1.0);
    for w in order.windows(2) {
        let a = fitted[w[0]];
        let b = fitted[w[1]];
        if b > a {
            candidates.push(0.5 * (a + b));
        }
    }
    candidates.push(hi + 1.0);

    let mut best_t = candidates[0];
    let mut best_err = usize::MAX;
    let mut idx = 0usize; // points with fitted < t so far
    let mut pos_below = 0usize;
    let mut neg_below = 0usize;
    for &t in &candidates {
        while idx < order.len() && fitted[order[idx]] < t {
            if labels[order[idx]] == 1.0 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            idx += 1;
        }
        let err = (total_neg - neg_below) + pos_below;
        if err < best_err {
            best_err = err;
            best_t = t;
        }
    }
    best_t
}
