//! Iterative spectral outlier removal.
//!
//! Given a clean reference sample `S_D` and a target sample `S_D'` (possibly
//! containing an arbitrary fraction of adversarial points), the procedure
//! first clips every target point whose degree-`k` leverage
//! `(x^{(k)})^T M^+ (x^{(k)})` exceeds the bound `B0`, then repeatedly finds
//! the polynomial with the largest second moment over the survivors relative
//! to the reference (an eigenvalue computation) and removes the points where
//! that polynomial is large, until the maximal relative second moment drops
//! below `(50/alpha) * (1 + Delta0 * B0)`.
//!
//! The output is both the accepted subset and a succinct [`Selector`] that
//! reproduces the accept/reject decision on arbitrary points: reject iff the
//! clip test fires or any round polynomial exceeds its threshold.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::moments::{estimate_moments, max_ratio_polynomial, MomentMatrix};
use crate::poly::{MonomialBasis, Polynomial};

/// Parameters of the outlier-removal procedure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Polynomial degree `k`.
    pub degree: usize,
    /// Target clean-rejection slack in (0,1).
    pub epsilon: f64,
    /// Validity/boundedness trade-off in (0,1].
    pub alpha: f64,
    /// Failure probability.
    pub delta: f64,
    /// Override for the clip bound `B0` (default `4 t^3 / epsilon`).
    pub clip_override: Option<f64>,
    /// Override for the slack `Delta0`
    /// (default `min(200 t sqrt(ln N / N * ln(1/delta)), 1/B0)`).
    pub slack_override: Option<f64>,
    /// Cap on the number of removal rounds (default: target sample size).
    pub max_rounds: Option<usize>,
}

impl FilterConfig {
    pub fn new(degree: usize, epsilon: f64, alpha: f64, delta: f64) -> Self {
        Self {
            degree,
            epsilon,
            alpha,
            delta,
            clip_override: None,
            slack_override: None,
            max_rounds: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::InvalidParameter("degree must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0,1], got {}",
                self.alpha
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be in (0,1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Clip bound `B0`. The textbook `4 d^{3k} / epsilon` is instantiated
    /// with the exact basis size `t` in place of `d^k`.
    pub fn clip_bound(&self, basis_size: usize) -> f64 {
        self.clip_override
            .unwrap_or_else(|| 4.0 * (basis_size as f64).powi(3) / self.epsilon)
    }

    /// Slack `Delta0`, clamped so that `Delta0 * B0 <= 1`; without the clamp
    /// the stop test is vacuous at any feasible sample size.
    pub fn slack(&self, basis_size: usize, n: usize) -> f64 {
        if let Some(s) = self.slack_override {
            return s;
        }
        let t = basis_size as f64;
        let n = n.max(2) as f64;
        let raw = 200.0 * t * (n.ln() / n * (1.0 / self.delta).ln()).sqrt();
        raw.min(1.0 / self.clip_bound(basis_size))
    }

    /// Stop threshold `(50/alpha) * (1 + Delta0 * B0)`.
    pub fn stop_threshold(&self, basis_size: usize, n: usize) -> f64 {
        50.0 / self.alpha * (1.0 + self.slack(basis_size, n) * self.clip_bound(basis_size))
    }
}

/// One removal round: reject where `p(x)^2 > threshold`.
#[derive(Clone, Debug)]
pub struct SelectorRound {
    pub polynomial: Polynomial,
    pub threshold: f64,
    /// Set when the round came from the no-candidate fallback.
    pub warning: bool,
}

/// Succinct description of the selector `g`.
#[derive(Clone, Debug)]
pub struct Selector {
    moments: MomentMatrix,
    clip_bound: f64,
    rounds: Vec<SelectorRound>,
}

impl Selector {
    pub fn new(moments: MomentMatrix, clip_bound: f64, rounds: Vec<SelectorRound>) -> Result<Self> {
        for r in &rounds {
            if !(r.threshold >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "round threshold must be non-negative, got {}",
                    r.threshold
                )));
            }
        }
        Ok(Self {
            moments,
            clip_bound,
            rounds,
        })
    }

    pub fn moments(&self) -> &MomentMatrix {
        &self.moments
    }

    pub fn clip_bound(&self) -> f64 {
        self.clip_bound
    }

    pub fn rounds(&self) -> &[SelectorRound] {
        &self.rounds
    }

    pub fn i_max(&self) -> usize {
        self.rounds.len()
    }

    pub fn basis(&self) -> &std::sync::Arc<MonomialBasis> {
        self.moments.basis()
    }

    /// Evaluate `g(x)`: 0 iff the leverage exceeds the clip bound or some
    /// round polynomial squared exceeds its threshold, else 1.
    pub fn evaluate(&self, x: &[f64]) -> Result<u8> {
        let features = self.basis().feature_map(x)?;
        Ok(self.evaluate_features(&features))
    }

    fn evaluate_features(&self, features: &DVector<f64>) -> u8 {
        if self.moments.leverage(features) > self.clip_bound {
            return 0;
        }
        for round in &self.rounds {
            let v = round.polynomial.eval_features(features);
            if v * v > round.threshold {
                return 0;
            }
        }
        1
    }

    /// Evaluate on every point of a dataset.
    pub fn evaluate_dataset(&self, data: &Dataset) -> Result<Vec<u8>> {
        if data.dimension() != self.basis().dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.basis().dimension(),
                got: data.dimension(),
            });
        }
        let t = self.basis().size();
        let mut features = DVector::zeros(t);
        let mut out = Vec::with_capacity(data.len());
        for p in data.points() {
            self.basis().feature_map_into(p, &mut features);
            out.push(self.evaluate_features(&features));
        }
        Ok(out)
    }

    /// Fraction of points rejected (`g = 0`); 0 on an empty sample.
    pub fn rejection_fraction(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let marks = self.evaluate_dataset(data)?;
        let rejected = marks.iter().filter(|&&g| g == 0).count();
        Ok(rejected as f64 / data.len() as f64)
    }
}

/// Per-round log entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterRound {
    /// Value of the quadratic maximization at the start of the round.
    pub mu: f64,
    pub threshold: f64,
    pub removed: usize,
    /// True when the threshold condition had no candidate and the round fell
    /// back to removing the largest value.
    pub warning: bool,
}

/// Result of a filter run.
#[derive(Clone, Debug)]
pub struct FilterOutcome {
    pub selector: Selector,
    /// Accept/reject mask over the target sample, aligned with its rows.
    pub accepted: Vec<bool>,
    /// Final maximization value; satisfies the stop criterion by construction.
    pub final_value: f64,
    pub stop_threshold: f64,
    pub rounds: Vec<FilterRound>,
    /// Count removed by the initial leverage clip.
    pub clipped: usize,
}

impl FilterOutcome {
    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }

    pub fn i_max(&self) -> usize {
        self.rounds.len()
    }
}

/// Run the outlier-removal procedure.
///
/// `reference` must be a clean sample of the reference distribution;
/// `target` is the sample to be filtered. The two must share dimension and
/// domain; sizes may differ (all fractions are normalized per set).
pub fn run_filter(
    reference: &Dataset,
    target: &Dataset,
    config: &FilterConfig,
) -> Result<FilterOutcome> {
    config.validate()?;
    if reference.dimension() != target.dimension() {
        return Err(Error::DimensionMismatch {
            expected: reference.dimension(),
            got: target.dimension(),
        });
    }
    if reference.domain() != target.domain() {
        return Err(Error::DomainMismatch(
            "reference and target datasets use different domains".into(),
        ));
    }
    for data in [reference, target] {
        if data.len() < 4 {
            return Err(Error::DatasetTooSmall {
                min: 4,
                got: data.len(),
            });
        }
    }

    let basis = MonomialBasis::shared(target.dimension(), config.degree, target.domain());
    let t = basis.size();
    let moments = estimate_moments(reference, &basis, config.delta / 10.0)?;

    let n_target = target.len();
    let n_reference = reference.len();
    let clip_bound = config.clip_bound(t);
    let slack = config.slack(t, n_target.min(n_reference));
    let stop_threshold = 50.0 / config.alpha * (1.0 + slack * clip_bound);
    let max_rounds = config.max_rounds.unwrap_or(n_target);

    let target_features = basis.feature_matrix(target.points());
    let reference_features = basis.feature_matrix(reference.points());

    // Initial clip on leverage.
    let mut alive = vec![true; n_target];
    let mut clipped = 0usize;
    {
        let mut row = DVector::zeros(t);
        for i in 0..n_target {
            row.copy_from(&target_features.row(i).transpose());
            if moments.leverage(&row) > clip_bound {
                alive[i] = false;
                clipped += 1;
            }
        }
    }

    let mut rounds_log: Vec<FilterRound> = Vec::new();
    let mut selector_rounds: Vec<SelectorRound> = Vec::new();
    let final_value;

    loop {
        let q = survivor_correlations(&target_features, &alive, n_target);
        let (polynomial, mu) = max_ratio_polynomial(&moments, &q)?;
        if mu <= stop_threshold {
            final_value = mu;
            break;
        }
        if rounds_log.len() >= max_rounds {
            log::warn!("run_filter: round cap {max_rounds} reached with mu={mu}");
            final_value = mu;
            break;
        }

        // Squared values on survivors and on the full reference sample.
        let coeffs = polynomial.coefficients();
        let target_vals: Vec<(usize, f64)> = (0..n_target)
            .filter(|&i| alive[i])
            .map(|i| {
                let v = target_features.row(i).transpose().dot(coeffs);
                (i, v * v)
            })
            .collect();
        let mut reference_vals: Vec<f64> = (0..n_reference)
            .map(|i| {
                let v = reference_features.row(i).transpose().dot(coeffs);
                v * v
            })
            .collect();
        reference_vals.sort_unstable_by(f64::total_cmp);

        let threshold = match find_threshold(
            &target_vals,
            &reference_vals,
            n_target,
            n_reference,
            clip_bound,
            slack,
            config.alpha,
        ) {
            Some(tau) => tau,
            None => {
                // Finite-sample drift outside the theory's good event: no
                // candidate satisfies the condition. Remove the largest value
                // and flag the round.
                let max_val = target_vals
                    .iter()
                    .map(|&(_, v)| v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let tau = just_below(max_val);
                log::warn!(
                    "run_filter: no threshold candidate at round {}, removing max value {max_val}",
                    rounds_log.len() + 1
                );
                selector_rounds.push(SelectorRound {
                    polynomial: polynomial.clone(),
                    threshold: tau,
                    warning: true,
                });
                let removed = remove_above(&mut alive, &target_vals, tau);
                rounds_log.push(FilterRound {
                    mu,
                    threshold: tau,
                    removed,
                    warning: true,
                });
                continue;
            }
        };

        selector_rounds.push(SelectorRound {
            polynomial: polynomial.clone(),
            threshold,
            warning: false,
        });
        let removed = remove_above(&mut alive, &target_vals, threshold);
        rounds_log.push(FilterRound {
            mu,
            threshold,
            removed,
            warning: false,
        });
        debug_assert!(removed > 0, "a satisfying threshold removes at least one point");
    }

    let selector = Selector::new(moments, clip_bound, selector_rounds)?;
    Ok(FilterOutcome {
        selector,
        accepted: alive,
        final_value,
        stop_threshold,
        rounds: rounds_log,
        clipped,
    })
}

/// Dataset-level variant for adversarially corrupted targets.
///
/// The computation is identical to [`run_filter`]; the distinction is the
/// guarantee being invoked: when `target` was formed by replacing part of an
/// i.i.d. sample, the rejected-clean count satisfies
/// `|S_reject ∩ S_uncorrupted| <= alpha |S_adversarial| + (epsilon/2) N`.
pub fn run_filter_adversarial(
    reference: &Dataset,
    target: &Dataset,
    config: &FilterConfig,
) -> Result<FilterOutcome> {
    run_filter(reference, target, config)
}

/// Empirical rejection fraction of a selector on a sample from a smooth
/// distribution; 0 by convention on an empty sample.
pub fn smoothness_check(selector: &Selector, sample: &Dataset) -> Result<f64> {
    selector.rejection_fraction(sample)
}

/// `(1/N) sum_{alive} v v^T`, normalized by the full target size.
fn survivor_correlations(features: &DMatrix<f64>, alive: &[bool], n_total: usize) -> DMatrix<f64> {
    let t = features.ncols();
    let count = alive.iter().filter(|&&a| a).count();
    if count == 0 {
        return DMatrix::zeros(t, t);
    }
    let mut sub = DMatrix::zeros(count, t);
    let mut row = 0;
    for (i, &a) in alive.iter().enumerate() {
        if a {
            sub.row_mut(row).copy_from(&features.row(i));
            row += 1;
        }
    }
    sub.transpose() * sub / n_total as f64
}

/// Smallest candidate `tau` from the survivor values such that
/// `(1/N') |{x: p(x)^2 > tau}| >= (10/alpha) (Pr_ref[B0 >= p^2 > tau] + Delta0)`.
fn find_threshold(
    target_vals: &[(usize, f64)],
    reference_sorted: &[f64],
    n_target: usize,
    n_reference: usize,
    clip_bound: f64,
    slack: f64,
    alpha: f64,
) -> Option<f64> {
    let mut candidates: Vec<f64> = target_vals.iter().map(|&(_, v)| v).collect();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();

    let sorted_vals = candidates_with_multiplicity(target_vals);
    let ref_at_most_clip = partition_point_leq(reference_sorted, clip_bound);

    for &tau in &candidates {
        // Survivor mass strictly above tau, normalized by the full target size.
        let above = sorted_vals.len() - partition_point_leq(&sorted_vals, tau);
        let lhs = above as f64 / n_target as f64;
        // Reference mass with clip >= p^2 > tau.
        let ref_above_tau = partition_point_leq(reference_sorted, tau);
        let ref_count = ref_at_most_clip.saturating_sub(ref_above_tau);
        let rhs = 10.0 / alpha * (ref_count as f64 / n_reference as f64 + slack);
        if lhs >= rhs {
            return Some(tau);
        }
    }
    None
}

fn candidates_with_multiplicity(target_vals: &[(usize, f64)]) -> Vec<f64> {
    let mut vals: Vec<f64> = target_vals.iter().map(|&(_, v)| v).collect();
    vals.sort_unstable_by(f64::total_cmp);
    vals
}

/// Number of entries `<= bound` in an ascending slice.
fn partition_point_leq(sorted: &[f64], bound: f64) -> usize {
    sorted.partition_point(|&v| v <= bound)
}

fn remove_above(alive: &mut [bool], vals: &[(usize, f64)], tau: f64) -> usize {
    let mut removed = 0;
    for &(i, v) in vals {
        if v > tau {
            alive[i] = false;
            removed += 1;
        }
    }
    removed
}

fn just_below(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    // Largest representable value strictly below v.
    f64::from_bits(v.to_bits() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::RANK_CUTOFF_RATIO;
    use crate::poly::DomainKind;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_dataset(d: usize, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
        Dataset::new(DomainKind::Real, d, rows).unwrap()
    }

    fn identity_selector(basis: std::sync::Arc<MonomialBasis>, clip: f64) -> Selector {
        let t = basis.size();
        let m = MomentMatrix::from_matrix(basis, DMatrix::identity(t, t), RANK_CUTOFF_RATIO, false)
            .unwrap();
        Selector::new(m, clip, Vec::new()).unwrap()
    }

    #[test]
    fn selector_without_rounds_and_infinite_clip_accepts_everything() {
        let basis = MonomialBasis::shared(2, 2, DomainKind::Real);
        let g = identity_selector(basis, f64::INFINITY);
        for p in [[0.0, 0.0], [100.0, -3.0], [1e6, 1e6]] {
            assert_eq!(g.evaluate(&p).unwrap(), 1);
        }
    }

    #[test]
    fn selector_round_threshold_comparison() {
        let basis = MonomialBasis::shared(2, 1, DomainKind::Real);
        let t = basis.size();
        let m = MomentMatrix::from_matrix(
            basis.clone(),
            DMatrix::identity(t, t),
            RANK_CUTOFF_RATIO,
            false,
        )
        .unwrap();
        // p1 = x1, tau1 = 4.
        let mut c = DVector::zeros(t);
        c[basis.position(&[1, 0]).unwrap()] = 1.0;
        let p1 = Polynomial::new(basis.clone(), c).unwrap();
        let g = Selector::new(
            m,
            1e9,
            vec![SelectorRound {
                polynomial: p1,
                threshold: 4.0,
                warning: false,
            }],
        )
        .unwrap();
        assert_eq!(g.evaluate(&[3.0, 0.0]).unwrap(), 0);
        assert_eq!(g.evaluate(&[1.0, 0.0]).unwrap(), 1);
        // Boundary is accepted: the test is strict.
        assert_eq!(g.evaluate(&[2.0, 0.0]).unwrap(), 1);
    }

    /// Oracle: re-check every selector condition by brute force per point.
    #[test]
    fn selector_matches_bruteforce_condition_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let basis = MonomialBasis::shared(2, 2, DomainKind::Real);
        let t = basis.size();
        let raw = DMatrix::<f64>::from_fn(t, t, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m_mat = &raw * raw.transpose() + DMatrix::identity(t, t);
        let m =
            MomentMatrix::from_matrix(basis.clone(), m_mat.clone(), RANK_CUTOFF_RATIO, false)
                .unwrap();
        let pinv = m_mat
            .clone()
            .try_inverse()
            .expect("test moment matrix is invertible");

        let mut rounds = Vec::new();
        for _ in 0..3 {
            let c = DVector::<f64>::from_fn(t, |_, _| rng.sample::<f64, _>(StandardNormal));
            rounds.push(SelectorRound {
                polynomial: Polynomial::new(basis.clone(), c).unwrap(),
                threshold: rng.random::<f64>() * 4.0,
                warning: false,
            });
        }
        let clip = 3.0;
        let g = Selector::new(m, clip, rounds.clone()).unwrap();

        for _ in 0..1000 {
            let x = [
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            ];
            let features = basis.feature_map(&x).unwrap();
            let lev = (&pinv * &features).dot(&features);
            let mut expect = if lev > clip { 0 } else { 1 };
            if expect == 1 {
                for r in &rounds {
                    let v = r.polynomial.eval(&x).unwrap();
                    if v * v > r.threshold {
                        expect = 0;
                        break;
                    }
                }
            }
            let got = g.evaluate(&x).unwrap();
            // Skip points within round-off of a decision boundary.
            if (lev - clip).abs() < 1e-9 * clip {
                continue;
            }
            assert_eq!(got, expect, "x = {x:?}");
        }
    }

    #[test]
    fn clean_gaussian_run_stops_immediately() {
        let reference = gaussian_dataset(2, 4000, 41);
        let target = gaussian_dataset(2, 4000, 42);
        let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
        let outcome = run_filter(&reference, &target, &config).unwrap();
        assert_eq!(outcome.i_max(), 0);
        assert_eq!(outcome.clipped, 0);
        assert!(outcome.accepted.iter().all(|&a| a));
        assert!(outcome.final_value <= outcome.stop_threshold);
        // Fresh clean sample keeps low rejection.
        let fresh = gaussian_dataset(2, 4000, 43);
        let rej = outcome.selector.rejection_fraction(&fresh).unwrap();
        assert!(rej <= 0.1, "clean rejection {rej}");
    }

    #[test]
    fn far_points_are_clipped() {
        let reference = gaussian_dataset(2, 4000, 51);
        let mut target = gaussian_dataset(2, 4000, 52);
        // 10% copies of a far point.
        for i in 0..400 {
            target.set_point(i, &[50.0, 0.0]);
        }
        let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
        let outcome = run_filter(&reference, &target, &config).unwrap();
        for i in 0..400 {
            assert!(!outcome.accepted[i], "far point {i} accepted");
        }
        let clean_rejected = outcome.accepted[400..].iter().filter(|&&a| !a).count();
        assert!(
            clean_rejected as f64 <= 0.5 * 400.0 + 0.05 * 4000.0 + 3.0 * (4000.0f64).sqrt(),
            "clean rejected {clean_rejected}"
        );
        assert!(outcome.final_value <= outcome.stop_threshold);
    }

    /// Mid-leverage cluster: inside the clip region but spectrally loud, so
    /// removal rounds must fire and the stop criterion must hold exactly.
    #[test]
    fn spectral_rounds_remove_planted_cluster() {
        let reference = gaussian_dataset(2, 4000, 61);
        let mut target = gaussian_dataset(2, 4000, 62);
        for i in 0..1200 {
            target.set_point(i, &[7.0, 0.2]);
        }
        let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
        let outcome = run_filter(&reference, &target, &config).unwrap();
        assert!(outcome.i_max() >= 1, "expected at least one removal round");
        let cluster_accepted = outcome.accepted[..1200].iter().filter(|&&a| a).count();
        assert_eq!(cluster_accepted, 0, "cluster must be removed");
        assert!(outcome.final_value <= outcome.stop_threshold + 1e-6);

        // Stopping soundness, recomputed from scratch on the accepted set.
        let basis = outcome.selector.basis().clone();
        let feats = basis.feature_matrix(target.points());
        let q = survivor_correlations(&feats, &outcome.accepted, target.len());
        let (_, mu) = max_ratio_polynomial(outcome.selector.moments(), &q).unwrap();
        assert!(mu <= outcome.stop_threshold + 1e-6);

        // The accepted mask agrees with the selector on every target point.
        let marks = outcome.selector.evaluate_dataset(&target).unwrap();
        for (i, (&a, &g)) in outcome.accepted.iter().zip(marks.iter()).enumerate() {
            assert_eq!(a, g == 1, "mask/selector mismatch at {i}");
        }
    }

    #[test]
    fn fully_adversarial_target_is_emptied_or_bounded() {
        let reference = gaussian_dataset(2, 2000, 71);
        let mut target = gaussian_dataset(2, 2000, 72);
        for i in 0..2000 {
            target.set_point(i, &[9.0 + (i % 7) as f64 * 0.1, -6.0]);
        }
        let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
        let outcome = run_filter(&reference, &target, &config).unwrap();
        assert!(outcome.final_value <= outcome.stop_threshold + 1e-6);
        // Either everything is gone or what's left is spectrally bounded;
        // for this cluster the filter should wipe it out entirely.
        assert_eq!(outcome.accepted_count(), 0);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let a = gaussian_dataset(2, 16, 1);
        let b = gaussian_dataset(3, 16, 2);
        let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
        assert!(run_filter(&a, &b, &config).is_err());

        let tiny = gaussian_dataset(2, 3, 3);
        assert!(matches!(
            run_filter(&a, &tiny, &config),
            Err(Error::DatasetTooSmall { .. })
        ));
    }

    #[test]
    fn smoothness_check_empty_dataset_is_zero() {
        let basis = MonomialBasis::shared(2, 2, DomainKind::Real);
        let g = identity_selector(basis, 1e6);
        let empty = Dataset::empty(DomainKind::Real, 2);
        assert_eq!(smoothness_check(&g, &empty).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_outcomes() {
        let reference = gaussian_dataset(2, 1000, 81);
        let mut target = gaussian_dataset(2, 1000, 82);
        for i in 0..300 {
            target.set_point(i, &[6.5, 0.0]);
        }
        let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
        let a = run_filter(&reference, &target, &config).unwrap();
        let b = run_filter(&reference, &target, &config).unwrap();
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.final_value.to_bits(), b.final_value.to_bits());
        assert_eq!(a.rounds.len(), b.rounds.len());
        for (ra, rb) in a.rounds.iter().zip(b.rounds.iter()) {
            assert_eq!(ra.mu.to_bits(), rb.mu.to_bits());
            assert_eq!(ra.threshold.to_bits(), rb.threshold.to_bits());
            assert_eq!(ra.removed, rb.removed);
        }
    }

    #[test]
    fn iteration_bound_holds_on_desk_runs() {
        let reference = gaussian_dataset(2, 1500, 91);
        for (seed, frac, scale) in [(92u64, 0.3, 7.0), (93, 0.5, 5.5), (94, 0.1, 8.0)] {
            let mut target = gaussian_dataset(2, 1500, seed);
            let m = (frac * 1500.0) as usize;
            for i in 0..m {
                target.set_point(i, &[scale, scale * 0.3]);
            }
            let config = FilterConfig::new(2, 0.1, 0.5, 0.05);
            let outcome = run_filter(&reference, &target, &config).unwrap();
            let t = outcome.selector.basis().size() as f64;
            let b0 = outcome.selector.clip_bound();
            let bound = 10.0 * t * (b0 * t).log2();
            assert!(outcome.i_max() <= 1500);
            assert!(
                (outcome.i_max() as f64) <= bound,
                "i_max {} above practical bound {bound}",
                outcome.i_max()
            );
        }
    }
}
