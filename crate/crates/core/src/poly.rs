//! Monomial bases, feature maps and polynomial evaluation.
//!
//! A degree-`k` polynomial over `R^d` (or over the hypercube `{-1,+1}^d`) is
//! identified with its coefficient vector over an explicit monomial basis.
//! The ordering of the basis is graded lexicographic and fixed globally:
//! monomials are sorted by total degree, and within a degree block by the
//! exponent tuple in descending lexicographic order (so `x1^2` precedes
//! `x1*x2` precedes `x2^2`). Index 0 is always the constant monomial.
//!
//! On the hypercube, `x_i^2 = 1`, so only multilinear monomials (exponents in
//! `{0,1}`) are kept; this shrinks the basis from `C(d+k,k)` to
//! `sum_{j<=k} C(d,j)` entries.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point domain a basis is defined over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Real,
    Hypercube,
}

/// Reference distribution for orthonormal test bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceDistribution {
    GaussianStd,
    HypercubeUniform,
}

/// Ordered monomial basis of all monomials of total degree at most `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialBasis {
    dimension: usize,
    degree: usize,
    domain: DomainKind,
    exponents: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl MonomialBasis {
    pub fn new(dimension: usize, degree: usize, domain: DomainKind) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        assert!(degree > 0, "degree must be positive");
        let mut exponents = Vec::new();
        let mut current = vec![0u32; dimension];
        for total in 0..=degree as u32 {
            emit_degree_block(&mut exponents, &mut current, dimension, total, domain);
        }
        let index = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Self {
            dimension,
            degree,
            domain,
            exponents,
            index,
        }
    }

    pub fn shared(dimension: usize, degree: usize, domain: DomainKind) -> Arc<Self> {
        Arc::new(Self::new(dimension, degree, domain))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    /// Number of monomials `t` in the basis.
    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    /// Exponent vector of the monomial at `index`.
    pub fn exponent(&self, index: usize) -> &[u32] {
        &self.exponents[index]
    }

    pub fn exponents(&self) -> impl Iterator<Item = &[u32]> {
        self.exponents.iter().map(|e| e.as_slice())
    }

    /// Position of an exponent vector in the basis, if present.
    pub fn position(&self, exponent: &[u32]) -> Option<usize> {
        self.index.get(exponent).copied()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluate the monomial feature vector `x^{(k)}` at a point.
    ///
    /// Entry `r` equals `prod_i x_i^{r_i}`; entry 0 is always 1.
    pub fn feature_map(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let mut out = DVector::zeros(self.size());
        self.feature_map_into(x, &mut out);
        Ok(out)
    }

    /// As [`feature_map`](Self::feature_map) but writing into a provided buffer.
    pub fn feature_map_into(&self, x: &[f64], out: &mut DVector<f64>) {
        debug_assert_eq!(x.len(), self.dimension);
        debug_assert_eq!(out.len(), self.size());
        // Powers x_i^e for e <= degree, then a product over the (sparse)
        // support of each exponent vector.
        let k = self.degree;
        let mut pows = vec![1.0f64; self.dimension * (k + 1)];
        for (i, &xi) in x.iter().enumerate() {
            let row = &mut pows[i * (k + 1)..(i + 1) * (k + 1)];
            for e in 1..=k {
                row[e] = row[e - 1] * xi;
            }
        }
        for (j, expo) in self.exponents.iter().enumerate() {
            let mut v = 1.0;
            for (i, &e) in expo.iter().enumerate() {
                if e > 0 {
                    v *= pows[i * (k + 1) + e as usize];
                }
            }
            out[j] = v;
        }
    }

    /// Feature matrix with one row per point (`n x t`).
    pub fn feature_matrix(&self, points: impl ExactSizeIterator<Item = impl AsRef<[f64]>>) -> DMatrix<f64> {
        let n = points.len();
        let t = self.size();
        let mut m = DMatrix::zeros(n, t);
        let mut buf = DVector::zeros(t);
        for (i, p) in points.enumerate() {
            self.feature_map_into(p.as_ref(), &mut buf);
            m.row_mut(i).copy_from(&buf.transpose());
        }
        m
    }
}

fn emit_degree_block(
    out: &mut Vec<Vec<u32>>,
    current: &mut Vec<u32>,
    dimension: usize,
    total: u32,
    domain: DomainKind,
) {
    // Exponent tuples of exact total degree, in descending lexicographic
    // order: the leading coordinate takes the largest feasible exponent
    // first.
    fn rec(
        out: &mut Vec<Vec<u32>>,
        current: &mut Vec<u32>,
        pos: usize,
        remaining: u32,
        domain: DomainKind,
    ) {
        let d = current.len();
        if pos == d {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        let cap = match domain {
            DomainKind::Real => remaining,
            DomainKind::Hypercube => remaining.min(1),
        };
        if d - pos == 1 {
            if remaining <= cap {
                current[pos] = remaining;
                out.push(current.clone());
                current[pos] = 0;
            }
            return;
        }
        let mut e = cap as i64;
        while e >= 0 {
            current[pos] = e as u32;
            rec(out, current, pos + 1, remaining - e as u32, domain);
            e -= 1;
        }
        current[pos] = 0;
    }
    rec(out, current, 0, total, domain);
    let _ = dimension;
}

/// Count of real-domain monomials `C(d+k, k)`.
pub fn real_basis_size(dimension: usize, degree: usize) -> usize {
    binomial(dimension + degree, degree)
}

/// Count of multilinear monomials `sum_{j<=k} C(d, j)`.
pub fn hypercube_basis_size(dimension: usize, degree: usize) -> usize {
    (0..=degree.min(dimension)).map(|j| binomial(dimension, j)).sum()
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out as usize
}

/// A polynomial as a coefficient vector over a [`MonomialBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    basis: Arc<MonomialBasis>,
    coefficients: DVector<f64>,
}

impl Polynomial {
    pub fn new(basis: Arc<MonomialBasis>, coefficients: DVector<f64>) -> Result<Self> {
        if coefficients.len() != basis.size() {
            return Err(Error::DimensionMismatch {
                expected: basis.size(),
                got: coefficients.len(),
            });
        }
        Ok(Self { basis, coefficients })
    }

    pub fn zero(basis: Arc<MonomialBasis>) -> Self {
        let t = basis.size();
        Self {
            basis,
            coefficients: DVector::zeros(t),
        }
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    /// `p(x) = sum_r coef_r x^r`, as the coefficient/feature dot product.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let features = self.basis.feature_map(x)?;
        Ok(self.coefficients.dot(&features))
    }

    /// Evaluate against a precomputed feature vector.
    pub fn eval_features(&self, features: &DVector<f64>) -> f64 {
        self.coefficients.dot(features)
    }
}

/// Polynomials orthonormal under the reference distribution.
///
/// For the standard Gaussian these are products of normalized probabilists'
/// Hermite polynomials `He_n / sqrt(n!)`; for the uniform hypercube they are
/// the parity characters, which coincide with the multilinear monomials.
pub fn orthonormal_test_basis(
    basis: &Arc<MonomialBasis>,
    reference: ReferenceDistribution,
) -> Result<Vec<Polynomial>> {
    match (basis.domain(), reference) {
        (DomainKind::Real, ReferenceDistribution::GaussianStd) => gaussian_hermite_basis(basis),
        (DomainKind::Hypercube, ReferenceDistribution::HypercubeUniform) => {
            let t = basis.size();
            Ok((0..t)
                .map(|j| {
                    let mut c = DVector::zeros(t);
                    c[j] = 1.0;
                    Polynomial::new(basis.clone(), c).expect("basis-sized vector")
                })
                .collect())
        }
        _ => Err(Error::UnsupportedReference),
    }
}

fn gaussian_hermite_basis(basis: &Arc<MonomialBasis>) -> Result<Vec<Polynomial>> {
    let k = basis.degree();
    let d = basis.dimension();
    // Univariate coefficients of He_n in the monomial basis 1, x, x^2, ...
    let mut hermite: Vec<Vec<f64>> = vec![vec![1.0]];
    if k >= 1 {
        hermite.push(vec![0.0, 1.0]);
    }
    for n in 1..k {
        // He_{n+1}(x) = x He_n(x) - n He_{n-1}(x)
        let mut next = vec![0.0; n + 2];
        for (e, &c) in hermite[n].iter().enumerate() {
            next[e + 1] += c;
        }
        for (e, &c) in hermite[n - 1].iter().enumerate() {
            next[e] -= n as f64 * c;
        }
        hermite.push(next);
    }
    let norms: Vec<f64> = (0..=k).map(|n| factorial(n).sqrt()).collect();

    let t = basis.size();
    let mut out = Vec::with_capacity(t);
    for q in 0..t {
        let target = basis.exponent(q).to_vec();
        // Tensor the univariate expansions across coordinates.
        let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0u32; d], 1.0)];
        for (i, &ri) in target.iter().enumerate() {
            let uni = &hermite[ri as usize];
            let mut next = Vec::with_capacity(terms.len() * (ri as usize + 1));
            for (expo, coef) in &terms {
                for (e, &c) in uni.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let mut expo2 = expo.clone();
                    expo2[i] = e as u32;
                    next.push((expo2, coef * c));
                }
            }
            terms = next;
        }
        let scale: f64 = target.iter().map(|&r| norms[r as usize]).product();
        let mut coeffs = DVector::zeros(t);
        for (expo, coef) in terms {
            let idx = basis
                .position(&expo)
                .expect("hermite expansion stays within the degree budget");
            coeffs[idx] += coef / scale;
        }
        out.push(Polynomial::new(basis.clone(), coeffs)?);
    }
    Ok(out)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Gaussian moment `E[x^{2m}] = (2m-1)!!`; odd moments vanish.
pub fn gaussian_moment(exponent: u32) -> f64 {
    if exponent % 2 == 1 {
        return 0.0;
    }
    let mut out = 1.0;
    let mut i = exponent as i64 - 1;
    while i > 1 {
        out *= i as f64;
        i -= 2;
    }
    out
}
