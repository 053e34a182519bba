//! Spectral outlier removal for learning under distribution shift, and the
//! learners built on top of it.
//!
//! The library is organized around a small number of primitives:
//!
//! - [`poly`]: monomial bases over `R^d` or `{-1,+1}^d`, feature maps and
//!   polynomial evaluation, plus orthonormal test bases (Hermite products,
//!   parities) used by the verification suites.
//! - [`moments`]: robust estimation of the degree-`k` monomial correlation
//!   matrix of a reference distribution, with a cached pseudo-inverse square
//!   root, and the eigenvalue routine that maximizes `p^T Q p` subject to
//!   `p^T M p <= 1`.
//! - [`filter`]: the iterative spectral outlier-removal procedure. It takes a
//!   reference sample and a (possibly corrupted) target sample and produces a
//!   succinct selector `g: X -> {0,1}` together with the accepted subset.
//! - [`regression`]: box-constrained L2 polynomial regression and L1
//!   polynomial regression with a sign-threshold hypothesis.
//! - [`learners`]: end-to-end learners: PQ learning of halfspaces (general
//!   and homogeneous), PQ learning via sandwiching, the adversarial
//!   (transductive) variant, tolerant TDS learning, tolerant testable
//!   learning, and learning with nasty noise.
//! - [`synth`]: seeded synthetic distributions, concepts and adversaries with
//!   known ground truth, used by the experiment harness.
//! - [`container`]: the shared serialization container (JSON header plus a
//!   little-endian binary payload) for selectors, moment matrices and
//!   hypotheses.

pub mod container;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod learners;
pub mod moments;
pub mod poly;
pub mod regression;
pub mod synth;

pub use error::{Error, Result};
