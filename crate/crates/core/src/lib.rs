//! Transition probabilities (Green's functions) of continuous-time random
//! walks on `ℤ` whose jump intensities differ from the homogeneous unit walk
//! at finitely many sites.
//!
//! The homogeneous walk has a closed-form Green's function built from
//! modified Bessel functions. A finite defect set perturbs its generator by a
//! finite-rank operator, which closes the perturbation integral equations on
//! the defect support. Three independent routes compute the perturbed Green's
//! function:
//!
//! * [`volterra`] — time-domain product-quadrature solution of the
//!   restricted convolution equations,
//! * [`laplace`] — the same system solved exactly in the Laplace domain and
//!   inverted numerically (fixed Talbot or Gaver–Stehfest),
//! * [`oracle`] — direct integration of a truncated generator matrix,
//!   serving as ground truth for the other two.
//!
//! [`convergence`] measures how fast semigroups of truncated generator
//! sequences approach the limit semigroup and compares the measured error
//! with the a-priori bounds. [`cli`] is the batch front door used by the
//! `latwalk` binary.

// `!(x > 0.0)` guards deliberately reject NaN together with nonpositive
// values; the numeric loops index several parallel sequences at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bessel;
pub mod cli;
pub mod convergence;
pub mod coord_ops;
pub mod laplace;
pub mod oracle;
pub mod volterra;

use thiserror::Error;

/// Errors surfaced by the numerical layers and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rate must be nonnegative: {what} = {value}")]
    NegativeRate { what: &'static str, value: f64 },

    #[error("operator difference has infinite support: backgrounds differ")]
    BackgroundMismatch,

    #[error("Laplace transform undefined for Re s <= 0 (s = {re} + {im}i)")]
    LaplaceAbscissa { re: f64, im: f64 },

    #[error(
        "implicit time-stepping matrix is singular at h = {h}; \
         shrink the step so that h * |D| stays well below 2"
    )]
    SingularImplicitSystem { h: f64 },

    #[error("Laplace-domain system singular at s = {re} + {im}i")]
    SingularLaplaceSystem { re: f64, im: f64 },

    #[error("inversion scheme invalid: {0}")]
    InvalidInversionScheme(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("time grid invalid: {0}")]
    InvalidGrid(String),

    #[error("target site {site} too close to truncation boundary (radius {radius})")]
    TargetNearBoundary { site: i64, radius: i64 },

    #[error("closed-form base Green's function requires unit background rates, got lambda = {lambda}, mu = {mu}")]
    UnsupportedBase { lambda: f64, mu: f64 },

    #[error("pair ({x}, {y}) not present in the sampled Green path")]
    MissingPair { x: i64, y: i64 },

    #[error("config invalid: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
