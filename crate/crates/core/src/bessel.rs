//! Exponentially scaled modified Bessel functions and the Green's function
//! of the homogeneous unit-rate walk, in time and Laplace domains.
//!
//! Only scaled values `e^{-x} I_n(x)` are ever computed; the walk Green's
//! function pairs `e^{-2t}` with `I_n(2t)`, so the scaled form stays in
//! `[0, 1]` for every argument and never overflows.

use num_complex::Complex64;

use crate::coord_ops::Site;
use crate::{Error, Result};

/// Rescale threshold for the backward recurrence.
const RESCALE_AT: f64 = 1e250;

/// Table of `e^{-x} I_n(x)` for `n = 0..=n_max` at a fixed argument.
///
/// Built by Miller's backward recurrence normalized with
/// `I_0(x) + 2 Σ_{n≥1} I_n(x) = e^x`, which in scaled form says the
/// (weighted) table sums to one.
#[derive(Debug, Clone)]
pub struct ScaledBesselTable {
    argument: f64,
    values: Vec<f64>,
}

impl ScaledBesselTable {
    /// Builds the table at argument `x >= 0` up to order `n_max`.
    pub fn build(n_max: usize, x: f64) -> Self {
        assert!(x >= 0.0, "argument must be nonnegative");
        if x == 0.0 {
            let mut values = vec![0.0; n_max + 1];
            values[0] = 1.0;
            return Self { argument: x, values };
        }

        // Start the recurrence far enough above n_max that the downward
        // pass has converged to the minimal solution by the time it
        // reaches the requested orders. The `+ 40` keeps the buffer wide
        // even at n_max = 0, where the relative accuracy would otherwise
        // bottom out near 1e-7 for moderate arguments.
        let n_start = n_max + (10.0 + 2.0 * ((n_max as f64 + 40.0) * x).sqrt()).ceil() as usize;

        let mut values = vec![0.0; n_max + 1];
        let mut above = 0.0_f64; // I_{n+1} (unnormalized)
        let mut here = 1.0_f64; // I_n
        let mut total = 0.0_f64; // I_0 + 2 Σ_{n>=1} I_n, same scale

        let mut n = n_start;
        loop {
            if n <= n_max {
                values[n] = here;
            }
            if n == 0 {
                total += here;
                break;
            }
            total += 2.0 * here;
            let below = above + (2.0 * n as f64 / x) * here;
            above = here;
            here = below;
            n -= 1;

            if here.abs() > RESCALE_AT {
                let inv = 1.0 / RESCALE_AT;
                here *= inv;
                above *= inv;
                total *= inv;
                for v in &mut values {
                    *v *= inv;
                }
            }
        }

        for v in &mut values {
            *v /= total;
        }
        Self { argument: x, values }
    }

    pub fn argument(&self) -> f64 {
        self.argument
    }

    /// `e^{-x} I_n(x)`; orders above `n_max` were not computed.
    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `e^{-x} I_n(x)` for a single order. Symmetric orders (`I_{-n} = I_n`)
/// are the caller's job via `|n|`.
pub fn scaled_bessel_i(n: usize, x: f64) -> f64 {
    ScaledBesselTable::build(n, x).value(n)
}

/// Green's function of the homogeneous unit-rate walk,
/// `G_0(x, y, t) = e^{-2t} I_{|x-y|}(2t)`.
pub fn g0(x: Site, y: Site, t: f64) -> f64 {
    assert!(t >= 0.0, "time must be nonnegative");
    let n = (x - y).unsigned_abs() as usize;
    scaled_bessel_i(n, 2.0 * t)
}

/// Laplace transform of [`g0`]:
/// `ĝ_0(x, y, s) = ((s+2) - w)^{|x-y|} / (2^{|x-y|} w)` with
/// `w = sqrt(s) sqrt(s+4)` (each factor the principal branch).
///
/// The product of principal square roots is the analytic continuation to
/// all of ℂ minus the branch cut `[-4, 0]`, with `w ~ s` at infinity; the
/// single principal root of `s(s+4)` would instead put a spurious cut on
/// the line `Re s = -2`, which deformed inversion contours cross.
pub fn g0_laplace(x: Site, y: Site, s: Complex64) -> Result<Complex64> {
    if s.im == 0.0 && (-4.0..=0.0).contains(&s.re) {
        return Err(Error::LaplaceAbscissa { re: s.re, im: s.im });
    }
    let w = s.sqrt() * (s + 4.0).sqrt();
    let n = (x - y).unsigned_abs() as u32;
    // ((s+2) - w) / 2 has modulus < 1 on Re s > 0, so powers decay.
    let z = (s + 2.0 - w) / 2.0;
    Ok(z.powu(n) / w)
}
