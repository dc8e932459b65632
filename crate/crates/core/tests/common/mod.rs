//! Independent reference implementations used to validate the crate.
//!
//! Nothing here goes through the library's own Bessel or Laplace code: the
//! series oracle sums the defining power series directly, and the transform
//! oracle integrates it with Gauss-Legendre quadrature.

#![allow(dead_code)]

use latwalk::coord_ops::RateField;

/// `e^{-x} I_n(x)` from the power series
/// `I_n(x) = Σ_k (x/2)^{n+2k} / (k! (n+k)!)`,
/// with the `e^{-x}` folded into the leading term so nothing overflows.
pub fn series_scaled_bessel(n: usize, x: f64) -> f64 {
    assert!(x >= 0.0);
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let hx = x / 2.0;
    // leading term (x/2)^n / n! * e^{-x}, built factor by factor
    let mut term = (1..=n).fold((-x).exp(), |acc, i| acc * hx / i as f64);
    let mut sum = term;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= hx * hx / (k as f64 * (n + k) as f64);
        sum += term;
        if term < sum * 1e-18 && k as f64 > hx {
            return sum;
        }
        assert!(k < 10_000, "series did not converge at n={n}, x={x}");
    }
}

/// Reference `G0(x, y, t) = e^{-2t} I_{|x-y|}(2t)` from the series oracle.
pub fn series_g0(x: i64, y: i64, t: f64) -> f64 {
    series_scaled_bessel((x - y).unsigned_abs() as usize, 2.0 * t)
}

/// Nodes and weights of `m`-point Gauss-Legendre quadrature on [-1, 1],
/// from Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0_f64, z);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0_f64, z);
        for j in 2..=m {
            let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
        out.push((z, 2.0 / ((1.0 - z * z) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `∫_0^∞ e^{-st} e^{-2t} I_n(2t) dt` for real `s > 0` by composite
/// Gauss-Legendre quadrature; the integrand is entire in `t` and the tail
/// beyond `T = 60` is below 1e-14 for `s ≥ 0.5`.
pub fn quad_g0_laplace(n: usize, s: f64) -> f64 {
    assert!(s > 0.0);
    let rule = gauss_legendre(16);
    let t_end = 60.0_f64.min(40.0 / s + 20.0);
    let panels = (t_end.ceil() as usize).max(20);
    let width = t_end / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        let mid = a + width / 2.0;
        let half = width / 2.0;
        for &(z, w) in &rule {
            let t = mid + half * z;
            total += w * half * (-s * t).exp() * series_scaled_bessel(n, 2.0 * t);
        }
    }
    total
}

/// The walk with all rates at the origin removed (absorbing site 0).
pub fn trap_rates() -> RateField {
    RateField::homogeneous_unit()
        .with_defect(0, 0.0, 0.0)
        .unwrap()
}

/// Two-defect conservative test walk.
pub fn two_defect_rates() -> RateField {
    RateField::homogeneous_unit()
        .with_defect(0, 3.0, 2.0)
        .unwrap()
        .with_defect(4, 0.5, 0.5)
        .unwrap()
}

/// One accelerated jump rate at the origin.
pub fn single_defect_rates() -> RateField {
    RateField::homogeneous_unit()
        .with_defect(0, 2.0, 1.0)
        .unwrap()
}
