//! Time-domain solution of the coordinate perturbation equations.
//!
//! With `D = A' - A` of finite support, the perturbed Green's function
//! solves the convolution equations
//!
//! ```text
//! G'(x,y) = G(x,y) + Σ_ξ  F(x,ξ) ∗ G'(ξ,y),   F(x,y) = Σ_η G(x,η) D(η,y)
//! G'(x,y) = G(x,y) + Σ_η G'(x,η) ∗ H(η,y),    H(x,y) = Σ_ξ D(x,ξ) G(ξ,y)
//! ```
//!
//! Restricting the first to `x ∈ Ξ1` (column support of `D`) and the second
//! to `y ∈ Ξ2` (row support) closes them into finite Volterra systems of the
//! second kind, one per requested `y` (resp. `x`). They are stepped with the
//! product trapezoidal rule, implicit only in the newest sample; the implicit
//! matrix `I - (h/2) D_restricted` is factorized once per solve. The known
//! restricted solution then yields `G'(x,y)` at arbitrary sites through one
//! extra convolution pass.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

use crate::bessel;
use crate::coord_ops::{Perturbation, Site};
use crate::{Error, Result};

/// Uniform time grid `t_k = k h`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    h: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(h: f64, steps: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {h}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        Ok(Self { h, steps })
    }

    /// Grid covering `[0, t_max]` with step at most `h`.
    pub fn covering(t_max: f64, h: f64) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {t_max}"
            )));
        }
        let steps = (t_max / h).ceil().max(1.0) as usize;
        Self::new(t_max / steps as f64, steps)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn t_max(&self) -> f64 {
        self.node(self.steps)
    }

    /// Nearest node index, if `t` lies on the grid (within roundoff).
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let k = (t / self.h).round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        ((t - self.node(k)).abs() <= 1e-9 * (1.0 + t.abs())).then_some(k)
    }
}

/// A base Green's function the solver can sample.
///
/// The closed-form homogeneous walk implements it analytically; a previously
/// computed [`GreenPath`] implements it on its own grid, which is what the
/// incremental (step-by-step) perturbation mode uses.
pub trait GreenSource {
    fn green(&self, x: Site, y: Site, t: f64) -> f64;
}

/// `G_0(x,y,t) = e^{-2t} I_{|x-y|}(2t)`, the homogeneous unit-rate walk.
#[derive(Debug, Clone, Copy, Default)]
pub struct HomogeneousGreen;

impl GreenSource for HomogeneousGreen {
    fn green(&self, x: Site, y: Site, t: f64) -> f64 {
        bessel::g0(x, y, t)
    }
}

/// Green's function values on a time grid for a fixed set of site pairs.
#[derive(Debug, Clone)]
pub struct GreenPath {
    grid: TimeGrid,
    pairs: Vec<(Site, Site)>,
    /// `values[p][k]` = value for `pairs[p]` at node `t_k`.
    values: Vec<Vec<f64>>,
    index: HashMap<(Site, Site), usize>,
}

impl GreenPath {
    fn new(grid: TimeGrid, pairs: Vec<(Site, Site)>, values: Vec<Vec<f64>>) -> Self {
        let index = pairs
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        Self {
            grid,
            pairs,
            values,
            index,
        }
    }

    /// Samples a source directly (no perturbation).
    pub fn sample(
        source: &dyn GreenSource,
        targets: &[(Site, Site)],
        grid: &TimeGrid,
    ) -> Self {
        let values = targets
            .iter()
            .map(|&(x, y)| (0..grid.len()).map(|k| source.green(x, y, grid.node(k))).collect())
            .collect();
        Self::new(grid.clone(), targets.to_vec(), values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn pairs(&self) -> &[(Site, Site)] {
        &self.pairs
    }

    pub fn value(&self, pair: usize, k: usize) -> f64 {
        self.values[pair][k]
    }

    pub fn value_at(&self, x: Site, y: Site, k: usize) -> Option<f64> {
        self.index.get(&(x, y)).map(|&p| self.values[p][k])
    }

    pub fn series(&self, x: Site, y: Site) -> Option<&[f64]> {
        self.index.get(&(x, y)).map(|&p| self.values[p].as_slice())
    }
}

impl GreenSource for GreenPath {
    /// Panics if `(x, y)` was not requested or `t` is off-grid; paths are
    /// only ever used as sources over their own sampled pairs and nodes.
    fn green(&self, x: Site, y: Site, t: f64) -> f64 {
        let k = self
            .grid
            .node_index(t)
            .unwrap_or_else(|| panic!("t = {t} is not a node of the sampled grid"));
        self.value_at(x, y, k)
            .unwrap_or_else(|| panic!("pair ({x}, {y}) not present in the sampled Green path"))
    }
}

/// Matrix-valued convolution kernel (`F` or `H`) sampled on a grid.
#[derive(Debug, Clone)]
pub struct KernelPath {
    rows: Vec<Site>,
    cols: Vec<Site>,
    /// `samples[k][(i, j)]` = kernel value at `(rows[i], cols[j], t_k)`.
    samples: Vec<DMatrix<f64>>,
}

impl KernelPath {
    pub fn rows(&self) -> &[Site] {
        &self.rows
    }

    pub fn cols(&self) -> &[Site] {
        &self.cols
    }

    pub fn sample(&self, k: usize) -> &DMatrix<f64> {
        &self.samples[k]
    }
}

fn sorted_union(a: impl IntoIterator<Item = Site>, b: impl IntoIterator<Item = Site>) -> Vec<Site> {
    let set: BTreeSet<Site> = a.into_iter().chain(b).collect();
    set.into_iter().collect()
}

/// `F(x, y, t) = Σ_{η ∈ Ξ2} G(x, η, t) D(η, y)` for `x` over `rows ∪ Ξ1`
/// and `y` over `Ξ1`. At `t = 0` this is the restriction of `D` itself.
pub fn kernel_f(
    green0: &dyn GreenSource,
    d: &Perturbation,
    rows: &[Site],
    grid: &TimeGrid,
) -> KernelPath {
    let cols: Vec<Site> = d.xi1().iter().copied().collect();
    let rows = sorted_union(rows.iter().copied(), d.xi1().iter().copied());
    let xi2: Vec<Site> = d.xi2().iter().copied().collect();
    let samples = (0..grid.len())
        .map(|k| {
            let t = grid.node(k);
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                xi2.iter()
                    .map(|&eta| green0.green(rows[i], eta, t) * d.entry(eta, cols[j]))
                    .sum()
            })
        })
        .collect();
    KernelPath { rows, cols, samples }
}

/// `H(x, y, t) = Σ_{ξ ∈ Ξ1} D(x, ξ) G(ξ, y, t)` for `x` over `Ξ2` and `y`
/// over `cols ∪ Ξ2`.
pub fn kernel_h(
    d: &Perturbation,
    green0: &dyn GreenSource,
    cols: &[Site],
    grid: &TimeGrid,
) -> KernelPath {
    let rows: Vec<Site> = d.xi2().iter().copied().collect();
    let cols = sorted_union(cols.iter().copied(), d.xi2().iter().copied());
    let xi1: Vec<Site> = d.xi1().iter().copied().collect();
    let samples = (0..grid.len())
        .map(|k| {
            let t = grid.node(k);
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                xi1.iter()
                    .map(|&xi| d.entry(rows[i], xi) * green0.green(xi, cols[j], t))
                    .sum()
            })
        })
        .collect();
    KernelPath { rows, cols, samples }
}

fn position_map(sites: &[Site]) -> HashMap<Site, usize> {
    sites.iter().enumerate().map(|(i, &s)| (s, i)).collect()
}

fn distinct_seconds(targets: &[(Site, Site)]) -> Vec<Site> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &(_, y) in targets {
        if seen.insert(y) {
            out.push(y);
        }
    }
    out
}

fn distinct_firsts(targets: &[(Site, Site)]) -> Vec<Site> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &(x, _) in targets {
        if seen.insert(x) {
            out.push(x);
        }
    }
    out
}

/// Solves the backward-restricted system (`x ∈ Ξ1`, one system per
/// requested `y`) and extends to all requested pairs.
pub fn solve_backward(
    green0: &dyn GreenSource,
    d: &Perturbation,
    targets: &[(Site, Site)],
    grid: &TimeGrid,
) -> Result<GreenPath> {
    if d.is_empty() {
        return Ok(GreenPath::sample(green0, targets, grid));
    }
    let h = grid.h();
    let n_nodes = grid.len();
    let xs: Vec<Site> = distinct_firsts(targets);
    let kernel = kernel_f(green0, d, &xs, grid);
    let xi1: Vec<Site> = kernel.cols().to_vec();
    let m = xi1.len();
    let row_pos = position_map(kernel.rows());
    let xi1_rows: Vec<usize> = xi1.iter().map(|s| row_pos[s]).collect();

    // Kernel restricted to the Ξ1 × Ξ1 square, per node.
    let f_sub: Vec<DMatrix<f64>> = (0..n_nodes)
        .map(|k| {
            let full = kernel.sample(k);
            DMatrix::from_fn(m, m, |i, j| full[(xi1_rows[i], j)])
        })
        .collect();

    let implicit = DMatrix::identity(m, m) - &f_sub[0] * (h / 2.0);
    let lu = implicit.lu();

    let mut values = vec![vec![0.0; n_nodes]; targets.len()];
    for y in distinct_seconds(targets) {
        // Restricted right side: base Green's function on Ξ1 × {y}.
        let base: Vec<DVector<f64>> = (0..n_nodes)
            .map(|k| DVector::from_fn(m, |i, _| green0.green(xi1[i], y, grid.node(k))))
            .collect();

        let mut u: Vec<DVector<f64>> = Vec::with_capacity(n_nodes);
        u.push(base[0].clone());
        for k in 1..n_nodes {
            let mut rhs = base[k].clone();
            rhs += &f_sub[k] * &u[0] * (h / 2.0);
            for j in 1..k {
                rhs += &f_sub[k - j] * &u[j] * h;
            }
            let sol = lu
                .solve(&rhs)
                .ok_or(Error::SingularImplicitSystem { h })?;
            u.push(sol);
        }

        for (p, &(x, ty)) in targets.iter().enumerate() {
            if ty != y {
                continue;
            }
            if let Some(i) = xi1.iter().position(|&s| s == x) {
                for k in 0..n_nodes {
                    values[p][k] = u[k][i];
                }
            } else {
                let r = row_pos[&x];
                values[p][0] = green0.green(x, y, 0.0);
                for k in 1..n_nodes {
                    let mut acc = 0.0;
                    for j in 0..=k {
                        let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                        let fk = kernel.sample(k - j);
                        let mut dot = 0.0;
                        for c in 0..m {
                            dot += fk[(r, c)] * u[j][c];
                        }
                        acc += w * dot;
                    }
                    values[p][k] = green0.green(x, y, grid.node(k)) + h * acc;
                }
            }
        }
    }
    Ok(GreenPath::new(grid.clone(), targets.to_vec(), values))
}

/// Solves the forward-restricted system (`y ∈ Ξ2`, one system per
/// requested `x`) and extends to all requested pairs.
pub fn solve_forward(
    green0: &dyn GreenSource,
    d: &Perturbation,
    targets: &[(Site, Site)],
    grid: &TimeGrid,
) -> Result<GreenPath> {
    if d.is_empty() {
        return Ok(GreenPath::sample(green0, targets, grid));
    }
    let h = grid.h();
    let n_nodes = grid.len();
    let ys: Vec<Site> = distinct_seconds(targets);
    let kernel = kernel_h(d, green0, &ys, grid);
    let xi2: Vec<Site> = kernel.rows().to_vec();
    let m = xi2.len();
    let col_pos = position_map(kernel.cols());
    let xi2_cols: Vec<usize> = xi2.iter().map(|s| col_pos[s]).collect();

    // Kernel restricted to Ξ2 × Ξ2; the implicit matrix acts from the left
    // on the unknown row vector, hence the transpose.
    let h_sub: Vec<DMatrix<f64>> = (0..n_nodes)
        .map(|k| {
            let full = kernel.sample(k);
            DMatrix::from_fn(m, m, |i, j| full[(i, xi2_cols[j])])
        })
        .collect();

    let implicit = DMatrix::identity(m, m) - h_sub[0].transpose() * (h / 2.0);
    let lu = implicit.lu();

    let mut values = vec![vec![0.0; n_nodes]; targets.len()];
    for x in distinct_firsts(targets) {
        let base: Vec<DVector<f64>> = (0..n_nodes)
            .map(|k| DVector::from_fn(m, |i, _| green0.green(x, xi2[i], grid.node(k))))
            .collect();

        let mut v: Vec<DVector<f64>> = Vec::with_capacity(n_nodes);
        v.push(base[0].clone());
        for k in 1..n_nodes {
            let mut rhs = base[k].clone();
            rhs += h_sub[k].transpose() * &v[0] * (h / 2.0);
            for j in 1..k {
                rhs += h_sub[k - j].transpose() * &v[j] * h;
            }
            let sol = lu
                .solve(&rhs)
                .ok_or(Error::SingularImplicitSystem { h })?;
            v.push(sol);
        }

        for (p, &(tx, y)) in targets.iter().enumerate() {
            if tx != x {
                continue;
            }
            if let Some(i) = xi2.iter().position(|&s| s == y) {
                for k in 0..n_nodes {
                    values[p][k] = v[k][i];
                }
            } else {
                let c = col_pos[&y];
                values[p][0] = green0.green(x, y, 0.0);
                for k in 1..n_nodes {
                    let mut acc = 0.0;
                    for j in 0..=k {
                        let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                        let hk = kernel.sample(k - j);
                        let mut dot = 0.0;
                        for r in 0..m {
                            dot += v[j][r] * hk[(r, c)];
                        }
                        acc += w * dot;
                    }
                    values[p][k] = green0.green(x, y, grid.node(k)) + h * acc;
                }
            }
        }
    }
    Ok(GreenPath::new(grid.clone(), targets.to_vec(), values))
}

/// `m`-th Picard iterate of the backward equation,
/// `G'^{(j+1)} = G + F ∗ G'^{(j)}`, starting from `G'^{(0)} = G`.
pub fn picard_iterate(
    green0: &dyn GreenSource,
    d: &Perturbation,
    targets: &[(Site, Site)],
    grid: &TimeGrid,
    iterations: usize,
) -> Result<GreenPath> {
    if d.is_empty() || iterations == 0 {
        return Ok(GreenPath::sample(green0, targets, grid));
    }
    let h = grid.h();
    let n_nodes = grid.len();
    let xs: Vec<Site> = distinct_firsts(targets);
    let kernel = kernel_f(green0, d, &xs, grid);
    let xi1: Vec<Site> = kernel.cols().to_vec();
    let m = xi1.len();
    let row_pos = position_map(kernel.rows());
    let xi1_rows: Vec<usize> = xi1.iter().map(|s| row_pos[s]).collect();
    let f_sub: Vec<DMatrix<f64>> = (0..n_nodes)
        .map(|k| {
            let full = kernel.sample(k);
            DMatrix::from_fn(m, m, |i, j| full[(xi1_rows[i], j)])
        })
        .collect();

    let mut values = vec![vec![0.0; n_nodes]; targets.len()];
    for y in distinct_seconds(targets) {
        let base: Vec<DVector<f64>> = (0..n_nodes)
            .map(|k| DVector::from_fn(m, |i, _| green0.green(xi1[i], y, grid.node(k))))
            .collect();

        // u holds G'^{(j)} restricted to Ξ1; run the map iterations-1 times
        // so that the final extension pass below applies it once more.
        let mut u: Vec<DVector<f64>> = base.clone();
        for _ in 0..iterations - 1 {
            let mut next: Vec<DVector<f64>> = Vec::with_capacity(n_nodes);
            next.push(base[0].clone());
            for k in 1..n_nodes {
                let mut acc = base[k].clone();
                for j in 0..=k {
                    let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                    acc += &f_sub[k - j] * &u[j] * (h * w);
                }
                next.push(acc);
            }
            u = next;
        }

        for (p, &(x, ty)) in targets.iter().enumerate() {
            if ty != y {
                continue;
            }
            let r = row_pos[&x];
            values[p][0] = green0.green(x, y, 0.0);
            for k in 1..n_nodes {
                let mut acc = 0.0;
                for j in 0..=k {
                    let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                    let fk = kernel.sample(k - j);
                    let mut dot = 0.0;
                    for c in 0..m {
                        dot += fk[(r, c)] * u[j][c];
                    }
                    acc += w * dot;
                }
                values[p][k] = green0.green(x, y, grid.node(k)) + h * acc;
            }
        }
    }
    Ok(GreenPath::new(grid.clone(), targets.to_vec(), values))
}

/// Which exponent the a-priori norm bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GronwallVariant {
    /// `W e^{‖B‖ W}` — the bound exactly as printed.
    AsPrinted,
    /// `W e^{‖B‖ W t}` — the variant with the elapsed time in the exponent.
    TimeScaled,
}

/// A-priori bound on the perturbed semigroup norm `W_n(t)`.
pub fn gronwall_bound(norm_b: f64, w: f64, t: f64, variant: GronwallVariant) -> f64 {
    assert!(norm_b >= 0.0 && w >= 0.0 && t >= 0.0);
    match variant {
        GronwallVariant::AsPrinted => w * (norm_b * w).exp(),
        GronwallVariant::TimeScaled => w * (norm_b * w * t).exp(),
    }
}
