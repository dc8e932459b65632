//! Coordinate representations of walk generators and finite perturbations
//! on `l1(ℤ)`.
//!
//! The infinite lattice is handled as a banded analytic background (the
//! three walk diagonals built from constant rates) plus a finite sparse
//! correction map, so arbitrary sites stay reachable without any global
//! truncation. Entries that are exactly zero are dropped everywhere, which
//! keeps the perturbation support sets canonical.

use std::collections::{BTreeMap, BTreeSet};

use crate::{Error, Result};

/// Lattice position on `ℤ`.
pub type Site = i64;

/// Jump intensities `λ(x)` (to `x+1`) and `μ(x)` (to `x-1`): a constant
/// background plus a finite defect table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateField {
    background_lambda: f64,
    background_mu: f64,
    defects: BTreeMap<Site, (f64, f64)>,
}

impl RateField {
    pub fn new(background_lambda: f64, background_mu: f64) -> Result<Self> {
        check_rate("background_lambda", background_lambda)?;
        check_rate("background_mu", background_mu)?;
        Ok(Self {
            background_lambda,
            background_mu,
            defects: BTreeMap::new(),
        })
    }

    /// Homogeneous unit-rate walk, the base whose Green's function is known
    /// in closed form.
    pub fn homogeneous_unit() -> Self {
        Self::new(1.0, 1.0).expect("unit rates are valid")
    }

    pub fn with_defect(mut self, site: Site, lambda: f64, mu: f64) -> Result<Self> {
        check_rate("defect lambda", lambda)?;
        check_rate("defect mu", mu)?;
        if lambda == self.background_lambda && mu == self.background_mu {
            self.defects.remove(&site);
        } else {
            self.defects.insert(site, (lambda, mu));
        }
        Ok(self)
    }

    pub fn background_lambda(&self) -> f64 {
        self.background_lambda
    }

    pub fn background_mu(&self) -> f64 {
        self.background_mu
    }

    pub fn lambda(&self, x: Site) -> f64 {
        self.defects
            .get(&x)
            .map_or(self.background_lambda, |&(l, _)| l)
    }

    pub fn mu(&self, x: Site) -> f64 {
        self.defects
            .get(&x)
            .map_or(self.background_mu, |&(_, m)| m)
    }

    pub fn defects(&self) -> impl Iterator<Item = (Site, f64, f64)> + '_ {
        self.defects.iter().map(|(&s, &(l, m))| (s, l, m))
    }

    pub fn defect_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.defects.keys().copied()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn has_unit_background(&self) -> bool {
        self.background_lambda == 1.0 && self.background_mu == 1.0
    }

    /// Largest `|site|` among defects, or `None` when homogeneous.
    pub fn max_defect_radius(&self) -> Option<i64> {
        self.defects.keys().map(|s| s.abs()).max()
    }
}

fn check_rate(what: &'static str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::NegativeRate { what, value });
    }
    Ok(())
}

/// Constant three-diagonal background of a walk generator:
/// `A(x, x+1) = λ`, `A(x, x-1) = μ`, `A(x, x) = -λ-μ` for every `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkBackground {
    pub lambda: f64,
    pub mu: f64,
}

impl WalkBackground {
    fn entry(&self, x: Site, y: Site) -> f64 {
        match y - x {
            1 => self.lambda,
            -1 => self.mu,
            0 => -self.lambda - self.mu,
            _ => 0.0,
        }
    }

    fn column_abs_sum(&self) -> f64 {
        self.lambda.abs() + self.mu.abs() + (self.lambda + self.mu).abs()
    }
}

/// Sparse coordinate representation `A(x, y)` of a bounded operator on
/// `l1(ℤ)`: optional banded walk background plus finite corrections.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordOperator {
    background: Option<WalkBackground>,
    corrections: BTreeMap<(Site, Site), f64>,
}

impl CoordOperator {
    pub fn zero() -> Self {
        Self {
            background: None,
            corrections: BTreeMap::new(),
        }
    }

    /// Purely sparse operator from explicit entries (zeros dropped).
    pub fn from_entries<I: IntoIterator<Item = ((Site, Site), f64)>>(entries: I) -> Self {
        let corrections = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Self {
            background: None,
            corrections,
        }
    }

    pub fn background(&self) -> Option<WalkBackground> {
        self.background
    }

    pub fn corrections(&self) -> impl Iterator<Item = ((Site, Site), f64)> + '_ {
        self.corrections.iter().map(|(&k, &v)| (k, v))
    }

    /// Full entry value `A(x, y)` including the background band.
    pub fn entry(&self, x: Site, y: Site) -> f64 {
        let bg = self.background.map_or(0.0, |b| b.entry(x, y));
        bg + self.corrections.get(&(x, y)).copied().unwrap_or(0.0)
    }

    /// Row sum `Σ_y A(x, y)`; zero at every site for walk generators.
    pub fn row_sum(&self, x: Site) -> f64 {
        let mut cols: BTreeSet<Site> = [x - 1, x, x + 1].into_iter().collect();
        cols.extend(
            self.corrections
                .keys()
                .filter(|&&(r, _)| r == x)
                .map(|&(_, c)| c),
        );
        cols.into_iter().map(|y| self.entry(x, y)).sum()
    }

    /// Sites whose rows or columns carry a correction, plus the requested
    /// extras; used by callers that need a finite enumeration window.
    pub fn correction_sites(&self) -> BTreeSet<Site> {
        self.corrections
            .keys()
            .flat_map(|&(x, y)| [x, y])
            .collect()
    }
}

/// Walk generator for the given rates: `A(x, x+1) = λ(x)`,
/// `A(x, x-1) = μ(x)`, `A(x, x) = -λ(x) - μ(x)`.
pub fn build_walk_generator(rates: &RateField) -> CoordOperator {
    let background = WalkBackground {
        lambda: rates.background_lambda(),
        mu: rates.background_mu(),
    };
    let mut corrections = BTreeMap::new();
    for (site, lambda, mu) in rates.defects() {
        let dl = lambda - background.lambda;
        let dm = mu - background.mu;
        for (col, v) in [(site + 1, dl), (site - 1, dm), (site, -dl - dm)] {
            if v != 0.0 {
                corrections.insert((site, col), v);
            }
        }
    }
    CoordOperator {
        background: Some(background),
        corrections,
    }
}

/// `‖A‖ = sup_y Σ_x |A(x, y)|`, the operator norm on `l1`.
pub fn operator_norm(a: &CoordOperator) -> f64 {
    let background_col = a.background.map_or(0.0, |b| b.column_abs_sum());

    // Only columns touched by a correction can differ from the background.
    let touched: BTreeSet<Site> = a.corrections.keys().map(|&(_, y)| y).collect();
    let mut best = background_col;
    for y in touched {
        let mut rows: BTreeSet<Site> = [y - 1, y, y + 1].into_iter().collect();
        rows.extend(
            a.corrections
                .keys()
                .filter(|&&(_, c)| c == y)
                .map(|&(r, _)| r),
        );
        let col: f64 = rows.into_iter().map(|x| a.entry(x, y).abs()).sum();
        if col > best {
            best = col;
        }
    }
    best
}

/// Bounded finite-rank perturbation `D(x, y)` with its column support `Ξ1`
/// and row support `Ξ2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    entries: BTreeMap<(Site, Site), f64>,
    xi1: BTreeSet<Site>,
    xi2: BTreeSet<Site>,
}

impl Perturbation {
    pub fn from_entries<I: IntoIterator<Item = ((Site, Site), f64)>>(entries: I) -> Self {
        let entries: BTreeMap<(Site, Site), f64> =
            entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        let xi1 = entries.keys().map(|&(_, y)| y).collect();
        let xi2 = entries.keys().map(|&(x, _)| x).collect();
        Self { entries, xi1, xi2 }
    }

    pub fn empty() -> Self {
        Self::from_entries([])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, x: Site, y: Site) -> f64 {
        self.entries.get(&(x, y)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((Site, Site), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Column support `Ξ1 = {η : ∃ξ, D(ξ, η) ≠ 0}`.
    pub fn xi1(&self) -> &BTreeSet<Site> {
        &self.xi1
    }

    /// Row support `Ξ2 = {ξ : ∃η, D(ξ, η) ≠ 0}`.
    pub fn xi2(&self) -> &BTreeSet<Site> {
        &self.xi2
    }

    pub fn row_sum(&self, x: Site) -> f64 {
        self.entries
            .iter()
            .filter(|(&(r, _), _)| r == x)
            .map(|(_, &v)| v)
            .sum()
    }

    /// Whether every row of `D` sums to zero (perturbation between two
    /// conservative generators).
    pub fn is_conservative(&self) -> bool {
        self.xi2
            .iter()
            .all(|&x| self.row_sum(x).abs() < 1e-12)
    }

    /// `‖D‖ = sup_y Σ_x |D(x, y)|`.
    pub fn norm(&self) -> f64 {
        self.xi1
            .iter()
            .map(|&y| {
                self.entries
                    .iter()
                    .filter(|(&(_, c), _)| c == y)
                    .map(|(_, &v)| v.abs())
                    .sum()
            })
            .fold(0.0, f64::max)
    }

    /// As a background-free [`CoordOperator`].
    pub fn to_operator(&self) -> CoordOperator {
        CoordOperator::from_entries(self.entries())
    }
}

/// `D = A1 - A0`; defined only when the difference has finite support,
/// i.e. the banded backgrounds coincide.
pub fn perturbation_from(a1: &CoordOperator, a0: &CoordOperator) -> Result<Perturbation> {
    if a1.background != a0.background {
        return Err(Error::BackgroundMismatch);
    }
    let mut keys: BTreeSet<(Site, Site)> = a1.corrections.keys().copied().collect();
    keys.extend(a0.corrections.keys().copied());
    Ok(Perturbation::from_entries(keys.into_iter().map(|(x, y)| {
        (
            (x, y),
            a1.corrections.get(&(x, y)).copied().unwrap_or(0.0)
                - a0.corrections.get(&(x, y)).copied().unwrap_or(0.0),
        )
    })))
}

/// Finitely supported element of `l1(ℤ)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct L1Vector {
    coords: BTreeMap<Site, f64>,
}

impl L1Vector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn delta(site: Site) -> Self {
        let mut coords = BTreeMap::new();
        coords.insert(site, 1.0);
        Self { coords }
    }

    pub fn from_pairs<I: IntoIterator<Item = (Site, f64)>>(pairs: I) -> Self {
        let coords = pairs.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Self { coords }
    }

    pub fn get(&self, site: Site) -> f64 {
        self.coords.get(&site).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.coords.iter().map(|(&s, &v)| (s, v))
    }

    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.coords.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn norm1(&self) -> f64 {
        self.coords.values().map(|v| v.abs()).sum()
    }

    pub fn sum(&self) -> f64 {
        self.coords.values().sum()
    }
}

/// `(Aq)(x) = Σ_y A(x, y) q(y)`.
pub fn apply(a: &CoordOperator, q: &L1Vector) -> L1Vector {
    let mut rows: BTreeSet<Site> = BTreeSet::new();
    if a.background.is_some() {
        for (y, _) in q.iter() {
            rows.extend([y - 1, y, y + 1]);
        }
    }
    rows.extend(a.corrections.keys().map(|&(x, _)| x));
    L1Vector::from_pairs(
        rows.into_iter()
            .map(|x| (x, q.iter().map(|(y, v)| a.entry(x, y) * v).sum())),
    )
}

/// Adjoint action `(pA)(y) = Σ_x p(x) A(x, y)`.
pub fn apply_adjoint(p: &L1Vector, a: &CoordOperator) -> L1Vector {
    let mut cols: BTreeSet<Site> = BTreeSet::new();
    if a.background.is_some() {
        for (x, _) in p.iter() {
            cols.extend([x - 1, x, x + 1]);
        }
    }
    cols.extend(a.corrections.keys().map(|&(_, y)| y));
    L1Vector::from_pairs(
        cols.into_iter()
            .map(|y| (y, p.iter().map(|(x, v)| v * a.entry(x, y)).sum())),
    )
}
