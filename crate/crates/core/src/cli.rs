//! Batch front door: parse a walk specification, dispatch a computation and
//! emit machine-readable results (a CSV table plus a JSON run summary).
//!
//! Outputs are deterministic: fixed target/time iteration order, fixed
//! reduction order inside every solver, floats printed with 17 significant
//! digits so a round-trip through the CSV is lossless.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coord_ops::{
    build_walk_generator, perturbation_from, L1Vector, Perturbation, RateField, Site,
};
use crate::laplace::{self, InversionMethod, InversionScheme};
use crate::oracle;
use crate::volterra::{self, HomogeneousGreen, TimeGrid};
use crate::{convergence, Error, Result};

/// Which computation methods a `compare` run includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Volterra,
    Laplace,
    Oracle,
    #[default]
    All,
}

/// One defect row in the walk specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectSpec {
    pub site: Site,
    pub lambda: f64,
    pub mu: f64,
}

fn default_background() -> f64 {
    1.0
}
fn default_t_max() -> f64 {
    2.0
}
fn default_h() -> f64 {
    0.01
}
fn default_window() -> i64 {
    60
}
fn default_scheme() -> String {
    "talbot".into()
}
fn default_talbot_m() -> usize {
    32
}
fn default_gs_m() -> usize {
    12
}
fn default_oracle_tol() -> f64 {
    1e-10
}
fn default_compare_tol() -> f64 {
    1e-3
}
fn default_radii() -> Vec<i64> {
    vec![0, 1, 4]
}
fn default_bessel_n_max() -> usize {
    16
}
fn default_bessel_x() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

/// Full run configuration; every field has a default so a walk file only
/// needs to spell out what it changes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_background")]
    pub background_lambda: f64,
    #[serde(default = "default_background")]
    pub background_mu: f64,
    #[serde(default)]
    pub defects: Vec<DefectSpec>,

    /// Time horizon of the run.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Time-grid step for the Volterra solver.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Requested `(x, y)` pairs.
    #[serde(default)]
    pub targets: Vec<(Site, Site)>,
    /// Evaluation times for pointwise methods; default: ten grid nodes
    /// evenly spread over `(0, t_max]`. Times must lie on the grid.
    #[serde(default)]
    pub times: Option<Vec<f64>>,

    /// Truncation window radius for the oracle and the `l1` window of the
    /// convergence study.
    #[serde(default = "default_window")]
    pub window: i64,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,

    /// Inversion scheme name: "talbot" or "gaver-stehfest".
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_talbot_m")]
    pub talbot_m: usize,
    #[serde(default = "default_gs_m")]
    pub gaver_stehfest_m: usize,

    /// Method filter for `compare`.
    #[serde(default)]
    pub method: Method,
    /// Pairwise agreement threshold for the `compare` pass flag.
    #[serde(default = "default_compare_tol")]
    pub compare_tol: f64,

    /// Truncation radii for `convergence`.
    #[serde(default = "default_radii")]
    pub radii: Vec<i64>,
    /// Initial condition site (`q0 = δ_site`) for `convergence`.
    #[serde(default)]
    pub q0_site: Site,

    /// Diagnostic table parameters for `bessel`.
    #[serde(default = "default_bessel_n_max")]
    pub bessel_n_max: usize,
    #[serde(default = "default_bessel_x")]
    pub bessel_x: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: Self = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::InvalidConfig(format!("h must be positive, got {}", self.h)));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig(format!(
                "window must be at least 1, got {}",
                self.window
            )));
        }
        self.rate_field()?;
        self.scheme()?;
        Ok(())
    }

    pub fn rate_field(&self) -> Result<RateField> {
        let mut rates = RateField::new(self.background_lambda, self.background_mu)?;
        for d in &self.defects {
            rates = rates.with_defect(d.site, d.lambda, d.mu)?;
        }
        Ok(rates)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::covering(self.t_max, self.h)
    }

    pub fn scheme(&self) -> Result<InversionScheme> {
        match self.scheme.as_str() {
            "talbot" => InversionScheme::new(InversionMethod::Talbot, self.talbot_m),
            "gaver-stehfest" => {
                InversionScheme::new(InversionMethod::GaverStehfest, self.gaver_stehfest_m)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown inversion scheme '{other}' (expected 'talbot' or 'gaver-stehfest')"
            ))),
        }
    }

    /// Perturbation of the walk relative to its homogeneous background.
    pub fn perturbation(&self) -> Result<Perturbation> {
        let rates = self.rate_field()?;
        let a = build_walk_generator(&rates);
        let a0 = build_walk_generator(&RateField::new(
            self.background_lambda,
            self.background_mu,
        )?);
        perturbation_from(&a, &a0)
    }

    fn require_unit_background(&self) -> Result<()> {
        if self.background_lambda != 1.0 || self.background_mu != 1.0 {
            return Err(Error::UnsupportedBase {
                lambda: self.background_lambda,
                mu: self.background_mu,
            });
        }
        Ok(())
    }

    fn require_targets(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::InvalidConfig(
                "targets must list at least one (x, y) pair".into(),
            ));
        }
        Ok(())
    }

    /// Evaluation nodes `(k, t_k)` for pointwise methods, `t > 0`.
    pub fn eval_nodes(&self, grid: &TimeGrid) -> Result<Vec<(usize, f64)>> {
        match &self.times {
            Some(times) => times
                .iter()
                .map(|&t| {
                    let k = grid.node_index(t).ok_or_else(|| {
                        Error::InvalidConfig(format!("time {t} does not lie on the grid"))
                    })?;
                    if k == 0 {
                        return Err(Error::InvalidConfig(
                            "evaluation times must be positive".into(),
                        ));
                    }
                    Ok((k, grid.node(k)))
                })
                .collect(),
            None => {
                let stride = (grid.steps() / 10).max(1);
                Ok((1..=grid.steps())
                    .filter(|k| k % stride == 0 || *k == grid.steps())
                    .map(|k| (k, grid.node(k)))
                    .collect())
            }
        }
    }
}

/// CLI command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Laplace,
    Oracle,
    Compare,
    Convergence,
    Bessel,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Laplace => "laplace",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
            Command::Convergence => "convergence",
            Command::Bessel => "bessel",
        }
    }
}

/// JSON run summary written next to the CSV.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config: RunConfig,
    pub csv: String,
    pub rows: usize,
    /// Max pairwise discrepancy across methods (`compare` only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub wall_time_ms: f64,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

struct GreenRows {
    lines: Vec<String>,
}

impl GreenRows {
    fn new() -> Self {
        Self {
            lines: vec!["t,x,y,value,method".to_string()],
        }
    }

    fn push(&mut self, t: f64, x: Site, y: Site, value: f64, method: &str) {
        self.lines
            .push(format!("{},{x},{y},{},{method}", fmt(t), fmt(value)));
    }

    fn write(&self, path: &Path) -> Result<usize> {
        let mut file = fs::File::create(path)?;
        for line in &self.lines {
            writeln!(file, "{line}")?;
        }
        Ok(self.lines.len() - 1)
    }
}

fn oracle_radius(config: &RunConfig) -> i64 {
    let target_extent = config
        .targets
        .iter()
        .flat_map(|&(x, y)| [x.abs(), y.abs()])
        .max()
        .unwrap_or(0);
    config.window.max(2 * target_extent + 4)
}

/// Runs one command, writing `<command>.csv` and `summary.json` under
/// `out_dir`.
pub fn run(command: Command, config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let csv_path = out_dir.join(format!("{}.csv", command.name()));

    let mut max_discrepancy = None;
    let mut pass = None;
    let rows = match command {
        Command::Solve => run_solve(config, &csv_path)?,
        Command::Laplace => run_laplace(config, &csv_path)?,
        Command::Oracle => run_oracle(config, &csv_path)?,
        Command::Compare => {
            let (n, disc) = run_compare(config, &csv_path)?;
            max_discrepancy = Some(disc);
            pass = Some(disc <= config.compare_tol);
            n
        }
        Command::Convergence => run_convergence(config, &csv_path)?,
        Command::Bessel => run_bessel(config, &csv_path)?,
    };

    let summary = RunSummary {
        command: command.name().to_string(),
        config: config.clone(),
        csv: csv_path.to_string_lossy().into_owned(),
        rows,
        max_discrepancy,
        pass,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(out_dir.join("summary.json"), json)?;
    Ok(summary)
}

fn run_solve(config: &RunConfig, csv_path: &Path) -> Result<usize> {
    config.require_unit_background()?;
    config.require_targets()?;
    let grid = config.grid()?;
    let d = config.perturbation()?;
    let backward = volterra::solve_backward(&HomogeneousGreen, &d, &config.targets, &grid)?;
    let forward = volterra::solve_forward(&HomogeneousGreen, &d, &config.targets, &grid)?;

    let mut rows = GreenRows::new();
    for (p, &(x, y)) in config.targets.iter().enumerate() {
        for k in 0..grid.len() {
            rows.push(grid.node(k), x, y, backward.value(p, k), "volterra-backward");
        }
        for k in 0..grid.len() {
            rows.push(grid.node(k), x, y, forward.value(p, k), "volterra-forward");
        }
    }
    rows.write(csv_path)
}

fn run_laplace(config: &RunConfig, csv_path: &Path) -> Result<usize> {
    config.require_unit_background()?;
    config.require_targets()?;
    let grid = config.grid()?;
    let d = config.perturbation()?;
    let scheme = config.scheme()?;

    let mut rows = GreenRows::new();
    for (_, t) in config.eval_nodes(&grid)? {
        let values = laplace::greens_exact_many(&d, &config.targets, t, scheme)?;
        for (&(x, y), v) in config.targets.iter().zip(values) {
            rows.push(t, x, y, v, "laplace");
        }
    }
    rows.write(csv_path)
}

fn run_oracle(config: &RunConfig, csv_path: &Path) -> Result<usize> {
    config.require_targets()?;
    let grid = config.grid()?;
    let rates = config.rate_field()?;
    let radius = oracle_radius(config);

    let mut rows = GreenRows::new();
    for (_, t) in config.eval_nodes(&grid)? {
        for &(x, y) in &config.targets {
            let est = oracle::oracle_green(&rates, x, y, t, radius, config.oracle_tol)?;
            rows.push(t, x, y, est.value, "oracle");
        }
    }
    rows.write(csv_path)
}

fn run_compare(config: &RunConfig, csv_path: &Path) -> Result<(usize, f64)> {
    config.require_unit_background()?;
    config.require_targets()?;
    let grid = config.grid()?;
    let rates = config.rate_field()?;
    let d = config.perturbation()?;
    let scheme = config.scheme()?;
    let nodes = config.eval_nodes(&grid)?;
    let radius = oracle_radius(config);
    let with = |m: Method| config.method == Method::All || config.method == m;

    // values[method][node][pair]
    let mut tables: Vec<(&str, Vec<Vec<f64>>)> = Vec::new();
    if with(Method::Volterra) {
        let path = volterra::solve_backward(&HomogeneousGreen, &d, &config.targets, &grid)?;
        let table = nodes
            .iter()
            .map(|&(k, _)| (0..config.targets.len()).map(|p| path.value(p, k)).collect())
            .collect();
        tables.push(("volterra", table));
    }
    if with(Method::Laplace) {
        let table = nodes
            .iter()
            .map(|&(_, t)| laplace::greens_exact_many(&d, &config.targets, t, scheme))
            .collect::<Result<_>>()?;
        tables.push(("laplace", table));
    }
    if with(Method::Oracle) {
        let table = nodes
            .iter()
            .map(|&(_, t)| {
                config
                    .targets
                    .iter()
                    .map(|&(x, y)| {
                        oracle::oracle_green(&rates, x, y, t, radius, config.oracle_tol)
                            .map(|e| e.value)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        tables.push(("oracle", table));
    }

    let mut rows = GreenRows::new();
    for (method, table) in &tables {
        for (row, &(_, t)) in table.iter().zip(&nodes) {
            for (&(x, y), &v) in config.targets.iter().zip(row) {
                rows.push(t, x, y, v, method);
            }
        }
    }

    let mut disc: f64 = 0.0;
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            for (ri, rj) in tables[i].1.iter().zip(&tables[j].1) {
                for (a, b) in ri.iter().zip(rj) {
                    disc = disc.max((a - b).abs());
                }
            }
        }
    }
    let n = rows.write(csv_path)?;
    Ok((n, disc))
}

fn run_convergence(config: &RunConfig, csv_path: &Path) -> Result<usize> {
    config.require_unit_background()?;
    let grid = config.grid()?;
    let rates = config.rate_field()?;
    let report = convergence::convergence_study(
        &rates,
        &L1Vector::delta(config.q0_site),
        &grid,
        &config.radii,
        config.window,
        config.window + 16,
        config.oracle_tol,
    )?;

    let mut file = fs::File::create(csv_path)?;
    writeln!(
        file,
        "radius,bn_norm,measured_error,error_bound,w_n,gronwall_printed,gronwall_time_scaled"
    )?;
    for row in &report.rows {
        writeln!(
            file,
            "{},{},{},{},{},{},{}",
            row.radius,
            fmt(row.bn_norm),
            fmt(row.measured_error),
            fmt(row.error_bound),
            fmt(row.w_n),
            fmt(row.gronwall_printed),
            fmt(row.gronwall_time_scaled)
        )?;
    }
    Ok(report.rows.len())
}

fn run_bessel(config: &RunConfig, csv_path: &Path) -> Result<usize> {
    let mut file = fs::File::create(csv_path)?;
    writeln!(file, "n,x,value")?;
    let mut rows = 0;
    for &x in &config.bessel_x {
        if !(x >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bessel arguments must be nonnegative, got {x}"
            )));
        }
        let table = crate::bessel::ScaledBesselTable::build(config.bessel_n_max, x);
        for n in 0..=config.bessel_n_max {
            writeln!(file, "{n},{},{}", fmt(x), fmt(table.value(n)))?;
            rows += 1;
        }
    }
    Ok(rows)
}
