//! Monte-Carlo recovery sweeps over two instance parameters.
//!
//! Every cell `(i, j)` of a grid runs `trials` planted instances through
//! [`solve_rpca`] and counts how many are recovered. Trial `t` of cell
//! `(i, j)` is seeded with [`trial_seed`]`(base_seed, i, j, t)`, trials run on
//! a rayon pool, and results are folded in `(i, j, t)` order, so a grid is
//! reproducible bit for bit whatever the thread count.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{gen_planted, InstanceParams};
use crate::linalg::DenseMatrix;
use crate::rng::trial_seed;
use crate::solver::{
    relative_error, solve_quasi_clique, solve_rpca, DecompositionResult, QuasiCliqueParams,
    SolverError, SolverOptions, RECOVERY_TOL,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid grid: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
    #[error("malformed grid CSV: {0}")]
    Csv(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Instance parameter an axis sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    N,
    NC,
    /// `n_c / n`, rounded to the nearest integer `n_c ≥ 1`.
    Fraction,
    Gamma,
    Rho,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::N => "n",
            Param::NC => "n_c",
            Param::Fraction => "fraction",
            Param::Gamma => "gamma",
            Param::Rho => "rho",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" => Ok(Param::N),
            "n_c" | "nc" => Ok(Param::NC),
            "fraction" => Ok(Param::Fraction),
            "gamma" => Ok(Param::Gamma),
            "rho" => Ok(Param::Rho),
            other => Err(HarnessError::Spec(format!("unknown axis parameter {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: Param, values: Vec<f64>) -> Self {
        Axis { param, values }
    }
}

/// Values for the parameters not swept by either axis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub n: Option<usize>,
    pub n_c: Option<usize>,
    pub gamma: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: FixedParams,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// `{lo, lo + step, …, hi}` built as `k·step` to avoid accumulated drift.
fn tenths(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| k as f64 / 10.0).collect()
}

impl GridSpec {
    /// Graph size against block fraction: `n ∈ {25, 50, …, n_max}`,
    /// fraction `∈ {0.1, …, 1.0}`, `γ = 0.85`, `ρ = 0.25`.
    pub fn size_grid(n_max: usize, trials: usize, base_seed: u64) -> Self {
        GridSpec {
            axis1: Axis::new(
                Param::N,
                (1..=n_max / 25).map(|k| (25 * k) as f64).collect(),
            ),
            axis2: Axis::new(Param::Fraction, tenths(1, 10)),
            fixed: FixedParams {
                gamma: Some(0.85),
                rho: Some(0.25),
                ..Default::default()
            },
            trials,
            base_seed,
            solver: SolverOptions::default(),
        }
    }

    /// Block density against noise level: `γ ∈ {0.5, …, 1.0}`,
    /// `ρ ∈ {0.0, …, 0.7}` at fixed `(n, n_c)`.
    pub fn phase_grid(n: usize, n_c: usize, trials: usize, base_seed: u64) -> Self {
        GridSpec {
            axis1: Axis::new(Param::Gamma, tenths(5, 10)),
            axis2: Axis::new(Param::Rho, tenths(0, 7)),
            fixed: FixedParams {
                n: Some(n),
                n_c: Some(n_c),
                ..Default::default()
            },
            trials,
            base_seed,
            solver: SolverOptions::default(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.values.len())
    }

    /// Instance parameters of cell `(i, j)` with the given seed.
    pub fn cell_params(&self, i: usize, j: usize, seed: u64) -> Result<InstanceParams, HarnessError> {
        let mut n = self.fixed.n;
        let mut n_c = self.fixed.n_c;
        let mut fraction = None;
        let mut gamma = self.fixed.gamma;
        let mut rho = self.fixed.rho;
        for (axis, k) in [(&self.axis1, i), (&self.axis2, j)] {
            let v = *axis
                .values
                .get(k)
                .ok_or_else(|| HarnessError::Spec(format!("index {k} outside axis {}", axis.param)))?;
            let as_count = |v: f64| -> Result<usize, HarnessError> {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(HarnessError::Spec(format!("{} = {v} is not a positive integer", axis.param)))
                }
            };
            match axis.param {
                Param::N => n = Some(as_count(v)?),
                Param::NC => n_c = Some(as_count(v)?),
                Param::Fraction => fraction = Some(v),
                Param::Gamma => gamma = Some(v),
                Param::Rho => rho = Some(v),
            }
        }
        let missing = |name: &str| HarnessError::Spec(format!("no value for {name}"));
        let n = n.ok_or_else(|| missing("n"))?;
        let n_c = match fraction {
            Some(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(HarnessError::Spec(format!("fraction = {f} outside (0, 1]")));
                }
                ((f * n as f64).round() as usize).max(1)
            }
            None => n_c.ok_or_else(|| missing("n_c"))?,
        };
        let gamma = gamma.ok_or_else(|| missing("gamma"))?;
        let rho = rho.ok_or_else(|| missing("rho"))?;
        InstanceParams::new(n, n_c, gamma, rho, seed)
            .map_err(|e| HarnessError::Spec(format!("cell ({i}, {j}): {e}")))
    }

    /// Checks the axes and every cell's parameters without running anything.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Spec("trials must be at least 1".into()));
        }
        if self.axis1.values.is_empty() || self.axis2.values.is_empty() {
            return Err(HarnessError::Spec("axes must be nonempty".into()));
        }
        let clash = |a: Param, b: Param| {
            a == b
                || matches!(
                    (a, b),
                    (Param::Fraction, Param::NC) | (Param::NC, Param::Fraction)
                )
        };
        if clash(self.axis1.param, self.axis2.param) {
            return Err(HarnessError::Spec(format!(
                "axes {} and {} set the same parameter",
                self.axis1.param, self.axis2.param
            )));
        }
        self.solver
            .validate()
            .map_err(|e| HarnessError::Spec(e.to_string()))?;
        let (r, c) = self.shape();
        for i in 0..r {
            for j in 0..c {
                self.cell_params(i, j, 0)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub success: bool,
    pub converged: bool,
    pub rel_error: f64,
    pub iterations: usize,
    pub seconds: f64,
}

/// Runs one planted trial. A trial succeeds only if the solver converged and
/// the relative error against the block indicator is at most `1e-6`.
pub fn run_trial(params: InstanceParams, opts: &SolverOptions) -> Result<TrialOutcome, SolverError> {
    let start = Instant::now();
    let inst = gen_planted(params).expect("cell parameters were validated");
    let res = solve_rpca(&inst.adjacency, opts)?;
    let rel_error = relative_error(&res.b_star, &inst.b0)?;
    Ok(TrialOutcome {
        seed: params.seed,
        success: res.converged && rel_error <= RECOVERY_TOL,
        converged: res.converged,
        rel_error,
        iterations: res.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Aggregated grid. Equality ignores wall-clock times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryGrid {
    pub spec: GridSpec,
    /// Rows follow `axis1`, columns `axis2`.
    pub success_rate: Vec<Vec<f64>>,
    pub mean_rel_error: Vec<Vec<f64>>,
    pub wall_times: Vec<Vec<f64>>,
    /// Trials finished per cell; below `spec.trials` only after cancellation.
    pub completed: Vec<Vec<usize>>,
    pub complete: bool,
}

impl PartialEq for RecoveryGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.success_rate == other.success_rate
            && bitwise_eq(&self.mean_rel_error, &other.mean_rel_error)
            && self.completed == other.completed
            && self.complete == other.complete
    }
}

fn bitwise_eq(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

/// Thread cap and cancellation for [`run_grid_with`].
#[derive(Default)]
pub struct RunControl<'a> {
    pub threads: Option<usize>,
    pub cancel: Option<&'a AtomicBool>,
}

pub fn run_grid(spec: &GridSpec) -> Result<RecoveryGrid, HarnessError> {
    run_grid_with(spec, &RunControl::default())
}

pub fn run_grid_with(spec: &GridSpec, ctl: &RunControl<'_>) -> Result<RecoveryGrid, HarnessError> {
    spec.validate()?;
    let (rows, cols) = spec.shape();
    let jobs: Vec<(usize, usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).flat_map(move |j| (0..spec.trials).map(move |t| (i, j, t))))
        .collect();

    let run = || -> Vec<Option<TrialOutcome>> {
        jobs.par_iter()
            .map(|&(i, j, t)| {
                if ctl.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
                    return None;
                }
                let params = spec
                    .cell_params(i, j, trial_seed(spec.base_seed, i, j, t))
                    .expect("validated");
                match run_trial(params, &spec.solver) {
                    Ok(out) => {
                        if !out.converged {
                            log::info!("cell ({i}, {j}) trial {t}: solver did not converge");
                        }
                        Some(out)
                    }
                    Err(e) => {
                        log::warn!("cell ({i}, {j}) trial {t}: {e}");
                        Some(TrialOutcome {
                            seed: params.seed,
                            success: false,
                            converged: false,
                            rel_error: f64::NAN,
                            iterations: 0,
                            seconds: 0.0,
                        })
                    }
                }
            })
            .collect()
    };
    let outcomes = match ctl.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| HarnessError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    };

    let mut success_rate = vec![vec![0.0; cols]; rows];
    let mut mean_rel_error = vec![vec![f64::NAN; cols]; rows];
    let mut wall_times = vec![vec![0.0; cols]; rows];
    let mut completed = vec![vec![0usize; cols]; rows];
    for (cell, chunk) in outcomes.chunks(spec.trials).enumerate() {
        let (i, j) = (cell / cols, cell % cols);
        let done: Vec<&TrialOutcome> = chunk.iter().flatten().collect();
        completed[i][j] = done.len();
        if done.is_empty() {
            continue;
        }
        let successes = done.iter().filter(|o| o.success).count();
        success_rate[i][j] = successes as f64 / done.len() as f64;
        let mut err_sum = 0.0;
        let mut time_sum = 0.0;
        for o in &done {
            err_sum += o.rel_error;
            time_sum += o.seconds;
        }
        mean_rel_error[i][j] = err_sum / done.len() as f64;
        wall_times[i][j] = time_sum;
    }
    let complete = completed.iter().flatten().all(|&c| c == spec.trials);
    Ok(RecoveryGrid {
        spec: spec.clone(),
        success_rate,
        mean_rel_error,
        wall_times,
        completed,
        complete,
    })
}

fn require_axes(spec: &GridSpec, a: Param, b: Param) -> Result<(), HarnessError> {
    if spec.axis1.param != a || spec.axis2.param != b {
        return Err(HarnessError::Spec(format!(
            "expected axes ({a}, {b}), got ({}, {})",
            spec.axis1.param, spec.axis2.param
        )));
    }
    Ok(())
}

/// Grid over `(n, fraction)`.
pub fn run_size_grid(spec: &GridSpec, ctl: &RunControl<'_>) -> Result<RecoveryGrid, HarnessError> {
    require_axes(spec, Param::N, Param::Fraction)?;
    run_grid_with(spec, ctl)
}

/// Grid over `(gamma, rho)`.
pub fn run_phase_grid(spec: &GridSpec, ctl: &RunControl<'_>) -> Result<RecoveryGrid, HarnessError> {
    require_axes(spec, Param::Gamma, Param::Rho)?;
    run_grid_with(spec, ctl)
}

/// One density-constrained solve per `η`, in order. Errors are kept per
/// entry and do not stop the sweep.
pub fn run_eta_sweep(
    a: &DenseMatrix,
    gamma: f64,
    eta_values: &[usize],
    opts: &SolverOptions,
) -> Result<Vec<Result<DecompositionResult, SolverError>>, HarnessError> {
    if eta_values.is_empty() {
        return Err(HarnessError::Spec("eta_values must be nonempty".into()));
    }
    if let Some(&bad) = eta_values.iter().find(|&&e| e == 0) {
        return Err(HarnessError::Spec(format!("eta = {bad} must be at least 1")));
    }
    Ok(eta_values
        .iter()
        .map(|&eta| {
            let out = QuasiCliqueParams::new(gamma, eta).and_then(|qc| solve_quasi_clique(a, &qc, opts));
            if let Err(e) = &out {
                log::info!("eta = {eta}: {e}");
            }
            out
        })
        .collect())
}

/// CSV text: a header row `axis1\axis2,<axis2 values>` then one row per
/// `axis1` value. Numbers use Rust's shortest round-trip formatting.
pub fn grid_csv(grid: &RecoveryGrid) -> String {
    let mut out = format!("{}\\{}", grid.spec.axis1.param, grid.spec.axis2.param);
    for v in &grid.spec.axis2.values {
        out.push_str(&format!(",{v}"));
    }
    out.push('\n');
    for (v, row) in grid.spec.axis1.values.iter().zip(&grid.success_rate) {
        out.push_str(&v.to_string());
        for x in row {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

/// Axis values and cells parsed back from [`grid_csv`] output.
#[derive(Clone, Debug, PartialEq)]
pub struct GridTable {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
}

pub fn parse_grid_csv(text: &str) -> Result<GridTable, HarnessError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| HarnessError::Csv(format!("bad number {s:?}")))
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| HarnessError::Csv("empty".into()))?;
    let axis2 = header.split(',').skip(1).map(num).collect::<Result<Vec<_>, _>>()?;
    let mut axis1 = Vec::new();
    let mut cells = Vec::new();
    for line in lines {
        let mut fields = line.split(',');
        axis1.push(num(fields.next().unwrap_or(""))?);
        let row = fields.map(num).collect::<Result<Vec<_>, _>>()?;
        if row.len() != axis2.len() {
            return Err(HarnessError::Csv(format!(
                "row has {} cells, header has {}",
                row.len(),
                axis2.len()
            )));
        }
        cells.push(row);
    }
    Ok(GridTable { axis1, axis2, cells })
}

/// Binary PGM (P5): one pixel per cell, `round(255·rate)`, `axis1` on rows.
pub fn grid_pgm(grid: &RecoveryGrid) -> Vec<u8> {
    let (rows, cols) = grid.spec.shape();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for row in &grid.success_rate {
        out.extend(row.iter().map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub spec: GridSpec,
    pub complete: bool,
    pub completed: Vec<Vec<usize>>,
    pub success_rate: Vec<Vec<f64>>,
    pub mean_rel_error: Vec<Vec<Option<f64>>>,
    pub cell_seconds: Vec<Vec<f64>>,
}

pub fn manifest(grid: &RecoveryGrid) -> Manifest {
    Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: grid.spec.clone(),
        complete: grid.complete,
        completed: grid.completed.clone(),
        success_rate: grid.success_rate.clone(),
        // JSON has no NaN; empty cells become null.
        mean_rel_error: grid
            .mean_rel_error
            .iter()
            .map(|r| r.iter().map(|&x| x.is_finite().then_some(x)).collect())
            .collect(),
        cell_seconds: grid.wall_times.clone(),
    }
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<prefix>.csv`, `<prefix>.pgm` and `<prefix>.json`; returns the
/// three paths.
pub fn export_grid(grid: &RecoveryGrid, prefix: &Path) -> Result<[PathBuf; 3], HarnessError> {
    let csv = with_suffix(prefix, "csv");
    fs::write(&csv, grid_csv(grid)).map_err(io_err(&csv))?;
    let pgm = with_suffix(prefix, "pgm");
    fs::write(&pgm, grid_pgm(grid)).map_err(io_err(&pgm))?;
    let json = with_suffix(prefix, "json");
    let mut f = fs::File::create(&json).map_err(io_err(&json))?;
    serde_json::to_writer_pretty(&mut f, &manifest(grid))
        .map_err(|e| HarnessError::Io {
            path: json.clone(),
            source: e.into(),
        })?;
    f.write_all(b"\n").map_err(io_err(&json))?;
    Ok([csv, pgm, json])
}
