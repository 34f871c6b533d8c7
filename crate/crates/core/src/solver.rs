//! ADMM solvers for the rank-sparsity decomposition
//!
//! ```text
//! minimize ‖B‖_* + λ‖C‖₁   subject to B + C = M
//! ```
//!
//! and for the density-constrained quasi-clique program
//!
//! ```text
//! minimize ‖X‖_* + λ‖A − X‖₁   subject to Σᵢⱼ Xᵢⱼ ≥ γη², 0 ≤ X ≤ 1.
//! ```
//!
//! Both alternate exact proximal steps with a dual ascent on the coupling
//! constraint. The penalty `μ` starts at `n²/(4‖M‖₁)` and grows by
//! `mu_growth` whenever the primal residual fails to drop by 10% over a
//! ten-iteration window.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm, soft_threshold, sv_threshold, DenseMatrix, LinalgError, NormKind};

/// Success threshold on the relative Frobenius error.
pub const RECOVERY_TOL: f64 = 1e-6;

const STALL_WINDOW: usize = 10;
const STALL_FACTOR: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid solver option {name} = {value}")]
    InvalidOption { name: &'static str, value: f64 },
    #[error("input must be a symmetric 0/1 adjacency matrix")]
    NotAdjacency,
    #[error("density target γη² = {target} exceeds n² = {max}")]
    Infeasible { target: f64, max: f64 },
    #[error("density target γη² = {target} exceeds the {edges} nonzero entries of A")]
    StructurallyImpossible { target: f64, edges: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    PlainDecomposition,
    QuasiCliqueConstrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Weight on the ℓ₁ term; `None` means `1/√n`.
    pub lambda: Option<f64>,
    /// Initial penalty; `None` means `0.25 / mean|Mᵢⱼ|`.
    pub mu0: Option<f64>,
    pub mu_growth: f64,
    pub tol_primal: f64,
    /// Bound on the dual residual `μ‖C_k − C_{k−1}‖_F / ‖M‖_F`.
    #[serde(default = "default_tol_dual")]
    pub tol_dual: f64,
    pub max_iters: usize,
    pub mode: SolverMode,
    /// Record per-iteration augmented-Lagrangian values (costs one extra
    /// spectral decomposition per iteration).
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            lambda: None,
            mu0: None,
            mu_growth: 1.5,
            tol_primal: 1e-8,
            tol_dual: default_tol_dual(),
            max_iters: 2000,
            mode: SolverMode::PlainDecomposition,
            record_trace: false,
        }
    }
}

fn default_tol_dual() -> f64 {
    1e-8
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = |name, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(SolverError::InvalidOption { name, value: x })
            }
            _ => Ok(()),
        };
        positive("lambda", self.lambda)?;
        positive("mu0", self.mu0)?;
        if !(self.mu_growth >= 1.0 && self.mu_growth.is_finite()) {
            return Err(SolverError::InvalidOption {
                name: "mu_growth",
                value: self.mu_growth,
            });
        }
        if !(self.tol_primal > 0.0) {
            return Err(SolverError::InvalidOption {
                name: "tol_primal",
                value: self.tol_primal,
            });
        }
        if !(self.tol_dual > 0.0) {
            return Err(SolverError::InvalidOption {
                name: "tol_dual",
                value: self.tol_dual,
            });
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidOption {
                name: "max_iters",
                value: 0.0,
            });
        }
        Ok(())
    }

    pub fn lambda_for(&self, n: usize) -> f64 {
        self.lambda.unwrap_or(1.0 / (n as f64).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiCliqueParams {
    pub gamma: f64,
    pub eta: usize,
}

impl QuasiCliqueParams {
    pub fn new(gamma: f64, eta: usize) -> Result<Self, SolverError> {
        let qc = QuasiCliqueParams { gamma, eta };
        qc.validate()?;
        Ok(qc)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(SolverError::InvalidOption {
                name: "gamma",
                value: self.gamma,
            });
        }
        if self.eta == 0 {
            return Err(SolverError::InvalidOption {
                name: "eta",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// Right-hand side `γη²` of the density constraint.
    pub fn density_target(&self) -> f64 {
        self.gamma * (self.eta * self.eta) as f64
    }
}

/// One ADMM iteration's augmented Lagrangian before and after the primal
/// block updates, at the multiplier and penalty in force for that step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub mu: f64,
    pub lagrangian_before: f64,
    pub lagrangian_after: f64,
    pub primal_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub b_star: DenseMatrix,
    pub c_star: DenseMatrix,
    pub iterations: usize,
    /// `‖M − B − C‖_F / ‖M‖_F` at exit (consensus gap `‖X − W‖_F / ‖A‖_F`
    /// in quasi-clique mode).
    pub primal_residual: f64,
    /// `‖B‖_* + λ‖C‖₁`.
    pub objective: f64,
    pub lambda: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<IterationRecord>,
}

fn default_mu0(m: &DenseMatrix) -> f64 {
    let l1: f64 = m.as_slice().iter().map(|x| x.abs()).sum();
    0.25 * m.as_slice().len() as f64 / l1
}

fn objective(b: &DenseMatrix, c: &DenseMatrix, lambda: f64) -> Result<f64, LinalgError> {
    Ok(norm(b, NormKind::Nuclear)? + lambda * norm(c, NormKind::L1)?)
}

/// `‖B‖_* + λ‖C‖₁ + ⟨Y, R⟩ + μ/2 ‖R‖²` with `R = M − B − C`.
fn augmented_lagrangian(
    m: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    y: &DenseMatrix,
    lambda: f64,
    mu: f64,
) -> Result<f64, LinalgError> {
    let mut r = m - b;
    r -= c;
    Ok(objective(b, c, lambda)? + y.dot(&r) + 0.5 * mu * r.dot(&r))
}

/// Penalty schedule shared by both solvers.
struct Penalty {
    mu: f64,
    growth: f64,
    history: Vec<f64>,
    last_change: usize,
}

impl Penalty {
    fn new(mu: f64, growth: f64) -> Self {
        Penalty {
            mu,
            growth,
            history: Vec::new(),
            last_change: 0,
        }
    }

    /// Records the residual of iteration `k` (1-based) and reports whether
    /// the penalty grew. A residual already below `tol` never triggers growth.
    fn observe(&mut self, k: usize, residual: f64, tol: f64) -> bool {
        self.history.push(residual);
        if residual > tol
            && k >= self.last_change + STALL_WINDOW
            && k > STALL_WINDOW
            && self.growth > 1.0
        {
            let old = self.history[k - 1 - STALL_WINDOW];
            if residual > STALL_FACTOR * old {
                self.mu *= self.growth;
                self.last_change = k;
                return true;
            }
        }
        false
    }
}

/// Solves `min ‖B‖_* + λ‖C‖₁ s.t. B + C = M`.
pub fn solve_rpca(m: &DenseMatrix, opts: &SolverOptions) -> Result<DecompositionResult, SolverError> {
    opts.validate()?;
    m.ensure_square()?;
    m.ensure_finite()?;
    let n = m.n_rows();
    let lambda = opts.lambda_for(n);
    let m_norm = m.frobenius();
    if m_norm == 0.0 {
        return Ok(DecompositionResult {
            b_star: DenseMatrix::zeros(n, n),
            c_star: DenseMatrix::zeros(n, n),
            iterations: 0,
            primal_residual: 0.0,
            objective: 0.0,
            lambda,
            converged: true,
            trace: Vec::new(),
        });
    }
    let symmetric = m.is_symmetric(0.0);

    let mut penalty = Penalty::new(opts.mu0.unwrap_or_else(|| default_mu0(m)), opts.mu_growth);
    let mut b = DenseMatrix::zeros(n, n);
    let mut c = DenseMatrix::zeros(n, n);
    let mut y = DenseMatrix::zeros(n, n);
    let mut trace = Vec::new();
    let mut best: Option<(f64, DenseMatrix, DenseMatrix)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    for k in 1..=opts.max_iters {
        iterations = k;
        let mu = penalty.mu;
        let before = if opts.record_trace {
            augmented_lagrangian(m, &b, &c, &y, lambda, mu)?
        } else {
            f64::NAN
        };

        let scaled_dual = y.scale(1.0 / mu);
        let mut arg = m - &c;
        arg += &scaled_dual;
        b = sv_threshold(&arg, 1.0 / mu)?;
        let mut arg = m - &b;
        arg += &scaled_dual;
        let c_prev = c;
        c = soft_threshold(&arg, lambda / mu)?;
        let dual = mu * (&c - &c_prev).frobenius() / m_norm;

        let mut r = m - &b;
        r -= &c;
        if opts.record_trace {
            let after = augmented_lagrangian(m, &b, &c, &y, lambda, mu)?;
            trace.push(IterationRecord {
                mu,
                lagrangian_before: before,
                lagrangian_after: after,
                primal_residual: r.frobenius() / m_norm,
            });
        }
        y.axpy(mu, &r);
        residual = r.frobenius() / m_norm;

        let score = residual.max(dual * opts.tol_primal / opts.tol_dual);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, b.clone(), c.clone()));
        }
        if residual <= opts.tol_primal && dual <= opts.tol_dual {
            converged = true;
            break;
        }
        penalty.observe(k, residual, opts.tol_primal);
    }

    if !converged {
        if let Some((_, bb, cc)) = best {
            b = bb;
            c = cc;
        }
        let mut r = m - &b;
        r -= &c;
        residual = r.frobenius() / m_norm;
        log::warn!(
            "rpca: no convergence after {iterations} iterations (residual {residual:e})"
        );
    }
    if symmetric {
        let asym = b.max_asymmetry();
        log::debug!("rpca: B* asymmetry {asym:e}");
        b.symmetrize();
        c.symmetrize();
    }
    Ok(DecompositionResult {
        objective: objective(&b, &c, lambda)?,
        b_star: b,
        c_star: c,
        iterations,
        primal_residual: residual,
        lambda,
        converged,
        trace,
    })
}

/// `argmin_w ½(w − x)² + τ|a − w|` restricted to `[0, 1]`.
fn clipped_l1_prox(x: f64, a: f64, tau: f64) -> f64 {
    let d = a - x;
    let shrunk = if d > tau {
        d - tau
    } else if d < -tau {
        d + tau
    } else {
        0.0
    };
    (a - shrunk).clamp(0.0, 1.0)
}

/// Exact prox of `τ‖A − W‖₁` over `K = {0 ≤ W ≤ 1, ΣW ≥ target}`.
///
/// The KKT conditions give `W(θ) = prox(V + θ)` entrywise for a scalar
/// multiplier `θ ≥ 0` on the sum constraint; `ΣW(θ)` is nondecreasing, so
/// `θ` is found by bisection when the constraint binds.
fn constrained_l1_prox(v: &DenseMatrix, a: &DenseMatrix, tau: f64, target: f64) -> DenseMatrix {
    let eval = |theta: f64| v.zip_map(a, |x, aij| clipped_l1_prox(x + theta, aij, tau));
    let w0 = eval(0.0);
    if w0.sum() >= target {
        return w0;
    }
    let mut lo = 0.0;
    let mut hi = (1.0 + tau + a.max_abs() - v.min_entry()).max(1.0);
    while eval(hi).sum() < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).sum() >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    eval(hi)
}

/// Euclidean projection onto `{0 ≤ X ≤ 1, ΣX ≥ target}`.
pub fn project_box_halfspace(v: &DenseMatrix, target: f64) -> DenseMatrix {
    // τ = 0 turns the clipped prox into plain clipping.
    constrained_l1_prox(v, v, 0.0, target)
}

/// Solves `min ‖X‖_* + λ‖A − X‖₁ s.t. ΣX ≥ γη², 0 ≤ X ≤ 1`.
///
/// Splits `X = W` with `X` carrying the nuclear norm and `W` carrying the
/// ℓ₁ term and the constraints; the returned `B*` is the feasible `W`.
pub fn solve_quasi_clique(
    a: &DenseMatrix,
    qc: &QuasiCliqueParams,
    opts: &SolverOptions,
) -> Result<DecompositionResult, SolverError> {
    opts.validate()?;
    qc.validate()?;
    a.ensure_square()?;
    a.ensure_finite()?;
    let binary = a.as_slice().iter().all(|&x| x == 0.0 || x == 1.0);
    if !binary || a.max_asymmetry() != 0.0 {
        return Err(SolverError::NotAdjacency);
    }
    let n = a.n_rows();
    let target = qc.density_target();
    let max = (n * n) as f64;
    if target > max {
        return Err(SolverError::Infeasible { target, max });
    }
    let edges = a.sum();
    if target > edges {
        return Err(SolverError::StructurallyImpossible { target, edges });
    }
    let lambda = opts.lambda_for(n);
    let a_norm = a.frobenius();
    if a_norm == 0.0 {
        // target ≤ ΣA = 0, so X = 0 is feasible and optimal.
        return Ok(DecompositionResult {
            b_star: DenseMatrix::zeros(n, n),
            c_star: DenseMatrix::zeros(n, n),
            iterations: 0,
            primal_residual: 0.0,
            objective: 0.0,
            lambda,
            converged: true,
            trace: Vec::new(),
        });
    }

    let mut penalty = Penalty::new(opts.mu0.unwrap_or_else(|| default_mu0(a)), opts.mu_growth);
    let mut w = project_box_halfspace(a, target);
    let mut x;
    let mut u = DenseMatrix::zeros(n, n);
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut best: Option<(f64, DenseMatrix)> = None;

    for k in 1..=opts.max_iters {
        iterations = k;
        let mu = penalty.mu;
        x = sv_threshold(&(&w - &u), 1.0 / mu)?;
        let w_prev = w;
        w = constrained_l1_prox(&(&x + &u), a, lambda / mu, target);
        let gap = &x - &w;
        u += &gap;

        residual = gap.frobenius() / a_norm;
        let dual = mu * (&w - &w_prev).frobenius() / a_norm;
        let score = residual.max(dual / mu.max(1.0));
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, w.clone()));
        }
        if residual <= opts.tol_primal && dual <= opts.tol_primal * mu.max(1.0) {
            converged = true;
            break;
        }
        let old_mu = penalty.mu;
        if penalty.observe(k, residual, opts.tol_primal) {
            // Scaled multiplier U = Y/μ must follow the new penalty.
            u = u.scale(old_mu / penalty.mu);
        }
    }

    if !converged {
        if let Some((_, bw)) = best {
            w = bw;
        }
        log::warn!(
            "quasi-clique: no convergence after {iterations} iterations (gap {residual:e})"
        );
    }
    w.symmetrize();
    let c = a - &w;
    Ok(DecompositionResult {
        objective: objective(&w, &c, lambda)?,
        b_star: w,
        c_star: c,
        iterations,
        primal_residual: residual,
        lambda,
        converged,
        trace: Vec::new(),
    })
}

/// `‖B0 − B*‖_F / ‖B0‖_F`, or `‖B*‖_F` when `B0 = 0`.
pub fn relative_error(b_star: &DenseMatrix, b0: &DenseMatrix) -> Result<f64, SolverError> {
    b_star.ensure_same_shape(b0)?;
    let diff = (b0 - b_star).frobenius();
    let scale = b0.frobenius();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// Recovery verdict: relative Frobenius error at most `1e-6`, inclusive.
pub fn recovery_success(b_star: &DenseMatrix, b0: &DenseMatrix) -> Result<bool, SolverError> {
    Ok(relative_error(b_star, b0)? <= RECOVERY_TOL)
}
