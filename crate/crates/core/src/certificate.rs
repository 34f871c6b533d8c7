//! Dual certificate `Q = Q_B + Q_C` for the decomposition of a planted
//! instance, and numerical checks of the conditions that make it valid.
//!
//! `Q_B` comes from the golfing scheme: `Γ^C` is split into `k0` random
//! batches and
//!
//! ```text
//! Y_k = Y_{k−1} + q⁻¹ P_{Γ_k} P_T (UVᵀ − Y_{k−1}),    Q_B = P_T⊥ Y_{k0}
//! ```
//!
//! `Q_C` is the least-squares correction
//! `λ P_T⊥ Σ_k (P_Γ P_T P_Γ)^k Sgn(C0)`, which satisfies
//! `P_Γ Q_C = λ Sgn(C0)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::PlantedInstance;
use crate::linalg::{
    linf2, norm, opnorm_pgamma_pt, project_support, project_t, project_t_perp, svd, DenseMatrix,
    LinalgError, NormKind, SupportSet, TangentSpace, DEFAULT_RANK_TOL,
};
use crate::rng::{stream_rng, Stream};

/// Neumann series stops once a term is this small relative to the first.
pub const NEUMANN_TOL: f64 = 1e-10;
pub const NEUMANN_MAX_TERMS: usize = 200;
/// Relative tolerance of the power iteration for `‖P_Γ P_T‖`.
pub const OPNORM_TOL: f64 = 1e-10;
const DIVERGENCE_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("matrix has rank zero")]
    ZeroMatrix,
    #[error("invalid golfing configuration: {0}")]
    Config(String),
    #[error("sign matrix has entries outside Γ")]
    SignOutsideSupport,
    #[error("Neumann series does not converge: ‖P_Γ P_T‖ = {opnorm} ≥ 1 − 1e-6")]
    NeumannDiverged { opnorm: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    pub mu_row: f64,
    pub mu_col: f64,
    pub mu_joint: f64,
    pub mu: f64,
    pub r: usize,
    pub n: usize,
}

fn max_row_norm_sq(m: &DenseMatrix) -> f64 {
    (0..m.n_rows())
        .map(|i| m.row(i).iter().map(|x| x * x).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Incoherence of the factors spanning `t`.
pub fn incoherence_of(t: &TangentSpace) -> Result<IncoherenceReport, CertificateError> {
    let r = t.rank();
    if r == 0 {
        return Err(CertificateError::ZeroMatrix);
    }
    let n = t.dim();
    let nf = n as f64;
    let rf = r as f64;
    let mu_row = nf / rf * max_row_norm_sq(t.u());
    let mu_col = nf / rf * max_row_norm_sq(t.v());
    let uv = t.uv_t().max_abs();
    let mu_joint = nf * nf / rf * uv * uv;
    Ok(IncoherenceReport {
        mu_row,
        mu_col,
        mu_joint,
        mu: mu_row.max(mu_col).max(mu_joint),
        r,
        n,
    })
}

/// Smallest `μ` satisfying the row, column and joint incoherence bounds for
/// the singular vectors of `b0`.
pub fn incoherence(b0: &DenseMatrix, rank_tol: f64) -> Result<IncoherenceReport, CertificateError> {
    let f = svd(b0, rank_tol)?;
    incoherence_of(&TangentSpace::from_factors(&f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GolfingConfig {
    pub k0: usize,
    /// Probability of an index belonging to Γ.
    pub p: f64,
    /// Per-batch sampling probability, `1 − p^(1/k0)`.
    pub q: f64,
    pub seed: u64,
}

/// `20·⌈ln n⌉`, at least 1.
pub fn default_k0(n: usize) -> usize {
    (20.0 * (n.max(2) as f64).ln().ceil()) as usize
}

impl GolfingConfig {
    pub fn new(n: usize, p: f64, seed: u64) -> Result<Self, CertificateError> {
        Self::with_k0(default_k0(n), p, seed)
    }

    pub fn with_k0(k0: usize, p: f64, seed: u64) -> Result<Self, CertificateError> {
        if k0 == 0 {
            return Err(CertificateError::Config("k0 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(CertificateError::Config(format!("p = {p} outside [0, 1]")));
        }
        let cfg = GolfingConfig {
            k0,
            p,
            q: 1.0 - p.powf(1.0 / k0 as f64),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uses the empirical density of the instance's noise support as `p`.
    pub fn for_instance(inst: &PlantedInstance, seed: u64) -> Result<Self, CertificateError> {
        Self::new(inst.n(), inst.noise_support.density(), seed)
    }

    pub fn validate(&self) -> Result<(), CertificateError> {
        if self.k0 == 0 {
            return Err(CertificateError::Config("k0 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p) || !(0.0..=1.0).contains(&self.q) {
            return Err(CertificateError::Config(format!(
                "p = {}, q = {} must lie in [0, 1]",
                self.p, self.q
            )));
        }
        let implied = (1.0 - self.q).powi(self.k0 as i32);
        if (implied - self.p).abs() > 1e-12 {
            return Err(CertificateError::Config(format!(
                "(1 − q)^k0 = {implied} does not match p = {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Splits `Γ^C` into `k0` batches.
///
/// Each index of `Γ^C` receives the membership pattern of `k0` independent
/// Bernoulli(q) draws conditioned on at least one success, which is the law
/// of the i.i.d. batches given that their union is exactly `Γ^C`. The first
/// success is drawn by inverting its truncated geometric distribution and
/// later ones by geometric skips.
pub fn partition_complement(
    gamma: &SupportSet,
    cfg: &GolfingConfig,
) -> Result<Vec<SupportSet>, CertificateError> {
    cfg.validate()?;
    let n = gamma.n();
    let mut masks = vec![vec![false; n * n]; cfg.k0];
    if cfg.q == 0.0 {
        return Ok(masks.into_iter().map(|m| SupportSet::from_mask(n, m)).collect());
    }
    let mut rng = stream_rng(cfg.seed, Stream::GolfingBatches);
    let log_miss = (1.0 - cfg.q).ln();
    let covered = 1.0 - (1.0 - cfg.q).powi(cfg.k0 as i32);
    for (idx, &in_gamma) in gamma.mask().iter().enumerate() {
        if in_gamma {
            continue;
        }
        if cfg.q >= 1.0 {
            for m in masks.iter_mut() {
                m[idx] = true;
            }
            continue;
        }
        let u: f64 = rng.random();
        let first = ((1.0 - u * covered).ln() / log_miss).floor() as usize;
        let mut k = first.min(cfg.k0 - 1);
        loop {
            masks[k][idx] = true;
            let v: f64 = rng.random();
            // 1 − v ∈ (0, 1] keeps the logarithm finite.
            let skip = ((1.0 - v).ln() / log_miss).floor();
            if !(skip < (cfg.k0 - k) as f64) {
                break;
            }
            k += 1 + skip as usize;
            if k >= cfg.k0 {
                break;
            }
        }
    }
    Ok(masks.into_iter().map(|m| SupportSet::from_mask(n, m)).collect())
}

/// Golfing iterate `Q_B` and the trace `‖Z_k‖_F`, `k = 0..=batches.len()`.
pub fn golfing_qb(
    t: &TangentSpace,
    batches: &[SupportSet],
    batch_rate: f64,
) -> Result<(DenseMatrix, Vec<f64>), CertificateError> {
    if !(batch_rate > 0.0 && batch_rate <= 1.0) {
        return Err(CertificateError::Config(format!(
            "batch rate {batch_rate} outside (0, 1]"
        )));
    }
    if batches.is_empty() {
        return Err(CertificateError::Config("no batches".into()));
    }
    let n = t.dim();
    if let Some(b) = batches.iter().find(|b| b.n() != n) {
        return Err(LinalgError::DimensionMismatch {
            left: (b.n(), b.n()),
            right: (n, n),
        }
        .into());
    }
    let uv = t.uv_t();
    let mut y = DenseMatrix::zeros(n, n);
    let mut trace = Vec::with_capacity(batches.len() + 1);
    trace.push(uv.frobenius());
    for batch in batches {
        let z = project_t(&(&uv - &y), t)?;
        y.axpy(1.0 / batch_rate, &project_support(&z, batch)?);
        trace.push((&uv - &project_t(&y, t)?).frobenius());
    }
    Ok((project_t_perp(&y, t)?, trace))
}

/// Ratios below this fraction of `‖Z_0‖_F` are roundoff, not contraction.
pub const CONTRACTION_FLOOR: f64 = 1e-12;

/// Median of `trace[k] / trace[k−1]` over the steps taken before the trace
/// falls to `CONTRACTION_FLOOR·trace[0]`.
pub fn median_contraction(trace: &[f64]) -> Option<f64> {
    let floor = CONTRACTION_FLOOR * trace.first().copied().unwrap_or(0.0);
    let mut ratios: Vec<f64> = trace
        .windows(2)
        .filter(|w| w[0] > floor && w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    Some(if m % 2 == 1 {
        ratios[m / 2]
    } else {
        0.5 * (ratios[m / 2 - 1] + ratios[m / 2])
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeumannResult {
    pub q_c: DenseMatrix,
    pub terms: usize,
    pub opnorm: f64,
    /// `‖P_Γ Q_C − λ Sgn(C0)‖_F`.
    pub fixed_point_residual: f64,
}

/// Truncated Neumann series for `Q_C`.
///
/// Stops after the first term whose Frobenius norm is below
/// `tol·‖Sgn(C0)‖_F`, or after `max_terms` terms.
pub fn neumann_qc(
    gamma: &SupportSet,
    t: &TangentSpace,
    sign_c0: &DenseMatrix,
    lambda: f64,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannResult, CertificateError> {
    let n = t.dim();
    if gamma.n() != n || sign_c0.shape() != (n, n) {
        return Err(LinalgError::DimensionMismatch {
            left: sign_c0.shape(),
            right: (n, n),
        }
        .into());
    }
    if !(tol > 0.0) || max_terms == 0 {
        return Err(CertificateError::Config(format!(
            "tol = {tol}, max_terms = {max_terms}"
        )));
    }
    let outside = sign_c0
        .as_slice()
        .iter()
        .zip(gamma.mask())
        .any(|(&x, &inside)| !inside && x != 0.0);
    if outside {
        return Err(CertificateError::SignOutsideSupport);
    }
    if gamma.is_empty() {
        return Ok(NeumannResult {
            q_c: DenseMatrix::zeros(n, n),
            terms: 0,
            opnorm: 0.0,
            fixed_point_residual: 0.0,
        });
    }
    let est = opnorm_pgamma_pt(gamma, t, OPNORM_TOL)?;
    if est.value >= 1.0 - DIVERGENCE_MARGIN {
        return Err(CertificateError::NeumannDiverged { opnorm: est.value });
    }

    let s_norm = sign_c0.frobenius();
    let mut term = sign_c0.clone();
    let mut sum = sign_c0.clone();
    let mut terms = 1;
    while terms < max_terms && term.frobenius() >= tol * s_norm {
        term = project_support(&project_t(&term, t)?, gamma)?;
        sum += &term;
        terms += 1;
    }
    let q_c = project_t_perp(&sum, t)?.scale(lambda);
    let fixed_point_residual = (&project_support(&q_c, gamma)? - &sign_c0.scale(lambda)).frobenius();
    Ok(NeumannResult {
        q_c,
        terms,
        opnorm: est.value,
        fixed_point_residual,
    })
}

/// The five norm conditions on `Q_B` and `Q_C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    /// `‖Q_B‖ < 1/8`
    pub qb_spectral: bool,
    /// `‖P_Γ(UVᵀ + Q_B)‖_F < λ/8`
    pub qb_on_gamma: bool,
    /// `‖P_Γ⊥(UVᵀ + Q_B)‖_∞ < λ/4`
    pub qb_off_gamma: bool,
    /// `‖Q_C‖ < 1/8`
    pub qc_spectral: bool,
    /// `‖P_Γ⊥ Q_C‖_∞ < 1/4`
    pub qc_off_gamma: bool,
}

impl Conditions {
    pub fn all(&self) -> bool {
        self.qb_spectral && self.qb_on_gamma && self.qb_off_gamma && self.qc_spectral && self.qc_off_gamma
    }

    pub fn as_array(&self) -> [bool; 5] {
        [
            self.qb_spectral,
            self.qb_on_gamma,
            self.qb_off_gamma,
            self.qc_spectral,
            self.qc_off_gamma,
        ]
    }
}

/// Whether `p ≥ c0·μ·r·ln n / n` for the observed fraction `p = 1 − |Γ|/n²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostic {
    pub c0: f64,
    pub p_observed: f64,
    pub bound: f64,
    pub satisfied: bool,
}

pub fn regime_diagnostic(inc: &IncoherenceReport, p_observed: f64, c0: f64) -> RegimeDiagnostic {
    let n = inc.n as f64;
    let bound = c0 * inc.mu * inc.r as f64 * n.ln() / n;
    RegimeDiagnostic {
        c0,
        p_observed,
        bound,
        satisfied: p_observed >= bound,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub norm_qb: f64,
    pub residual_golfing: f64,
    pub linf_complement_b: f64,
    pub norm_qc: f64,
    pub linf_complement_c: f64,
    pub opnorm_pgpt: f64,
    pub lambda: f64,
    pub conditions: Conditions,
    pub overall: bool,
    pub incoherence: IncoherenceReport,
    pub regime: RegimeDiagnostic,
    pub golfing: GolfingConfig,
    pub golfing_trace: Vec<f64>,
    pub neumann_terms: usize,
    pub fixed_point_residual: f64,
    /// `‖P_T Q_B‖_F` and `‖P_T Q_C‖_F`.
    pub tangent_leak_qb: f64,
    pub tangent_leak_qc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_b: Option<DenseMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_c: Option<DenseMatrix>,
}

impl CertificateReport {
    pub fn without_matrices(mut self) -> Self {
        self.q_b = None;
        self.q_c = None;
        self
    }
}

/// Builds `Q_B` and `Q_C` for `inst` and evaluates every condition.
///
/// `overall` additionally requires `‖P_Γ P_T‖ ≤ 1/2` and `λ < 1`.
pub fn verify_certificate(
    inst: &PlantedInstance,
    lambda: f64,
    cfg: &GolfingConfig,
) -> Result<CertificateReport, CertificateError> {
    verify_certificate_with(inst, lambda, cfg, 1.0)
}

pub fn verify_certificate_with(
    inst: &PlantedInstance,
    lambda: f64,
    cfg: &GolfingConfig,
    c0: f64,
) -> Result<CertificateReport, CertificateError> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(CertificateError::Config(format!("lambda = {lambda}")));
    }
    let factors = svd(&inst.b0, DEFAULT_RANK_TOL)?;
    if factors.rank() == 0 {
        return Err(CertificateError::ZeroMatrix);
    }
    let t = TangentSpace::from_factors(&factors);
    let inc = incoherence_of(&t)?;
    let gamma = &inst.noise_support;
    let off_gamma = gamma.complement();

    let batches = partition_complement(gamma, cfg)?;
    let (q_b, golfing_trace) = if cfg.q > 0.0 {
        golfing_qb(&t, &batches, cfg.q)?
    } else {
        // Γ covers everything: no batches carry mass.
        let uv = t.uv_t();
        (DenseMatrix::zeros(t.dim(), t.dim()), vec![uv.frobenius()])
    };
    let neumann = neumann_qc(gamma, &t, &inst.sign_c0(), lambda, NEUMANN_TOL, NEUMANN_MAX_TERMS)?;
    let q_c = neumann.q_c;
    let opnorm = if gamma.is_empty() {
        0.0
    } else {
        neumann.opnorm
    };

    let uv_qb = &t.uv_t() + &q_b;
    let norm_qb = norm(&q_b, NormKind::Spectral)?;
    let residual_golfing = project_support(&uv_qb, gamma)?.frobenius();
    let linf_complement_b = project_support(&uv_qb, &off_gamma)?.max_abs();
    let norm_qc = norm(&q_c, NormKind::Spectral)?;
    let linf_complement_c = project_support(&q_c, &off_gamma)?.max_abs();

    let conditions = Conditions {
        qb_spectral: norm_qb < 0.125,
        qb_on_gamma: residual_golfing < lambda / 8.0,
        qb_off_gamma: linf_complement_b < lambda / 4.0,
        qc_spectral: norm_qc < 0.125,
        qc_off_gamma: linf_complement_c < 0.25,
    };
    let overall = conditions.all() && opnorm <= 0.5 && lambda < 1.0;
    Ok(CertificateReport {
        norm_qb,
        residual_golfing,
        linf_complement_b,
        norm_qc,
        linf_complement_c,
        opnorm_pgpt: opnorm,
        lambda,
        conditions,
        overall,
        regime: regime_diagnostic(&inc, 1.0 - gamma.density(), c0),
        incoherence: inc,
        golfing: cfg.clone(),
        golfing_trace,
        neumann_terms: neumann.terms,
        fixed_point_residual: neumann.fixed_point_residual,
        tangent_leak_qb: project_t(&q_b, &t)?.frobenius(),
        tangent_leak_qc: project_t(&q_c, &t)?.frobenius(),
        q_b: Some(q_b),
        q_c: Some(q_c),
    })
}

/// Measured sides of the sampling concentration inequalities for one batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// `‖(p⁻¹P_Γ − I)Z‖`
    pub spectral_deviation: f64,
    /// `(ln n / p)‖Z‖_∞ + √(ln n / p)‖Z‖_{∞,2}` (unit constant)
    pub spectral_bound: f64,
    /// `‖(P_T − p⁻¹P_T P_Γ P_T)Z‖_∞`
    pub linf_deviation: f64,
    /// `½‖Z‖_∞`
    pub linf_bound: f64,
    /// `‖(P_T − p⁻¹P_T P_Γ P_T)Z‖_{∞,2}`
    pub linf2_deviation: f64,
    /// `½√(n/(μr))‖Z‖_∞ + ½‖Z‖_{∞,2}`
    pub linf2_bound: f64,
}

pub fn check_concentration(
    t: &TangentSpace,
    gamma_k: &SupportSet,
    p: f64,
    z: &DenseMatrix,
) -> Result<ConcentrationReport, CertificateError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(CertificateError::Config(format!("p = {p} outside (0, 1]")));
    }
    let n = t.dim();
    let nf = n as f64;
    let log_ratio = nf.max(2.0).ln() / p;
    let sampled = project_support(z, gamma_k)?.scale(1.0 / p);
    let spectral_deviation = norm(&(&sampled - z), NormKind::Spectral)?;
    let z_inf = z.max_abs();
    let z_inf2 = linf2(z);

    let pz = project_t(z, t)?;
    let sampled_t = project_t(&project_support(&pz, gamma_k)?, t)?.scale(1.0 / p);
    let dev = &pz - &sampled_t;
    let (mu, r) = match incoherence_of(t) {
        Ok(inc) => (inc.mu, inc.r as f64),
        Err(_) => (1.0, 1.0),
    };
    Ok(ConcentrationReport {
        spectral_deviation,
        spectral_bound: log_ratio * z_inf + log_ratio.sqrt() * z_inf2,
        linf_deviation: dev.max_abs(),
        linf_bound: 0.5 * z_inf,
        linf2_deviation: linf2(&dev),
        linf2_bound: 0.5 * (nf / (mu * r)).sqrt() * z_inf + 0.5 * z_inf2,
    })
}
