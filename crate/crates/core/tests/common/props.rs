//! Property checks shared by the `properties` and `acceptance` targets.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use qcr::certificate::incoherence_of;
use qcr::instance::{gen_planted, InstanceParams};
use qcr::linalg::{
    norm, project_support, project_t, project_t_perp, soft_threshold, sv_threshold, svd,
    DEFAULT_RANK_TOL,
};
use qcr::{DenseMatrix, NormKind, SupportSet, TangentSpace};

pub const CASES: u32 = 1000;

pub fn config() -> Config {
    Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

/// Square matrix of side `1..=max_n` built as `L Rᵀ` with inner dimension
/// `1..=n`, so low numerical rank is common.
pub fn low_rank_matrix(max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_n)
        .prop_flat_map(|n| (Just(n), 1..=n))
        .prop_flat_map(|(n, k)| {
            (
                prop::collection::vec(-1.0f64..1.0, n * k),
                prop::collection::vec(-1.0f64..1.0, n * k),
            )
                .prop_map(move |(l, r)| {
                    let l = DenseMatrix::from_row_major(n, k, l).unwrap();
                    let r = DenseMatrix::from_row_major(n, k, r).unwrap();
                    l.matmul_transpose(&r)
                })
        })
}

pub fn dense_matrix(max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n)
            .prop_map(move |v| DenseMatrix::from_row_major(n, n, v).unwrap())
    })
}

/// A tangent space from a random low-rank matrix, a probe `Z` and a mask.
pub fn tangent_case(
    max_n: usize,
) -> impl Strategy<Value = (DenseMatrix, DenseMatrix, Vec<bool>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            low_rank_matrix(n).prop_filter("side n", move |m| m.n_rows() == n),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(any::<bool>(), n * n),
        )
            .prop_map(move |(b, z, mask)| (b, DenseMatrix::from_row_major(n, n, z).unwrap(), mask))
    })
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

fn tangent_of(b: &DenseMatrix) -> Option<TangentSpace> {
    let f = svd(b, DEFAULT_RANK_TOL).ok()?;
    (f.rank() > 0).then(|| TangentSpace::from_factors(&f))
}

/// spectral ≤ frobenius ≤ nuclear ≤ √r·frobenius ≤ r·spectral.
pub fn check_norm_chain(m: &DenseMatrix) -> Result<(), TestCaseError> {
    let slack = 1e-9 * m.frobenius().max(1.0);
    let r = svd(m, DEFAULT_RANK_TOL).unwrap().rank() as f64;
    let spec = norm(m, NormKind::Spectral).unwrap();
    let fro = norm(m, NormKind::Frobenius).unwrap();
    let nuc = norm(m, NormKind::Nuclear).unwrap();
    let chain = [spec, fro, nuc, r.sqrt() * fro, r * spec];
    for w in chain.windows(2) {
        ensure(w[0] <= w[1] + slack, format!("chain broken: {chain:?} (r = {r})"))?;
    }
    Ok(())
}

/// ‖Z‖_{∞,2} ≤ √n‖Z‖_∞ and the trivial lower bound ‖Z‖_∞ ≤ ‖Z‖_{∞,2}.
pub fn check_linf2_bound(z: &DenseMatrix) -> Result<(), TestCaseError> {
    let n = z.n_rows() as f64;
    let l2 = norm(z, NormKind::Linf2).unwrap();
    let li = norm(z, NormKind::Linf).unwrap();
    ensure(l2 <= n.sqrt() * li * (1.0 + 1e-12), format!("{l2} > √n·{li}"))?;
    ensure(li <= l2 * (1.0 + 1e-12), format!("{li} > {l2}"))
}

/// ‖UVᵀ‖_{∞,2} ≤ √(μr/n) with μ from the incoherence report, plus
/// the range of each coherence parameter.
pub fn check_incoherence(b: &DenseMatrix) -> Result<(), TestCaseError> {
    let Some(t) = tangent_of(b) else {
        return Ok(());
    };
    let inc = incoherence_of(&t).unwrap();
    let (n, r) = (inc.n as f64, inc.r as f64);
    let tol = 1e-10;
    let lhs = norm(&t.uv_t(), NormKind::Linf2).unwrap();
    ensure(
        lhs <= (inc.mu * r / n).sqrt() + tol,
        format!("‖UVᵀ‖∞,2 = {lhs} > √(μr/n) with μ = {}", inc.mu),
    )?;
    for (name, mu) in [("mu_row", inc.mu_row), ("mu_col", inc.mu_col)] {
        ensure(
            mu >= 1.0 - tol && mu <= n / r + tol,
            format!("{name} = {mu} outside [1, {}]", n / r),
        )?;
    }
    ensure(inc.mu_joint >= 1.0 - tol, format!("mu_joint = {}", inc.mu_joint))?;
    ensure(inc.mu >= 1.0 - tol, format!("mu = {}", inc.mu))
}

/// P_T∘P_T = P_T, P_T⊥∘P_T = 0, P_Γ∘P_Γ = P_Γ, and T ⟂ T⊥.
pub fn check_projectors(
    b: &DenseMatrix,
    z: &DenseMatrix,
    mask: &[bool],
) -> Result<(), TestCaseError> {
    let Some(t) = tangent_of(b) else {
        return Ok(());
    };
    let scale = z.frobenius().max(1.0);
    let tol = 1e-10 * scale;
    let pt = project_t(z, &t).unwrap();
    let ptt = project_t(&pt, &t).unwrap();
    ensure((&ptt - &pt).frobenius() <= tol, "P_T not idempotent")?;
    let perp = project_t_perp(&pt, &t).unwrap();
    ensure(perp.frobenius() <= tol, "P_T⊥ P_T ≠ 0")?;
    let zp = project_t_perp(z, &t).unwrap();
    ensure(pt.dot(&zp).abs() <= tol, "T and T⊥ not orthogonal")?;
    ensure((&(&pt + &zp) - z).frobenius() <= tol, "P_T + P_T⊥ ≠ I")?;
    let s = SupportSet::from_mask(z.n_rows(), mask.to_vec());
    let pg = project_support(z, &s).unwrap();
    let pgg = project_support(&pg, &s).unwrap();
    ensure((&pgg - &pg).frobenius() <= tol, "P_Γ not idempotent")
}

/// Entrywise soft thresholding against a grid search of
/// `½(x − m)² + τ|x|`, and singular-value thresholding of a diagonal
/// matrix against its closed form.
pub fn check_prox(m: &DenseMatrix, tau: f64) -> Result<(), TestCaseError> {
    let x = soft_threshold(m, tau).unwrap();
    let f = |x: f64, m: f64| 0.5 * (x - m) * (x - m) + tau * x.abs();
    for (&xi, &mi) in x.as_slice().iter().zip(m.as_slice()) {
        let best = (-4000..=4000)
            .map(|k| f(k as f64 * 1e-3, mi))
            .fold(f64::INFINITY, f64::min);
        ensure(
            f(xi, mi) <= best + 1e-12,
            format!("soft_threshold({mi}, {tau}) = {xi} beaten by grid"),
        )?;
    }
    let n = m.n_rows();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    let d = DenseMatrix::from_diagonal(&diag);
    let got = sv_threshold(&d, tau).unwrap();
    let want = DenseMatrix::from_diagonal(
        &diag
            .iter()
            .map(|&v| v.signum() * (v.abs() - tau).max(0.0))
            .collect::<Vec<_>>(),
    );
    ensure(
        (&got - &want).max_abs() <= 1e-12,
        format!("sv_threshold mismatch on diag {diag:?}"),
    )
}

pub fn check_svd_reconstruction(m: &DenseMatrix) -> Result<(), TestCaseError> {
    let f = svd(m, DEFAULT_RANK_TOL).unwrap();
    let err = (&f.reconstruct() - m).frobenius();
    ensure(err <= 1e-8 * m.frobenius(), format!("reconstruction error {err:e}"))
}

pub fn instance_params() -> impl Strategy<Value = InstanceParams> {
    (1usize..=30)
        .prop_flat_map(|n| (Just(n), 1..=n, 0.05f64..=1.0, 0.0f64..0.95, any::<u64>()))
        .prop_map(|(n, nc, g, r, s)| InstanceParams::new(n, nc, g, r, s).unwrap())
}

/// Two generations from the same parameters agree bit for bit.
pub fn check_instance_determinism(p: InstanceParams) -> Result<(), TestCaseError> {
    let a = gen_planted(p).unwrap();
    let b = gen_planted(p).unwrap();
    ensure(a == b, "instance differs between runs")?;
    ensure(
        (&(&a.b0 + &a.c0) - &a.adjacency).max_abs() == 0.0,
        "A ≠ B0 + C0",
    )?;
    ensure(a.adjacency.max_asymmetry() == 0.0, "A not symmetric")
}

/// Runs every suite for [`CASES`] cases; one `(name, outcome)` per suite.
pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    fn go<S: Strategy>(
        strategy: S,
        test: impl Fn(S::Value) -> Result<(), TestCaseError>,
    ) -> Result<(), String> {
        TestRunner::new(config())
            .run(&strategy, test)
            .map_err(|e| e.to_string())
    }
    vec![
        ("norm chain", go(low_rank_matrix(8), |m| check_norm_chain(&m))),
        ("linf2 vs linf", go(dense_matrix(10), |z| check_linf2_bound(&z))),
        ("linf2 incoherence bound", go(low_rank_matrix(10), |b| check_incoherence(&b))),
        (
            "projector algebra",
            go(tangent_case(8), |(b, z, mask)| check_projectors(&b, &z, &mask)),
        ),
        (
            "prox optimality",
            go((dense_matrix(4), 0.0f64..1.5), |(m, tau)| check_prox(&m, tau)),
        ),
        ("svd reconstruction", go(dense_matrix(10), |m| check_svd_reconstruction(&m))),
        (
            "instance determinism",
            go(instance_params(), check_instance_determinism),
        ),
    ]
}
