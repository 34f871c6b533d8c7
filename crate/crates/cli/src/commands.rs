use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use qcr::certificate::{verify_certificate_with, CertificateReport, GolfingConfig};
use qcr::harness::{export_grid, run_phase_grid, run_size_grid, GridSpec, RunControl};
use qcr::instance::{gen_planted, InstanceParams, PlantedInstance};
use qcr::io::{read_loaded, write_certificate, write_instance, write_result, Loaded};
use qcr::linalg::norm;
use qcr::solver::{
    relative_error, solve_quasi_clique, solve_rpca, QuasiCliqueParams, SolverMode, SolverOptions,
    RECOVERY_TOL,
};
use qcr::NormKind;

use crate::config::Config;
use crate::error::{
    CliError, EXIT_CERTIFICATE_FALSE, EXIT_INTERRUPTED, EXIT_NONCONVERGED, EXIT_OK,
};
use crate::{CertifyArgs, GenArgs, GridArgs, NormsArgs, SolveArgs};

static CANCEL: AtomicBool = AtomicBool::new(false);

fn load(path: &Path) -> Result<Loaded, CliError> {
    Ok(read_loaded(path)?)
}

pub fn gen(a: GenArgs, cfg: &Config) -> Result<u8, CliError> {
    let params = InstanceParams::new(
        cfg.require(a.n, "n")?,
        cfg.require(a.nc, "nc")?,
        cfg.require(a.gamma, "gamma")?,
        cfg.require(a.rho, "rho")?,
        cfg.or(a.seed, "seed")?.unwrap_or(0),
    )?;
    let out: PathBuf = cfg.require(a.out, "out")?;
    let inst = gen_planted(params)?;
    write_instance(&out, &inst)?;
    println!("n {}", inst.n());
    println!("n_c {}", inst.params.n_c);
    println!("gamma_support {}", inst.gamma_support.len());
    println!("noise_support {}", inst.noise_support.len());
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn parse_mode(s: &str) -> Result<SolverMode, CliError> {
    match s {
        "plain" => Ok(SolverMode::PlainDecomposition),
        "quasi_clique" | "quasi-clique" => Ok(SolverMode::QuasiCliqueConstrained),
        other => Err(CliError::Usage(format!(
            "unknown mode `{other}`; expected plain or quasi_clique"
        ))),
    }
}

pub fn solve(a: SolveArgs, cfg: &Config) -> Result<u8, CliError> {
    let input: PathBuf = cfg.require(a.input, "input")?;
    let mode = parse_mode(&cfg.or(a.mode, "mode")?.unwrap_or_else(|| "plain".into()))?;
    let defaults = SolverOptions::default();
    let opts = SolverOptions {
        lambda: cfg.or(a.lambda, "lambda")?,
        mu0: cfg.or(a.mu0, "mu0")?,
        mu_growth: cfg.or(a.mu_growth, "mu_growth")?.unwrap_or(defaults.mu_growth),
        tol_primal: cfg.or(a.tol, "tol")?.unwrap_or(defaults.tol_primal),
        tol_dual: cfg.or(a.tol_dual, "tol_dual")?.unwrap_or(defaults.tol_dual),
        max_iters: cfg.or(a.max_iters, "max_iters")?.unwrap_or(defaults.max_iters),
        mode,
        record_trace: false,
    };
    opts.validate()?;
    let gamma = cfg.or(a.gamma, "gamma")?;
    let eta = cfg.or(a.eta, "eta")?;
    let out: Option<PathBuf> = cfg.or(a.out, "out")?;

    let loaded = load(&input)?;
    let truth: Option<&PlantedInstance> = match &loaded {
        Loaded::Instance(inst) => Some(inst),
        Loaded::Matrix(_) => None,
    };
    let m = loaded.matrix();

    let res = match mode {
        SolverMode::PlainDecomposition => solve_rpca(m, &opts)?,
        SolverMode::QuasiCliqueConstrained => {
            let gamma = gamma.or(truth.map(|t| t.params.gamma)).ok_or_else(|| {
                CliError::Usage("quasi_clique mode needs --gamma for a bare matrix".into())
            })?;
            let eta = eta.or(truth.map(|t| t.params.n_c)).ok_or_else(|| {
                CliError::Usage("quasi_clique mode needs --eta for a bare matrix".into())
            })?;
            let qc = QuasiCliqueParams::new(gamma, eta)?;
            let res = solve_quasi_clique(m, &qc, &opts)?;
            let b = &res.b_star;
            println!(
                "density sum(X*) = {:.6} target = {:.6} entries in [{:.3e}, {:.6}]",
                b.sum(),
                qc.density_target(),
                b.min_entry(),
                b.max_entry()
            );
            res
        }
    };

    println!("iterations {}", res.iterations);
    println!("converged {}", res.converged);
    println!("primal_residual {:e}", res.primal_residual);
    println!("objective {}", res.objective);
    println!("lambda {}", res.lambda);
    let verdict = match truth {
        Some(inst) => {
            let rel = relative_error(&res.b_star, &inst.b0)?;
            let recovered = res.converged && rel <= RECOVERY_TOL;
            println!("rel_error {rel:e}");
            println!(
                "verdict {}",
                if recovered { "recovered" } else { "not recovered" }
            );
            Some((rel, recovered))
        }
        None => None,
    };
    if let Some(out) = &out {
        write_result(out, &res, verdict)?;
        println!("wrote {}", out.display());
    }
    if res.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "solver stopped after {} iterations without converging",
            res.iterations
        );
        Ok(EXIT_NONCONVERGED)
    }
}

fn condition_lines(r: &CertificateReport) -> [(&'static str, &'static str, f64, f64, bool); 5] {
    let c = &r.conditions;
    [
        ("qb_spectral", "||Q_B||", r.norm_qb, 0.125, c.qb_spectral),
        ("qb_on_gamma", "||P_G(UV' + Q_B)||_F", r.residual_golfing, r.lambda / 8.0, c.qb_on_gamma),
        ("qb_off_gamma", "||P_G^c(UV' + Q_B)||_inf", r.linf_complement_b, r.lambda / 4.0, c.qb_off_gamma),
        ("qc_spectral", "||Q_C||", r.norm_qc, 0.125, c.qc_spectral),
        ("qc_off_gamma", "||P_G^c Q_C||_inf", r.linf_complement_c, 0.25, c.qc_off_gamma),
    ]
}

pub fn certify(a: CertifyArgs, cfg: &Config) -> Result<u8, CliError> {
    let input: PathBuf = cfg.require(a.input, "input")?;
    let lambda = cfg.or(a.lambda, "lambda")?;
    let k0 = cfg.or(a.k0, "k0")?;
    let golf_seed = cfg.or(a.golf_seed, "golf_seed")?;
    let c0 = cfg.or(a.c0, "c0")?.unwrap_or(1.0);
    let with_matrices = a.with_matrices || cfg.get("with_matrices")?.unwrap_or(false);
    let out: Option<PathBuf> = cfg.or(a.out, "out")?;
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(CliError::Usage(format!("c0 = {c0} must be positive")));
    }

    let inst = match load(&input)? {
        Loaded::Instance(inst) => inst,
        Loaded::Matrix(_) => {
            return Err(CliError::Usage(format!(
                "{} has no ground truth; certify needs an instance file",
                input.display()
            )))
        }
    };
    let n = inst.n();
    let lambda = lambda.unwrap_or(1.0 / (n as f64).sqrt());
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CliError::Usage(format!("lambda = {lambda} must be positive")));
    }
    let seed = golf_seed.unwrap_or(inst.params.seed);
    let golf = match k0 {
        Some(k0) => GolfingConfig::with_k0(k0, inst.noise_support.density(), seed)?,
        None => GolfingConfig::for_instance(&inst, seed)?,
    };

    let report = verify_certificate_with(&inst, lambda, &golf, c0)?;
    let lines = condition_lines(&report);
    for (_, label, value, bound, ok) in &lines {
        println!(
            "{label:<28} {value:<12.6e} < {bound:<12.6e} {}",
            if *ok { "ok" } else { "FAIL" }
        );
    }
    println!(
        "{:<28} {:<12.6e} <= {:<11.6e} {}",
        "||P_G P_T||",
        report.opnorm_pgpt,
        0.5,
        if report.opnorm_pgpt <= 0.5 { "ok" } else { "FAIL" }
    );
    println!(
        "regime p_observed = {:.4} bound = {:.4} ({})",
        report.regime.p_observed,
        report.regime.bound,
        if report.regime.satisfied { "inside" } else { "outside" }
    );
    println!("overall {}", report.overall);
    if let Some(out) = &out {
        write_certificate(out, &report, with_matrices)?;
        println!("wrote {}", out.display());
    }
    if report.overall {
        Ok(EXIT_OK)
    } else {
        let failed: Vec<&str> = lines
            .iter()
            .filter(|l| !l.4)
            .map(|l| l.0)
            .chain((report.opnorm_pgpt > 0.5).then_some("opnorm_pgpt"))
            .chain((report.lambda >= 1.0).then_some("lambda"))
            .collect();
        eprintln!("certificate failed: {}", failed.join(", "));
        Ok(EXIT_CERTIFICATE_FALSE)
    }
}

pub fn grid(a: GridArgs, cfg: &Config, threads: Option<usize>) -> Result<u8, CliError> {
    let kind = cfg.or(a.kind, "kind")?.unwrap_or_else(|| "size".into());
    let trials = cfg.or(a.trials, "trials")?.unwrap_or(10);
    let base_seed = cfg.or(a.base_seed, "base_seed")?.unwrap_or(2024);
    let out_dir: PathBuf = cfg.or(a.out_dir, "out_dir")?.unwrap_or_else(|| ".".into());
    let spec = match kind.as_str() {
        "size" => GridSpec::size_grid(cfg.or(a.n_max, "n_max")?.unwrap_or(100), trials, base_seed),
        "phase" => GridSpec::phase_grid(
            cfg.or(a.n, "n")?.unwrap_or(100),
            cfg.or(a.nc, "nc")?.unwrap_or(85),
            trials,
            base_seed,
        ),
        other => {
            return Err(CliError::Usage(format!(
                "unknown grid kind `{other}`; expected size or phase"
            )))
        }
    };
    spec.validate()?;
    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Fs {
        path: out_dir.clone(),
        source,
    })?;

    if let Err(e) = ctrlc::set_handler(|| CANCEL.store(true, Ordering::SeqCst)) {
        log::warn!("could not install interrupt handler: {e}");
    }
    let ctl = RunControl {
        threads,
        cancel: Some(&CANCEL),
    };
    let (rows, cols) = spec.shape();
    log::info!("{kind} grid: {rows}x{cols} cells, {trials} trials each");
    let grid = match kind.as_str() {
        "size" => run_size_grid(&spec, &ctl)?,
        _ => run_phase_grid(&spec, &ctl)?,
    };
    let files = export_grid(&grid, &out_dir.join(format!("{kind}_grid")))?;
    println!(
        "{:>10} {}",
        format!("{}\\{}", spec.axis1.param, spec.axis2.param),
        spec.axis2
            .values
            .iter()
            .map(|v| format!("{v:>6}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    for (v, row) in spec.axis1.values.iter().zip(&grid.success_rate) {
        println!(
            "{v:>10} {}",
            row.iter()
                .map(|r| format!("{r:>6.2}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    for f in &files {
        println!("wrote {}", f.display());
    }
    if grid.complete {
        Ok(EXIT_OK)
    } else {
        eprintln!("interrupted; partial grid written with complete = false");
        Ok(EXIT_INTERRUPTED)
    }
}

pub fn norms(a: NormsArgs, cfg: &Config) -> Result<u8, CliError> {
    let input: PathBuf = cfg.require(a.input, "input")?;
    let loaded = load(&input)?;
    let m = loaded.matrix();
    for kind in NormKind::ALL {
        println!("{:<10} {}", kind.name(), norm(m, kind)?);
    }
    Ok(EXIT_OK)
}
