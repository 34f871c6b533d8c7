#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;

use qcr::io::read_loaded;
use qcr::solver::{solve_rpca, SolverOptions};

pub const ORACLE_REL_TOL: f64 = 1e-4;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub struct OracleCase {
    pub file: String,
    pub lambda: f64,
    pub objective: f64,
}

/// Reference optima from an interior-point solver; see
/// `tests/data/oracle/make_oracle.py`.
pub fn oracle_cases() -> Vec<OracleCase> {
    let dir = data_dir().join("oracle");
    let text = std::fs::read_to_string(dir.join("objectives.csv")).expect("objectives.csv");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            OracleCase {
                file: f[0].to_string(),
                lambda: f[1].parse().unwrap(),
                objective: f[2].parse().unwrap(),
            }
        })
        .collect()
}

/// `(file, ours, reference, relative gap)` for every case.
pub fn oracle_gaps() -> Vec<(String, f64, f64, f64)> {
    let dir = data_dir().join("oracle");
    oracle_cases()
        .into_iter()
        .map(|c| {
            let loaded = read_loaded(&dir.join(&c.file)).expect("instance");
            let opts = SolverOptions {
                lambda: Some(c.lambda),
                ..SolverOptions::default()
            };
            let res = solve_rpca(loaded.matrix(), &opts).expect("solve");
            assert!(res.converged, "{} did not converge", c.file);
            let gap = (res.objective - c.objective).abs() / c.objective.abs().max(1e-12);
            (c.file, res.objective, c.objective, gap)
        })
        .collect()
}
