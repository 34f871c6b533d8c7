//! File formats.
//!
//! Instance file: a header `n n_c gamma rho seed` followed by one `i j v`
//! line per nonzero entry of the adjacency matrix (both triangles, 0-based).
//! Matrix file: a header holding `n` alone, then `i j v` triplets. Lines
//! starting with `#` are comments. Dense CSV is one matrix row per line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificate::CertificateReport;
use crate::instance::{InstanceParams, PlantedInstance};
use crate::linalg::DenseMatrix;
use crate::solver::DecompositionResult;

/// Results for `n` above this keep their matrices in sidecar files.
pub const INLINE_MAX_N: usize = 500;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid contents: {0}")]
    Invalid(String),
}

impl IoError {
    /// Attaches a path to parse errors.
    fn at(self, path: &Path) -> IoError {
        match self {
            IoError::Parse { line, msg } => IoError::Invalid(format!("{}:{line}: {msg}", path.display())),
            other => other,
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, IoError> {
    let tok = tok.ok_or_else(|| IoError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| IoError::Parse {
        line,
        msg: format!("bad {what} {tok:?}"),
    })
}

fn push_triplets(out: &mut String, m: &DenseMatrix) {
    let n = m.n_cols();
    for (k, &v) in m.as_slice().iter().enumerate() {
        if v != 0.0 {
            out.push_str(&format!("{} {} {v}\n", k / n, k % n));
        }
    }
}

fn parse_triplets<'a>(
    n: usize,
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<DenseMatrix, IoError> {
    let mut m = DenseMatrix::zeros(n, n);
    for (line, text) in lines {
        let mut it = text.split_whitespace();
        let i: usize = field(it.next(), line, "row index")?;
        let j: usize = field(it.next(), line, "column index")?;
        let v: f64 = field(it.next(), line, "value")?;
        if it.next().is_some() {
            return Err(IoError::Parse {
                line,
                msg: "expected `i j v`".into(),
            });
        }
        if i >= n || j >= n {
            return Err(IoError::Parse {
                line,
                msg: format!("index ({i}, {j}) outside n = {n}"),
            });
        }
        if !v.is_finite() {
            return Err(IoError::Parse {
                line,
                msg: "non-finite value".into(),
            });
        }
        m[(i, j)] = v;
    }
    Ok(m)
}

pub fn instance_to_string(inst: &PlantedInstance) -> String {
    let p = &inst.params;
    let mut out = format!("{} {} {} {} {}\n", p.n, p.n_c, p.gamma, p.rho, p.seed);
    push_triplets(&mut out, &inst.adjacency);
    out
}

pub fn matrix_to_string(m: &DenseMatrix) -> String {
    let mut out = format!("{}\n", m.n_rows());
    push_triplets(&mut out, m);
    out
}

/// Contents of an instance or matrix file.
#[derive(Clone, Debug, PartialEq)]
pub enum Loaded {
    Instance(PlantedInstance),
    Matrix(DenseMatrix),
}

impl Loaded {
    pub fn matrix(&self) -> &DenseMatrix {
        match self {
            Loaded::Instance(inst) => &inst.adjacency,
            Loaded::Matrix(m) => m,
        }
    }
}

/// Parses either format, telling them apart by the header length.
pub fn parse_loaded(text: &str) -> Result<Loaded, IoError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| IoError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    match toks.len() {
        1 => {
            let n: usize = field(Some(toks[0]), hline, "n")?;
            Ok(Loaded::Matrix(parse_triplets(n, lines)?))
        }
        5 => {
            let n: usize = field(Some(toks[0]), hline, "n")?;
            let params = InstanceParams::new(
                n,
                field(Some(toks[1]), hline, "n_c")?,
                field(Some(toks[2]), hline, "gamma")?,
                field(Some(toks[3]), hline, "rho")?,
                field(Some(toks[4]), hline, "seed")?,
            )
            .map_err(|e| IoError::Invalid(e.to_string()))?;
            let a = parse_triplets(n, lines)?;
            let inst = PlantedInstance::from_adjacency(params, a)
                .map_err(|e| IoError::Invalid(e.to_string()))?;
            Ok(Loaded::Instance(inst))
        }
        k => Err(IoError::Parse {
            line: hline,
            msg: format!("header has {k} fields; expected 1 (matrix) or 5 (instance)"),
        }),
    }
}

pub fn read_loaded(path: &Path) -> Result<Loaded, IoError> {
    parse_loaded(&read(path)?).map_err(|e| e.at(path))
}

pub fn write_instance(path: &Path, inst: &PlantedInstance) -> Result<(), IoError> {
    write(path, instance_to_string(inst).as_bytes())
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), IoError> {
    write(path, matrix_to_string(m).as_bytes())
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.n_rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv_matrix(text: &str) -> Result<DenseMatrix, IoError> {
    let mut entries = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, l) in content_lines(text) {
        let row = l
            .split(',')
            .map(|t| field::<f64>(Some(t.trim()), line, "value"))
            .collect::<Result<Vec<_>, _>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(IoError::Parse {
                    line,
                    msg: format!("{} columns, expected {c}", row.len()),
                })
            }
            _ => {}
        }
        entries.extend(row);
        rows += 1;
    }
    DenseMatrix::from_row_major(rows, cols.unwrap_or(0), entries)
        .map_err(|e| IoError::Invalid(e.to_string()))
}

/// A matrix stored in the JSON itself or in a sidecar matrix file whose path
/// is relative to the JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixRef {
    Inline(DenseMatrix),
    File(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub n: usize,
    pub iterations: usize,
    pub primal_residual: f64,
    pub objective: f64,
    pub lambda: f64,
    pub converged: bool,
    /// Present when ground truth was known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovered: Option<bool>,
    pub b_star: MatrixRef,
    pub c_star: MatrixRef,
}

fn sidecar(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.txt"))
}

/// Writes a solve result as JSON; matrices go to `<stem>.b_star.txt` and
/// `<stem>.c_star.txt` when `n > INLINE_MAX_N`.
pub fn write_result(
    path: &Path,
    res: &DecompositionResult,
    truth: Option<(f64, bool)>,
) -> Result<(), IoError> {
    let n = res.b_star.n_rows();
    let (b_star, c_star) = if n <= INLINE_MAX_N {
        (
            MatrixRef::Inline(res.b_star.clone()),
            MatrixRef::Inline(res.c_star.clone()),
        )
    } else {
        let mut refs = Vec::new();
        for (tag, m) in [("b_star", &res.b_star), ("c_star", &res.c_star)] {
            let p = sidecar(path, tag);
            write_matrix(&p, m)?;
            refs.push(MatrixRef::File(
                p.file_name().unwrap().to_string_lossy().into_owned(),
            ));
        }
        let c = refs.pop().unwrap();
        (refs.pop().unwrap(), c)
    };
    let file = ResultFile {
        n,
        iterations: res.iterations,
        primal_residual: res.primal_residual,
        objective: res.objective,
        lambda: res.lambda,
        converged: res.converged,
        rel_error: truth.map(|t| t.0),
        recovered: truth.map(|t| t.1),
        b_star,
        c_star,
    };
    write_json(path, &file)
}

/// Reads a result file, resolving sidecar matrices.
pub fn read_result(path: &Path) -> Result<(ResultFile, DenseMatrix, DenseMatrix), IoError> {
    let file: ResultFile = read_json(path)?;
    let load = |r: &MatrixRef| -> Result<DenseMatrix, IoError> {
        match r {
            MatrixRef::Inline(m) => Ok(m.clone()),
            MatrixRef::File(name) => {
                let p = path.with_file_name(name);
                match read_loaded(&p)? {
                    Loaded::Matrix(m) => Ok(m),
                    Loaded::Instance(_) => Err(IoError::Invalid(format!(
                        "{} is an instance file, expected a matrix",
                        p.display()
                    ))),
                }
            }
        }
    };
    let b = load(&file.b_star)?;
    let c = load(&file.c_star)?;
    Ok((file, b, c))
}

pub fn write_certificate(
    path: &Path,
    report: &CertificateReport,
    include_matrices: bool,
) -> Result<(), IoError> {
    if include_matrices {
        write_json(path, report)
    } else {
        write_json(path, &report.clone().without_matrices())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    serde_json::from_str(&read(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}
