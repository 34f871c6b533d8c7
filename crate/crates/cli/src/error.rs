use std::path::PathBuf;

use qcr::certificate::CertificateError;
use qcr::harness::HarnessError;
use qcr::instance::InstanceError;
use qcr::io::IoError;
use qcr::solver::SolverError;
use qcr::linalg::LinalgError;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CERTIFICATE_FALSE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NONCONVERGED: u8 = 4;
pub const EXIT_NEUMANN: u8 = 5;
pub const EXIT_INTERRUPTED: u8 = 130;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Instance(_) | CliError::Linalg(_) => EXIT_VALIDATION,
            CliError::Fs { .. } => EXIT_IO,
            CliError::Solver(_) => EXIT_VALIDATION,
            CliError::Certificate(CertificateError::NeumannDiverged { .. }) => EXIT_NEUMANN,
            CliError::Certificate(_) => EXIT_VALIDATION,
            CliError::Harness(HarnessError::Io { .. } | HarnessError::ThreadPool(_)) => EXIT_IO,
            CliError::Harness(_) => EXIT_VALIDATION,
            CliError::Io(IoError::Io { .. } | IoError::Json { .. }) => EXIT_IO,
            CliError::Io(_) => EXIT_VALIDATION,
        }
    }
}
