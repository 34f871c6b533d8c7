//! Recovery of planted quasi-cliques by low-rank plus sparse decomposition.
//!
//! The adjacency matrix `A` of a graph with a planted dense block is split
//! into a low-rank part (the block indicator) and a sparse part (missing
//! block edges and diversionary edges) by minimizing
//! `‖B‖_* + λ‖C‖₁` subject to `B + C = A`. Besides the solver, the crate
//! builds the dual optimality certificate that explains when this works and
//! runs the Monte-Carlo sweeps that map out where it does.
//!
//! * [`linalg`]: dense matrices, SVD, norms, proximal maps, projections
//! * [`instance`]: seeded planted-instance generators
//! * [`solver`]: ADMM solvers for the plain and density-constrained programs
//! * [`certificate`]: golfing-scheme dual certificate and its checks
//! * [`harness`]: recovery grids over graph size, density and noise
//! * [`io`]: text, CSV, PGM and JSON formats

pub mod certificate;
pub mod harness;
pub mod instance;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod solver;

pub use linalg::{DenseMatrix, NormKind, SupportSet, SvdFactors, TangentSpace};
