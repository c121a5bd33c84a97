use num_complex::Complex64;
use thiserror::Error;

use crate::sinkhorn::SolveReport;

/// Errors raised by the solver and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid tensor shape: {0}")]
    InvalidShape(String),

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("negative eigenvalue {min:.3e} below tolerance")]
    NegativeEigenvalue { min: f64 },

    #[error("eigenvalue {min:.3e} below kernel tolerance; restrict to the active subspace first")]
    SingularLog { min: f64 },

    #[error("marginal {slot} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    MarginalNotPsd { slot: usize, min_eigenvalue: f64 },

    #[error("marginal {slot} has trace {trace} (expected 1)")]
    MarginalTraceNotOne { slot: usize, trace: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("reference matrix {slot} is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    ReferenceNotPositiveDefinite { slot: usize, min_eigenvalue: f64 },

    #[error("temperature must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid setting: {0}")]
    InvalidSettings(&'static str),

    #[error("transform in slot {slot} did not converge: residual {residual:.3e} after {iterations} iterations")]
    InnerNoConvergence {
        slot: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("sinkhorn did not converge within {} sweeps", .0.sweeps)]
    MaxSweepsExceeded(Box<SolveReport>),

    #[error("perturbed marginal {slot} is not positive definite")]
    PerturbedMarginalInfeasible { slot: usize },

    #[error("fermionic sector is empty: N = {n} exceeds d = {d}")]
    FermionicSectorEmpty { d: usize, n: usize },

    #[error("marginal violates the Pauli principle: eigenvalue {eigenvalue} exceeds 1/N")]
    PauliInfeasible {
        eigenvalue: f64,
        witness: Vec<Complex64>,
    },

    #[error("marginal has eigenvalue {eigenvalue} at the Pauli bound 1/N; no maximizer exists")]
    PauliBoundary {
        eigenvalue: f64,
        witness: Vec<Complex64>,
    },

    #[error("marginal has a nontrivial kernel (min eigenvalue {min_eigenvalue:.3e}); restrict the single-particle space first")]
    MarginalSingular { min_eigenvalue: f64 },

    #[error("hamiltonian violates permutation symmetry by {violation:.3e}")]
    SymmetryViolation { violation: f64 },

    #[error("iteration budget of {iterations} steps exhausted (gradient norm {grad_norm:.3e})")]
    IterationBudgetExceeded { iterations: usize, grad_norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
