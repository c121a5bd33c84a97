//! Non-commutative multi-marginal entropic optimal transport.
//!
//! Given density matrices `γ_1, …, γ_N`, a Hamiltonian `H` on the tensor
//! product and a temperature `ε > 0`, the solver finds the coupling `Γ`
//! minimizing `Tr(HΓ) + ε Tr(Γ log Γ)` among states with partial traces
//! `γ_i`, together with the dual potentials `U_i` and a certified duality
//! gap. Bosonic and fermionic variants with a single marginal live in
//! [`symmetric`].
//!
//! ```
//! use qsink::{random_instance, solve, SinkhornSettings};
//!
//! let inst = random_instance(1, &[2, 2], 1.0, 1.0).unwrap();
//! let report = solve(&inst, None, &SinkhornSettings::default()).unwrap();
//! assert!(report.gap.abs() < 1e-7);
//! ```

pub mod error;
pub mod functionals;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod sinkhorn;
pub mod symmetric;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use functionals::{
    coupling, dual_value, duality_gap, entropy, entropy_legendre, lambda_eps, primal_value, relative_entropy,
    umegaki_identity_residual, umegaki_transform, PotentialVector, ProblemInstance,
};
pub use linalg::{eigh, frobenius_inner, mat_exp, mat_log, op_norm, trace, trace_norm, HermitianMatrix, Spectrum};
pub use oracle::{classical_sinkhorn, dense_dual_ascent, gibbs_check, sector_newton_oracle};
pub use random::{diagonal_instance, random_instance};
pub use sinkhorn::{
    frechet_check, gauge_align, one_step, renormalize, solve, sweep_tau, FrechetCheck, SinkhornSettings, SolveReport,
    SweepRecord,
};
pub use symmetric::{
    build_sector, pauli_feasible, project_sector, symmetric_dual_value, symmetric_solve, symmetrize_check, PauliAssessment, PauliVerdict,
    SectorBasis, SectorKind, SymmetricInstance, SymmetricReport, SymmetricSettings,
};
pub use tensor::{
    embed_q, expand_to_full, kronecker_sum, partial_trace, permute_s, restrict_instance, ActiveSubspace, TensorShape,
};
pub use transform::{check_regularity_bounds, hep_transform, transform_residual, RegularityReport, TransformSettings};
