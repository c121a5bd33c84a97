//! Primal and dual objectives.
//!
//! Entropies use the sign convention `S(Γ) = Tr Γ log Γ` (the negative of
//! the physical von Neumann entropy).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, eigh_raw, frobenius_inner, mat_log, HermitianMatrix, Spectrum};
use crate::tensor::{self, kronecker_sum, restrict_instance, ActiveSubspace, TensorShape};

/// Eigenvalues at or below this are treated as exact zeros in `x log x`.
pub const ENTROPY_KERNEL_TOL: f64 = 1e-14;

/// A multi-marginal problem: marginals, interaction, temperature, and the
/// active subspace on which the solver works.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    shape: TensorShape,
    marginals: Vec<HermitianMatrix>,
    hamiltonian: HermitianMatrix,
    epsilon: f64,
    subspace: ActiveSubspace,
    reduced_marginals: Vec<HermitianMatrix>,
    reduced_hamiltonian: HermitianMatrix,
    log_marginals: Vec<HermitianMatrix>,
    hamiltonian_norm: f64,
    warnings: Vec<String>,
}

impl ProblemInstance {
    /// Validates the data and restricts it to the active subspace.
    pub fn new(marginals: Vec<HermitianMatrix>, hamiltonian: HermitianMatrix, epsilon: f64) -> Result<Self> {
        Self::with_kernel_tol(marginals, hamiltonian, epsilon, None)
    }

    pub fn with_kernel_tol(
        marginals: Vec<HermitianMatrix>,
        hamiltonian: HermitianMatrix,
        epsilon: f64,
        kernel_tol: Option<f64>,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let shape = TensorShape::new(marginals.iter().map(|g| g.dim()).collect())?;
        let restriction = restrict_instance(&marginals, &hamiltonian, kernel_tol)?;
        let log_marginals = restriction
            .marginals
            .iter()
            .map(|g| mat_log(g, 0.0))
            .collect::<Result<Vec<_>>>()?;
        let hamiltonian_norm = linalg::op_norm(&restriction.hamiltonian);
        Ok(Self {
            shape,
            marginals,
            hamiltonian,
            epsilon,
            subspace: restriction.subspace,
            reduced_marginals: restriction.marginals,
            reduced_hamiltonian: restriction.hamiltonian,
            log_marginals,
            hamiltonian_norm,
            warnings: restriction.warnings,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.shape.n_slots()
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn reduced_shape(&self) -> &TensorShape {
        self.subspace.reduced_shape()
    }

    pub fn marginals(&self) -> &[HermitianMatrix] {
        &self.marginals
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn subspace(&self) -> &ActiveSubspace {
        &self.subspace
    }

    /// Marginals restricted to the complement of their kernels (strictly
    /// positive definite).
    pub fn reduced_marginals(&self) -> &[HermitianMatrix] {
        &self.reduced_marginals
    }

    /// `H_O`, the compression of the Hamiltonian to the active subspace.
    pub fn reduced_hamiltonian(&self) -> &HermitianMatrix {
        &self.reduced_hamiltonian
    }

    /// `log γ_i` on the reduced space.
    pub fn log_marginal(&self, slot: usize) -> &HermitianMatrix {
        &self.log_marginals[slot]
    }

    /// `‖H_O‖_∞`.
    pub fn hamiltonian_norm(&self) -> f64 {
        self.hamiltonian_norm
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same marginals, different Hamiltonian or temperature.
    pub fn with_hamiltonian(&self, hamiltonian: HermitianMatrix, epsilon: f64) -> Result<Self> {
        Self::new(self.marginals.clone(), hamiltonian, epsilon)
    }

    /// The zero-interaction potentials `U_i = ε log γ_i`.
    pub fn log_marginal_potentials(&self) -> PotentialVector {
        PotentialVector::new(self.log_marginals.iter().map(|l| l.scale(self.epsilon)).collect())
    }
}

/// Dual variables `(U_1, …, U_N)` together with the accumulated gauge
/// translation.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialVector {
    pub entries: Vec<HermitianMatrix>,
    /// Sum of all scalar translations applied so far; components sum to zero.
    pub gauge: Vec<f64>,
}

impl PotentialVector {
    pub fn new(entries: Vec<HermitianMatrix>) -> Self {
        let n = entries.len();
        Self {
            entries,
            gauge: vec![0.0; n],
        }
    }

    pub fn zeros(shape: &TensorShape) -> Self {
        Self::new(shape.dims().iter().map(|&d| HermitianMatrix::zeros(d)).collect())
    }

    pub fn n_slots(&self) -> usize {
        self.entries.len()
    }

    /// Adds `a_i · 1` to each slot. Only zero-sum translations leave the
    /// dual value unchanged; others are rejected.
    pub fn translated(&self, a: &[f64]) -> Result<Self> {
        if a.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                context: "translation vector",
                expected: self.entries.len(),
                found: a.len(),
            });
        }
        let sum: f64 = a.iter().sum();
        let scale: f64 = a.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-12 * scale {
            return Err(Error::InvalidSettings("translation components must sum to zero"));
        }
        Ok(self.translated_unchecked(a))
    }

    pub(crate) fn translated_unchecked(&self, a: &[f64]) -> Self {
        Self {
            entries: self.entries.iter().zip(a).map(|(u, &s)| u.shift(s)).collect(),
            gauge: self.gauge.iter().zip(a).map(|(g, &s)| g + s).collect(),
        }
    }

    /// Largest slotwise operator-norm distance.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| linalg::op_norm(&a.sub(b)))
            .fold(0.0, f64::max)
    }

    fn check_against(&self, shape: &TensorShape) -> Result<()> {
        if self.entries.len() != shape.n_slots() {
            return Err(Error::DimensionMismatch {
                context: "potential count",
                expected: shape.n_slots(),
                found: self.entries.len(),
            });
        }
        for (u, &d) in self.entries.iter().zip(shape.dims()) {
            if u.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "potential dimension",
                    expected: d,
                    found: u.dim(),
                });
            }
        }
        Ok(())
    }
}

/// `S(Γ) = Tr Γ log Γ` from a spectrum, with `0 log 0 = 0`.
pub fn entropy_from_spectrum(spec: &Spectrum) -> f64 {
    spec.eigenvalues
        .iter()
        .filter(|&&x| x > ENTROPY_KERNEL_TOL)
        .map(|&x| x * x.ln())
        .sum()
}

/// `S(Γ) = Tr Γ log Γ`.
pub fn entropy(gamma: &HermitianMatrix) -> Result<f64> {
    Ok(entropy_from_spectrum(&eigh(gamma)?))
}

/// Umegaki relative entropy `Tr Γ (log Γ − log m)` for positive definite `m`.
pub fn relative_entropy(gamma: &HermitianMatrix, reference: &HermitianMatrix) -> Result<f64> {
    let log_m = mat_log(reference, 0.0)?;
    Ok(entropy(gamma)? - frobenius_inner(gamma, &log_m))
}

/// `λ_ε(A) = ε log Tr exp(A/ε)`, evaluated with the top eigenvalue factored
/// out so it never overflows.
pub fn lambda_eps(a: &HermitianMatrix, epsilon: f64) -> Result<f64> {
    Ok(lambda_eps_spectrum(&eigh(a)?.eigenvalues, epsilon))
}

pub(crate) fn lambda_eps_spectrum(eigenvalues: &[f64], epsilon: f64) -> f64 {
    let top = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = eigenvalues.iter().map(|&x| ((x - top) / epsilon).exp()).sum();
    top + epsilon * sum.ln()
}

/// Spectral data of `X = ⊕U − H_O` for one potential vector.
pub(crate) struct GibbsKernel {
    pub spec: Spectrum,
    pub epsilon: f64,
}

impl GibbsKernel {
    pub fn from_exponent(x: &DMatrix<Complex64>, epsilon: f64) -> Result<Self> {
        Ok(Self {
            spec: eigh_raw(x)?,
            epsilon,
        })
    }

    pub fn new(inst: &ProblemInstance, u: &PotentialVector) -> Result<Self> {
        let shape = inst.reduced_shape();
        u.check_against(shape)?;
        let x = kronecker_sum(&u.entries, shape)?.sub(inst.reduced_hamiltonian());
        Self::from_exponent(x.as_matrix(), inst.epsilon())
    }

    /// `λ_ε(X)`.
    pub fn log_partition(&self) -> f64 {
        lambda_eps_spectrum(&self.spec.eigenvalues, self.epsilon)
    }

    /// `Tr exp(X/ε)`; may be `inf` for wildly unnormalized potentials.
    pub fn trace_exp(&self) -> f64 {
        (self.log_partition() / self.epsilon).exp()
    }

    /// `exp(X/ε)` as a raw matrix.
    pub fn coupling_raw(&self) -> DMatrix<Complex64> {
        let e = self.epsilon;
        self.spec.apply_raw(|x| (x / e).exp())
    }

    /// `Tr Γ log Γ` of `Γ = exp(X/ε)`, computed spectrally.
    pub fn entropy(&self) -> f64 {
        let e = self.epsilon;
        self.spec
            .eigenvalues
            .iter()
            .map(|&x| {
                let g = (x / e).exp();
                if g > ENTROPY_KERNEL_TOL {
                    g * (x / e)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// The coupling `exp((⊕U − H_O)/ε)` on the reduced space.
pub fn coupling(inst: &ProblemInstance, u: &PotentialVector) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::from_raw(GibbsKernel::new(inst, u)?.coupling_raw()))
}

const DENSITY_TRACE_TOL: f64 = 1e-8;
const SUPPORT_TOL: f64 = 1e-10;

/// Primal functional `Tr(HΓ) + ε Tr(Γ log Γ)` for a density matrix on the
/// full space supported on the active subspace.
pub fn primal_value(inst: &ProblemInstance, gamma: &HermitianMatrix) -> Result<f64> {
    if gamma.dim() != inst.shape().total() {
        return Err(Error::DimensionMismatch {
            context: "primal_value operand",
            expected: inst.shape().total(),
            found: gamma.dim(),
        });
    }
    let spec = eigh(gamma)?;
    let scale = spec.max().abs().max(1.0);
    if spec.min() < -1e-10 * scale {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {:.3e}",
            spec.min()
        )));
    }
    let tr = linalg::trace(gamma);
    if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
        return Err(Error::NotDensityMatrix(format!("trace {tr}")));
    }
    if !inst.subspace().is_trivial() {
        let on_o = linalg::trace(&inst.subspace().compress(gamma)?);
        if (tr - on_o).abs() > SUPPORT_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "mass {:.3e} outside the active subspace",
                tr - on_o
            )));
        }
    }
    Ok(frobenius_inner(inst.hamiltonian(), gamma) + inst.epsilon() * entropy_from_spectrum(&spec))
}

/// Dual functional `Σ Tr(U_i γ_i) − ε Tr exp[(⊕U − H_O)/ε] + ε`, with
/// potentials on the reduced spaces.
pub fn dual_value(inst: &ProblemInstance, u: &PotentialVector) -> Result<f64> {
    let kernel = GibbsKernel::new(inst, u)?;
    Ok(dual_from_kernel(inst, u, &kernel))
}

pub(crate) fn dual_from_kernel(inst: &ProblemInstance, u: &PotentialVector, kernel: &GibbsKernel) -> f64 {
    let linear: f64 = u
        .entries
        .iter()
        .zip(inst.reduced_marginals())
        .map(|(ui, gi)| frobenius_inner(ui, gi))
        .sum();
    let eps = inst.epsilon();
    linear - eps * kernel.trace_exp() + eps
}

/// Legendre transform of the entropy, `S*(Y) = Tr exp(Y − 1)`.
pub fn entropy_legendre(y: &HermitianMatrix) -> Result<f64> {
    let spec = eigh(y)?;
    Ok(spec.eigenvalues.iter().map(|&x| (x - 1.0).exp()).sum())
}

/// `F(Γ) − D(U)`.
pub fn duality_gap(inst: &ProblemInstance, gamma: &HermitianMatrix, u: &PotentialVector) -> Result<f64> {
    Ok(primal_value(inst, gamma)? - dual_value(inst, u)?)
}

/// Replaces `H` by `H − ε log(⊗ m_i)` so that solving the new instance
/// minimizes `Tr(HΓ) + ε S(Γ | ⊗ m_i)`. References live on the full factor
/// spaces and must be positive definite.
pub fn umegaki_transform(inst: &ProblemInstance, refs: &[HermitianMatrix]) -> Result<ProblemInstance> {
    let shape = inst.shape();
    if refs.len() != shape.n_slots() {
        return Err(Error::DimensionMismatch {
            context: "reference count",
            expected: shape.n_slots(),
            found: refs.len(),
        });
    }
    let mut logs = Vec::with_capacity(refs.len());
    for (slot, m) in refs.iter().enumerate() {
        if m.dim() != shape.dims()[slot] {
            return Err(Error::DimensionMismatch {
                context: "reference dimension",
                expected: shape.dims()[slot],
                found: m.dim(),
            });
        }
        let spec = eigh(m)?;
        let tol = tensor::marginal_kernel_tol(m.dim()) * spec.max().abs().max(1.0);
        if spec.min() <= tol {
            return Err(Error::ReferenceNotPositiveDefinite {
                slot,
                min_eigenvalue: spec.min(),
            });
        }
        logs.push(spec.map(f64::ln));
    }
    let log_m = kronecker_sum(&logs, shape)?;
    let h = inst.hamiltonian().sub(&log_m.scale(inst.epsilon()));
    ProblemInstance::new(inst.marginals().to_vec(), h, inst.epsilon())
}

/// Residual of `S(Γ|1) = S(Γ|m) + Σ [S(γ_i) − S(γ_i|m_i)]` for a feasible
/// `Γ` with marginals `γ_i`.
pub fn umegaki_identity_residual(
    gamma: &HermitianMatrix,
    marginals: &[HermitianMatrix],
    refs: &[HermitianMatrix],
) -> Result<f64> {
    let joint = tensor::tensor_product_of(refs);
    let lhs = entropy(gamma)?;
    let mut rhs = relative_entropy(gamma, &joint)?;
    for (g, m) in marginals.iter().zip(refs) {
        rhs += entropy(g)? - relative_entropy(g, m)?;
    }
    Ok(lhs - rhs)
}
