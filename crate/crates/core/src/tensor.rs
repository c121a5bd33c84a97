//! Multi-index bookkeeping on `C^{d_1} ⊗ … ⊗ C^{d_N}`.
//!
//! Composite indices are row-major over `(i_1, …, i_N)` with `i_1` the
//! slowest digit, so slot embeddings and partial traces reduce to stride
//! arithmetic.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, HermitianMatrix};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Factor dimensions of a tensor product space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorShape {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one factor is required".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("zero factor dimension in {dims:?}")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape(format!("dimension overflow for {dims:?}")))?;
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Self { dims, strides, total })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_slots(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn stride(&self, slot: usize) -> usize {
        self.strides[slot]
    }

    /// Shape after moving `slot` to the last position.
    pub fn permuted(&self, slot: usize) -> Self {
        let mut dims = self.dims.clone();
        let d = dims.remove(slot);
        dims.push(d);
        Self::new(dims).expect("permutation of a valid shape is valid")
    }

    pub(crate) fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.dims.len() {
            return Err(Error::DimensionMismatch {
                context: "slot index",
                expected: self.dims.len(),
                found: slot,
            });
        }
        Ok(())
    }

    pub(crate) fn check_total(&self, dim: usize, context: &'static str) -> Result<()> {
        if dim != self.total {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.total,
                found: dim,
            });
        }
        Ok(())
    }

    /// Composite indices whose digit in `slot` is zero.
    pub(crate) fn slot_bases(&self, slot: usize) -> Vec<usize> {
        let (d, s) = (self.dims[slot], self.strides[slot]);
        (0..self.total).filter(|&x| (x / s) % d == 0).collect()
    }

    pub(crate) fn digits(&self, mut x: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in 0..self.dims.len() {
            out[k] = x / self.strides[k];
            x %= self.strides[k];
        }
        out
    }

    pub(crate) fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }
}

/// Adds `Q_slot(a)` into the raw matrix `out`.
pub(crate) fn add_embedded(out: &mut DMatrix<Complex64>, slot: usize, a: &DMatrix<Complex64>, shape: &TensorShape, bases: &[usize]) {
    let s = shape.stride(slot);
    let d = a.nrows();
    for &b in bases {
        for j in 0..d {
            for k in 0..d {
                out[(b + j * s, b + k * s)] += a[(j, k)];
            }
        }
    }
}

/// `1 ⊗ … ⊗ A ⊗ … ⊗ 1` with `A` in `slot`.
pub fn embed_q(slot: usize, a: &HermitianMatrix, shape: &TensorShape) -> Result<HermitianMatrix> {
    shape.check_slot(slot)?;
    if a.dim() != shape.dims()[slot] {
        return Err(Error::DimensionMismatch {
            context: "embed_q operand",
            expected: shape.dims()[slot],
            found: a.dim(),
        });
    }
    let mut out = DMatrix::from_element(shape.total(), shape.total(), ZERO);
    add_embedded(&mut out, slot, a.as_matrix(), shape, &shape.slot_bases(slot));
    Ok(HermitianMatrix::from_raw(out))
}

pub(crate) fn partial_trace_raw(slot: usize, g: &DMatrix<Complex64>, shape: &TensorShape, bases: &[usize]) -> DMatrix<Complex64> {
    let d = shape.dims()[slot];
    let s = shape.stride(slot);
    let mut out = DMatrix::from_element(d, d, ZERO);
    for &b in bases {
        for j in 0..d {
            for k in 0..d {
                out[(j, k)] += g[(b + j * s, b + k * s)];
            }
        }
    }
    out
}

/// The marginal `P_slot(Γ)`, defined by `Tr(P_i(Γ) A) = Tr(Γ Q_i(A))`.
pub fn partial_trace(slot: usize, gamma: &HermitianMatrix, shape: &TensorShape) -> Result<HermitianMatrix> {
    shape.check_slot(slot)?;
    shape.check_total(gamma.dim(), "partial_trace operand")?;
    Ok(HermitianMatrix::from_raw(partial_trace_raw(
        slot,
        gamma.as_matrix(),
        shape,
        &shape.slot_bases(slot),
    )))
}

/// `⊕ U_i = Σ_i Q_i(U_i)`.
pub fn kronecker_sum(us: &[HermitianMatrix], shape: &TensorShape) -> Result<HermitianMatrix> {
    if us.len() != shape.n_slots() {
        return Err(Error::DimensionMismatch {
            context: "kronecker_sum operand count",
            expected: shape.n_slots(),
            found: us.len(),
        });
    }
    let mut out = DMatrix::from_element(shape.total(), shape.total(), ZERO);
    for (i, u) in us.iter().enumerate() {
        if u.dim() != shape.dims()[i] {
            return Err(Error::DimensionMismatch {
                context: "kronecker_sum operand",
                expected: shape.dims()[i],
                found: u.dim(),
            });
        }
        add_embedded(&mut out, i, u.as_matrix(), shape, &shape.slot_bases(i));
    }
    Ok(HermitianMatrix::from_raw(out))
}

/// Tensor product `A_1 ⊗ … ⊗ A_N` of raw matrices.
pub(crate) fn tensor_product(factors: &[&DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

pub fn tensor_product_of(factors: &[HermitianMatrix]) -> HermitianMatrix {
    let raw: Vec<&DMatrix<Complex64>> = factors.iter().map(|f| f.as_matrix()).collect();
    HermitianMatrix::from_raw(tensor_product(&raw))
}

/// The basis permutation moving `slot` to the last tensor factor:
/// `S_i(A_1 ⊗ … ⊗ A_N) = A_1 ⊗ … ⊗ A_{i-1} ⊗ A_{i+1} ⊗ … ⊗ A_N ⊗ A_i`.
/// The result lives on [`TensorShape::permuted`].
pub fn permute_s(slot: usize, a: &HermitianMatrix, shape: &TensorShape) -> Result<HermitianMatrix> {
    shape.check_slot(slot)?;
    shape.check_total(a.dim(), "permute_s operand")?;
    let target = shape.permuted(slot);
    let map: Vec<usize> = (0..shape.total())
        .map(|x| {
            let mut digits = shape.digits(x);
            let moved = digits.remove(slot);
            digits.push(moved);
            target.index(&digits)
        })
        .collect();
    let src = a.as_matrix();
    let mut out = DMatrix::from_element(shape.total(), shape.total(), ZERO);
    for x in 0..shape.total() {
        for y in 0..shape.total() {
            out[(map[x], map[y])] = src[(x, y)];
        }
    }
    Ok(HermitianMatrix::from_raw(out))
}

/// The active subspace `⊗ (ker γ_i)^⊥` as one isometry per factor.
#[derive(Clone, Debug)]
pub struct ActiveSubspace {
    isometries: Vec<DMatrix<Complex64>>,
    trivial: Vec<bool>,
    full: TensorShape,
    reduced: TensorShape,
}

impl ActiveSubspace {
    /// The whole space, with identity isometries.
    pub fn trivial(shape: &TensorShape) -> Self {
        Self {
            isometries: shape.dims().iter().map(|&d| DMatrix::identity(d, d)).collect(),
            trivial: vec![true; shape.n_slots()],
            full: shape.clone(),
            reduced: shape.clone(),
        }
    }

    pub fn isometry(&self, slot: usize) -> &DMatrix<Complex64> {
        &self.isometries[slot]
    }

    pub fn full_shape(&self) -> &TensorShape {
        &self.full
    }

    pub fn reduced_shape(&self) -> &TensorShape {
        &self.reduced
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial.iter().all(|&t| t)
    }

    pub fn slot_is_trivial(&self, slot: usize) -> bool {
        self.trivial[slot]
    }

    /// Kernel dimension per slot.
    pub fn kernel_dims(&self) -> Vec<usize> {
        self.full
            .dims()
            .iter()
            .zip(self.reduced.dims())
            .map(|(d, r)| d - r)
            .collect()
    }

    /// `⊗ V_i`, mapping the reduced space into the full one.
    pub fn joint_isometry(&self) -> DMatrix<Complex64> {
        let raw: Vec<&DMatrix<Complex64>> = self.isometries.iter().collect();
        tensor_product(&raw)
    }

    /// Compression `Π_O H Π_O` expressed in reduced coordinates.
    pub fn compress(&self, h: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.full.check_total(h.dim(), "compress operand")?;
        if self.is_trivial() {
            return Ok(h.clone());
        }
        Ok(h.compress(&self.joint_isometry()))
    }
}

/// Output of [`restrict_instance`].
#[derive(Clone, Debug)]
pub struct Restriction {
    pub subspace: ActiveSubspace,
    pub marginals: Vec<HermitianMatrix>,
    pub hamiltonian: HermitianMatrix,
    pub warnings: Vec<String>,
}

/// Marginal trace tolerance accepted by [`restrict_instance`].
pub const MARGINAL_TRACE_TOL: f64 = 1e-10;

/// Width of the band above the kernel threshold in which eigenvalues are
/// still truncated, with a warning.
pub const AMBIGUOUS_BAND: f64 = 1e4;

/// Default kernel threshold for a density matrix on `C^d`.
pub fn marginal_kernel_tol(d: usize) -> f64 {
    1e-12 * d as f64
}

/// Restricts marginals and Hamiltonian to the active subspace. Slots with a
/// trivial kernel keep their original basis.
pub fn restrict_instance(
    marginals: &[HermitianMatrix],
    hamiltonian: &HermitianMatrix,
    kernel_tol: Option<f64>,
) -> Result<Restriction> {
    let shape = TensorShape::new(marginals.iter().map(|g| g.dim()).collect())?;
    shape.check_total(hamiltonian.dim(), "hamiltonian")?;
    let mut isometries = Vec::with_capacity(marginals.len());
    let mut trivial = Vec::with_capacity(marginals.len());
    let mut reduced = Vec::with_capacity(marginals.len());
    let mut warnings = Vec::new();

    for (slot, g) in marginals.iter().enumerate() {
        let tol = kernel_tol.unwrap_or_else(|| marginal_kernel_tol(g.dim()));
        let tr = crate::linalg::trace(g);
        if (tr - 1.0).abs() > MARGINAL_TRACE_TOL {
            return Err(Error::MarginalTraceNotOne { slot, trace: tr });
        }
        let spec = eigh(g)?;
        if spec.min() < -tol {
            return Err(Error::MarginalNotPsd {
                slot,
                min_eigenvalue: spec.min(),
            });
        }
        let keep: Vec<usize> = (0..g.dim())
            .filter(|&k| spec.eigenvalues[k] > tol * AMBIGUOUS_BAND)
            .collect();
        let ambiguous = spec
            .eigenvalues
            .iter()
            .filter(|&&x| x > tol && x <= tol * AMBIGUOUS_BAND)
            .count();
        if ambiguous > 0 {
            warnings.push(format!(
                "marginal {slot}: {ambiguous} eigenvalue(s) in the ambiguous band ({tol:.1e}, {:.1e}] treated as kernel",
                tol * AMBIGUOUS_BAND
            ));
        }
        if keep.is_empty() {
            return Err(Error::MarginalNotPsd {
                slot,
                min_eigenvalue: spec.min(),
            });
        }
        if keep.len() == g.dim() {
            isometries.push(DMatrix::identity(g.dim(), g.dim()));
            trivial.push(true);
        } else {
            let v = DMatrix::from_fn(g.dim(), keep.len(), |r, c| spec.eigenvectors[(r, keep[c])]);
            isometries.push(v);
            trivial.push(false);
        }
        reduced.push(keep.len());
    }

    let subspace = ActiveSubspace {
        isometries,
        trivial,
        full: shape.clone(),
        reduced: TensorShape::new(reduced)?,
    };
    let mut out_marginals = Vec::with_capacity(marginals.len());
    for (slot, g) in marginals.iter().enumerate() {
        if subspace.trivial[slot] {
            out_marginals.push(g.clone());
        } else {
            let r = g.compress(&subspace.isometries[slot]);
            // Truncating the ambiguous band removes a little mass.
            let t = crate::linalg::trace(&r);
            out_marginals.push(r.scale(1.0 / t));
        }
    }
    let hamiltonian = subspace.compress(hamiltonian)?;
    Ok(Restriction {
        subspace,
        marginals: out_marginals,
        hamiltonian,
        warnings,
    })
}

/// Embeds an operator on the active subspace into the full space, zero on
/// the orthogonal complement.
pub fn expand_to_full(gamma_o: &HermitianMatrix, subspace: &ActiveSubspace) -> Result<HermitianMatrix> {
    subspace
        .reduced
        .check_total(gamma_o.dim(), "expand_to_full operand")?;
    if subspace.is_trivial() {
        return Ok(gamma_o.clone());
    }
    Ok(gamma_o.dilate(&subspace.joint_isometry()))
}
