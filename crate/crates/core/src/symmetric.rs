//! Bosonic and fermionic sectors: all marginals equal one density matrix
//! `γ` on `C^d` and the coupling lives on the symmetric or antisymmetric
//! subspace of `(C^d)^{⊗N}`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{entropy_from_spectrum, lambda_eps_spectrum};
use crate::linalg::{
    self, concave_newton_direction, divided_differences, eigh, eigh_raw, exp_hessian_form, hermitian_basis,
    hermitian_coords, hermitian_from_coords, HermitianMatrix, Spectrum,
};
use crate::tensor::{partial_trace, permute_s, TensorShape};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest accepted violation of the permutation symmetry of `H`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Margin around `1/N` used by the Pauli verdicts.
pub const PAULI_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SectorKind {
    Bosonic,
    Fermionic,
}

impl SectorKind {
    pub fn name(self) -> &'static str {
        match self {
            SectorKind::Bosonic => "bosonic",
            SectorKind::Fermionic => "fermionic",
        }
    }
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    fn rec(k: usize, cur: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if k == cur.len() {
            out.push((cur.clone(), sign));
            return;
        }
        for j in k..cur.len() {
            cur.swap(k, j);
            rec(k + 1, cur, if j == k { sign } else { -sign }, out);
            cur.swap(k, j);
        }
    }
    rec(0, &mut cur, 1.0, &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Orthonormal basis of the bosonic or fermionic sector, indexed by
/// non-decreasing (bosonic) or strictly increasing (fermionic) tuples.
///
/// The embedding into `(C^d)^{⊗N}` is generated on demand since it has
/// `d^N` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    kind: SectorKind,
    d: usize,
    n: usize,
    tuples: Vec<Vec<usize>>,
}

/// Enumerates the sector basis.
pub fn build_sector(kind: SectorKind, d: usize, n: usize) -> Result<SectorBasis> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidShape(format!("sector needs d >= 1 and N >= 1, got d = {d}, N = {n}")));
    }
    if kind == SectorKind::Fermionic && n > d {
        return Err(Error::FermionicSectorEmpty { d, n });
    }
    let mut tuples = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(kind: SectorKind, d: usize, n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in start..d {
            cur.push(j);
            let next = if kind == SectorKind::Fermionic { j + 1 } else { j };
            rec(kind, d, n, next, cur, out);
            cur.pop();
        }
    }
    rec(kind, d, n, 0, &mut cur, &mut tuples);
    Ok(SectorBasis { kind, d, n, tuples })
}

impl SectorBasis {
    pub fn kind(&self) -> SectorKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn full_shape(&self) -> TensorShape {
        TensorShape::new(vec![self.d; self.n]).expect("sector shape is valid")
    }

    fn flat_index(&self, digits: impl Iterator<Item = usize>) -> usize {
        digits.fold(0, |acc, j| acc * self.d + j)
    }

    /// Nonzero entries `(full index, amplitude)` of basis vector `k`.
    pub fn column(&self, k: usize) -> Vec<(usize, f64)> {
        let t = &self.tuples[k];
        match self.kind {
            SectorKind::Fermionic => {
                let c = 1.0 / factorial(self.n).sqrt();
                permutations(self.n)
                    .into_iter()
                    .map(|(p, s)| (self.flat_index(p.iter().map(|&q| t[q])), s * c))
                    .collect()
            }
            SectorKind::Bosonic => {
                let idx: BTreeSet<usize> = permutations(self.n)
                    .into_iter()
                    .map(|(p, _)| self.flat_index(p.iter().map(|&q| t[q])))
                    .collect();
                let c = 1.0 / (idx.len() as f64).sqrt();
                idx.into_iter().map(|x| (x, c)).collect()
            }
        }
    }

    /// The isometry from the sector into `(C^d)^{⊗N}` as a dense matrix.
    pub fn embedding(&self) -> DMatrix<Complex64> {
        let total = self.d.pow(self.n as u32);
        let mut e = DMatrix::from_element(total, self.dim(), ZERO);
        for k in 0..self.dim() {
            for (x, c) in self.column(k) {
                e[(x, k)] = Complex64::new(c, 0.0);
            }
        }
        e
    }

    /// `Π = E E*`, the orthogonal projector onto the sector.
    pub fn projector(&self) -> HermitianMatrix {
        let e = self.embedding();
        HermitianMatrix::from_raw(&e * e.adjoint())
    }
}

/// `E* A E`.
pub fn project_sector(a: &HermitianMatrix, basis: &SectorBasis) -> Result<HermitianMatrix> {
    let total = basis.d.pow(basis.n as u32);
    if a.dim() != total {
        return Err(Error::DimensionMismatch {
            context: "project_sector operand",
            expected: total,
            found: a.dim(),
        });
    }
    Ok(a.compress(&basis.embedding()))
}

/// The operator of the tensor-slot permutation `perm` (slot `p` of the
/// output carries slot `perm[p]` of the input) on `(C^d)^{⊗N}`, applied as
/// `P A P*`.
pub fn permute_slots(a: &HermitianMatrix, d: usize, perm: &[usize]) -> Result<HermitianMatrix> {
    let n = perm.len();
    let shape = TensorShape::new(vec![d; n])?;
    if a.dim() != shape.total() {
        return Err(Error::DimensionMismatch {
            context: "permute_slots operand",
            expected: shape.total(),
            found: a.dim(),
        });
    }
    let map: Vec<usize> = (0..shape.total())
        .map(|x| {
            let digits = shape.digits(x);
            shape.index(&perm.iter().map(|&q| digits[q]).collect::<Vec<_>>())
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

/// Average of `P A P*` over all slot permutations.
pub fn symmetrize_operator(a: &HermitianMatrix, d: usize, n: usize) -> Result<HermitianMatrix> {
    let perms = permutations(n);
    let mut acc = HermitianMatrix::zeros(a.dim());
    for (p, _) in &perms {
        acc = acc.add(&permute_slots(a, d, p)?);
    }
    Ok(acc.scale(1.0 / perms.len() as f64))
}

/// `max_i ‖S_i H S_i* − H‖_∞` over the slot permutations `S_i`; requires
/// equal factor dimensions.
pub fn symmetrize_check(h: &HermitianMatrix, shape: &TensorShape) -> Result<f64> {
    let d = shape.dims()[0];
    if shape.dims().iter().any(|&x| x != d) {
        return Err(Error::InvalidShape(format!(
            "permutation symmetry needs equal factor dimensions, got {:?}",
            shape.dims()
        )));
    }
    let mut worst = 0.0_f64;
    for i in 0..shape.n_slots() {
        let p = permute_s(i, h, shape)?;
        worst = worst.max(linalg::op_norm(&p.sub(h)));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliVerdict {
    /// `0 < γ < 1/N`: a maximizer of the fermionic dual exists.
    Strict,
    /// `γ ≤ 1/N` with an eigenvalue at the bound or a kernel.
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliAssessment {
    pub verdict: PauliVerdict,
    pub max_eigenvalue: f64,
    pub min_eigenvalue: f64,
    /// Eigenvector of the largest eigenvalue.
    pub binding_vector: Vec<Complex64>,
}

impl PauliAssessment {
    pub fn is_feasible(&self) -> bool {
        self.verdict != PauliVerdict::Infeasible
    }

    /// Largest eigenvalue sits at `1/N` (within [`PAULI_MARGIN`]).
    pub fn at_boundary(&self, n: usize) -> bool {
        self.is_feasible() && self.max_eigenvalue >= 1.0 / n as f64 - PAULI_MARGIN
    }
}

/// Classifies `γ` against the Pauli bound `γ ≤ 1/N`.
pub fn pauli_feasible(gamma: &HermitianMatrix, n: usize) -> Result<PauliAssessment> {
    let spec = eigh(gamma)?;
    let bound = 1.0 / n as f64;
    let (lo, hi) = (spec.min(), spec.max());
    let kernel_tol = crate::tensor::marginal_kernel_tol(gamma.dim());
    let verdict = if hi > bound + PAULI_MARGIN {
        PauliVerdict::Infeasible
    } else if lo > kernel_tol && hi < bound - PAULI_MARGIN {
        PauliVerdict::Strict
    } else {
        PauliVerdict::Feasible
    };
    Ok(PauliAssessment {
        verdict,
        max_eigenvalue: hi,
        min_eigenvalue: lo,
        binding_vector: spec.eigenvector(spec.dim() - 1),
    })
}

/// A single-marginal bosonic or fermionic problem.
#[derive(Clone, Debug)]
pub struct SymmetricInstance {
    basis: SectorBasis,
    gamma: HermitianMatrix,
    hamiltonian: HermitianMatrix,
    epsilon: f64,
    /// `E* H E`.
    h_sector: DMatrix<Complex64>,
    /// `T_kl = M_k M_l*` with `M_k` the `d × d^{N-1}` reshape of basis vector
    /// `k`; then `P_1(E Γ E*) = Σ Γ_kl T_kl` and `(E*(U⊗1)E)_kl = Tr(U T_lk)`.
    blocks: Vec<DMatrix<Complex64>>,
}

impl SymmetricInstance {
    pub fn new(
        kind: SectorKind,
        d: usize,
        n: usize,
        gamma: HermitianMatrix,
        hamiltonian: HermitianMatrix,
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let basis = build_sector(kind, d, n)?;
        if gamma.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "single-particle marginal",
                expected: d,
                found: gamma.dim(),
            });
        }
        let shape = basis.full_shape();
        if hamiltonian.dim() != shape.total() {
            return Err(Error::DimensionMismatch {
                context: "hamiltonian",
                expected: shape.total(),
                found: hamiltonian.dim(),
            });
        }
        let tr = linalg::trace(&gamma);
        if (tr - 1.0).abs() > crate::tensor::MARGINAL_TRACE_TOL {
            return Err(Error::MarginalTraceNotOne { slot: 0, trace: tr });
        }
        let lo = eigh(&gamma)?.min();
        if lo < -crate::tensor::marginal_kernel_tol(d) {
            return Err(Error::MarginalNotPsd {
                slot: 0,
                min_eigenvalue: lo,
            });
        }
        let violation = symmetrize_check(&hamiltonian, &shape)?;
        if violation > SYMMETRY_TOL {
            return Err(Error::SymmetryViolation { violation });
        }

        let e = basis.embedding();
        let h_sector = hamiltonian.compress(&e).into_matrix();
        let rest = shape.total() / d;
        let reshaped: Vec<DMatrix<Complex64>> = (0..basis.dim())
            .map(|k| DMatrix::from_fn(d, rest, |a, r| e[(a * rest + r, k)]))
            .collect();
        let m = basis.dim();
        let mut blocks = Vec::with_capacity(m * m);
        for k in 0..m {
            for l in 0..m {
                blocks.push(&reshaped[k] * reshaped[l].adjoint());
            }
        }
        Ok(Self {
            basis,
            gamma,
            hamiltonian,
            epsilon,
            h_sector,
            blocks,
        })
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn kind(&self) -> SectorKind {
        self.basis.kind
    }

    pub fn gamma(&self) -> &HermitianMatrix {
        &self.gamma
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix {
        &self.hamiltonian
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_particles(&self) -> usize {
        self.basis.n
    }

    pub fn d(&self) -> usize {
        self.basis.d
    }

    fn block(&self, k: usize, l: usize) -> &DMatrix<Complex64> {
        &self.blocks[k * self.basis.dim() + l]
    }

    /// `E*((1/N)⊕U)E`, which equals `E*(U⊗1)E` on the sector.
    pub fn one_body_sector(&self, u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let m = self.basis.dim();
        let mut out = DMatrix::from_element(m, m, ZERO);
        for k in 0..m {
            for l in 0..m {
                // Tr(U T_lk)
                out[(k, l)] = (u * self.block(l, k)).trace();
            }
        }
        out
    }

    /// `P_1(E Γ E*)` for a sector operator `Γ`.
    pub fn sector_marginal(&self, g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let m = self.basis.dim();
        let d = self.basis.d;
        let mut out = DMatrix::from_element(d, d, ZERO);
        for k in 0..m {
            for l in 0..m {
                out += self.block(k, l) * g[(k, l)];
            }
        }
        out
    }

    fn exponent(&self, u: &HermitianMatrix) -> DMatrix<Complex64> {
        self.one_body_sector(u.as_matrix()) - &self.h_sector
    }
}

/// `Tr(Uγ) − ε Tr exp[(E*((1/N)⊕U − H)E)/ε] + ε`.
pub fn symmetric_dual_value(inst: &SymmetricInstance, u: &HermitianMatrix) -> Result<f64> {
    if u.dim() != inst.d() {
        return Err(Error::DimensionMismatch {
            context: "symmetric potential",
            expected: inst.d(),
            found: u.dim(),
        });
    }
    let spec = eigh_raw(&inst.exponent(u))?;
    let eps = inst.epsilon;
    let trace_exp = (lambda_eps_spectrum(&spec.eigenvalues, eps) / eps).exp();
    Ok(linalg::frobenius_inner(u, &inst.gamma) - eps * trace_exp + eps)
}

/// The potential `U^n = n P − n/(N−1) (1 − P)` with `P` the projector on
/// the top eigenvector of `γ`.
pub fn divergence_potential(gamma: &HermitianMatrix, n_particles: usize, n: f64) -> Result<HermitianMatrix> {
    if n_particles < 2 {
        return Err(Error::InvalidSettings("divergence witness needs at least two particles"));
    }
    let spec = eigh(gamma)?;
    let top = spec.dim() - 1;
    let low = -n / (n_particles as f64 - 1.0);
    Ok(spec.map_indexed(|k, _| if k == top { n } else { low }))
}

/// Predicted growth rate `(Nγ_1 − 1)/(N − 1)` of the dual along
/// [`divergence_potential`].
pub fn divergence_slope(gamma: &HermitianMatrix, n_particles: usize) -> Result<f64> {
    let top = eigh(gamma)?.max();
    Ok((n_particles as f64 * top - 1.0) / (n_particles as f64 - 1.0))
}

/// Dual values along the divergence sequence at each `n` in `ns`.
pub fn divergence_witness(inst: &SymmetricInstance, ns: &[f64]) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| symmetric_dual_value(inst, &divergence_potential(&inst.gamma, inst.n_particles(), n)?))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSettings {
    /// Trace-norm tolerance on the gradient `γ − P_1(Γ)`.
    pub grad_tol: f64,
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Switch from gradient to Newton steps below this gradient norm.
    pub newton_threshold: f64,
    /// Potentials growing past this norm signal a missing maximizer.
    pub potential_cap: f64,
}

impl Default for SymmetricSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-9,
            gap_tol: 1e-7,
            max_iters: 10_000,
            newton_threshold: 1e-4,
            potential_cap: 1e6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymmetricReport {
    pub potential: HermitianMatrix,
    /// Optimal state on the sector.
    pub gamma_sector: HermitianMatrix,
    /// The same state on `(C^d)^{⊗N}`.
    pub gamma: HermitianMatrix,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub grad_norm: f64,
    /// Largest trace-norm distance between a slot marginal of `gamma` and `γ`.
    pub marginal_residual: f64,
    pub iterations: usize,
    pub newton_steps: usize,
}

struct SectorEval {
    spec: Spectrum,
    dual: f64,
    grad: HermitianMatrix,
    grad_norm: f64,
}

fn sector_eval(inst: &SymmetricInstance, u: &HermitianMatrix) -> Result<SectorEval> {
    let spec = eigh_raw(&inst.exponent(u))?;
    let eps = inst.epsilon;
    let g = spec.apply_raw(|x| (x / eps).exp());
    let trace_exp: f64 = spec.eigenvalues.iter().map(|x| (x / eps).exp()).sum();
    let dual = linalg::frobenius_inner(u, &inst.gamma) - eps * trace_exp + eps;
    let grad = inst.gamma.sub(&HermitianMatrix::from_raw(inst.sector_marginal(&g)));
    let grad_norm = linalg::trace_norm(&grad);
    Ok(SectorEval {
        spec,
        dual,
        grad,
        grad_norm,
    })
}

fn sector_hessian(inst: &SymmetricInstance, ev: &SectorEval) -> DMatrix<f64> {
    let eps = inst.epsilon;
    let scaled = Spectrum {
        eigenvalues: ev.spec.eigenvalues.iter().map(|x| x / eps).collect(),
        eigenvectors: ev.spec.eigenvectors.clone(),
    };
    let dd = divided_differences(&scaled, 0.0);
    let v = &ev.spec.eigenvectors;
    let rotated: Vec<DMatrix<Complex64>> = hermitian_basis(inst.d())
        .iter()
        .map(|b| v.adjoint() * inst.one_body_sector(b) * v)
        .collect();
    let n = rotated.len();
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let val = -exp_hessian_form(&dd, &rotated[a], &rotated[b]) / eps;
            h[(a, b)] = val;
            h[(b, a)] = val;
        }
    }
    h
}

fn boundary_error(assessment: &PauliAssessment) -> Error {
    Error::PauliBoundary {
        eigenvalue: assessment.max_eigenvalue,
        witness: assessment.binding_vector.clone(),
    }
}

/// Maximizes the sector dual. Infeasible and boundary marginals are
/// rejected up front from the spectrum of `γ`; singular marginals are
/// rejected as unsupported.
pub fn symmetric_solve(inst: &SymmetricInstance, settings: &SymmetricSettings) -> Result<SymmetricReport> {
    if !(settings.grad_tol > 0.0 && settings.gap_tol > 0.0) || settings.max_iters == 0 {
        return Err(Error::InvalidSettings("symmetric solver tolerances and budget must be positive"));
    }
    let n = inst.n_particles();
    let assessment = pauli_feasible(&inst.gamma, n)?;
    if inst.kind() == SectorKind::Fermionic {
        match assessment.verdict {
            PauliVerdict::Infeasible => {
                return Err(Error::PauliInfeasible {
                    eigenvalue: assessment.max_eigenvalue,
                    witness: assessment.binding_vector,
                })
            }
            PauliVerdict::Feasible if assessment.at_boundary(n) => return Err(boundary_error(&assessment)),
            _ => {}
        }
    }
    if assessment.min_eigenvalue <= crate::tensor::marginal_kernel_tol(inst.d()) {
        return Err(Error::MarginalSingular {
            min_eigenvalue: assessment.min_eigenvalue,
        });
    }

    let eps = inst.epsilon;
    let log_gamma = linalg::mat_log(&inst.gamma, 0.0)?;
    let mut u = log_gamma.scale(eps * n as f64);
    let mut ev = sector_eval(inst, &u)?;
    let mut step = eps;
    let mut newton_steps = 0;
    let mut iterations = 0;
    loop {
        let gamma_sector = HermitianMatrix::from_raw(ev.spec.apply_raw(|x| (x / eps).exp()));
        let primal = linalg::frobenius_inner(&HermitianMatrix::from_raw(inst.h_sector.clone()), &gamma_sector)
            + eps * entropy_from_spectrum(&eigh(&gamma_sector)?);
        let gap = primal - ev.dual;
        if ev.grad_norm <= settings.grad_tol && gap.abs() <= settings.gap_tol {
            let e = inst.basis.embedding();
            let gamma = gamma_sector.dilate(&e);
            let shape = inst.basis.full_shape();
            let mut marginal_residual = 0.0_f64;
            for i in 0..n {
                let m = partial_trace(i, &gamma, &shape)?;
                marginal_residual = marginal_residual.max(linalg::trace_norm(&m.sub(&inst.gamma)));
            }
            return Ok(SymmetricReport {
                potential: u,
                gamma_sector,
                gamma,
                primal,
                dual: ev.dual,
                gap,
                grad_norm: ev.grad_norm,
                marginal_residual,
                iterations,
                newton_steps,
            });
        }
        if iterations >= settings.max_iters {
            return Err(Error::IterationBudgetExceeded {
                iterations,
                grad_norm: ev.grad_norm,
            });
        }
        if linalg::op_norm(&u) > settings.potential_cap {
            return Err(boundary_error(&assessment));
        }
        iterations += 1;

        let d = inst.d();
        let grad = hermitian_coords(ev.grad.as_matrix());
        let g2: f64 = grad.iter().map(|x| x * x).sum();
        let mut accepted = None;
        if ev.grad_norm < settings.newton_threshold {
            let hess = sector_hessian(inst, &ev);
            if let Some(dir) = concave_newton_direction(&hess, &grad, 1e-13) {
                let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
                if slope > 0.0 {
                    let p = HermitianMatrix::from_raw(hermitian_from_coords(d, &dir));
                    let mut t = 1.0;
                    for _ in 0..40 {
                        let cand = u.add(&p.scale(t));
                        let ce = sector_eval(inst, &cand)?;
                        if ce.dual >= ev.dual + 1e-4 * t * slope || (t == 1.0 && ce.grad_norm < 0.5 * ev.grad_norm) {
                            accepted = Some((cand, ce));
                            newton_steps += 1;
                            break;
                        }
                        t *= 0.5;
                    }
                }
            }
        }
        if accepted.is_none() {
            let p = ev.grad.clone();
            let mut t = step * 2.0;
            for _ in 0..60 {
                let cand = u.add(&p.scale(t));
                let ce = sector_eval(inst, &cand)?;
                if ce.dual >= ev.dual + 1e-4 * t * g2 {
                    step = t;
                    accepted = Some((cand, ce));
                    break;
                }
                t *= 0.5;
            }
        }
        match accepted {
            Some((cand, ce)) => {
                u = cand;
                ev = ce;
            }
            None => {
                return Err(Error::IterationBudgetExceeded {
                    iterations,
                    grad_norm: ev.grad_norm,
                })
            }
        }
    }
}
