//! Dense Hermitian linear algebra.
//!
//! Every matrix function goes through a full eigendecomposition. The
//! dimensions handled here are at most a few thousand, and the spectral
//! form is needed anyway for the logarithm and for overflow-safe
//! exponentials.

use faer::complex_native::c64;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated (and symmetrized away) at construction.
pub const HERMITICITY_REJECT: f64 = 1e-8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A dense complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl TryFrom<DMatrix<Complex64>> for HermitianMatrix {
    type Error = Error;

    fn try_from(m: DMatrix<Complex64>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianMatrix> for DMatrix<Complex64> {
    fn from(h: HermitianMatrix) -> Self {
        h.data
    }
}

impl HermitianMatrix {
    /// Validates and symmetrizes `m` as `(m + m*)/2`.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidShape("matrix dimension must be at least 1".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHermitian {
                asymmetry: f64::INFINITY,
            });
        }
        let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        let n = m.nrows();
        let mut asym = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                asym = asym.max((m[(j, k)] - m[(k, j)].conj()).norm());
            }
        }
        if asym / scale > HERMITICITY_REJECT {
            return Err(Error::NotHermitian {
                asymmetry: asym / scale,
            });
        }
        Ok(Self::from_raw(m))
    }

    /// Symmetrizes without validation. Used on internally produced matrices
    /// that are Hermitian up to round-off.
    pub(crate) fn from_raw(mut m: DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        debug_assert_eq!(n, m.ncols());
        for j in 0..n {
            m[(j, j)] = Complex64::new(m[(j, j)].re, 0.0);
            for k in (j + 1)..n {
                let avg = (m[(j, k)] + m[(k, j)].conj()) * 0.5;
                m[(j, k)] = avg;
                m[(k, j)] = avg.conj();
            }
        }
        Self { data: m }
    }

    /// Builds a matrix from real row-major parts.
    pub fn from_parts(dim: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "real part",
                expected: dim * dim,
                found: re.len(),
            });
        }
        if im.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "imaginary part",
                expected: dim * dim,
                found: im.len(),
            });
        }
        let m = DMatrix::from_fn(dim, dim, |j, k| Complex64::new(re[j * dim + k], im[j * dim + k]));
        Self::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::from_element(dim, dim, ZERO),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = DMatrix::from_element(n, n, ZERO);
        for (j, &v) in diag.iter().enumerate() {
            data[(j, j)] = Complex64::new(v, 0.0);
        }
        Self { data }
    }

    /// Real symmetric matrix given row-major.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_parts(dim, entries, &vec![0.0; entries.len()])
    }

    /// The rank-one projector `|psi><psi|` for a normalized `psi`.
    pub fn projector(psi: &[Complex64]) -> Self {
        let n = psi.len();
        Self::from_raw(DMatrix::from_fn(n, n, |j, k| psi[j] * psi[k].conj()))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    /// Row-major real and imaginary parts.
    pub fn to_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                re.push(self.data[(j, k)].re);
                im.push(self.data[(j, k)].im);
            }
        }
        (re, im)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.data[(j, j)].re).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            data: &self.data - &other.data,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: self.data.map(|z| z * factor),
        }
    }

    /// `self + shift * 1`.
    pub fn shift(&self, shift: f64) -> Self {
        let mut data = self.data.clone();
        for j in 0..data.nrows() {
            data[(j, j)].re += shift;
        }
        Self { data }
    }

    /// Conjugation `W* A W` by an arbitrary (possibly rectangular) matrix.
    pub fn compress(&self, w: &DMatrix<Complex64>) -> Self {
        Self::from_raw(w.adjoint() * &self.data * w)
    }

    /// Conjugation `W A W*`.
    pub fn dilate(&self, w: &DMatrix<Complex64>) -> Self {
        Self::from_raw(w * &self.data * w.adjoint())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (&self.data - &other.data).norm()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Largest deviation from hermiticity, `max |A_jk - conj(A_kj)|`.
    pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
        let n = m.nrows();
        let mut out = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                out = out.max((m[(j, k)] - m[(k, j)].conj()).norm());
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `V diag(f(lambda)) V*`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        HermitianMatrix::from_raw(self.apply_raw(f))
    }

    /// Like [`Spectrum::map`] with the eigenvalue's position (ascending order)
    /// passed alongside.
    pub fn map_indexed<F: Fn(usize, f64) -> f64>(&self, f: F) -> HermitianMatrix {
        HermitianMatrix::from_raw(self.apply_raw_indexed(f))
    }

    pub(crate) fn apply_raw<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<Complex64> {
        self.apply_raw_indexed(|_, x| f(x))
    }

    fn apply_raw_indexed<F: Fn(usize, f64) -> f64>(&self, f: F) -> DMatrix<Complex64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(k, lam);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= fk);
        }
        scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|x| x)
    }

    /// Column `k` as an owned vector.
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }
}

/// Eigendecomposition of a raw matrix assumed Hermitian.
pub(crate) fn eigh_raw(m: &DMatrix<Complex64>) -> Result<Spectrum> {
    let n = m.nrows();
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenNoConvergence { dim: n });
    }
    let a = faer::Mat::<c64>::from_fn(n, n, |r, c| {
        let z = m[(r, c)];
        c64::new(z.re, z.im)
    });
    let eig = a.selfadjoint_eigendecomposition(faer::Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.read(a).re.total_cmp(&s.read(b).re));
    let eigenvalues = order.iter().map(|&k| s.read(k).re).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| {
        let z = u.read(r, order[c]);
        Complex64::new(z.re, z.im)
    });
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

pub fn eigh(a: &HermitianMatrix) -> Result<Spectrum> {
    eigh_raw(&a.data)
}

/// `exp(A - shift * 1)`.
pub fn mat_exp(a: &HermitianMatrix, shift: f64) -> Result<HermitianMatrix> {
    let spec = eigh(a)?;
    Ok(spec.map(|x| (x - shift).exp()))
}

/// Kernel threshold scaled to the eigensolver's backward error.
pub fn default_kernel_tol(a: &HermitianMatrix) -> f64 {
    1e-12 * a.dim() as f64 * op_norm(a).max(f64::MIN_POSITIVE)
}

/// Matrix logarithm of a positive definite matrix.
///
/// Fails with [`Error::NegativeEigenvalue`] for genuinely indefinite input
/// and with [`Error::SingularLog`] when an eigenvalue sits below
/// `kernel_tol`: callers must restrict to the support first.
pub fn mat_log(a: &HermitianMatrix, kernel_tol: f64) -> Result<HermitianMatrix> {
    let spec = eigh(a)?;
    log_from_spectrum(&spec, kernel_tol)
}

pub(crate) fn log_from_spectrum(spec: &Spectrum, kernel_tol: f64) -> Result<HermitianMatrix> {
    let min = spec.min();
    if min < -kernel_tol {
        return Err(Error::NegativeEigenvalue { min });
    }
    if min < kernel_tol {
        return Err(Error::SingularLog { min });
    }
    Ok(spec.map(f64::ln))
}

/// Largest absolute eigenvalue.
pub fn op_norm(a: &HermitianMatrix) -> f64 {
    match eigh(a) {
        Ok(s) => s.min().abs().max(s.max().abs()),
        // Fall back to the Frobenius norm, an upper bound.
        Err(_) => a.frobenius_norm(),
    }
}

pub fn trace(a: &HermitianMatrix) -> f64 {
    (0..a.dim()).map(|j| a.data[(j, j)].re).sum()
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(a: &HermitianMatrix) -> f64 {
    match eigh(a) {
        Ok(s) => s.eigenvalues.iter().map(|x| x.abs()).sum(),
        Err(_) => a.frobenius_norm() * (a.dim() as f64).sqrt(),
    }
}

/// `Re Tr(A* B)`.
pub fn frobenius_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    a.data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

/// Divided differences of `exp` at the shifted eigenvalues, the kernel of the
/// Daleckii-Krein formula.
fn exp_divided_differences(spec: &Spectrum, shift: f64) -> DMatrix<f64> {
    let lam = &spec.eigenvalues;
    let n = lam.len();
    DMatrix::from_fn(n, n, |j, k| {
        let (a, b) = (lam[j] - shift, lam[k] - shift);
        let gap = a - b;
        if gap.abs() < 1e-8 * (1.0 + a.abs().max(b.abs())) {
            // Second-order expansion around the midpoint.
            let m = 0.5 * (a + b);
            m.exp() * (1.0 + gap * gap / 24.0)
        } else {
            (a.exp() - b.exp()) / gap
        }
    })
}

/// Fréchet derivative of `X -> exp(X - shift)` at the matrix with spectral
/// decomposition `spec`, in direction `e`.
#[cfg(test)]
pub(crate) fn exp_frechet(spec: &Spectrum, shift: f64, e: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let v = &spec.eigenvectors;
    let dd = exp_divided_differences(spec, shift);
    let mut inner = v.adjoint() * e * v;
    for j in 0..inner.nrows() {
        for k in 0..inner.ncols() {
            inner[(j, k)] *= dd[(j, k)];
        }
    }
    v * inner * v.adjoint()
}

/// Second directional derivative kernel: for directions already rotated into
/// the eigenbasis (`a_rot = V* A V`), returns `Tr(A Dexp[B])` computed as
/// `sum_jk a_kj L_jk b_jk`.
pub(crate) fn exp_hessian_form(dd: &DMatrix<f64>, a_rot: &DMatrix<Complex64>, b_rot: &DMatrix<Complex64>) -> f64 {
    let n = dd.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            acc += (a_rot[(k, j)] * b_rot[(j, k)]).re * dd[(j, k)];
        }
    }
    acc
}

pub(crate) fn divided_differences(spec: &Spectrum, shift: f64) -> DMatrix<f64> {
    exp_divided_differences(spec, shift)
}

/// Orthonormal basis of the real vector space of `d x d` Hermitian matrices
/// under the Hilbert-Schmidt inner product.
pub(crate) fn hermitian_basis(d: usize) -> Vec<DMatrix<Complex64>> {
    let mut out = Vec::with_capacity(d * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        let mut m = DMatrix::from_element(d, d, ZERO);
        m[(j, j)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut re = DMatrix::from_element(d, d, ZERO);
            re[(j, k)] = Complex64::new(s, 0.0);
            re[(k, j)] = Complex64::new(s, 0.0);
            out.push(re);
            let mut im = DMatrix::from_element(d, d, ZERO);
            im[(j, k)] = Complex64::new(0.0, s);
            im[(k, j)] = Complex64::new(0.0, -s);
            out.push(im);
        }
    }
    out
}

/// Coordinates of a Hermitian matrix in [`hermitian_basis`].
pub(crate) fn hermitian_coords(m: &DMatrix<Complex64>) -> Vec<f64> {
    let d = m.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        out.push(m[(j, j)].re);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            out.push(s * m[(j, k)].re);
            out.push(s * m[(j, k)].im);
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub(crate) fn hermitian_from_coords(d: usize, x: &[f64]) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::from_element(d, d, ZERO);
    let mut p = 0;
    for j in 0..d {
        m[(j, j)] = Complex64::new(x[p], 0.0);
        p += 1;
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let z = Complex64::new(s * x[p], s * x[p + 1]);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
            p += 2;
        }
    }
    m
}

/// Solves `(-hess) p = grad` for a negative semidefinite Hessian, dropping
/// directions with curvature below `rel_cutoff` times the largest one.
pub(crate) fn concave_newton_direction(hess: &DMatrix<f64>, grad: &[f64], rel_cutoff: f64) -> Option<Vec<f64>> {
    let n = grad.len();
    if hess.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let neg = faer::Mat::<f64>::from_fn(n, n, |r, c| -0.5 * (hess[(r, c)] + hess[(c, r)]));
    let eig = neg.selfadjoint_eigendecomposition(faer::Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    let top = (0..n).fold(0.0_f64, |a, k| a.max(s.read(k)));
    if top <= 0.0 {
        return None;
    }
    let cutoff = top * rel_cutoff;
    let mut p = vec![0.0; n];
    for k in 0..n {
        let lam = s.read(k);
        if lam <= cutoff {
            continue;
        }
        let proj: f64 = (0..n).map(|r| u.read(r, k) * grad[r]).sum();
        for (r, pi) in p.iter_mut().enumerate() {
            *pi += u.read(r, k) * proj / lam;
        }
    }
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigh_identity_and_diagonal() {
        let s = eigh(&HermitianMatrix::identity(3)).unwrap();
        for &x in &s.eigenvalues {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-14);
        }
        let s = eigh(&HermitianMatrix::from_diagonal(&[2.0, -1.0])).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_pauli_x() {
        let x = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = eigh(&x).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-14);
        assert!(s.reconstruct().max_abs_diff(&x) < 1e-14);
        // Hand eigenvectors (1,-1)/sqrt2 and (1,1)/sqrt2, up to phase.
        let v0 = s.eigenvector(0);
        assert_abs_diff_eq!((v0[0] + v0[1]).norm(), 0.0, epsilon = 1e-14);
        let v1 = s.eigenvector(1);
        assert_abs_diff_eq!((v1[0] - v1[1]).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exp_and_log_closed_forms() {
        let z = mat_exp(&HermitianMatrix::zeros(3), 0.0).unwrap();
        assert!(z.max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);

        let a = HermitianMatrix::from_diagonal(&[2f64.ln(), 3f64.ln()]);
        let e = mat_exp(&a, 0.0).unwrap();
        assert!(e.max_abs_diff(&HermitianMatrix::from_diagonal(&[2.0, 3.0])) < 1e-14);

        let l = mat_log(&HermitianMatrix::identity(4), 1e-12).unwrap();
        assert!(l.max_abs_diff(&HermitianMatrix::zeros(4)) < 1e-15);

        let e = std::f64::consts::E;
        let l = mat_log(&HermitianMatrix::from_diagonal(&[e, e * e]), 1e-12).unwrap();
        assert!(l.max_abs_diff(&HermitianMatrix::from_diagonal(&[1.0, 2.0])) < 1e-14);

        let l = mat_log(&HermitianMatrix::from_diagonal(&[0.5, 0.5]), 1e-12).unwrap();
        assert_abs_diff_eq!(l.get(0, 0).re, -0.693_147_180_559_945_3, epsilon = 1e-15);
    }

    #[test]
    fn log_rejects_singular_and_negative() {
        let a = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(mat_log(&a, 1e-12), Err(Error::SingularLog { .. })));
        let a = HermitianMatrix::from_diagonal(&[1.0, -0.1]);
        assert!(matches!(mat_log(&a, 1e-12), Err(Error::NegativeEigenvalue { .. })));
    }

    #[test]
    fn norms_and_traces() {
        let a = HermitianMatrix::from_diagonal(&[-3.0, 2.0]);
        assert_abs_diff_eq!(op_norm(&a), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_norm(&a), 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace(&HermitianMatrix::identity(4)), 4.0, epsilon = 0.0);
        let b = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.5, -0.25), c(0.5, 0.25), c(-2.0, 0.0)],
        ))
        .unwrap();
        assert_abs_diff_eq!(
            frobenius_inner(&b, &HermitianMatrix::identity(2)),
            trace(&b),
            epsilon = 1e-15
        );
    }

    #[test]
    fn construction_symmetrizes_and_rejects() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 1e-12), c(0.5, 0.0), c(1.0, 0.0)]);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn frechet_matches_finite_difference() {
        let a = HermitianMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.3, 0.0),
                c(0.1, 0.2),
                c(-0.4, 0.0),
                c(0.1, -0.2),
                c(-0.7, 0.0),
                c(0.05, 0.3),
                c(-0.4, 0.0),
                c(0.05, -0.3),
                c(0.9, 0.0),
            ],
        ))
        .unwrap();
        let e = HermitianMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.5),
                c(0.2, 0.0),
                c(0.0, -0.5),
                c(0.0, 0.0),
                c(0.3, 0.1),
                c(0.2, 0.0),
                c(0.3, -0.1),
                c(-1.0, 0.0),
            ],
        ))
        .unwrap();
        let spec = eigh(&a).unwrap();
        let analytic = exp_frechet(&spec, 0.0, e.as_matrix());
        let h = 1e-5;
        let plus = mat_exp(&a.add(&e.scale(h)), 0.0).unwrap();
        let minus = mat_exp(&a.sub(&e.scale(h)), 0.0).unwrap();
        let fd = (plus.as_matrix() - minus.as_matrix()) / Complex64::new(2.0 * h, 0.0);
        assert!((analytic - fd).norm() < 1e-8);
    }

    #[test]
    fn hermitian_coords_round_trip() {
        let basis = hermitian_basis(3);
        assert_eq!(basis.len(), 9);
        let x: Vec<f64> = (0..9).map(|k| k as f64 * 0.3 - 1.0).collect();
        let m = hermitian_from_coords(3, &x);
        let back = hermitian_coords(&m);
        for (a, b) in x.iter().zip(&back) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        // coordinates are HS inner products against the basis
        for (k, b) in basis.iter().enumerate() {
            let ip: f64 = b.iter().zip(m.iter()).map(|(p, q)| (p.conj() * q).re).sum();
            assert_abs_diff_eq!(ip, x[k], epsilon = 1e-14);
        }
    }
}
