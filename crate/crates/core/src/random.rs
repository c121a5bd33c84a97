//! Seeded instance generators.
//!
//! Every generator draws from a caller-supplied RNG; the `*_instance`
//! helpers seed a [`ChaCha8Rng`] so a `(seed, dims, ε, ‖H‖)` tuple always
//! reproduces the same instance.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::functionals::{PotentialVector, ProblemInstance};
use crate::linalg::{op_norm, trace, HermitianMatrix};
use crate::tensor::TensorShape;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

/// Haar-distributed unitary via QR with the phase correction on `R`'s
/// diagonal.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<Complex64> {
    let qr = complex_gaussian(rng, d, d).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        q.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

/// Probability vector of normalized squared Gaussians.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..d).map(|_| gaussian(rng).powi(2)).collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 && w.iter().all(|&x| x > 0.0) {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn random_diagonal_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    HermitianMatrix::from_diagonal(&random_probability(rng, d))
}

/// Full-rank density matrix with a random eigenbasis.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let diag = random_probability(rng, d);
    let u = random_unitary(rng, d);
    let dm = DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            Complex64::new(diag[j], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rho = HermitianMatrix::from_raw(&u * dm * u.adjoint());
    // re-normalize against rounding in the conjugation
    rho.scale(1.0 / trace(&rho))
}

/// Symmetrized Gaussian Hermitian matrix with operator norm `norm`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, norm: f64) -> HermitianMatrix {
    let g = complex_gaussian(rng, d, d);
    let h = HermitianMatrix::from_raw((&g + g.adjoint()) * Complex64::new(0.5, 0.0));
    let n = op_norm(&h);
    if n == 0.0 {
        return HermitianMatrix::zeros(d);
    }
    h.scale(norm / n)
}

/// Diagonal Hamiltonian with Gaussian entries scaled to max modulus `norm`.
pub fn random_diagonal_hamiltonian<R: Rng + ?Sized>(rng: &mut R, d: usize, norm: f64) -> HermitianMatrix {
    let diag: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let m = diag.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return HermitianMatrix::zeros(d);
    }
    HermitianMatrix::from_diagonal(&diag.iter().map(|x| x * norm / m).collect::<Vec<_>>())
}

/// Traceless Hermitian direction with unit trace norm.
pub fn random_traceless<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let h = random_hermitian(rng, d, 1.0);
    let t = h.shift(-trace(&h) / d as f64);
    t.scale(1.0 / crate::linalg::trace_norm(&t))
}

pub fn random_potentials<R: Rng + ?Sized>(rng: &mut R, shape: &TensorShape, scale: f64) -> PotentialVector {
    PotentialVector::new(shape.dims().iter().map(|&d| random_hermitian(rng, d, scale)).collect())
}

pub fn random_instance(seed: u64, dims: &[usize], epsilon: f64, h_norm: f64) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marginals = dims.iter().map(|&d| random_density(&mut rng, d)).collect();
    let total = dims.iter().product();
    let h = random_hermitian(&mut rng, total, h_norm);
    ProblemInstance::new(marginals, h, epsilon)
}

/// Instance with diagonal marginals and a diagonal Hamiltonian, i.e. a
/// classical multi-marginal problem embedded in the quantum one.
pub fn diagonal_instance(seed: u64, dims: &[usize], epsilon: f64, h_norm: f64) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marginals = dims.iter().map(|&d| random_diagonal_density(&mut rng, d)).collect();
    let total = dims.iter().product();
    let h = random_diagonal_hamiltonian(&mut rng, total, h_norm);
    ProblemInstance::new(marginals, h, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = random_unitary(&mut rng, 4);
        let e = u.adjoint() * &u - DMatrix::<Complex64>::identity(4, 4);
        assert!(e.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn densities_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..6 {
            let rho = random_density(&mut rng, d);
            assert!((trace(&rho) - 1.0).abs() < 1e-14);
            assert!(eigh(&rho).unwrap().min() > 0.0);
        }
    }

    #[test]
    fn hermitian_has_requested_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(&mut rng, 5, 1.7);
        assert!((op_norm(&h) - 1.7).abs() < 1e-12);
        let t = random_traceless(&mut rng, 3);
        assert!(trace(&t).abs() < 1e-14);
    }

    #[test]
    fn instances_are_reproducible() {
        let a = random_instance(42, &[2, 3], 1.0, 2.0).unwrap();
        let b = random_instance(42, &[2, 3], 1.0, 2.0).unwrap();
        assert_eq!(a.hamiltonian(), b.hamiltonian());
        assert_eq!(a.marginals(), b.marginals());
    }
}
