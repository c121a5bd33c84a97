//! Fixed benchmark instances shared by the criterion benches.

use qsink::{random_instance, ProblemInstance};

/// `(label, dims, ε, ‖H‖)` for the Sinkhorn benchmarks.
pub const SINKHORN_CASES: &[(&str, &[usize], f64, f64)] = &[
    ("2x2_eps1", &[2, 2], 1.0, 1.0),
    ("3x3x3_eps1", &[3, 3, 3], 1.0, 2.0),
    ("4x4_eps0.5", &[4, 4], 0.5, 2.0),
    ("2x2x2x2_eps2", &[2, 2, 2, 2], 2.0, 2.0),
];

pub fn instance(dims: &[usize], epsilon: f64, h_norm: f64) -> ProblemInstance {
    random_instance(17, dims, epsilon, h_norm).expect("benchmark instance is valid")
}
