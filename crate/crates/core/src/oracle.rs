//! Independent reference solvers used to cross-check the Sinkhorn driver:
//! classical log-domain Sinkhorn, dense Newton ascent on the dual, a sector
//! dual maximizer built from permutation operators, and the unconstrained
//! Gibbs state.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{dual_from_kernel, lambda_eps, GibbsKernel, PotentialVector, ProblemInstance};
use crate::linalg::{
    self, concave_newton_direction, eigh, hermitian_coords, hermitian_from_coords, HermitianMatrix,
};
use crate::sinkhorn::{renormalize, solve, SinkhornSettings};
use crate::symmetric::{SectorKind, SymmetricInstance};
use crate::tensor::{kronecker_sum, partial_trace, partial_trace_raw, TensorShape};

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Output of [`classical_sinkhorn`].
#[derive(Clone, Debug)]
pub struct ClassicalPlan {
    /// Coupling tensor, row-major over the factor indices.
    pub coupling: Vec<f64>,
    pub potentials: Vec<Vec<f64>>,
    /// Largest L1 marginal error.
    pub marginal_error: f64,
    pub sweeps: usize,
}

/// Log-domain multi-marginal Sinkhorn for the cost tensor `cost` (row-major
/// over `dims`) and strictly positive probability vectors `marginals`.
pub fn classical_sinkhorn(cost: &[f64], dims: &[usize], marginals: &[Vec<f64>], epsilon: f64) -> Result<ClassicalPlan> {
    const TOL: f64 = 1e-11;
    const MAX_SWEEPS: usize = 100_000;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let shape = TensorShape::new(dims.to_vec())?;
    if cost.len() != shape.total() {
        return Err(Error::DimensionMismatch {
            context: "cost tensor",
            expected: shape.total(),
            found: cost.len(),
        });
    }
    if marginals.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            context: "marginal count",
            expected: dims.len(),
            found: marginals.len(),
        });
    }
    for (mu, &d) in marginals.iter().zip(dims) {
        let s: f64 = mu.iter().sum();
        if mu.len() != d || mu.iter().any(|&x| !(x > 0.0)) || (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidSettings("marginals must be strictly positive probability vectors"));
        }
    }
    let digits: Vec<Vec<usize>> = (0..shape.total()).map(|x| shape.digits(x)).collect();
    let n = dims.len();
    let mut u: Vec<Vec<f64>> = dims.iter().map(|&d| vec![0.0; d]).collect();
    let exponent = |u: &[Vec<f64>], x: usize| -> f64 {
        (digits[x].iter().enumerate().map(|(i, &k)| u[i][k]).sum::<f64>() - cost[x]) / epsilon
    };
    let marginal_of = |u: &[Vec<f64>], i: usize| -> Vec<f64> {
        let mut m = vec![0.0; dims[i]];
        for x in 0..shape.total() {
            m[digits[x][i]] += exponent(u, x).exp();
        }
        m
    };

    for sweep in 1..=MAX_SWEEPS {
        for i in 0..n {
            let mut lse = vec![Vec::new(); dims[i]];
            for x in 0..shape.total() {
                let k = digits[x][i];
                lse[k].push(exponent(&u, x) - u[i][k] / epsilon);
            }
            for k in 0..dims[i] {
                let l = log_sum_exp(lse[k].iter().copied());
                u[i][k] = epsilon * marginals[i][k].ln() - epsilon * l;
            }
        }
        let err = (0..n)
            .map(|i| {
                marginal_of(&u, i)
                    .iter()
                    .zip(&marginals[i])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if err <= TOL {
            let coupling = (0..shape.total()).map(|x| exponent(&u, x).exp()).collect();
            return Ok(ClassicalPlan {
                coupling,
                potentials: u,
                marginal_error: err,
                sweeps: sweep,
            });
        }
    }
    Err(Error::IterationBudgetExceeded {
        iterations: MAX_SWEEPS,
        grad_norm: f64::NAN,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSettings {
    /// Euclidean norm of the gradient in Hilbert-Schmidt coordinates.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Central-difference step for the Hessian.
    pub fd_step: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-11,
            max_iters: 100_000,
            fd_step: 1e-5,
        }
    }
}

/// Result of a dense dual maximization.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub potentials: PotentialVector,
    pub dual: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Newton ascent with a finite-difference Hessian of the analytic gradient
/// and Armijo backtracking, falling back to gradient steps. `eval` returns
/// the objective and its gradient.
fn newton_ascent<F>(x0: Vec<f64>, settings: &OracleSettings, eval: F) -> Result<(Vec<f64>, f64, f64, usize)>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = x0;
    let (mut f, mut g) = eval(&x)?;
    let mut step = 1.0;
    let n = x.len();
    for it in 0..settings.max_iters {
        let gn = norm(&g);
        if gn <= settings.grad_tol {
            return Ok((x, f, gn, it));
        }
        let h = settings.fd_step;
        let mut hess = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let gp = eval(&xp)?.1;
            let gm = eval(&xm)?.1;
            for j in 0..n {
                hess[(j, k)] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        let mut accepted = None;
        if let Some(dir) = concave_newton_direction(&hess, &g, 1e-10) {
            let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
            if slope > 0.0 {
                let mut t = 1.0;
                for _ in 0..40 {
                    let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                    let (cf, cg) = eval(&cand)?;
                    if cf >= f + 1e-4 * t * slope || (t == 1.0 && norm(&cg) < 0.5 * gn) {
                        accepted = Some((cand, cf, cg));
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if accepted.is_none() {
            let mut t = step * 2.0;
            for _ in 0..60 {
                let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + t * b).collect();
                let (cf, cg) = eval(&cand)?;
                if cf >= f + 1e-4 * t * gn * gn {
                    step = t;
                    accepted = Some((cand, cf, cg));
                    break;
                }
                t *= 0.5;
            }
        }
        match accepted {
            Some((cx, cf, cg)) => {
                x = cx;
                f = cf;
                g = cg;
            }
            None => {
                return Err(Error::IterationBudgetExceeded {
                    iterations: it,
                    grad_norm: gn,
                })
            }
        }
    }
    let gn = norm(&g);
    if gn <= settings.grad_tol {
        return Ok((x, f, gn, settings.max_iters));
    }
    Err(Error::IterationBudgetExceeded {
        iterations: settings.max_iters,
        grad_norm: gn,
    })
}

/// Maximizes the dual directly over all potentials at once. The result is
/// renormalized like the Sinkhorn output.
pub fn dense_dual_ascent(inst: &ProblemInstance, settings: &OracleSettings) -> Result<OracleSolution> {
    let shape = inst.reduced_shape().clone();
    let dims = shape.dims().to_vec();
    let unpack = |x: &[f64]| -> PotentialVector {
        let mut off = 0;
        PotentialVector::new(
            dims.iter()
                .map(|&d| {
                    let m = hermitian_from_coords(d, &x[off..off + d * d]);
                    off += d * d;
                    HermitianMatrix::from_raw(m)
                })
                .collect(),
        )
    };
    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let u = unpack(x);
        let kernel = GibbsKernel::new(inst, &u)?;
        let dual = dual_from_kernel(inst, &u, &kernel);
        let g = kernel.coupling_raw();
        let mut grad = Vec::with_capacity(x.len());
        for i in 0..shape.n_slots() {
            let m = partial_trace_raw(i, &g, &shape, &shape.slot_bases(i));
            grad.extend(hermitian_coords(&(inst.reduced_marginals()[i].as_matrix() - m)));
        }
        Ok((dual, grad))
    };
    let x0: Vec<f64> = inst
        .log_marginal_potentials()
        .entries
        .iter()
        .flat_map(|u| hermitian_coords(u.as_matrix()))
        .collect();
    let (x, dual, grad_norm, iterations) = newton_ascent(x0, settings, eval)?;
    Ok(OracleSolution {
        potentials: renormalize(&unpack(&x), inst.epsilon())?,
        dual,
        grad_norm,
        iterations,
    })
}

/// Result of [`sector_newton_oracle`].
#[derive(Clone, Debug)]
pub struct SectorOracleSolution {
    pub potential: HermitianMatrix,
    pub dual: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

fn slot_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    // Lexicographic enumeration; the sign counts inversions.
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        let inv = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).filter(|&(a, b)| p[a] > p[b]).count();
        out.push((p.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
        let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| p[k] < p[k + 1]) else {
            return out;
        };
        let l = (k + 1..n).rev().find(|&l| p[k] < p[l]).expect("successor exists");
        p.swap(k, l);
        p[k + 1..].reverse();
    }
}

/// Maximizes the bosonic or fermionic dual with the sector obtained as the
/// range of `(1/N!) Σ_π (±1)^π P_π`, independently of the tuple basis.
pub fn sector_newton_oracle(inst: &SymmetricInstance, settings: &OracleSettings) -> Result<SectorOracleSolution> {
    let d = inst.d();
    let n = inst.n_particles();
    let shape = TensorShape::new(vec![d; n])?;
    let total = shape.total();
    let fermionic = inst.kind() == SectorKind::Fermionic;
    let perms = slot_permutations(n);
    let mut proj = DMatrix::from_element(total, total, Complex64::new(0.0, 0.0));
    for (p, s) in &perms {
        let w = if fermionic { *s } else { 1.0 } / perms.len() as f64;
        for x in 0..total {
            let dg = shape.digits(x);
            let y = shape.index(&p.iter().map(|&q| dg[q]).collect::<Vec<_>>());
            proj[(y, x)] += Complex64::new(w, 0.0);
        }
    }
    let spec = eigh(&HermitianMatrix::new(proj)?)?;
    let keep: Vec<usize> = (0..total).filter(|&k| spec.eigenvalues[k] > 0.5).collect();
    let b = DMatrix::from_fn(total, keep.len(), |r, c| spec.eigenvectors[(r, keep[c])]);
    let h_sec = inst.hamiltonian().compress(&b);
    let eps = inst.epsilon();
    let gamma = inst.gamma().clone();

    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let u = HermitianMatrix::from_raw(hermitian_from_coords(d, x));
        let one_body = kronecker_sum(&vec![u.clone(); n], &shape)?.scale(1.0 / n as f64);
        let y = one_body.compress(&b).sub(&h_sec);
        let sp = eigh(&y)?;
        let trace_exp: f64 = sp.eigenvalues.iter().map(|v| (v / eps).exp()).sum();
        let dual = linalg::frobenius_inner(&u, &gamma) - eps * trace_exp + eps;
        let g_full = sp.map(|v| (v / eps).exp()).dilate(&b);
        let marg = partial_trace(0, &g_full, &shape)?;
        Ok((dual, hermitian_coords(gamma.sub(&marg).as_matrix())))
    };
    let (x, dual, grad_norm, iterations) = newton_ascent(vec![0.0; d * d], settings, eval)?;
    Ok(SectorOracleSolution {
        potential: HermitianMatrix::from_raw(hermitian_from_coords(d, &x)),
        dual,
        grad_norm,
        iterations,
    })
}

/// Comparison between the Gibbs state and the transport solution with the
/// Gibbs marginals.
#[derive(Clone, Debug)]
pub struct GibbsReport {
    /// `−ε log Tr exp(−H/ε)`.
    pub free_energy: f64,
    /// Optimal transport value at the Gibbs marginals.
    pub transport_value: f64,
    /// Frobenius distance between the solver coupling and the Gibbs state.
    pub gamma_error: f64,
    pub marginals: Vec<HermitianMatrix>,
}

impl GibbsReport {
    pub fn value_error(&self) -> f64 {
        (self.transport_value - self.free_energy).abs()
    }
}

/// Solves the transport problem at the marginals of `exp(−H/ε)/Z`, whose
/// optimum must be the Gibbs state itself.
pub fn gibbs_check(h: &HermitianMatrix, dims: &[usize], epsilon: f64, settings: &SinkhornSettings) -> Result<GibbsReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let shape = TensorShape::new(dims.to_vec())?;
    if h.dim() != shape.total() {
        return Err(Error::DimensionMismatch {
            context: "hamiltonian",
            expected: shape.total(),
            found: h.dim(),
        });
    }
    let log_z = lambda_eps(&h.scale(-1.0), epsilon)?;
    let spec = eigh(h)?;
    let gibbs = spec.map(|x| ((-x - log_z) / epsilon).exp());
    let marginals: Vec<HermitianMatrix> = (0..shape.n_slots())
        .map(|i| {
            let m = partial_trace(i, &gibbs, &shape)?;
            Ok(m.scale(1.0 / linalg::trace(&m)))
        })
        .collect::<Result<_>>()?;
    let inst = ProblemInstance::new(marginals.clone(), h.clone(), epsilon)?;
    let report = solve(&inst, None, settings)?;
    Ok(GibbsReport {
        free_energy: -log_z,
        transport_value: report.primal,
        gamma_error: report.gamma.frobenius_distance(&gibbs),
        marginals,
    })
}
