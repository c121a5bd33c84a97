//! The outer Sinkhorn iteration: one-slot transforms composed into sweeps,
//! renormalized after every sweep, until the marginals and the duality gap
//! certify optimality.

use crate::error::{Error, Result};
use crate::functionals::{dual_from_kernel, lambda_eps, GibbsKernel, PotentialVector, ProblemInstance};
use crate::linalg::{self, eigh, frobenius_inner, HermitianMatrix};
use crate::tensor::{expand_to_full, partial_trace_raw};
use crate::transform::{check_regularity_bounds, hep_transform_detailed, TransformSettings};

/// Slack on the uniform bound `‖U_i − ε log γ_i‖ ≤ 2‖H_O‖` checked on
/// renormalized iterates.
pub const RENORM_BOUND_SLACK: f64 = 1e-8;

/// Tightest slot tolerance requested on behalf of a small `outer_tol`.
pub const INNER_TOL_FLOOR: f64 = 1e-14;

/// Round-off allowance on the per-sweep dual ascent.
pub const DUAL_ASCENT_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornSettings {
    /// Largest accepted trace-norm marginal residual.
    pub outer_tol: f64,
    pub gap_tol: f64,
    pub max_sweeps: usize,
    /// Record every `trace_every`-th sweep (the final sweep is always kept).
    pub trace_every: usize,
    pub transform: TransformSettings,
}

impl Default for SinkhornSettings {
    fn default() -> Self {
        Self {
            outer_tol: 1e-9,
            gap_tol: 1e-7,
            max_sweeps: 5000,
            trace_every: 1,
            transform: TransformSettings::default(),
        }
    }
}

impl SinkhornSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol > 0.0) || !(self.gap_tol > 0.0) {
            return Err(Error::InvalidSettings("tolerances must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidSettings("max_sweeps must be at least 1"));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidSettings("trace_every must be at least 1"));
        }
        self.transform.validate()
    }
}

/// Per-sweep convergence record.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub dual: f64,
    pub primal: f64,
    pub gap: f64,
    pub max_residual: f64,
    /// Cumulative gauge translation, summing to zero.
    pub alpha: Vec<f64>,
    /// `max_i ‖U_i − ε log γ_i‖ − 2‖H_O‖` after renormalization.
    pub renorm_bound_excess: f64,
    /// Largest excess over the transform bounds seen during the sweep.
    pub transform_bound_excess: f64,
    pub inner_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Optimal coupling on the full space, zero off the active subspace.
    pub gamma: HermitianMatrix,
    /// The same coupling on the active subspace.
    pub gamma_reduced: HermitianMatrix,
    /// Renormalized potentials on the reduced spaces.
    pub potentials: PotentialVector,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub initial_dual: f64,
    pub marginal_residuals: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub trace: Vec<SweepRecord>,
    pub inner_fallbacks: usize,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.marginal_residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct SweepStats {
    transform_excess: f64,
    inner_iterations: usize,
    fallbacks: usize,
}

fn one_step_tracked(
    inst: &ProblemInstance,
    slot: usize,
    u: &PotentialVector,
    settings: &SinkhornSettings,
    stats: &mut SweepStats,
) -> Result<PotentialVector> {
    let out = hep_transform_detailed(inst, slot, u, None, &settings.transform)?;
    let report = check_regularity_bounds(inst, slot, u, &out.value)?;
    stats.transform_excess = stats.transform_excess.max(report.max_excess());
    stats.inner_iterations += out.iterations;
    stats.fallbacks += usize::from(out.fallback);
    let mut next = u.clone();
    next.entries[slot] = out.value;
    Ok(next)
}

/// Replaces slot `slot` by its (H,ε)-transform, warm-started at the current
/// entry.
pub fn one_step(inst: &ProblemInstance, slot: usize, u: &PotentialVector, settings: &SinkhornSettings) -> Result<PotentialVector> {
    one_step_tracked(inst, slot, u, settings, &mut SweepStats::default())
}

fn sweep_tracked(
    inst: &ProblemInstance,
    u: &PotentialVector,
    settings: &SinkhornSettings,
    stats: &mut SweepStats,
) -> Result<PotentialVector> {
    let mut cur = u.clone();
    for slot in 0..inst.n_slots() {
        cur = one_step_tracked(inst, slot, &cur, settings, stats)?;
    }
    Ok(cur)
}

/// One Sinkhorn sweep `τ = 𝒯_N ∘ … ∘ 𝒯_1`.
pub fn sweep_tau(inst: &ProblemInstance, u: &PotentialVector, settings: &SinkhornSettings) -> Result<PotentialVector> {
    sweep_tracked(inst, u, settings, &mut SweepStats::default())
}

/// Shifts slots `1..N-1` to `λ_ε = 0` and compensates in the last slot.
pub fn renormalize(u: &PotentialVector, epsilon: f64) -> Result<PotentialVector> {
    let n = u.n_slots();
    let mut a = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        a[i] = -lambda_eps(&u.entries[i], epsilon)?;
    }
    if n > 0 {
        a[n - 1] = -a[..n - 1].iter().sum::<f64>();
    }
    Ok(u.translated_unchecked(&a))
}

struct Evaluation {
    gamma: HermitianMatrix,
    dual: f64,
    primal: f64,
    residuals: Vec<f64>,
}

fn evaluate(inst: &ProblemInstance, u: &PotentialVector) -> Result<Evaluation> {
    let kernel = GibbsKernel::new(inst, u)?;
    let dual = dual_from_kernel(inst, u, &kernel);
    let gamma = HermitianMatrix::from_raw(kernel.coupling_raw());
    let shape = inst.reduced_shape();
    let residuals = (0..shape.n_slots())
        .map(|i| {
            let m = HermitianMatrix::from_raw(partial_trace_raw(i, gamma.as_matrix(), shape, &shape.slot_bases(i)));
            linalg::trace_norm(&m.sub(&inst.reduced_marginals()[i]))
        })
        .collect();
    let primal = frobenius_inner(inst.reduced_hamiltonian(), &gamma) + inst.epsilon() * kernel.entropy();
    Ok(Evaluation {
        gamma,
        dual,
        primal,
        residuals,
    })
}

fn renorm_bound_excess(inst: &ProblemInstance, u: &PotentialVector) -> f64 {
    let eps = inst.epsilon();
    let bound = 2.0 * inst.hamiltonian_norm();
    u.entries
        .iter()
        .enumerate()
        .map(|(i, ui)| linalg::op_norm(&ui.sub(&inst.log_marginal(i).scale(eps))) - bound)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_potentials(inst: &ProblemInstance, u: &PotentialVector) -> Result<()> {
    let shape = inst.reduced_shape();
    if u.n_slots() != shape.n_slots() {
        return Err(Error::DimensionMismatch {
            context: "initial potential count",
            expected: shape.n_slots(),
            found: u.n_slots(),
        });
    }
    for (ui, &d) in u.entries.iter().zip(shape.dims()) {
        if ui.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "initial potential dimension",
                expected: d,
                found: ui.dim(),
            });
        }
    }
    Ok(())
}

/// Runs Sinkhorn sweeps from `u0` (default `U_i = ε log γ_i`) until every
/// marginal residual is below `outer_tol` and the gap below `gap_tol`.
///
/// On budget exhaustion the partial report is returned inside
/// [`Error::MaxSweepsExceeded`].
pub fn solve(inst: &ProblemInstance, u0: Option<&PotentialVector>, settings: &SinkhornSettings) -> Result<SolveReport> {
    settings.validate()?;
    // The outer residual cannot drop below the accuracy of the slot solves.
    let mut settings = settings.clone();
    settings.transform.marginal_tol = settings
        .transform
        .marginal_tol
        .min((0.1 * settings.outer_tol).max(INNER_TOL_FLOOR));
    let settings = &settings;
    let mut u = match u0 {
        Some(u) => {
            check_potentials(inst, u)?;
            u.clone()
        }
        None => inst.log_marginal_potentials(),
    };
    let eps = inst.epsilon();
    let initial_dual = crate::functionals::dual_value(inst, &u)?;
    let mut warnings = inst.warnings().to_vec();
    let mut trace = Vec::new();
    let mut prev_dual = initial_dual;
    let mut fallbacks = 0;
    let mut renorm_warned = false;

    let mut sweep = 0;
    loop {
        sweep += 1;
        let mut stats = SweepStats::default();
        u = renormalize(&sweep_tracked(inst, &u, settings, &mut stats)?, eps)?;
        fallbacks += stats.fallbacks;
        let ev = evaluate(inst, &u)?;
        let gap = ev.primal - ev.dual;
        let max_residual = ev.residuals.iter().copied().fold(0.0, f64::max);
        let converged = max_residual <= settings.outer_tol && gap.abs() <= settings.gap_tol;
        let last = converged || sweep >= settings.max_sweeps;

        if ev.dual < prev_dual - DUAL_ASCENT_SLACK * prev_dual.abs().max(1.0) {
            warnings.push(format!("sweep {sweep}: dual decreased from {prev_dual} to {}", ev.dual));
        }
        prev_dual = ev.dual;
        let excess = renorm_bound_excess(inst, &u);
        if excess > RENORM_BOUND_SLACK && !renorm_warned {
            warnings.push(format!("sweep {sweep}: renormalized potentials exceed the uniform bound by {excess:.3e}"));
            renorm_warned = true;
        }
        if sweep % settings.trace_every == 0 || last {
            trace.push(SweepRecord {
                sweep,
                dual: ev.dual,
                primal: ev.primal,
                gap,
                max_residual,
                alpha: u.gauge.clone(),
                renorm_bound_excess: excess,
                transform_bound_excess: stats.transform_excess,
                inner_iterations: stats.inner_iterations,
            });
        }
        if last {
            let report = SolveReport {
                gamma: expand_to_full(&ev.gamma, inst.subspace())?,
                gamma_reduced: ev.gamma,
                potentials: u,
                primal: ev.primal,
                dual: ev.dual,
                gap,
                initial_dual,
                marginal_residuals: ev.residuals,
                sweeps: sweep,
                converged,
                trace,
                inner_fallbacks: fallbacks,
                warnings,
            };
            return if converged {
                Ok(report)
            } else {
                Err(Error::MaxSweepsExceeded(Box::new(report)))
            };
        }
    }
}

/// Analytic and finite-difference directional derivatives of the optimal
/// value with respect to one marginal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrechetCheck {
    /// `Tr(U_i σ)` from the converged potentials.
    pub analytic: f64,
    /// Central difference of the optimal value at `γ_i ± hσ`.
    pub numeric: f64,
}

impl FrechetCheck {
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.numeric).abs() / self.analytic.abs().max(1.0)
    }
}

/// Compares `Tr(U_i σ)` with a central difference of the optimal value. The
/// optimal values are read off the dual, which is second-order accurate in
/// the potentials.
pub fn frechet_check(
    inst: &ProblemInstance,
    slot: usize,
    sigma: &HermitianMatrix,
    h: f64,
    settings: &SinkhornSettings,
) -> Result<FrechetCheck> {
    if slot >= inst.n_slots() {
        return Err(Error::DimensionMismatch {
            context: "slot index",
            expected: inst.n_slots(),
            found: slot,
        });
    }
    let gamma = &inst.marginals()[slot];
    if sigma.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch {
            context: "perturbation direction",
            expected: gamma.dim(),
            found: sigma.dim(),
        });
    }
    if linalg::trace(sigma).abs() > 1e-12 * sigma.frobenius_norm().max(1.0) {
        return Err(Error::InvalidSettings("perturbation direction must be traceless"));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidSettings("step size must be positive"));
    }
    let perturbed = |sign: f64| -> Result<ProblemInstance> {
        let g = gamma.add(&sigma.scale(sign * h));
        if eigh(&g)?.min() <= 0.0 {
            return Err(Error::PerturbedMarginalInfeasible { slot });
        }
        let mut marginals = inst.marginals().to_vec();
        marginals[slot] = g;
        let p = ProblemInstance::new(marginals, inst.hamiltonian().clone(), inst.epsilon())?;
        if p.reduced_shape() != inst.reduced_shape() {
            return Err(Error::PerturbedMarginalInfeasible { slot });
        }
        Ok(p)
    };
    let plus = perturbed(1.0)?;
    let minus = perturbed(-1.0)?;
    if !inst.subspace().slot_is_trivial(slot) {
        return Err(Error::PerturbedMarginalInfeasible { slot });
    }
    let base = solve(inst, None, settings)?;
    let analytic = frobenius_inner(&base.potentials.entries[slot], sigma);
    let up = solve(&plus, Some(&base.potentials), settings)?;
    let down = solve(&minus, Some(&base.potentials), settings)?;
    Ok(FrechetCheck {
        analytic,
        numeric: (up.dual - down.dual) / (2.0 * h),
    })
}

/// Finds the zero-sum translation `α` minimizing `max_i ‖V_i − U_i − α_i‖_∞`
/// and returns `V − α` together with `α`. For `V = U + a` this recovers
/// `α = a` and `V − α = U`.
pub fn gauge_align(u: &PotentialVector, v: &PotentialVector) -> Result<(PotentialVector, Vec<f64>)> {
    if u.n_slots() != v.n_slots() {
        return Err(Error::DimensionMismatch {
            context: "gauge_align operands",
            expected: u.n_slots(),
            found: v.n_slots(),
        });
    }
    let n = u.n_slots();
    let mut centers = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for (ui, vi) in u.entries.iter().zip(&v.entries) {
        if ui.dim() != vi.dim() {
            return Err(Error::DimensionMismatch {
                context: "gauge_align entry",
                expected: ui.dim(),
                found: vi.dim(),
            });
        }
        let spec = eigh(&vi.sub(ui))?;
        centers.push(0.5 * (spec.max() + spec.min()));
        radii.push(0.5 * (spec.max() - spec.min()));
    }
    let sum_c: f64 = centers.iter().sum();
    let sum_r: f64 = radii.iter().sum();
    let t = radii
        .iter()
        .copied()
        .fold((sum_c.abs() + sum_r) / n as f64, f64::max);
    let slack: f64 = radii.iter().map(|r| t - r).sum();
    let s = if slack > 0.0 { sum_c / slack } else { 0.0 };
    let alpha: Vec<f64> = centers.iter().zip(&radii).map(|(c, r)| c - s * (t - r)).collect();
    let neg: Vec<f64> = alpha.iter().map(|a| -a).collect();
    Ok((v.translated_unchecked(&neg), alpha))
}
