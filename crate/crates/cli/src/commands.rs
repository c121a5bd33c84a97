//! The `solve`, `check` and `gen` verbs as library functions returning a
//! document and an exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use qsink::oracle::OracleSettings;
use qsink::random::{random_density, random_hermitian, random_potentials};
use qsink::symmetric::{symmetrize_operator, SYMMETRY_TOL};
use qsink::{
    coupling, dense_dual_ascent, diagonal_instance, eigh, lambda_eps, op_norm, partial_trace, pauli_feasible,
    random_instance, sector_newton_oracle, solve, symmetric_solve, symmetrize_check, trace, umegaki_transform,
    HermitianMatrix, PauliVerdict, ProblemInstance, SectorKind, SinkhornSettings, SolveReport, SymmetricInstance,
    SymmetricSettings, TensorShape,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{
    ComplexMatrix, ComplexVector, Dims, InstanceFile, Kind, OracleComparison, ResultFile, SettingsEcho,
    TraceRecord, FORMAT_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Environment variable capping linear-algebra threads.
pub const THREADS_ENV: &str = "QSINK_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Solver(#[from] qsink::Error),
}

impl CliError {
    /// Exit code and machine-readable error name.
    pub fn classify(&self) -> (i32, &'static str) {
        use qsink::Error as E;
        match self {
            CliError::Invalid(_) | CliError::Io(_) => (EXIT_INVALID, "invalid_input"),
            CliError::Solver(e) => match e {
                E::MaxSweepsExceeded(_) => (EXIT_NOT_CONVERGED, "max_sweeps_exceeded"),
                E::IterationBudgetExceeded { .. } => (EXIT_NOT_CONVERGED, "iteration_budget_exceeded"),
                E::InnerNoConvergence { .. } => (EXIT_NOT_CONVERGED, "inner_no_convergence"),
                E::PauliInfeasible { .. } => (EXIT_INFEASIBLE, "pauli_infeasible"),
                E::PauliBoundary { .. } => (EXIT_INFEASIBLE, "pauli_boundary"),
                E::MarginalSingular { .. } => (EXIT_INVALID, "marginal_singular"),
                E::SymmetryViolation { .. } => (EXIT_INVALID, "symmetry_violation"),
                E::MarginalTraceNotOne { .. } | E::MarginalNotPsd { .. } | E::NotDensityMatrix(_) => {
                    (EXIT_INVALID, "not_a_density_matrix")
                }
                E::DimensionMismatch { .. }
                | E::InvalidShape(_)
                | E::NotHermitian { .. }
                | E::NotSquare { .. }
                | E::ReferenceNotPositiveDefinite { .. }
                | E::InvalidEpsilon(_)
                | E::InvalidSettings(_)
                | E::FermionicSectorEmpty { .. } => (EXIT_INVALID, "invalid_input"),
                E::EigenNoConvergence { .. }
                | E::NegativeEigenvalue { .. }
                | E::SingularLog { .. }
                | E::PerturbedMarginalInfeasible { .. } => (EXIT_INTERNAL, "numerical_failure"),
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.classify().0
    }

    /// A result document describing the failure.
    pub fn to_result(&self) -> ResultFile {
        let mut out = ResultFile {
            error: Some(self.classify().1.to_string()),
            message: Some(self.to_string()),
            ..ResultFile::default()
        };
        if let CliError::Solver(qsink::Error::PauliInfeasible { eigenvalue, witness })
        | CliError::Solver(qsink::Error::PauliBoundary { eigenvalue, witness }) = self
        {
            out.eigenvalue = Some(*eigenvalue);
            out.witness = Some(ComplexVector::from_slice(witness));
        }
        out
    }
}

/// Reads `QSINK_THREADS`. The backend is single-threaded at the supported
/// sizes, so the value is validated and echoed only.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub tol: Option<f64>,
    pub gap_tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub emit_gamma: bool,
    pub trace_path: Option<PathBuf>,
    pub seeded_init: Option<u64>,
    pub oracle: bool,
}

/// One line of the `--trace` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub sweep: usize,
    pub dual: f64,
    pub primal: f64,
    pub gap: f64,
    pub max_residual: f64,
    pub alpha: Vec<f64>,
    pub inner_iterations: usize,
}

fn marginals_of(file: &InstanceFile) -> Result<Vec<HermitianMatrix>, CliError> {
    file.marginals
        .iter()
        .enumerate()
        .map(|(i, m)| m.to_hermitian(&format!("marginal {i}")))
        .collect()
}

fn check_epsilon(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("epsilon must be positive and finite, got {eps}")))
    }
}

fn general_instance(file: &InstanceFile) -> Result<ProblemInstance, CliError> {
    let Dims::Slots(dims) = &file.dims else {
        return Err(CliError::Invalid("general instances take dims as a list".into()));
    };
    check_epsilon(file.epsilon)?;
    let marginals = marginals_of(file)?;
    let found: Vec<usize> = marginals.iter().map(HermitianMatrix::dim).collect();
    if &found != dims {
        return Err(CliError::Invalid(format!("dims {dims:?} do not match marginal sizes {found:?}")));
    }
    let h = file.hamiltonian.to_hermitian("hamiltonian")?;
    let inst = ProblemInstance::new(marginals, h, file.epsilon)?;
    match &file.reference {
        None => Ok(inst),
        Some(refs) => {
            let refs = refs
                .iter()
                .enumerate()
                .map(|(i, m)| m.to_hermitian(&format!("reference {i}")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(umegaki_transform(&inst, &refs)?)
        }
    }
}

fn sector_kind(kind: Kind) -> Option<SectorKind> {
    match kind {
        Kind::General => None,
        Kind::Bosonic => Some(SectorKind::Bosonic),
        Kind::Fermionic => Some(SectorKind::Fermionic),
    }
}

fn symmetric_instance(file: &InstanceFile, kind: SectorKind) -> Result<SymmetricInstance, CliError> {
    let Dims::Sector { d, n } = file.dims else {
        return Err(CliError::Invalid("bosonic and fermionic instances take dims as {\"d\", \"N\"}".into()));
    };
    if file.reference.is_some() {
        return Err(CliError::Invalid("reference measures apply to general instances only".into()));
    }
    check_epsilon(file.epsilon)?;
    let marginals = marginals_of(file)?;
    let [gamma] = <[HermitianMatrix; 1]>::try_from(marginals)
        .map_err(|m| CliError::Invalid(format!("expected one single-particle marginal, found {}", m.len())))?;
    let h = file.hamiltonian.to_hermitian("hamiltonian")?;
    Ok(SymmetricInstance::new(kind, d, n, gamma, h, file.epsilon)?)
}

fn write_trace(path: &PathBuf, report: &SolveReport) -> Result<(), CliError> {
    let mut text = String::new();
    for r in &report.trace {
        let line = TraceLine {
            sweep: r.sweep,
            dual: r.dual,
            primal: r.primal,
            gap: r.gap,
            max_residual: r.max_residual,
            alpha: r.alpha.clone(),
            inner_iterations: r.inner_iterations,
        };
        writeln!(text, "{}", serde_json::to_string(&line).expect("trace line serializes")).expect("string write");
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn fill_general(out: &mut ResultFile, inst: &ProblemInstance, report: &SolveReport, opts: &SolveOptions) {
    out.converged = report.converged;
    out.primal = Some(report.primal);
    out.dual = Some(report.dual);
    out.gap = Some(report.gap);
    out.marginal_residuals = report.marginal_residuals.clone();
    out.sweeps = report.sweeps;
    out.reduced_dims = inst.reduced_shape().dims().to_vec();
    out.kernel_dims = inst.subspace().kernel_dims();
    out.potentials = report.potentials.entries.iter().map(ComplexMatrix::from_hermitian).collect();
    out.gamma = opts.emit_gamma.then(|| ComplexMatrix::from_hermitian(&report.gamma));
    out.trace = report
        .trace
        .iter()
        .map(|r| TraceRecord {
            sweep: r.sweep,
            dual: r.dual,
            max_residual: r.max_residual,
            alpha: r.alpha.clone(),
        })
        .collect();
    out.warnings = report.warnings.clone();
}

fn solve_general(file: &InstanceFile, opts: &SolveOptions, threads: usize) -> Result<(ResultFile, i32), CliError> {
    let inst = general_instance(file)?;
    let defaults = SinkhornSettings::default();
    let settings = SinkhornSettings {
        outer_tol: opts.tol.unwrap_or(defaults.outer_tol),
        gap_tol: opts.gap_tol.unwrap_or(defaults.gap_tol),
        max_sweeps: opts.max_sweeps.unwrap_or(defaults.max_sweeps),
        ..defaults
    };
    let u0 = opts
        .seeded_init
        .map(|seed| random_potentials(&mut ChaCha8Rng::seed_from_u64(seed), inst.reduced_shape(), 1.0));
    let mut out = ResultFile {
        settings: Some(SettingsEcho {
            outer_tol: settings.outer_tol,
            gap_tol: settings.gap_tol,
            max_sweeps: settings.max_sweeps,
            seeded_init: opts.seeded_init,
            threads,
        }),
        instance_hash: file.hash(),
        ..ResultFile::default()
    };
    let (report, code) = match solve(&inst, u0.as_ref(), &settings) {
        Ok(report) => (report, EXIT_OK),
        Err(qsink::Error::MaxSweepsExceeded(report)) => {
            let err = CliError::Solver(qsink::Error::MaxSweepsExceeded(report.clone()));
            out.error = Some(err.classify().1.to_string());
            out.message = Some(err.to_string());
            (*report, EXIT_NOT_CONVERGED)
        }
        Err(e) => return Err(e.into()),
    };
    fill_general(&mut out, &inst, &report, opts);
    if let Some(path) = &opts.trace_path {
        write_trace(path, &report)?;
    }
    if opts.oracle {
        let o = dense_dual_ascent(&inst, &OracleSettings::default())?;
        let g = coupling(&inst, &o.potentials)?;
        out.oracle = Some(OracleComparison {
            dual: o.dual,
            dual_difference: (o.dual - report.dual).abs(),
            gamma_difference: Some(g.frobenius_distance(&report.gamma_reduced)),
        });
    }
    Ok((out, code))
}

fn solve_symmetric(
    file: &InstanceFile,
    kind: SectorKind,
    opts: &SolveOptions,
    threads: usize,
) -> Result<(ResultFile, i32), CliError> {
    let inst = symmetric_instance(file, kind)?;
    let defaults = SymmetricSettings::default();
    let settings = SymmetricSettings {
        grad_tol: opts.tol.unwrap_or(defaults.grad_tol),
        gap_tol: opts.gap_tol.unwrap_or(defaults.gap_tol),
        max_iters: opts.max_sweeps.unwrap_or(defaults.max_iters),
        ..defaults
    };
    if opts.seeded_init.is_some() {
        return Err(CliError::Invalid("--seeded-init applies to general instances only".into()));
    }
    let report = symmetric_solve(&inst, &settings)?;
    let mut out = ResultFile {
        converged: true,
        primal: Some(report.primal),
        dual: Some(report.dual),
        gap: Some(report.gap),
        marginal_residuals: vec![report.marginal_residual],
        sweeps: report.iterations,
        potentials: vec![ComplexMatrix::from_hermitian(&report.potential)],
        gamma: opts.emit_gamma.then(|| ComplexMatrix::from_hermitian(&report.gamma)),
        settings: Some(SettingsEcho {
            outer_tol: settings.grad_tol,
            gap_tol: settings.gap_tol,
            max_sweeps: settings.max_iters,
            seeded_init: None,
            threads,
        }),
        instance_hash: file.hash(),
        ..ResultFile::default()
    };
    if let Some(path) = &opts.trace_path {
        // No per-sweep records exist for the sector solver.
        fs::write(path, "").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    if opts.oracle {
        let o = sector_newton_oracle(&inst, &OracleSettings::default())?;
        out.oracle = Some(OracleComparison {
            dual: o.dual,
            dual_difference: (o.dual - report.dual).abs(),
            gamma_difference: None,
        });
    }
    Ok((out, EXIT_OK))
}

/// Runs the solver selected by the instance kind. Failures are folded into
/// the returned document.
pub fn cmd_solve(file: &InstanceFile, opts: &SolveOptions) -> (ResultFile, i32) {
    let run = || {
        let threads = thread_cap()?;
        match sector_kind(file.kind) {
            None => solve_general(file, opts, threads),
            Some(kind) => solve_symmetric(file, kind, opts, threads),
        }
    };
    match run() {
        Ok(done) => done,
        Err(e) => {
            let mut out = e.to_result();
            out.instance_hash = file.hash();
            (out, e.exit_code())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub ok: bool,
    pub findings: Vec<Finding>,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reduced_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector_dim: Option<usize>,
    pub instance_hash: String,
}

const CHECK_TRACE_TOL: f64 = 1e-10;
const CHECK_PSD_TOL: f64 = 1e-12;

/// Validates an instance without solving it. Exit code 0 when clean, 3 when
/// the only findings are Pauli violations, 4 otherwise.
pub fn cmd_check(file: &InstanceFile) -> (CheckReport, i32) {
    let mut report = CheckReport {
        dims: file.slot_dims(),
        instance_hash: file.hash(),
        ..CheckReport::default()
    };
    let mut finding = |kind: &str, detail: String, value: Option<f64>| {
        report.findings.push(Finding {
            kind: kind.into(),
            detail,
            value,
        })
    };
    if !(file.epsilon > 0.0 && file.epsilon.is_finite()) {
        finding("epsilon", format!("epsilon must be positive and finite, got {}", file.epsilon), Some(file.epsilon));
    }

    let dims = file.slot_dims();
    let mut marginals = Vec::new();
    for (i, m) in file.marginals.iter().enumerate() {
        match m.to_hermitian(&format!("marginal {i}")) {
            Ok(g) => marginals.push(g),
            Err(e) => finding("not_hermitian", e.to_string(), None),
        }
    }
    let expected_count = match file.dims {
        Dims::Slots(_) => dims.len(),
        Dims::Sector { .. } => 1,
    };
    if file.marginals.len() != expected_count {
        finding(
            "dimension",
            format!("expected {expected_count} marginals, found {}", file.marginals.len()),
            None,
        );
    }
    for (i, g) in marginals.iter().enumerate() {
        if dims.get(i).is_some_and(|&d| d != g.dim()) {
            finding("dimension", format!("marginal {i} is {0}x{0}, dims say {1}", g.dim(), dims[i]), None);
            continue;
        }
        let tr = trace(g);
        if (tr - 1.0).abs() > CHECK_TRACE_TOL {
            finding("trace", format!("marginal {i} has trace {tr}"), Some(tr));
        }
        match eigh(g) {
            Ok(spec) if spec.min() < -CHECK_PSD_TOL => {
                finding("not_psd", format!("marginal {i} has eigenvalue {}", spec.min()), Some(spec.min()))
            }
            Ok(_) => {}
            Err(e) => finding("numerical", e.to_string(), None),
        }
    }
    let total: usize = dims.iter().product();
    let h = match file.hamiltonian.to_hermitian("hamiltonian") {
        Ok(h) if h.dim() == total => Some(h),
        Ok(h) => {
            finding("dimension", format!("hamiltonian is {0}x{0}, expected {total}", h.dim()), None);
            None
        }
        Err(e) => {
            finding("not_hermitian", e.to_string(), None);
            None
        }
    };

    if let (Some(kind), Some(h)) = (sector_kind(file.kind), &h) {
        if let Dims::Sector { d, n } = file.dims {
            let shape = TensorShape::new(vec![d; n]);
            match shape.and_then(|s| symmetrize_check(h, &s)) {
                Ok(dev) if dev > SYMMETRY_TOL => finding(
                    "symmetry",
                    format!("hamiltonian deviates from its symmetrization by {dev:.3e} (max over transpositions)"),
                    Some(dev),
                ),
                Ok(_) => {}
                Err(e) => finding("symmetry", e.to_string(), None),
            }
            if kind == SectorKind::Fermionic && marginals.len() == 1 {
                if let Ok(a) = pauli_feasible(&marginals[0], n) {
                    if a.verdict == PauliVerdict::Infeasible {
                        finding(
                            "pauli_infeasible",
                            format!("eigenvalue {} exceeds 1/N = {}", a.max_eigenvalue, 1.0 / n as f64),
                            Some(a.max_eigenvalue),
                        );
                    } else if a.at_boundary(n) {
                        finding(
                            "pauli_boundary",
                            format!("eigenvalue {} equals 1/N", a.max_eigenvalue),
                            Some(a.max_eigenvalue),
                        );
                    }
                }
            }
            match qsink::build_sector(kind, d, n) {
                Ok(b) => report.sector_dim = Some(b.dim()),
                Err(e) => finding("sector", e.to_string(), None),
            }
        } else {
            finding("dimension", "sector kinds take dims as {\"d\", \"N\"}".into(), None);
        }
    }

    if report.findings.is_empty() && file.kind == Kind::General {
        match general_instance(file) {
            Ok(inst) => {
                report.reduced_dims = inst.reduced_shape().dims().to_vec();
                report.kernel_dims = inst.subspace().kernel_dims();
            }
            Err(e) => report.findings.push(Finding {
                kind: e.classify().1.into(),
                detail: e.to_string(),
                value: None,
            }),
        }
    }

    report.ok = report.findings.is_empty();
    let code = if report.ok {
        EXIT_OK
    } else if report.findings.iter().all(|f| f.kind.starts_with("pauli")) {
        EXIT_INFEASIBLE
    } else {
        EXIT_INVALID
    };
    (report, code)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Named {
    Zero,
    Diagonal,
    Swap,
    Gibbs,
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub named: Option<Named>,
    pub kind: Kind,
    /// Slot dimensions; for sector kinds a single entry `d`.
    pub dims: Vec<usize>,
    pub particles: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub h_norm: f64,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            named: None,
            kind: Kind::General,
            dims: vec![2, 2],
            particles: 2,
            seed: 0,
            epsilon: 1.0,
            h_norm: 1.0,
        }
    }
}

fn general_file(marginals: &[HermitianMatrix], h: &HermitianMatrix, epsilon: f64) -> InstanceFile {
    InstanceFile {
        version: FORMAT_VERSION,
        kind: Kind::General,
        epsilon,
        dims: Dims::Slots(marginals.iter().map(HermitianMatrix::dim).collect()),
        marginals: marginals.iter().map(ComplexMatrix::from_hermitian).collect(),
        hamiltonian: ComplexMatrix::from_hermitian(h),
        reference: None,
    }
}

/// `h_norm` times the operator exchanging the first two slots.
fn swap_hamiltonian(dims: &[usize], h_norm: f64) -> Result<HermitianMatrix, CliError> {
    if dims.len() < 2 || dims[0] != dims[1] {
        return Err(CliError::Invalid("the swap Hamiltonian needs two leading slots of equal dimension".into()));
    }
    let d = dims[0];
    let rest: usize = dims[2..].iter().product();
    let total = d * d * rest;
    let mut entries = vec![0.0; total * total];
    for a in 0..d {
        for b in 0..d {
            for r in 0..rest {
                let from = (a * d + b) * rest + r;
                let to = (b * d + a) * rest + r;
                entries[to * total + from] = h_norm;
            }
        }
    }
    Ok(HermitianMatrix::from_real(total, &entries)?)
}

fn check_gen(opts: &GenOptions) -> Result<(), CliError> {
    check_epsilon(opts.epsilon)?;
    if !(opts.h_norm >= 0.0 && opts.h_norm.is_finite()) {
        return Err(CliError::Invalid(format!("h-norm must be non-negative, got {}", opts.h_norm)));
    }
    if opts.dims.is_empty() || opts.dims.contains(&0) {
        return Err(CliError::Invalid(format!("invalid dims {:?}", opts.dims)));
    }
    Ok(())
}

/// Generates an instance. Every random draw comes from one ChaCha8 stream
/// seeded with `seed`: marginals slot by slot, then the Hamiltonian.
pub fn cmd_gen(opts: &GenOptions) -> Result<InstanceFile, CliError> {
    check_gen(opts)?;
    if let Some(kind) = sector_kind(opts.kind) {
        if opts.named.is_some() {
            return Err(CliError::Invalid("named instances are general".into()));
        }
        return gen_sector(opts, kind);
    }
    let dims = &opts.dims;
    let file = match opts.named {
        None => {
            let inst = random_instance(opts.seed, dims, opts.epsilon, opts.h_norm)?;
            general_file(inst.marginals(), inst.hamiltonian(), opts.epsilon)
        }
        Some(Named::Zero) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let marginals: Vec<_> = dims.iter().map(|&d| random_density(&mut rng, d)).collect();
            general_file(&marginals, &HermitianMatrix::zeros(dims.iter().product()), opts.epsilon)
        }
        Some(Named::Diagonal) => {
            let inst = diagonal_instance(opts.seed, dims, opts.epsilon, opts.h_norm)?;
            general_file(inst.marginals(), inst.hamiltonian(), opts.epsilon)
        }
        Some(Named::Swap) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let marginals: Vec<_> = dims.iter().map(|&d| random_density(&mut rng, d)).collect();
            general_file(&marginals, &swap_hamiltonian(dims, opts.h_norm)?, opts.epsilon)
        }
        Some(Named::Gibbs) => {
            // Marginals of exp(-H/ε)/Z, so the optimal coupling is the Gibbs
            // state itself.
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let shape = TensorShape::new(dims.clone())?;
            let h = random_hermitian(&mut rng, shape.total(), opts.h_norm);
            let eps = opts.epsilon;
            let log_z = lambda_eps(&h.scale(-1.0), eps)?;
            let gibbs = eigh(&h)?.map(|x| ((-x - log_z) / eps).exp());
            let marginals = (0..dims.len())
                .map(|i| {
                    let m = partial_trace(i, &gibbs, &shape)?;
                    Ok(m.scale(1.0 / trace(&m)))
                })
                .collect::<qsink::Result<Vec<_>>>()?;
            general_file(&marginals, &h, eps)
        }
    };
    Ok(file)
}

fn gen_sector(opts: &GenOptions, kind: SectorKind) -> Result<InstanceFile, CliError> {
    let [d] = opts.dims[..] else {
        return Err(CliError::Invalid("sector kinds take a single dimension d".into()));
    };
    let n = opts.particles;
    if n < 2 {
        return Err(CliError::Invalid("sector kinds need at least two particles".into()));
    }
    if kind == SectorKind::Fermionic && d <= n {
        return Err(CliError::Invalid(format!(
            "a strictly Pauli-feasible marginal needs d > N (d = {d}, N = {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut gamma = random_density(&mut rng, d);
    if kind == SectorKind::Fermionic {
        // Mix toward 1/d until the top eigenvalue sits halfway between 1/d
        // and the Pauli bound.
        let top = eigh(&gamma)?.max();
        let target = 0.5 * (1.0 / n as f64 + 1.0 / d as f64);
        if top > target {
            let t = (top - target) / (top - 1.0 / d as f64);
            gamma = gamma.scale(1.0 - t).add(&HermitianMatrix::identity(d).scale(t / d as f64));
        }
    }
    let total = d.pow(n as u32);
    let raw = symmetrize_operator(&random_hermitian(&mut rng, total, 1.0), d, n)?;
    let norm = op_norm(&raw);
    let h = if norm > 0.0 { raw.scale(opts.h_norm / norm) } else { raw };
    Ok(InstanceFile {
        version: FORMAT_VERSION,
        kind: opts.kind,
        epsilon: opts.epsilon,
        dims: Dims::Sector { d, n },
        marginals: vec![ComplexMatrix::from_hermitian(&gamma)],
        hamiltonian: ComplexMatrix::from_hermitian(&h),
        reference: None,
    })
}
