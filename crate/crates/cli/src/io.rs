//! JSON instance and result files.
//!
//! Complex matrices are stored as `{"re": [...], "im": [...]}` in row-major
//! order. Floats are written with serde_json's shortest round-trip
//! representation, so `load(save(x)) == x` bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use qsink::HermitianMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn from_hermitian(m: &HermitianMatrix) -> Self {
        let (re, im) = m.to_parts();
        Self { re, im }
    }

    pub fn dim(&self) -> Result<usize, CliError> {
        let n = (self.re.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != self.re.len() || self.im.len() != self.re.len() {
            return Err(CliError::Invalid(format!(
                "matrix with {} real and {} imaginary entries is not square",
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(n)
    }

    /// Validates hermiticity and converts.
    pub fn to_hermitian(&self, what: &str) -> Result<HermitianMatrix, CliError> {
        let n = self.dim()?;
        HermitianMatrix::from_parts(n, &self.re, &self.im).map_err(|e| CliError::Invalid(format!("{what}: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexVector {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVector {
    pub fn from_slice(v: &[Complex64]) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    General,
    Bosonic,
    Fermionic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dims {
    Slots(Vec<usize>),
    Sector {
        d: usize,
        #[serde(rename = "N")]
        n: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub kind: Kind,
    pub epsilon: f64,
    pub dims: Dims,
    pub marginals: Vec<ComplexMatrix>,
    /// On the full tensor product space.
    pub hamiltonian: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<ComplexMatrix>>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let inst: Self = serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("instance: {e}")))?;
        if inst.version != FORMAT_VERSION {
            return Err(CliError::Invalid(format!("unsupported instance version {}", inst.version)));
        }
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// SHA-256 of the canonical compact encoding, so formatting does not
    /// change the hash.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Slot dimensions of the full tensor product.
    pub fn slot_dims(&self) -> Vec<usize> {
        match &self.dims {
            Dims::Slots(d) => d.clone(),
            Dims::Sector { d, n } => vec![*d; *n],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sweep: usize,
    pub dual: f64,
    pub max_residual: f64,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingsEcho {
    pub outer_tol: f64,
    pub gap_tol: f64,
    pub max_sweeps: usize,
    pub seeded_init: Option<u64>,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub dual: f64,
    pub dual_difference: f64,
    /// Frobenius distance between the couplings; absent for sector kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_difference: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Offending eigenvalue for Pauli failures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<ComplexVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default)]
    pub marginal_residuals: Vec<f64>,
    pub sweeps: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reduced_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_dims: Vec<usize>,
    /// Renormalized potentials on the reduced spaces.
    #[serde(default)]
    pub potentials: Vec<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<ComplexMatrix>,
    #[serde(default)]
    pub trace: Vec<TraceRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<SettingsEcho>,
    #[serde(default)]
    pub instance_hash: String,
}

impl ResultFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("result: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
