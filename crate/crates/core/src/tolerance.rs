//! Numerical tolerances shared by every check in the crate.

use serde::{Deserialize, Serialize};

/// One record for every threshold used by the library and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest admissible |⟨φᵢ|φⱼ⟩| for i ≠ j.
    pub orthogonality: f64,
    /// Eigenvalues above `-psd` count as non-negative.
    pub psd: f64,
    /// Max-norm reconstruction error allowed per unit of dimension in `V Λ V†`.
    pub eigen_reconstruction: f64,
    /// Largest admissible |⟨w|φᵢ⟩| for a witness product vector.
    pub witness: f64,
    /// Stopping threshold on the descent direction norm.
    pub gradient: f64,
    /// Deviation from Hermiticity accepted on input.
    pub hermitian: f64,
    /// Singular values below `rank * max(1, σ_max)` are treated as zero.
    pub rank: f64,
    /// Two qubit factors are parallel when `1 - |⟨u|v⟩| <= parallel`.
    pub parallel: f64,
    /// |det| at or below this value counts as vanishing.
    pub determinant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orthogonality: 1e-10,
            psd: 1e-10,
            eigen_reconstruction: 1e-9,
            witness: 1e-8,
            gradient: 1e-4,
            hermitian: 1e-12,
            rank: 1e-9,
            parallel: 1e-9,
            determinant: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            ("orthogonality", self.orthogonality),
            ("psd", self.psd),
            ("eigen_reconstruction", self.eigen_reconstruction),
            ("witness", self.witness),
            ("gradient", self.gradient),
            ("hermitian", self.hermitian),
            ("rank", self.rank),
            ("parallel", self.parallel),
            ("determinant", self.determinant),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::InvalidArgument(format!(
                    "tolerance {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
