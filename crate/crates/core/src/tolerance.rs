use serde::{Deserialize, Serialize};

/// Numerical thresholds shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Operator-norm distance below which a group element counts as the identity.
    pub identity: f64,
    /// Minimum transversality margin for two flags to count as antipodal.
    pub antipodal: f64,
    /// Smallest admissible |det| of a rescaled input matrix.
    pub singular: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-9,
            antipodal: 1e-6,
            singular: 1e-12,
        }
    }
}
