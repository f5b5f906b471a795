//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "dim": 2, "flag_dims": [1], "seed": 7,
//!   "factors": [{"name": "A", "generators": [[[9, 0], [0, 0.1111111111111111]]],
//!                "enumeration_depth": 1, "cyclic": true}, ...],
//!   "sets": [{"name": "A", "balls": [{"center_frame": [[1, 0], [0, 1]], "radius": 0.25}, ...]}, ...]
//! }
//! ```
//!
//! Matrices are nested row-major arrays. `sets[i]` belongs to `factors[i]`.
//! A center frame lists spanning columns of the flag; they are
//! orthonormalized left to right, so only the first `max(flag_dims)`
//! columns matter.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{Flag, FlagType};
use crate::freeprod::Factor;
use crate::limits::SampleOptions;
use crate::linalg::{GroupElement, Matrix};
use crate::pingpong::{Ball, BallSet, CertifyOptions, PingPongSystem};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub name: String,
    pub generators: Vec<Vec<Vec<f64>>>,
    pub enumeration_depth: usize,
    #[serde(default)]
    pub cyclic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center_frame: Vec<Vec<f64>>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub name: String,
    pub balls: Vec<BallConfig>,
}

/// Certification parameters; the seed lives at the top level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub margin: f64,
    pub samples_per_ball: usize,
    pub rel_length: usize,
    pub antipodal_slack: f64,
    pub tail_max_power: u32,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        let d = CertifyOptions::default();
        Self {
            margin: d.margin,
            samples_per_ball: d.samples_per_ball,
            rel_length: d.rel_length,
            antipodal_slack: d.antipodal_slack,
            tail_max_power: d.tail_max_power,
        }
    }
}

/// Inputs of the power search: ⟨alpha, beta^n⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchottkyConfig {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub radius_grid: Vec<f64>,
    #[serde(default = "default_k0")]
    pub k0: u32,
}

fn default_k0() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dim: usize,
    pub flag_dims: Vec<usize>,
    pub factors: Vec<FactorConfig>,
    #[serde(default)]
    pub sets: Vec<SetConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub certify: CertifyConfig,
    /// Sample points per ball for limit sets and diagnostics.
    #[serde(default = "default_limit_samples")]
    pub limit_samples_per_ball: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schottky: Option<SchottkyConfig>,
}

fn default_limit_samples() -> usize {
    SampleOptions::default().samples_per_ball
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn flag_type(&self) -> Result<FlagType> {
        FlagType::new(self.dim, self.flag_dims.clone())
    }

    pub fn element(&self, rows: &[Vec<f64>]) -> Result<GroupElement> {
        let g = GroupElement::with_tolerance(Matrix::from_rows(rows)?, self.tolerances.singular)?;
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: g.dim() });
        }
        Ok(g)
    }

    pub fn factors(&self) -> Result<Vec<Factor>> {
        self.factors
            .iter()
            .map(|f| {
                let gens = f.generators.iter().map(|g| self.element(g)).collect::<Result<Vec<_>>>()?;
                Factor::new(f.name.clone(), gens, f.enumeration_depth, f.cyclic)
            })
            .collect()
    }

    pub fn ball_sets(&self) -> Result<Vec<BallSet>> {
        let t = self.flag_type()?;
        self.sets
            .iter()
            .map(|s| {
                let balls = s
                    .balls
                    .iter()
                    .map(|b| {
                        let frame = Matrix::from_rows(&b.center_frame)?;
                        Ok(Ball { center: Flag::from_spanning(t.clone(), &frame)?, radius: b.radius })
                    })
                    .collect::<Result<Vec<_>>>()?;
                BallSet::new(balls).map_err(|e| match e {
                    Error::InvalidBallSet(m) => Error::InvalidBallSet(format!("set {}: {m}", s.name)),
                    other => other,
                })
            })
            .collect()
    }

    pub fn system(&self) -> Result<PingPongSystem> {
        PingPongSystem::new(self.flag_type()?, self.factors()?, self.ball_sets()?)
    }

    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            margin: self.certify.margin,
            samples_per_ball: self.certify.samples_per_ball,
            seed: self.seed,
            rel_length: self.certify.rel_length,
            antipodal_slack: self.certify.antipodal_slack,
            identity_tol: self.tolerances.identity,
            tail_max_power: self.certify.tail_max_power,
        }
    }

    pub fn sample_options(&self) -> SampleOptions {
        SampleOptions { samples_per_ball: self.limit_samples_per_ball, seed: self.seed }
    }

    /// Replaces factors and sets by those of a concrete system (used to
    /// record what a search produced).
    pub fn with_system(&self, system: &PingPongSystem) -> Config {
        let mut out = self.clone();
        out.factors = system
            .factors
            .iter()
            .map(|f| FactorConfig {
                name: f.name.clone(),
                generators: f.generators.iter().map(|g| g.matrix().to_rows()).collect(),
                enumeration_depth: f.depth,
                cyclic: f.cyclic,
            })
            .collect();
        out.sets = system
            .sets
            .iter()
            .zip(&system.factors)
            .map(|(s, f)| SetConfig {
                name: f.name.clone(),
                balls: s
                    .balls()
                    .iter()
                    .map(|b| BallConfig { center_frame: b.center.frame().to_rows(), radius: b.radius })
                    .collect(),
            })
            .collect();
        out.schottky = None;
        out
    }
}
