//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twistpath_core::continuation::SolverOptions;
use twistpath_core::geometry::{ToricGeometry, TorusGeometry};
use twistpath_core::kahler::KahlerBackground;
use twistpath_core::lattice::{Field, TorusGrid};
use twistpath_core::toric::{MomentGrid, ToricPotential, ToricTwist};

use crate::error::{CliError, Result};
use crate::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Torus,
    Cp1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: Backend,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub torus: TorusConfig,
    #[serde(default)]
    pub cp1: Cp1Config,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub twist: TwistConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
}

/// `ψ_ref = Σ cos·cos(k·x) + sin·sin(k·x)` over integer wavevectors `k`
/// in the real coordinates `(x₁, y₁, x₂, y₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorusConfig {
    pub dim: usize,
    pub points: usize,
    /// Galerkin cutoff per real axis.
    pub cutoff: usize,
    pub background: Vec<TrigTerm>,
}

impl Default for TorusConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            points: 32,
            cutoff: 8,
            background: vec![TrigTerm {
                k: vec![1, 0],
                cos: 0.3,
                sin: 0.0,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cp1Config {
    /// Chebyshev nodes on the moment interval.
    pub nodes: usize,
    /// Power-series coefficients of the reference correction `h(x)`.
    pub reference_power: Vec<f64>,
    /// Reference potential file; overrides `reference_power`.
    pub reference_file: Option<PathBuf>,
}

impl Default for Cp1Config {
    fn default() -> Self {
        // 0.1(1 − x²)² + 0.05x(1 − x²)²
        Self {
            nodes: 64,
            reference_power: vec![0.1, 0.05, -0.2, -0.1, 0.1, 0.05],
            reference_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
    pub kernel_threshold: f64,
    pub trust_radius: f64,
    pub trust_interval: f64,
    pub min_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
            fd_step: o.fd_step,
            kernel_threshold: o.kernel_threshold,
            trust_radius: o.trust_radius,
            trust_interval: o.trust_interval,
            min_step: o.min_step,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            fd_step: self.fd_step,
            kernel_threshold: self.kernel_threshold,
            trust_radius: self.trust_radius,
            trust_interval: self.trust_interval,
            min_step: self.min_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    pub t_end: f64,
    pub steps: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            t_end: 0.9,
            steps: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwistConfig {
    pub a: f64,
    pub b: f64,
}

impl TwistConfig {
    pub fn spec(&self) -> ToricTwist {
        ToricTwist::new(self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// Parameter of the twisted energy column and of the convexity column.
    pub t: f64,
    /// Quadrature samples per straight segment.
    pub samples: usize,
    /// Samples of the built-in scan path.
    pub path_samples: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            t: 0.9,
            samples: 33,
            path_samples: 21,
        }
    }
}

impl RunConfig {
    pub fn default_for(backend: Backend) -> Self {
        Self {
            backend,
            seed: 0,
            output: None,
            torus: TorusConfig::default(),
            cp1: Cp1Config::default(),
            solver: SolverConfig::default(),
            path: PathConfig::default(),
            twist: TwistConfig::default(),
            energy: EnergyConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.into(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        let positive = [
            ("solver.tolerance", s.tolerance),
            ("solver.fd_step", s.fd_step),
            ("solver.kernel_threshold", s.kernel_threshold),
            ("solver.trust_radius", s.trust_radius),
            ("solver.trust_interval", s.trust_interval),
            ("solver.min_step", s.min_step),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if s.max_iterations == 0 {
            return Err(CliError::Config(
                "solver.max_iterations must be at least 1".into(),
            ));
        }
        if !(0.5..1.0).contains(&self.path.t_end) {
            return Err(CliError::Config(format!(
                "path.t_end must lie in [0.5, 1), got {}",
                self.path.t_end
            )));
        }
        if self.path.steps < 2 {
            return Err(CliError::Config("path.steps must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.energy.t) {
            return Err(CliError::Config("energy.t must lie in [0, 1]".into()));
        }
        if self.energy.samples < 33 || self.energy.samples.is_multiple_of(2) {
            return Err(CliError::Config(
                "energy.samples must be odd and at least 33".into(),
            ));
        }
        if self.energy.path_samples < 3 {
            return Err(CliError::Config(
                "energy.path_samples must be at least 3".into(),
            ));
        }
        match self.backend {
            Backend::Torus => {
                if self.twist.a != 0.0 {
                    return Err(CliError::Config(
                        "the torus admits no twist (twist.a must be 0)".into(),
                    ));
                }
                let limit = self.torus.points / 3;
                if self.torus.cutoff == 0 || self.torus.cutoff > limit {
                    return Err(CliError::Config(format!(
                        "torus.cutoff must lie in 1..={limit} for {} points",
                        self.torus.points
                    )));
                }
                let axes = 2 * self.torus.dim;
                if let Some(term) = self.torus.background.iter().find(|t| t.k.len() != axes) {
                    return Err(CliError::Config(format!(
                        "background wavevector {:?} needs {axes} entries",
                        term.k
                    )));
                }
            }
            Backend::Cp1 => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn torus_geometry(&self) -> Result<TorusGeometry> {
        let grid = TorusGrid::new(self.torus.dim, self.torus.points)?;
        let terms = self.torus.background.clone();
        let psi = Field::from_fn(grid, |p| {
            terms
                .iter()
                .map(|t| {
                    let phase: f64 = t.k.iter().zip(p).map(|(k, x)| *k as f64 * x).sum();
                    t.cos * phase.cos() + t.sin * phase.sin()
                })
                .sum()
        });
        Ok(TorusGeometry::new(
            KahlerBackground::new(psi)?,
            self.torus.cutoff,
        )?)
    }

    pub fn cp1_reference(&self) -> Result<ToricPotential> {
        match &self.cp1.reference_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                    path: path.clone(),
                    source,
                })?;
                let potential = formats::toric_from_json(&text)?;
                if potential.grid().len() != self.cp1.nodes {
                    return Err(CliError::Config(format!(
                        "reference file has {} nodes, cp1.nodes is {}",
                        potential.grid().len(),
                        self.cp1.nodes
                    )));
                }
                Ok(potential)
            }
            None => {
                let grid = MomentGrid::new(self.cp1.nodes)?;
                let coeffs = self.cp1.reference_power.clone();
                Ok(ToricPotential::from_fn(&grid, |x| {
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
                }))
            }
        }
    }

    pub fn cp1_geometry(&self) -> Result<ToricGeometry> {
        Ok(ToricGeometry::with_default_degree(self.cp1_reference()?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_toml("backend = \"cp1\"").unwrap();
        assert_eq!(c, RunConfig::default_for(Backend::Cp1));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "backend = \"torus\"\n[solver]\ntolerance = -1e-10",
            "backend = \"torus\"\n[path]\nt_end = 0.4",
            "backend = \"torus\"\n[twist]\na = 0.1",
            "backend = \"torus\"\n[torus]\nbackground = [{ k = [1], cos = 0.1 }]",
            "backend = \"sphere\"",
            "backend = \"cp1\"\nunknown = 3",
            "backend = \"torus\"\n[torus]\npoints = 8",
        ] {
            assert!(
                matches!(RunConfig::from_toml(text), Err(CliError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default_for(Backend::Torus);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn reference_polynomial_is_evaluated_in_powers() {
        let c = RunConfig::default_for(Backend::Cp1);
        let u = c.cp1_reference().unwrap();
        for x in [-0.7, 0.0, 0.3] {
            let expected =
                0.1 * (1.0 - x * x) * (1.0 - x * x) + 0.05 * x * (1.0 - x * x) * (1.0 - x * x);
            assert!((u.h(x) - expected).abs() < 1e-13);
        }
    }
}
