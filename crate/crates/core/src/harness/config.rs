//! Experiment configuration: one TOML file with sections, every key optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Closure, EvolutionConfig, Method};
use crate::grid::GridSpec;
use crate::interactions::{builtin_profile, realize_potential, PotentialSpec, ProfileKind};
use crate::io::read_field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 16,
            length: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// `gaussian`, `bump`, `delta`, `zero`, or a path to a field file.
    pub profile: String,
    pub width: f64,
    pub beta: f64,
    /// Particle number for single runs.
    pub big_n: u64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            profile: "gaussian".into(),
            width: 1.2,
            beta: 0.2,
            big_n: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub big_n: Vec<u64>,
    pub b1: f64,
    pub k_max: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            big_n: vec![2, 3, 4, 5],
            b1: 1.0,
            k_max: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub xi1: Option<f64>,
    pub xi: f64,
    pub xi_prime: f64,
    pub c0: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            xi1: Some(0.1),
            xi: 0.2,
            xi_prime: 0.4,
            c0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Number of report samples after `t = 0`.
    pub samples: usize,
    pub method: Method,
    pub closure: Closure,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 0.2,
            samples: 4,
            method: Method::StrangSplitting,
            closure: Closure::Mixture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConservationConfig {
    pub atoms: usize,
    pub m_max: usize,
    pub windows: usize,
    pub window: f64,
}

impl Default for ConservationConfig {
    fn default() -> Self {
        Self {
            atoms: 3,
            m_max: 2,
            windows: 4,
            window: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuhamelConfig {
    pub j_max: usize,
    pub horizons: Vec<f64>,
    /// Time samples per horizon.
    pub steps: usize,
}

impl Default for DuhamelConfig {
    fn default() -> Self {
        Self {
            j_max: 2,
            horizons: vec![0.01, 0.02, 0.04],
            steps: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    /// Marginal orders written by `simulate-*` runs.
    pub k_marginals: usize,
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub ladder: LadderConfig,
    pub weights: WeightConfig,
    pub time: TimeConfig,
    pub conservation: ConservationConfig,
    pub duhamel: DuhamelConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            output: PathBuf::from("hlab-out"),
            k_marginals: 2,
            grid: GridConfig::default(),
            potential: PotentialConfig::default(),
            ladder: LadderConfig::default(),
            weights: WeightConfig::default(),
            time: TimeConfig::default(),
            conservation: ConservationConfig::default(),
            duhamel: DuhamelConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let w = &self.weights;
        if !(0.0 < w.xi && w.xi < w.xi_prime && w.xi_prime < 1.0) {
            return Err(Error::Config(format!(
                "need 0 < ξ < ξ′ < 1, got ξ = {}, ξ′ = {}",
                w.xi, w.xi_prime
            )));
        }
        if let Some(xi1) = w.xi1 {
            if !(0.0 < xi1 && xi1 < w.xi) {
                return Err(Error::Config(format!("need 0 < ξ₁ < ξ, got ξ₁ = {xi1}")));
            }
        }
        if !(self.time.dt > 0.0 && self.time.t_final >= 0.0) {
            return Err(Error::Config("need dt > 0 and t_final ≥ 0".into()));
        }
        if self.time.samples == 0 {
            return Err(Error::Config("need at least one report sample".into()));
        }
        if self.ladder.big_n.iter().any(|&n| n < 1) || self.potential.big_n < 1 {
            return Err(Error::Config("particle numbers must be at least 1".into()));
        }
        if self.ladder.k_max == 0 || self.k_marginals == 0 {
            return Err(Error::Config("truncation levels must be at least 1".into()));
        }
        if self.conservation.atoms == 0 {
            return Err(Error::Config("a mixture needs at least one atom".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.n, self.grid.length)
    }

    /// `V_N` for the configured profile; `delta` and `zero` ignore β.
    pub fn potential(&self, big_n: u64) -> Result<PotentialSpec> {
        let g = self.grid()?;
        let p = &self.potential;
        match p.profile.as_str() {
            "delta" => Ok(PotentialSpec::delta_surrogate(g, big_n)),
            "zero" => Ok(PotentialSpec::zero(g, big_n)),
            "gaussian" | "bump" => {
                let kind: ProfileKind = p.profile.parse()?;
                realize_potential(&builtin_profile(g, kind, p.width)?, p.beta, big_n)
            }
            path => {
                let profile = read_field(path)?;
                if *profile.grid() != g {
                    return Err(Error::Config(format!("profile file {path} uses a different grid")));
                }
                realize_potential(&profile, p.beta, big_n)
            }
        }
    }

    pub fn evolution(&self, truncation: usize) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.time.dt,
            t_final: self.time.t_final,
            method: self.time.method,
            closure: self.time.closure,
            truncation,
            b1: self.ladder.b1,
            xi: self.weights.xi,
            xi_prime: self.weights.xi_prime,
            c0: self.weights.c0,
            record_every: 0,
        }
    }

    /// Report times `j·t_final/samples`, `j = 0..=samples`.
    pub fn sample_times(&self) -> Vec<f64> {
        let s = self.time.samples;
        (0..=s).map(|j| j as f64 * self.time.t_final / s as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let s = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&s).unwrap(), cfg);
    }

    #[test]
    fn partial_files_and_ordering() {
        let cfg = ExperimentConfig::from_toml_str("seed = 3\n[grid]\nn = 8\n").unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.grid.n, 8);
        assert_eq!(cfg.grid.dim, 1);
        assert!(ExperimentConfig::from_toml_str("[weights]\nxi = 0.5\nxi_prime = 0.4\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[weights]\nxi1 = 0.3\n").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[grid]\nn = 7\n").is_err());
    }

    #[test]
    fn named_potentials() {
        let mut cfg = ExperimentConfig::default();
        assert!((cfg.potential(16).unwrap().kappa0() - 1.0).abs() < 1e-12);
        cfg.potential.profile = "zero".into();
        assert_eq!(cfg.potential(16).unwrap().kappa0(), 0.0);
        cfg.potential.profile = "nonexistent.hlab".into();
        assert!(cfg.potential(16).is_err());
    }
}
