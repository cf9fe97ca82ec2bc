use std::path::{Path, PathBuf};

use diffmourre::mourre::{CommutatorRoute, EnergyWindow};
use diffmourre::operators::{WeightKind, DEFAULT_DENSE_CAP};
use diffmourre::potentials::PotentialSpec;
use diffmourre::{make_grid, Error, GridSpec, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LapConfig {
    pub gamma: f64,
    pub weight: WeightKind,
    /// Empty: seven geometric steps down to the ε-floor, starting at
    /// `min(100·floor, 1)` but at least one decade above the floor.
    pub eps: Vec<f64>,
    pub lambda: Vec<f64>,
    pub enforce_floor: bool,
}

impl Default for LapConfig {
    fn default() -> Self {
        Self { gamma: 1.0, weight: WeightKind::Position, eps: Vec::new(), lambda: vec![1.0], enforce_floor: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MourreConfig {
    pub c_fraction: f64,
    pub route: CommutatorRoute,
}

impl Default for MourreConfig {
    fn default() -> Self {
        Self { c_fraction: 0.5, route: CommutatorRoute::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plots: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub potential: PotentialSpec,
    pub window: WindowConfig,
    pub lap: LapConfig,
    pub mourre: MourreConfig,
    pub outputs: OutputConfig,
    pub dense_cap: usize,
    /// Seed for the random potentials of the numeric identity checks.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig { d: 1, half_width: 16.0, n: 256, beta: 1.0 },
            potential: PotentialSpec::Zero,
            window: WindowConfig { a: 1.0, b: 2.0, eta: 0.5 },
            lap: LapConfig::default(),
            mourre: MourreConfig::default(),
            outputs: OutputConfig::default(),
            dense_cap: DEFAULT_DENSE_CAP,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        // custom potentials are read relative to the config file
        if let PotentialSpec::Custom { path: p } = &mut cfg.potential {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let g = &self.grid;
        make_grid(g.d, g.half_width, g.n, g.beta)
    }

    pub fn energy_window(&self) -> Result<EnergyWindow> {
        let w = &self.window;
        EnergyWindow::new(w.a, w.b, w.eta, self.grid.beta)
    }

    pub fn validate_lap(&self) -> Result<()> {
        let l = &self.lap;
        if !(l.gamma >= 0.0) {
            return Err(Error::Sweep(format!("weight exponent {} must be >= 0", l.gamma)));
        }
        if l.lambda.is_empty() {
            return Err(Error::Sweep("no energies in lap.lambda".into()));
        }
        if !l.eps.is_empty() && l.eps.len() < 4 {
            return Err(Error::Sweep(format!("need at least 4 ε values, got {}", l.eps.len())));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.potential = PotentialSpec::example5(2.0, 0.5);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"grid": {"d": 2, "L": 8, "n": 64, "beta": 1}}"#).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.window, RunConfig::default().window);
        assert!(cfg.grid().is_ok());
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"grd": {}}"#).is_err());
    }
}
