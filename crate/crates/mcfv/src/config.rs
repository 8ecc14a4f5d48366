//! Run configuration: TOML file with strict keys, overridable by CLI
//! flags (flags win, applied by the binary).

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Coarse box mesh cell counts (nx, ny, nz).
    pub mesh: [usize; 3],
    pub lengths: [f64; 3],
    pub refine_levels: u32,
    pub ranks: usize,
    pub threads: usize,
    pub partitioner: String,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: String,
    pub dt: f64,
    pub steps: usize,
    pub velocity: [f64; 3],
    pub diffusivity: f64,
    pub scheme: String,
    pub model: Option<String>,
    pub precision: String,
    pub activation: String,
    pub io_strategy: String,
    pub flow_cycle: f64,
    /// Refusal threshold for runtime refinement, in cells.
    pub cell_budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: [8, 8, 8],
            lengths: [1.0; 3],
            refine_levels: 0,
            ranks: 1,
            threads: 4,
            partitioner: "multilevel".into(),
            seed: 42,
            tol: 1e-8,
            max_iter: 10_000,
            preconditioner: "diagonal".into(),
            dt: 1e-3,
            steps: 10,
            velocity: [0.0; 3],
            diffusivity: 1e-3,
            scheme: "upwind".into(),
            model: None,
            precision: "fp32".into(),
            activation: "table".into(),
            io_strategy: "grouped".into(),
            flow_cycle: 1.0,
            cell_budget: 64 << 20,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive")))
            }
        };
        positive("mesh dims", self.mesh.iter().all(|&d| d > 0))?;
        positive("lengths", self.lengths.iter().all(|&l| l > 0.0))?;
        positive("ranks", self.ranks > 0)?;
        positive("threads", self.threads > 0)?;
        positive("tol", self.tol > 0.0)?;
        positive("max_iter", self.max_iter > 0)?;
        positive("dt", self.dt > 0.0)?;
        positive("diffusivity", self.diffusivity > 0.0)?;
        positive("flow_cycle", self.flow_cycle > 0.0)?;
        positive("cell_budget", self.cell_budget > 0)?;
        match self.scheme.as_str() {
            "upwind" | "linear" => {}
            s => return Err(Error::Config(format!("unknown scheme {s:?}"))),
        }
        match self.precision.as_str() {
            "fp32" | "mixed_fp16" => {}
            s => return Err(Error::Config(format!("unknown precision {s:?}"))),
        }
        match self.activation.as_str() {
            "exact" | "table" => {}
            s => return Err(Error::Config(format!("unknown activation {s:?}"))),
        }
        Ok(())
    }

    pub fn div_scheme(&self) -> crate::fvm::DivScheme {
        match self.scheme.as_str() {
            "linear" => crate::fvm::DivScheme::Linear,
            _ => crate::fvm::DivScheme::Upwind,
        }
    }

    pub fn nn_precision(&self) -> crate::nn::Precision {
        match self.precision.as_str() {
            "mixed_fp16" => crate::nn::Precision::MixedFp16,
            _ => crate::nn::Precision::Fp32,
        }
    }

    pub fn nn_activation(&self) -> crate::nn::Activation {
        match self.activation.as_str() {
            "exact" => crate::nn::Activation::Exact,
            _ => crate::nn::Activation::Table,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "mesh = [4, 4, 4]\nthreads = 2\nseed = 7\n").unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.mesh, [4, 4, 4]);
        assert_eq!(cfg.threads, 2);
        assert_eq!(cfg.seed, 7);
        // Unspecified keys fall back to defaults.
        assert_eq!(cfg.partitioner, "multilevel");
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "mesh = [4, 4, 4]\nturbulence = true\n").unwrap();
        assert!(load_config(&path).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = RunConfig::default();
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.precision = "fp8".into();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.mesh = [0, 1, 1];
        assert!(cfg.validate().is_err());
    }
}
