//! Run configuration: a TOML file with typed sections, overridable by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fluctuations::FluctOptions;
use crate::lattice::{Boundary, InitialDataSpec, LatticeConfig, DEFAULT_ETA};
use crate::macroscopic::StefanGrid;
use crate::profile::Profile;
use crate::scenarios;
use crate::spinodal::Forcing;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub n: usize,
    pub kappa: f64,
    pub tau_fin: f64,
    pub dt: f64,
    pub bc: Boundary,
    pub stride: usize,
    pub eta: f64,
    pub strict: bool,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            n: 200,
            kappa: 1.0,
            tau_fin: 0.1,
            dt: 0.1,
            bc: Boundary::Neumann,
            stride: 100,
            eta: DEFAULT_ETA,
            strict: false,
        }
    }
}

/// Initial data: a preset scenario, or an explicit profile with `xi_ini`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub scenario: String,
    pub profile: Option<Profile>,
    pub xi_ini: Option<f64>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self { scenario: "pinning".into(), profile: None, xi_ini: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub tolerance: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { tolerance: crate::kernel::DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluctSection {
    pub quad_rel_tol: f64,
    pub quad_max_halvings: usize,
    /// Store the fluctuation fields as binary frames.
    pub fields: bool,
}

impl Default for FluctSection {
    fn default() -> Self {
        let d = FluctOptions::default();
        Self { quad_rel_tol: d.quad_rel_tol, quad_max_halvings: d.quad_max_halvings, fields: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StefanSection {
    pub cells: usize,
    pub cfl: f64,
    pub samples: usize,
}

impl Default for StefanSection {
    fn default() -> Self {
        Self { cells: 800, cfl: 0.4, samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub n: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { n: vec![100, 200, 400] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySection {
    pub kappa: f64,
    pub f_const: f64,
    pub t_fin: f64,
    pub dt: f64,
    /// Half width `w` of the window `−w..=w`.
    pub window: usize,
    pub z0: f64,
    pub stride: usize,
}

impl Default for ToySection {
    fn default() -> Self {
        Self { kappa: 1.0, f_const: 0.1, t_fin: 50.0, dt: 0.05, window: 40, z0: 0.0, stride: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub workers: Option<usize>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), workers: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for randomized check data; the dynamics are deterministic.
    pub seed: u64,
    pub lattice: LatticeSection,
    pub init: InitSection,
    pub kernel: KernelSection,
    pub fluct: FluctSection,
    pub stefan: StefanSection,
    pub sweep: SweepSection,
    pub toy: ToySection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of everything except the output directory and worker count.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection { dir: PathBuf::new(), workers: None };
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Profile, `Ξ_ini` and the name used in reports.
    pub fn macro_data(&self) -> Result<(Profile, f64, String)> {
        match (&self.init.profile, self.init.xi_ini) {
            (Some(p), Some(x)) => Ok((p.clone(), x, "custom".into())),
            (Some(_), None) => Err(Error::Config("init.profile needs init.xi_ini".into())),
            (None, x) => {
                let sc = scenarios::by_name(&self.init.scenario)
                    .ok_or_else(|| Error::Config(format!("unknown scenario {}", self.init.scenario)))?;
                Ok((sc.profile, x.unwrap_or(sc.xi_ini), sc.name))
            }
        }
    }

    pub fn lattice_config(&self, n: usize) -> LatticeConfig {
        let l = &self.lattice;
        LatticeConfig {
            n_particles: n,
            kappa: l.kappa,
            epsilon: None,
            dt: l.dt,
            bc: l.bc.clone(),
            tau_fin: l.tau_fin,
            snapshot_stride: l.stride,
            eta: l.eta,
            strict: l.strict,
        }
    }

    pub fn initial_spec(&self) -> Result<InitialDataSpec> {
        let (profile, xi, _) = self.macro_data()?;
        Ok(InitialDataSpec::macroscopic(profile, xi))
    }

    pub fn fluct_options(&self) -> FluctOptions {
        FluctOptions {
            kernel_tol: self.kernel.tolerance,
            quad_rel_tol: self.fluct.quad_rel_tol,
            quad_max_halvings: self.fluct.quad_max_halvings,
            keep_fields: self.fluct.fields,
        }
    }

    pub fn stefan_grid(&self) -> StefanGrid {
        StefanGrid { cells: self.stefan.cells, cfl: self.stefan.cfl, samples: self.stefan.samples }
    }

    pub fn toy_forcing(&self) -> Forcing {
        Forcing::Constant { value: self.toy.f_const }
    }

    /// Worker count: config or flag, then `SPLX_WORKERS`, then available parallelism.
    pub fn workers(&self) -> usize {
        self.output
            .workers
            .or_else(|| std::env::var("SPLX_WORKERS").ok().and_then(|v| v.parse().ok()))
            .filter(|w| *w > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[lattice]\nn = 100\nkapa = 2.0\n").is_err());
        assert!(RunConfig::from_toml("sede = 3\n").is_err());
        let c = RunConfig::from_toml("[lattice]\nn = 100\n").unwrap();
        assert_eq!(c.lattice.n, 100);
        assert_eq!(c.lattice.kappa, 1.0);
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("/elsewhere");
        b.output.workers = Some(7);
        assert_eq!(a.hash(), b.hash());
        b.lattice.dt = 0.05;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toml_roundtrip() {
        let mut c = RunConfig::default();
        c.init.profile = Some(Profile::Knots { points: vec![[0.0, 1.0], [1.0, 0.0]] });
        c.init.xi_ini = Some(0.4);
        c.lattice.bc = Boundary::PaddedWindow { pad: Some(12) };
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
