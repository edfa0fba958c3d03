//! Run configuration: one TOML document whose tables mirror [`RunConfig`].
//!
//! Values missing from the file keep their defaults, and unknown keys are
//! rejected. Command-line flags are applied after the file.

use std::path::{Path, PathBuf};

use fiberatom::atom_surface::{AtomSpecies, SurfaceModel};
use fiberatom::fiber_mode::FiberSpec;
use fiberatom::fit_io::{n0_for_peak_density, DEFAULT_OFFSET_WINDOW};
use fiberatom::light_atom::CouplingOptions;
use fiberatom::pipeline::{log_grid, symmetric_grid, CALIBRATION_CENTER};
use fiberatom::trajectory_mc::{CloudSpec, McConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Detuning and power grids for spectra and sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub detuning_half_width_hz: f64,
    pub detuning_points: usize,
    pub power_min_w: f64,
    pub power_max_w: f64,
    pub power_points: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            detuning_half_width_hz: 24e6,
            detuning_points: 97,
            power_min_w: 1e-12,
            power_max_w: 1e-9,
            power_points: 7,
        }
    }
}

impl Grids {
    pub fn detunings(&self) -> Vec<f64> {
        symmetric_grid(self.detuning_half_width_hz, self.detuning_points)
    }

    pub fn powers(&self) -> Vec<f64> {
        log_grid(self.power_min_w, self.power_max_w, self.power_points)
    }
}

/// Optional fit of `delta_c3` to a target zero-power line center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub enabled: bool,
    pub target_center_hz: f64,
    pub n_trajectories: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self { enabled: false, target_center_hz: CALIBRATION_CENTER, n_trajectories: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub window_hz: f64,
    /// Spacing of the model grid the trace is compared against (Hz).
    pub model_step_hz: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { window_hz: DEFAULT_OFFSET_WINDOW, model_step_hz: 0.5e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub fiber: FiberSpec<f64>,
    pub atom: AtomSpecies<f64>,
    pub surface: SurfaceModel<f64>,
    pub coupling: CouplingOptions,
    pub cloud: CloudSpec,
    /// Monte Carlo settings; its `seed` is replaced by the top-level seed.
    pub mc: McConfig,
    pub grids: Grids,
    pub calibration: Calibration,
    pub fit: FitSettings,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cloud = CloudSpec::paper();
        Self {
            fiber: FiberSpec::cs_nanofiber(),
            atom: AtomSpecies::cesium_d2(),
            surface: SurfaceModel::default(),
            coupling: CouplingOptions::default(),
            // peak density 4.4e10 per cm^3
            cloud: CloudSpec { n0: n0_for_peak_density(4.4e16, cloud.sigma), ..cloud },
            mc: McConfig::default(),
            grids: Grids::default(),
            calibration: Calibration::default(),
            fit: FitSettings::default(),
            output_dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

/// Overlays `overlay` onto `base`, refusing keys that `base` lacks.
fn merge(base: &mut toml::Value, overlay: toml::Value, path: &str) -> Result<(), CliError> {
    match (base, overlay) {
        (toml::Value::Table(base), toml::Value::Table(overlay)) => {
            for (key, value) in overlay {
                let here = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                match base.get_mut(&key) {
                    Some(slot) => merge(slot, value, &here)?,
                    None => return Err(CliError::Usage(format!("unknown config key '{here}'"))),
                }
            }
            Ok(())
        }
        (slot, value) => {
            // integers are accepted where the default is a float
            *slot = match (&*slot, value) {
                (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            Ok(())
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let overlay: toml::Value =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config parse error: {e}")))?;
        let mut base = toml::Value::try_from(RunConfig::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
        merge(&mut base, overlay, "")?;
        base.try_into().map_err(|e: toml::de::Error| CliError::Usage(format!("config error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config '{}': {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks every component before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.fiber.validate()?;
        self.atom.validate()?;
        self.surface.validate()?;
        self.cloud.validate()?;
        self.mc_config().validate(self.fiber.radius)?;
        let g = &self.grids;
        if g.detuning_points < 3 || !(g.detuning_half_width_hz > 0.0) {
            return Err(CliError::Usage("detuning grid needs at least 3 points and a positive half width".into()));
        }
        if g.power_points < 1 || !(g.power_min_w > 0.0 && g.power_max_w >= g.power_min_w) {
            return Err(CliError::Usage("power grid needs 0 < power_min_w <= power_max_w".into()));
        }
        if !(self.fit.window_hz > 0.0 && self.fit.model_step_hz > 0.0) {
            return Err(CliError::Usage("fit window and model step must be positive".into()));
        }
        if self.calibration.enabled && !(self.calibration.target_center_hz < 0.0 && self.calibration.n_trajectories > 0)
        {
            return Err(CliError::Usage("calibration needs a negative target center and trajectories".into()));
        }
        Ok(())
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig { seed: self.seed, ..self.mc }
    }

    /// SHA-256 over the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { output_dir: PathBuf::new(), ..self.clone() };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        format!("{:x}", Sha256::digest(&json))
    }

    /// Hash of everything a density factor depends on. Grids, fit settings,
    /// the output directory and the atom number are left out, so cached
    /// factors survive changes to those.
    pub fn physics_hash(&self) -> String {
        RunConfig {
            grids: Grids::default(),
            fit: FitSettings::default(),
            cloud: CloudSpec { n0: 1.0, ..self.cloud },
            ..self.clone()
        }
        .hash()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
