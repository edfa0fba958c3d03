//! End-to-end workflow: solve the mode once, then produce density factors,
//! spectra and line-shape summaries for any probe setting.

use serde::{Deserialize, Serialize};

use crate::atom_surface::{AtomSpecies, SurfaceModel};
use crate::error::Result;
use crate::fiber_mode::{solve_he11, FiberSpec, ModeSolution, TabulatedProfile};
use crate::light_atom::{Coupling, CouplingOptions, ProbeSpec};
use crate::spectroscopy::{
    calibrate_delta_c3, fwhm, synthesize_full, synthesize_reduced, LineModel, ModelVariant, MonteCarloSource, Spectrum,
};
use crate::trajectory_mc::{density_factor, CloudSpec, DensityFactor, McConfig};

/// Root tolerance for the mode solver.
pub const MODE_TOLERANCE: f64 = 1e-12;
/// Radial step of the tabulated intensity profile (m).
pub const PROFILE_STEP: f64 = 1e-9;
/// Zero-power line center targeted by the `delta_c3` calibration (Hz).
pub const CALIBRATION_CENTER: f64 = -0.4e6;

/// Solved mode plus every parameter needed to simulate spectra.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub mode: ModeSolution<f64>,
    pub profile: TabulatedProfile,
    pub atom: AtomSpecies<f64>,
    pub surface: SurfaceModel<f64>,
    pub cloud: CloudSpec,
    pub mc: McConfig,
    /// Coupling used for the full model.
    pub options: CouplingOptions,
}

/// Observables at zero detuning for one power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomNumber {
    pub power: f64,
    pub effective_atom_number: f64,
    /// Scattering-weighted mean distance from the surface (m).
    pub mean_distance: f64,
}

/// Full and reduced line widths at one power; `None` where no width exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub power: f64,
    pub fwhm_full: Option<f64>,
    pub fwhm_reduced: Option<f64>,
}

impl Workbench {
    pub fn new(
        fiber: &FiberSpec<f64>,
        atom: AtomSpecies<f64>,
        surface: SurfaceModel<f64>,
        cloud: CloudSpec,
        mc: McConfig,
    ) -> Result<Self> {
        fiber.validate()?;
        atom.validate()?;
        surface.validate()?;
        cloud.validate()?;
        mc.validate(fiber.radius)?;
        let mode = solve_he11(fiber, MODE_TOLERANCE)?;
        let profile = TabulatedProfile::new(&mode, mc.launch_radius + 1e-6, PROFILE_STEP)?;
        Ok(Self { mode, profile, atom, surface, cloud, mc, options: CouplingOptions::default() })
    }

    /// Default fiber, cesium, the paper's cloud and default Monte Carlo settings.
    pub fn standard() -> Result<Self> {
        Self::new(
            &FiberSpec::cs_nanofiber(),
            AtomSpecies::cesium_d2(),
            SurfaceModel::default(),
            CloudSpec::paper(),
            McConfig::default(),
        )
    }

    pub fn omega(&self) -> f64 {
        self.mode.fiber.angular_frequency()
    }

    pub fn probe(&self, power: f64, detuning: f64) -> Result<ProbeSpec<f64>> {
        ProbeSpec::new(power, detuning, self.omega())
    }

    pub fn coupling(&self, variant: ModelVariant) -> Coupling<'_, f64, TabulatedProfile> {
        let options = match variant {
            ModelVariant::Full => self.options,
            ModelVariant::Reduced => CouplingOptions::reduced(),
        };
        Coupling::new(&self.profile, self.atom, self.surface, options)
    }

    /// Monte Carlo density factor of the full model.
    pub fn density(&self, power: f64, detuning: f64) -> Result<DensityFactor> {
        let probe = self.probe(power, detuning)?;
        density_factor(&probe, &self.cloud, &self.mc, &self.coupling(ModelVariant::Full))
    }

    /// Fits `delta_c3` so the zero-power line center sits at `target` (Hz)
    /// and stores it. Returns the new value.
    pub fn calibrate(&mut self, target: f64) -> Result<f64> {
        let uncalibrated = Self { surface: SurfaceModel { delta_c3: 0.0, ..self.surface }, ..self.clone() };
        let f0 = uncalibrated.density(0.0, 0.0)?;
        let coupling = uncalibrated.coupling(ModelVariant::Full);
        let model = LineModel::new(&coupling, self.cloud, self.mc.launch_radius);
        let value = calibrate_delta_c3(&model, self.omega(), &f0, target)?;
        self.surface.delta_c3 = value;
        Ok(value)
    }

    /// Spectrum over `detunings`; full-model points use per-point seeds
    /// derived from `mc.seed`.
    pub fn spectrum(&self, detunings: &[f64], power: f64, variant: ModelVariant) -> Result<Spectrum> {
        let probe = self.probe(power, 0.0)?;
        let coupling = self.coupling(variant);
        let model = LineModel::new(&coupling, self.cloud, self.mc.launch_radius);
        match variant {
            ModelVariant::Full => {
                let source = MonteCarloSource { coupling: &coupling, cloud: self.cloud, config: self.mc };
                synthesize_full(detunings, &probe, &model, &source, self.mc.seed)
            }
            ModelVariant::Reduced => synthesize_reduced(detunings, &probe, &model),
        }
    }

    /// Effective atom number and mean probe distance at zero detuning.
    pub fn atom_number(&self, power: f64) -> Result<AtomNumber> {
        let probe = self.probe(power, 0.0)?;
        let coupling = self.coupling(ModelVariant::Full);
        let model = LineModel::new(&coupling, self.cloud, self.mc.launch_radius);
        let f = density_factor(&probe, &self.cloud, &self.mc, &coupling)?;
        Ok(AtomNumber {
            power,
            effective_atom_number: model.effective_atom_number(&probe, &f)?,
            mean_distance: model.mean_probe_distance(&probe, &f)?,
        })
    }

    /// Full and reduced widths for each power.
    pub fn sweep(&self, detunings: &[f64], powers: &[f64]) -> Result<Vec<SweepRow>> {
        powers
            .iter()
            .map(|&power| {
                let full = self.spectrum(detunings, power, ModelVariant::Full)?;
                let reduced = self.spectrum(detunings, power, ModelVariant::Reduced)?;
                Ok(SweepRow { power, fwhm_full: fwhm(&full).ok(), fwhm_reduced: fwhm(&reduced).ok() })
            })
            .collect()
    }
}

/// `n` points spanning `[-half_width, half_width]`.
pub fn symmetric_grid(half_width: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| -half_width + step * i as f64).collect()
}

/// `n` logarithmically spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (ratio * i as f64).exp()).collect()
}
