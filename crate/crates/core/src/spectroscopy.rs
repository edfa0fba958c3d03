//! Absorbance spectra, linewidths and effective atom numbers.
//!
//! The absorbance of the probe is
//! `A = (hbar omega / P) * int rho(r, z) Gamma(r) dV`, with the Gaussian cloud
//! integrated analytically along the fiber (`r << sigma`), which leaves the
//! column density `n0 / (2 pi sigma^2)` times a radial integral over
//! `[a, launch_radius]`. The radial integral runs bin by bin over the density
//! factor histogram with Gauss-Legendre panels inside each bin.

use serde::{Deserialize, Serialize};

use crate::atom_surface::SurfaceModel;
use crate::constants::HBAR;
use crate::error::{invalid, Error, Result};
use crate::fiber_mode::IntensityProfile;
use crate::light_atom::{scattering_rate, Coupling, ProbeSpec};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::roots::brent;
use crate::trajectory_mc::{density_factor, BinGrid, CloudSpec, DensityFactor, McConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Dipole forces, van der Waals interaction and surface-modified decay.
    Full,
    /// Unperturbed cloud, free-space decay rate, no line shift.
    Reduced,
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelVariant::Full => "full",
            ModelVariant::Reduced => "reduced",
        })
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ModelVariant::Full),
            "reduced" => Ok(ModelVariant::Reduced),
            other => Err(invalid(format!("unknown model variant '{other}' (expected full or reduced)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Probe detunings (Hz), strictly increasing.
    pub detunings: Vec<f64>,
    /// Absorbance `-ln T`.
    pub absorbance: Vec<f64>,
    /// Points whose density factor could not be computed; their absorbance is 0.
    pub flagged: Vec<bool>,
    pub power: f64,
    pub variant: ModelVariant,
    pub n0: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthPoint {
    pub power: f64,
    pub fwhm: f64,
    pub variant: ModelVariant,
}

/// Radial quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Quadrature {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Uniform panels per histogram bin.
    pub panels_per_bin: usize,
    /// Extra geometric panels toward the surface in the innermost bin.
    pub surface_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { order: 8, panels_per_bin: 2, surface_panels: 24 }
    }
}

impl Quadrature {
    pub fn refined(self) -> Self {
        Self { panels_per_bin: 2 * self.panels_per_bin, surface_panels: 2 * self.surface_panels, ..self }
    }

    /// `int_a^R w(r) f(r) dr`, bin by bin, where `f` is piecewise constant on the
    /// bins of `grid_edges`.
    pub fn integrate<W: FnMut(f64) -> f64>(&self, edges: &[f64], f: &[f64], cutoff: f64, mut w: W) -> f64 {
        let gl = GaussLegendre::<f64>::new(self.order);
        let mut total = 0.0;
        for k in 0..f.len() {
            if f[k] == 0.0 {
                continue;
            }
            let (lo, hi) = (edges[k], edges[k + 1]);
            let mut sum = 0.0;
            if k == 0 && self.surface_panels > 0 && hi - lo > 2.0 * cutoff {
                // geometric panels resolve the 1/d^3 shift near the wall
                sum += gl.integrate(&mut w, lo, lo + cutoff);
                let ratio = ((hi - lo) / cutoff).powf(1.0 / self.surface_panels as f64);
                let mut d = cutoff;
                for _ in 0..self.surface_panels {
                    let next = (d * ratio).min(hi - lo);
                    sum += gl.integrate(&mut w, lo + d, lo + next);
                    d = next;
                }
            } else {
                sum += gl.integrate_composite(&mut w, lo, hi, self.panels_per_bin);
            }
            total += f[k] * sum;
        }
        total
    }
}

/// Physics needed to turn density factors into observables.
pub struct LineModel<'c, 'a, P> {
    pub coupling: &'c Coupling<'a, f64, P>,
    pub cloud: CloudSpec,
    /// Outer edge of the radial integration (m from the axis).
    pub outer_radius: f64,
    pub quadrature: Quadrature,
}

impl<'c, 'a, P: IntensityProfile<f64>> LineModel<'c, 'a, P> {
    pub fn new(coupling: &'c Coupling<'a, f64, P>, cloud: CloudSpec, outer_radius: f64) -> Self {
        Self { coupling, cloud, outer_radius, quadrature: Quadrature::default() }
    }

    fn grid(&self) -> BinGrid {
        BinGrid::new(self.coupling.fiber_radius(), self.outer_radius, 1)
    }

    fn check_tags(f: &DensityFactor, probe: &ProbeSpec<f64>) -> Result<()> {
        if f.delta != probe.detuning || f.power != probe.power {
            return Err(Error::GridMismatch {
                have_delta: f.delta,
                have_power: f.power,
                want_delta: probe.detuning,
                want_power: probe.power,
            });
        }
        Ok(())
    }

    /// `int 2 pi r f(r) w(r) dr` over the density-factor grid.
    pub fn radial_integral<W: FnMut(f64) -> f64>(&self, f: &DensityFactor, mut w: W) -> f64 {
        self.quadrature.integrate(&f.bin_edges, &f.f_values, self.coupling.surface.cutoff_distance, |r| {
            std::f64::consts::TAU * r * w(r)
        })
    }

    /// Scattering rate integrated over the cloud: `int rho Gamma dV` (1/s).
    pub fn total_scattering(&self, probe: &ProbeSpec<f64>, f: &DensityFactor) -> f64 {
        let c = self.coupling;
        let integral =
            self.radial_integral(f, |r| scattering_rate(&c.local_field(r, probe).expect("radius outside the fiber")));
        self.cloud.column_density() * integral
    }

    /// Absorbance at the probe's detuning.
    pub fn absorbance_at(&self, probe: &ProbeSpec<f64>, f: &DensityFactor) -> Result<f64> {
        probe.validate()?;
        Self::check_tags(f, probe)?;
        if probe.power <= 0.0 {
            return Err(invalid("absorbance needs a positive probe power"));
        }
        Ok(HBAR * probe.omega / probe.power * self.total_scattering(probe, f))
    }

    /// Effective number of fully saturated atoms, from `f` at zero detuning.
    pub fn effective_atom_number(&self, probe: &ProbeSpec<f64>, f: &DensityFactor) -> Result<f64> {
        probe.validate()?;
        let probe = probe.with_detuning(0.0);
        Self::check_tags(f, &probe)?;
        Ok(2.0 / self.coupling.atom.gamma_0 * self.total_scattering(&probe, f))
    }

    /// Scattering-rate weighted mean distance from the surface (m).
    pub fn mean_probe_distance(&self, probe: &ProbeSpec<f64>, f: &DensityFactor) -> Result<f64> {
        probe.validate()?;
        let probe = probe.with_detuning(0.0);
        Self::check_tags(f, &probe)?;
        let c = self.coupling;
        let rate = |r: f64| scattering_rate(&c.local_field(r, &probe).expect("radius outside the fiber"));
        Ok(self.weighted_mean_distance(f, rate))
    }

    /// Mean of `r - a` over `2 pi r f(r) w(r) dr`.
    pub fn weighted_mean_distance<W: Fn(f64) -> f64>(&self, f: &DensityFactor, w: W) -> f64 {
        let a = self.coupling.fiber_radius();
        let num = self.radial_integral(f, |r| (r - a) * w(r));
        let den = self.radial_integral(f, &w);
        num / den
    }

    /// Density factor of the unperturbed cloud on this model's radial range.
    pub fn unity_factor(&self, probe: &ProbeSpec<f64>) -> DensityFactor {
        let grid = self.grid();
        let mut f = DensityFactor::unity(probe.detuning, probe.power, &grid);
        // fine uniform bins keep the Gauss-Legendre panels short
        let n = 200;
        f.bin_edges = BinGrid::new(grid.inner, grid.outer, n).edges();
        f.f_values = vec![1.0; n];
        f.statistical_error = vec![0.0; n];
        f
    }
}

/// Supplies density factors for spectrum synthesis.
pub trait DensitySource {
    /// Density factor at `probe`; `index` is the detuning's grid position.
    fn density(&self, probe: &ProbeSpec<f64>, index: usize) -> Result<DensityFactor>;
}

/// Seed for grid point `index` of a run seeded with `seed` (SplitMix64).
pub fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the Monte Carlo run at `(delta, P)`. Keyed on the probe setting
/// rather than the grid position, so a point reproduces on any grid.
pub fn probe_seed(seed: u64, probe: &ProbeSpec<f64>) -> u64 {
    point_seed(point_seed(seed, probe.detuning.to_bits()), probe.power.to_bits())
}

/// Runs the Monte Carlo for every requested point.
pub struct MonteCarloSource<'c, 'a, P> {
    pub coupling: &'c Coupling<'a, f64, P>,
    pub cloud: CloudSpec,
    pub config: McConfig,
}

impl<'c, 'a, P: IntensityProfile<f64>> DensitySource for MonteCarloSource<'c, 'a, P> {
    fn density(&self, probe: &ProbeSpec<f64>, _index: usize) -> Result<DensityFactor> {
        let config = McConfig { seed: probe_seed(self.config.seed, probe), ..self.config };
        density_factor(probe, &self.cloud, &config, self.coupling)
    }
}

fn validate_grid(detunings: &[f64]) -> Result<()> {
    if detunings.len() < 3 {
        return Err(invalid("a spectrum needs at least three detunings"));
    }
    if detunings.windows(2).any(|w| !(w[1] > w[0])) || detunings.iter().any(|d| !d.is_finite()) {
        return Err(invalid("detuning grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Absorbance spectrum of the full model, one density factor per detuning.
pub fn synthesize_full<P: IntensityProfile<f64>, S: DensitySource>(
    detunings: &[f64],
    probe: &ProbeSpec<f64>,
    model: &LineModel<P>,
    source: &S,
    seed: u64,
) -> Result<Spectrum> {
    validate_grid(detunings)?;
    let mut absorbance = Vec::with_capacity(detunings.len());
    let mut flagged = Vec::with_capacity(detunings.len());
    for (i, &delta) in detunings.iter().enumerate() {
        let p = probe.with_detuning(delta);
        match source.density(&p, i).and_then(|f| model.absorbance_at(&p, &f)) {
            Ok(a) => {
                absorbance.push(a);
                flagged.push(false);
            }
            Err(Error::Invalid(msg)) => return Err(Error::Invalid(msg)),
            Err(_) => {
                absorbance.push(0.0);
                flagged.push(true);
            }
        }
    }
    if flagged.iter().all(|&x| x) {
        return Err(invalid("every spectrum point failed"));
    }
    Ok(Spectrum {
        detunings: detunings.to_vec(),
        absorbance,
        flagged,
        power: probe.power,
        variant: ModelVariant::Full,
        n0: model.cloud.n0,
        seed,
    })
}

/// Absorbance spectrum of the reduced model. `model.coupling` must carry
/// [`crate::light_atom::CouplingOptions::reduced`].
pub fn synthesize_reduced<P: IntensityProfile<f64>>(
    detunings: &[f64],
    probe: &ProbeSpec<f64>,
    model: &LineModel<P>,
) -> Result<Spectrum> {
    validate_grid(detunings)?;
    let opts = model.coupling.options;
    if opts.surface_decay || opts.vdw_shift || opts.has_forces() {
        return Err(invalid("reduced spectra need a coupling without forces, shift or surface decay"));
    }
    let absorbance = detunings
        .iter()
        .map(|&delta| {
            let p = probe.with_detuning(delta);
            model.absorbance_at(&p, &model.unity_factor(&p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        flagged: vec![false; detunings.len()],
        detunings: detunings.to_vec(),
        absorbance,
        power: probe.power,
        variant: ModelVariant::Reduced,
        n0: model.cloud.n0,
        seed: 0,
    })
}

/// Left and right half-maximum crossings (Hz), linearly interpolated.
pub fn half_max_crossings(s: &Spectrum) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = s
        .detunings
        .iter()
        .zip(&s.absorbance)
        .zip(&s.flagged)
        .filter(|(_, &bad)| !bad)
        .map(|((&d, &a), _)| (d, a))
        .collect();
    if pts.len() < 3 {
        return Err(Error::NoPeak);
    }
    let (imax, &(_, peak)) = pts.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).ok_or(Error::NoPeak)?;
    if imax == 0 || imax == pts.len() - 1 || !(peak > 0.0) {
        return Err(Error::NoPeak);
    }
    let half = 0.5 * peak;
    let cross = |i: usize, j: usize| {
        let ((x0, y0), (x1, y1)) = (pts[i], pts[j]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let left = (0..imax).rev().find(|&i| pts[i].1 < half).map(|i| cross(i, i + 1)).ok_or(Error::NoPeak)?;
    let right = (imax + 1..pts.len()).find(|&i| pts[i].1 < half).map(|i| cross(i - 1, i)).ok_or(Error::NoPeak)?;
    Ok((left, right))
}

/// Full width at half maximum (Hz).
pub fn fwhm(s: &Spectrum) -> Result<f64> {
    let (left, right) = half_max_crossings(s)?;
    Ok(right - left)
}

/// Midpoint of the half-maximum crossings (Hz).
pub fn line_center(s: &Spectrum) -> Result<f64> {
    let (left, right) = half_max_crossings(s)?;
    Ok(0.5 * (left + right))
}

/// Skewness of the profile above a tenth of its maximum, treating the
/// absorbance as a weight over detuning. Zero for symmetric lines.
pub fn skewness(s: &Spectrum) -> f64 {
    let peak = s.absorbance.iter().cloned().fold(0.0, f64::max);
    let floor = 0.1 * peak;
    let (mut w0, mut m1) = (0.0, 0.0);
    let mut pts = Vec::new();
    for ((&d, &a), &bad) in s.detunings.iter().zip(&s.absorbance).zip(&s.flagged) {
        if !bad && a > floor {
            pts.push((d, a - floor));
            w0 += a - floor;
            m1 += (a - floor) * d;
        }
    }
    if w0 <= 0.0 {
        return 0.0;
    }
    let mean = m1 / w0;
    let (mut m2, mut m3) = (0.0, 0.0);
    for (d, w) in pts {
        let x = d - mean;
        m2 += w * x * x;
        m3 += w * x * x * x;
    }
    let var = m2 / w0;
    if var <= 0.0 {
        return 0.0;
    }
    m3 / w0 / var.powf(1.5)
}

/// Skewness magnitude above which a profile is reported as asymmetric.
pub const ASYMMETRY_THRESHOLD: f64 = 0.05;

pub fn is_asymmetric(s: &Spectrum) -> bool {
    skewness(s).abs() > ASYMMETRY_THRESHOLD
}

/// Probe power used to evaluate the zero-power limit (W).
const VANISHING_POWER: f64 = 1e-20;

/// Absorbance per unit power in the zero-power limit, where no dipole force
/// acts and one density factor `f0` (from a zero-power run) serves every
/// detuning. Returned values are `A / P` in 1/W scaled by `P = 1 W`.
pub fn zero_power_spectrum<P: IntensityProfile<f64>>(
    detunings: &[f64],
    omega: f64,
    model: &LineModel<P>,
    f0: &DensityFactor,
) -> Result<Spectrum> {
    validate_grid(detunings)?;
    let absorbance = detunings
        .iter()
        .map(|&delta| {
            let probe = ProbeSpec::new(VANISHING_POWER, delta, omega)?;
            let f = DensityFactor { delta, power: VANISHING_POWER, ..f0.clone() };
            model.absorbance_at(&probe, &f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        flagged: vec![false; detunings.len()],
        detunings: detunings.to_vec(),
        absorbance,
        power: 0.0,
        variant: ModelVariant::Full,
        n0: model.cloud.n0,
        seed: f0.seed,
    })
}

/// Detuning grid used for calibration: 50 kHz steps over +/-12 MHz.
pub fn calibration_grid() -> Vec<f64> {
    (0..=480).map(|i| -12e6 + 50e3 * i as f64).collect()
}

/// `delta_c3` (J m^3) that moves the half-maximum midpoint of the zero-power
/// spectrum to `target_center` (Hz, negative for red).
///
/// `f0` must come from a zero-power run, where the density factor does not
/// depend on `delta_c3` or on the detuning.
pub fn calibrate_delta_c3<P: IntensityProfile<f64>>(
    model: &LineModel<P>,
    omega: f64,
    f0: &DensityFactor,
    target_center: f64,
) -> Result<f64> {
    if !(target_center < 0.0) {
        return Err(invalid("the calibration target must be a red shift"));
    }
    let grid = calibration_grid();
    let center = |delta_c3: f64| -> Result<f64> {
        let coupling = Coupling { surface: SurfaceModel { delta_c3, ..model.coupling.surface }, ..*model.coupling };
        let m = LineModel { coupling: &coupling, ..*model };
        line_center(&zero_power_spectrum(&grid, omega, &m, f0)?)
    };
    // grow the bracket until the line moves past the target
    let mut hi = model.coupling.surface.c3_ground;
    let mut steps = 0;
    while center(hi)? > target_center {
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Err(invalid("no delta_c3 reaches the calibration target"));
        }
    }
    let mut failure = None;
    let root = brent(
        |x: f64| match center(x) {
            Ok(c) => c - target_center,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        hi,
        1e-6 * hi,
        200,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    root.map_err(|_| Error::NoConvergence { residual: f64::NAN })
}

impl<'c, 'a, P> Clone for LineModel<'c, 'a, P> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<'c, 'a, P> Copy for LineModel<'c, 'a, P> {}
