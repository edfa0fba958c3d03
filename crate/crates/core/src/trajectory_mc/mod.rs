//! Monte Carlo estimate of the density perturbation factor `f(r)`.
//!
//! Atoms are launched from a cylinder of radius `launch_radius` with the
//! Maxwell-Boltzmann flux and integrated under the radial coupling force.
//! Each trajectory is paired with a force-free straight flight from the same
//! initial state; `f` in a radial bin is the ratio of total time spent there
//! with and without forces.

mod accumulate;
mod grid;
mod integrator;
mod io;
mod sampling;

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fiber_mode::IntensityProfile;
use crate::light_atom::{Coupling, ProbeSpec};

pub use accumulate::{Accumulator, OutcomeCounts, MAX_TIME_LIMIT, TICK};
pub use grid::{BinGrid, Segment};
pub use integrator::{free_flight, Dynamics, Outcome, State, TrajectoryRecord};
pub use io::DensitySidecar;
pub use sampling::{
    sample_flux_normal_speed, sample_initial_conditions, sample_maxwell_boltzmann, thermal_speed, trajectory_rng,
};

/// Unperturbed Gaussian atom cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    /// Total number of atoms.
    pub n0: f64,
    /// Gaussian rms radius (m).
    pub sigma: f64,
    /// Temperature (K).
    pub temperature: f64,
}

impl CloudSpec {
    /// 0.6 mm cloud at the Cs Doppler temperature with unit atom number.
    pub fn paper() -> Self {
        Self { n0: 1.0, sigma: 0.6e-3, temperature: 125e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return Err(invalid("cloud atom number must be non-negative"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("cloud sigma must be positive"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(invalid("cloud temperature must be positive"));
        }
        Ok(())
    }

    /// Peak density `n0 / (sigma^3 (2 pi)^{3/2})` (1/m^3).
    pub fn peak_density(&self) -> f64 {
        self.n0 / (self.sigma.powi(3) * std::f64::consts::TAU.powf(1.5))
    }

    /// Density integrated along the fiber axis at `r << sigma` (1/m^2).
    pub fn column_density(&self) -> f64 {
        self.n0 / (std::f64::consts::TAU * self.sigma * self.sigma)
    }
}

/// Reference motion used to normalize `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Straight flight that is absorbed by the fiber surface like the forced run.
    AbsorbingFreeFlight,
    /// Straight flight through a transparent fiber, i.e. the unperturbed cloud.
    Unperturbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub n_trajectories: u64,
    pub seed: u64,
    /// Launch cylinder radius measured from the fiber axis (m).
    pub launch_radius: f64,
    pub max_time: f64,
    pub base_dt: f64,
    pub min_dt: f64,
    pub n_bins: usize,
    pub batch_size: u64,
    pub adaptive_dt: bool,
    /// Step-size safety factor for the force criterion.
    pub eta: f64,
    /// Length scale of the force criterion (m).
    pub force_length: f64,
    /// Caps each step to this fraction of the surface gap over the speed;
    /// zero disables the cap.
    pub surface_step_fraction: f64,
    pub surface_loss: bool,
    pub baseline: Baseline,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 100_000,
            seed: 1,
            launch_radius: 2e-6,
            max_time: 1e-3,
            base_dt: 1e-7,
            min_dt: 1e-13,
            n_bins: 100,
            batch_size: 256,
            adaptive_dt: true,
            eta: 0.1,
            force_length: 10e-9,
            surface_step_fraction: 0.1,
            surface_loss: true,
            baseline: Baseline::AbsorbingFreeFlight,
        }
    }
}

impl McConfig {
    pub fn validate(&self, fiber_radius: f64) -> Result<()> {
        if self.n_trajectories < 1 {
            return Err(invalid("n_trajectories must be at least 1"));
        }
        if !(self.launch_radius >= 2e-6 && self.launch_radius > fiber_radius && self.launch_radius.is_finite()) {
            return Err(invalid("launch_radius must be at least 2 um and outside the fiber"));
        }
        if !(self.max_time > 0.0 && self.max_time <= MAX_TIME_LIMIT) {
            return Err(invalid(format!("max_time must lie in (0, {MAX_TIME_LIMIT}] s")));
        }
        if !(self.min_dt > 0.0 && self.base_dt >= self.min_dt && self.base_dt.is_finite()) {
            return Err(invalid("time steps must satisfy 0 < min_dt <= base_dt"));
        }
        if self.n_bins < 1 || self.batch_size < 1 {
            return Err(invalid("n_bins and batch_size must be at least 1"));
        }
        if !(self.eta > 0.0 && self.force_length > 0.0 && self.surface_step_fraction >= 0.0) {
            return Err(invalid("step-size controls must be positive"));
        }
        let per_trajectory = (self.max_time / TICK).powi(2);
        if per_trajectory * self.n_trajectories as f64 > 1e38 {
            return Err(invalid("n_trajectories too large for the fixed-point accumulators at this max_time"));
        }
        Ok(())
    }

    /// Histogram grid from the fiber surface to the launch radius.
    pub fn grid(&self, fiber_radius: f64) -> BinGrid {
        BinGrid::new(fiber_radius, self.launch_radius, self.n_bins)
    }

    pub fn bin_width(&self, fiber_radius: f64) -> f64 {
        self.grid(fiber_radius).width()
    }
}

/// Density perturbation factor for one `(delta, P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityFactor {
    /// Probe detuning (Hz).
    pub delta: f64,
    /// Probe power (W).
    pub power: f64,
    pub bin_edges: Vec<f64>,
    pub f_values: Vec<f64>,
    pub statistical_error: Vec<f64>,
    pub seed: u64,
    pub n_trajectories: u64,
    pub outcomes: OutcomeCounts,
}

impl DensityFactor {
    /// `f = 1` everywhere: the unperturbed cloud.
    pub fn unity(delta: f64, power: f64, grid: &BinGrid) -> Self {
        Self {
            delta,
            power,
            bin_edges: grid.edges(),
            f_values: vec![1.0; grid.n_bins],
            statistical_error: vec![0.0; grid.n_bins],
            seed: 0,
            n_trajectories: 0,
            outcomes: OutcomeCounts::default(),
        }
    }

    pub fn from_accumulator(delta: f64, power: f64, seed: u64, grid: &BinGrid, acc: &Accumulator) -> Self {
        let (f_values, statistical_error) = acc.ratio();
        Self {
            delta,
            power,
            bin_edges: grid.edges(),
            f_values,
            statistical_error,
            seed,
            n_trajectories: acc.outcomes.total(),
            outcomes: acc.outcomes,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.f_values.len()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `f` at radius `r` (piecewise constant per bin, 1 outside the grid).
    pub fn value_at(&self, r: f64) -> f64 {
        let first = self.bin_edges[0];
        let last = *self.bin_edges.last().unwrap();
        if r < first || r > last {
            return 1.0;
        }
        let k = self.bin_edges.partition_point(|&e| e <= r).saturating_sub(1).min(self.n_bins() - 1);
        self.f_values[k]
    }

    /// Area-weighted integral `int 2 pi r f dr` over `[a, a + depth]`, divided by
    /// the same integral with `f = 1`.
    pub fn integrated_mean(&self, depth: f64) -> f64 {
        let a = self.bin_edges[0];
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..self.n_bins() {
            let lo = self.bin_edges[k];
            let hi = self.bin_edges[k + 1].min(a + depth);
            if hi <= lo {
                break;
            }
            let area = hi * hi - lo * lo;
            num += self.f_values[k] * area;
            den += area;
        }
        if den > 0.0 {
            num / den
        } else {
            1.0
        }
    }
}

/// Runs trajectories with indices in `range` and returns their paired sums.
pub fn simulate_range<P: IntensityProfile<f64>>(
    range: Range<u64>,
    probe: &ProbeSpec<f64>,
    cloud: &CloudSpec,
    cfg: &McConfig,
    coupling: &Coupling<f64, P>,
) -> Accumulator {
    let grid = cfg.grid(coupling.fiber_radius());
    let absorb = coupling.fiber_radius() + coupling.surface.cutoff_distance;
    let baseline_absorb = match (cfg.baseline, cfg.surface_loss) {
        (Baseline::AbsorbingFreeFlight, true) => Some(absorb),
        _ => None,
    };
    // Without forces the forced run is the baseline flight itself.
    let forced_is_baseline = !coupling.options.has_forces() && baseline_absorb.is_some() == cfg.surface_loss;
    let dynamics = Dynamics::new(coupling, *probe);
    let forced_absorb = cfg.surface_loss.then_some(absorb);

    let batches: Vec<Range<u64>> = (range.start..range.end)
        .step_by(cfg.batch_size as usize)
        .map(|s| s..(s + cfg.batch_size).min(range.end))
        .collect();
    batches
        .into_par_iter()
        .map(|batch| {
            let mut acc = Accumulator::new(grid.n_bins);
            let mut forced = vec![0.0; grid.n_bins];
            let mut baseline = vec![0.0; grid.n_bins];
            for index in batch {
                let mut rng = trajectory_rng(cfg.seed, index);
                let initial = sample_initial_conditions(cloud, cfg, coupling.atom.mass, &mut rng);
                baseline.iter_mut().for_each(|x| *x = 0.0);
                let (base_outcome, _) = free_flight(&initial, cfg, &grid, baseline_absorb, &mut baseline);
                let outcome = if forced_is_baseline {
                    forced.copy_from_slice(&baseline);
                    base_outcome
                } else if !coupling.options.has_forces() {
                    forced.iter_mut().for_each(|x| *x = 0.0);
                    free_flight(&initial, cfg, &grid, forced_absorb, &mut forced).0
                } else {
                    forced.iter_mut().for_each(|x| *x = 0.0);
                    dynamics.integrate(initial, cfg, &grid, &mut forced).outcome
                };
                acc.add(&forced, &baseline, outcome, base_outcome);
            }
            acc
        })
        .reduce(|| Accumulator::new(grid.n_bins), |a, b| a.merge(&b))
}

/// Monte Carlo density factor at the probe's `(delta, P)`.
pub fn density_factor<P: IntensityProfile<f64>>(
    probe: &ProbeSpec<f64>,
    cloud: &CloudSpec,
    cfg: &McConfig,
    coupling: &Coupling<f64, P>,
) -> Result<DensityFactor> {
    probe.validate()?;
    cloud.validate()?;
    cfg.validate(coupling.fiber_radius())?;
    let acc = simulate_range(0..cfg.n_trajectories, probe, cloud, cfg, coupling);
    Ok(DensityFactor::from_accumulator(probe.detuning, probe.power, cfg.seed, &cfg.grid(coupling.fiber_radius()), &acc))
}
