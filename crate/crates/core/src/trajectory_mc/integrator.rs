//! Velocity Verlet integration of a single atom and its force-free partner.

use serde::{Deserialize, Serialize};

use crate::fiber_mode::IntensityProfile;
use crate::light_atom::{Coupling, ProbeSpec};

use super::grid::{BinGrid, Segment};
use super::McConfig;

/// Position (m) and velocity (m/s) in fiber-axis Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

impl State {
    #[inline]
    pub fn radius(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }

    /// Angular momentum about the fiber axis per unit mass.
    #[inline]
    pub fn axial_angular_momentum(&self) -> f64 {
        self.position[0] * self.velocity[1] - self.position[1] * self.velocity[0]
    }

    #[inline]
    pub fn speed_squared(&self) -> f64 {
        self.velocity.iter().map(|v| v * v).sum()
    }

    fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Escaped,
    Absorbed,
    TimedOut,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub outcome: Outcome,
    pub elapsed: f64,
    pub steps: u64,
    pub final_state: State,
}

/// Forces acting on one atom for a fixed probe setting.
pub struct Dynamics<'c, 'a, P> {
    pub coupling: &'c Coupling<'a, f64, P>,
    pub probe: ProbeSpec<f64>,
}

impl<'c, 'a, P: IntensityProfile<f64>> Dynamics<'c, 'a, P> {
    pub fn new(coupling: &'c Coupling<'a, f64, P>, probe: ProbeSpec<f64>) -> Self {
        Self { coupling, probe }
    }

    #[inline]
    fn acceleration(&self, p: &[f64; 3]) -> [f64; 3] {
        let r = p[0].hypot(p[1]);
        let inv_m = 1.0 / self.coupling.atom.mass;
        let axial = self.coupling.axial_force(r.max(self.coupling.fiber_radius()), &self.probe) * inv_m;
        if r == 0.0 {
            return [0.0, 0.0, axial];
        }
        let radial = self.coupling.radial_force_unchecked(r, &self.probe) * inv_m / r;
        [radial * p[0], radial * p[1], axial]
    }

    /// Potential energy (J) at radius `r`.
    pub fn potential(&self, r: f64) -> f64 {
        self.coupling.potential_unchecked(r, &self.probe)
    }

    /// Kinetic plus potential energy (J).
    pub fn energy(&self, s: &State) -> f64 {
        0.5 * self.coupling.atom.mass * s.speed_squared() + self.potential(s.radius())
    }

    fn step_size(&self, s: &State, acc: &[f64; 3], cfg: &McConfig) -> f64 {
        if !cfg.adaptive_dt {
            return cfg.base_dt;
        }
        let mut dt = cfg.base_dt;
        let accel = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
        if accel > 0.0 {
            dt = dt.min(cfg.eta * (cfg.force_length / accel).sqrt());
        }
        if cfg.surface_step_fraction > 0.0 {
            let speed = s.velocity[0].hypot(s.velocity[1]);
            let gap = s.radius() - self.coupling.fiber_radius();
            if speed > 0.0 && gap > 0.0 {
                dt = dt.min(cfg.surface_step_fraction * gap / speed);
            }
        }
        dt.max(cfg.min_dt)
    }

    /// Integrates from `initial` until escape, absorption or timeout, adding
    /// the time spent in each radial bin to `bins`.
    pub fn integrate(&self, initial: State, cfg: &McConfig, grid: &BinGrid, bins: &mut [f64]) -> TrajectoryRecord {
        self.run(initial, cfg, grid, Some(bins), |_| {})
    }

    /// Like [`Self::integrate`] but returns every visited state.
    pub fn trace(&self, initial: State, cfg: &McConfig) -> (TrajectoryRecord, Vec<State>) {
        let grid = BinGrid::new(self.coupling.fiber_radius(), cfg.launch_radius, 1);
        let mut path = vec![initial];
        let record = self.run(initial, cfg, &grid, None, |s| path.push(*s));
        (record, path)
    }

    fn run<O: FnMut(&State)>(
        &self,
        initial: State,
        cfg: &McConfig,
        grid: &BinGrid,
        mut bins: Option<&mut [f64]>,
        mut observe: O,
    ) -> TrajectoryRecord {
        let absorb_radius = self.coupling.fiber_radius() + self.coupling.surface.cutoff_distance;
        let mut s = initial;
        let mut t = 0.0;
        let mut steps = 0u64;
        let mut acc = self.acceleration(&s.position);
        let finish = |outcome, t, steps, s| TrajectoryRecord { outcome, elapsed: t, steps, final_state: s };

        loop {
            if t >= cfg.max_time {
                return finish(Outcome::TimedOut, t, steps, s);
            }
            let dt = self.step_size(&s, &acc, cfg).min(cfg.max_time - t);
            let half = 0.5 * dt;
            let v_half = [s.velocity[0] + acc[0] * half, s.velocity[1] + acc[1] * half, s.velocity[2] + acc[2] * half];
            let seg = Segment { p0: [s.position[0], s.position[1]], v: [v_half[0], v_half[1]], duration: dt };
            steps += 1;

            if cfg.surface_loss {
                if let Some(hit) = seg.first_inward_crossing(absorb_radius) {
                    if let Some(b) = bins.as_deref_mut() {
                        grid.accumulate(&Segment { duration: hit, ..seg }, b);
                    }
                    for (x, v) in s.position.iter_mut().zip(v_half) {
                        *x += v * hit;
                    }
                    s.velocity = v_half;
                    observe(&s);
                    return finish(Outcome::Absorbed, t + hit, steps, s);
                }
            }
            if let Some(b) = bins.as_deref_mut() {
                grid.accumulate(&seg, b);
            }
            for (x, v) in s.position.iter_mut().zip(v_half) {
                *x += v * dt;
            }
            t += dt;

            let r = s.radius();
            if r > cfg.launch_radius && s.position[0] * v_half[0] + s.position[1] * v_half[1] > 0.0 {
                s.velocity = v_half;
                observe(&s);
                return finish(Outcome::Escaped, t, steps, s);
            }
            acc = self.acceleration(&s.position);
            for i in 0..3 {
                s.velocity[i] = v_half[i] + acc[i] * half;
            }
            if !s.is_finite() {
                return finish(Outcome::NonFinite, t, steps, s);
            }
            observe(&s);
        }
    }
}

/// Force-free straight-line flight from `initial` with the same escape and
/// timeout rules; absorbed at `absorb_radius` when given.
pub fn free_flight(
    initial: &State,
    cfg: &McConfig,
    grid: &BinGrid,
    absorb_radius: Option<f64>,
    bins: &mut [f64],
) -> (Outcome, f64) {
    let seg = Segment {
        p0: [initial.position[0], initial.position[1]],
        v: [initial.velocity[0], initial.velocity[1]],
        duration: cfg.max_time,
    };
    let speed_sq = seg.v[0] * seg.v[0] + seg.v[1] * seg.v[1];
    let (mut outcome, mut duration) = if speed_sq > 0.0 {
        let exit = seg.outward_root(cfg.launch_radius);
        if exit < cfg.max_time {
            (Outcome::Escaped, exit)
        } else {
            (Outcome::TimedOut, cfg.max_time)
        }
    } else {
        (Outcome::TimedOut, cfg.max_time)
    };
    if let Some(radius) = absorb_radius {
        if let Some(hit) = (Segment { duration, ..seg }).first_inward_crossing(radius) {
            outcome = Outcome::Absorbed;
            duration = hit;
        }
    }
    grid.accumulate(&Segment { duration, ..seg }, bins);
    (outcome, duration)
}
