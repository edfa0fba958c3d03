//! Initial conditions on the launch cylinder.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constants::BOLTZMANN;

use super::{CloudSpec, McConfig, State};

/// Generator for trajectory `index` of a run seeded with `seed`.
///
/// Each trajectory owns an independent ChaCha stream, so results do not
/// depend on how trajectories are grouped into batches or threads.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One-dimensional thermal velocity spread `sqrt(k_B T / m)`.
pub fn thermal_speed(temperature: f64, mass: f64) -> f64 {
    (BOLTZMANN * temperature / mass).sqrt()
}

/// Velocity drawn from the isotropic Maxwell-Boltzmann distribution.
pub fn sample_maxwell_boltzmann<R: Rng + ?Sized>(temperature: f64, mass: f64, rng: &mut R) -> [f64; 3] {
    let sigma = thermal_speed(temperature, mass);
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    [sigma * normal(), sigma * normal(), sigma * normal()]
}

/// Inward normal speed with density proportional to `v exp(-v^2 / 2 sigma^2)`.
pub fn sample_flux_normal_speed<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1]
    let u: f64 = rng.gen();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Launch state: uniform azimuth on the cylinder `r = launch_radius`, velocity
/// from the Maxwell-Boltzmann flux through that surface.
pub fn sample_initial_conditions<R: Rng + ?Sized>(cloud: &CloudSpec, cfg: &McConfig, mass: f64, rng: &mut R) -> State {
    let sigma = thermal_speed(cloud.temperature, mass);
    let phi = rng.gen::<f64>() * std::f64::consts::TAU;
    let (sin, cos) = phi.sin_cos();
    let normal = sample_flux_normal_speed(sigma, rng);
    let tangential = sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    let axial = sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    let r = cfg.launch_radius;
    State {
        position: [r * cos, r * sin, 0.0],
        velocity: [-normal * cos - tangential * sin, -normal * sin + tangential * cos, axial],
    }
}
