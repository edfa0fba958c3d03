//! Atom-surface physics near the fiber: van der Waals potential and line
//! shift, and the distance-dependent spontaneous decay rate split into
//! free-space and guided channels.
//!
//! Both radial shapes are models: the potentials use the plane-surface
//! `C3/d^3` law, and the free-space channel excess follows the evanescent
//! intensity shape `I(r)/I(a)` so that the total rate at the surface is
//! `(1 + guided_surface_factor + free_surface_excess) gamma_0`.

use serde::{Deserialize, Serialize};

use crate::constants::{angular, ATOMIC_MASS_UNIT, PLANCK};
use crate::error::{invalid, Error, Result};
use crate::fiber_mode::IntensityProfile;
use crate::scalar::Real;

/// Two-level atomic transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies<T> {
    /// Free-space decay rate (rad/s); equals `2 pi natural_linewidth`.
    pub gamma_0: T,
    /// Natural linewidth (Hz, FWHM).
    pub natural_linewidth: T,
    /// Saturation intensity in free space (W/m^2).
    pub i_sat_free: T,
    /// Atomic mass (kg).
    pub mass: T,
    /// Transition wavelength (m).
    pub transition_wavelength: T,
}

impl<T: Real> AtomSpecies<T> {
    pub fn new(natural_linewidth: T, i_sat_free: T, mass: T, transition_wavelength: T) -> Result<Self> {
        let atom =
            Self { gamma_0: angular(natural_linewidth), natural_linewidth, i_sat_free, mass, transition_wavelength };
        atom.validate()?;
        Ok(atom)
    }

    /// Cs D2 line, F=4 -> F'=5 closed transition.
    pub fn cesium_d2() -> Self {
        Self::new(T::lit(5.2e6), T::lit(18.0), T::lit(132.905_451_933 * ATOMIC_MASS_UNIT), T::lit(852e-9))
            .expect("valid built-in species")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !(positive(self.gamma_0)
            && positive(self.natural_linewidth)
            && positive(self.i_sat_free)
            && positive(self.mass)
            && positive(self.transition_wavelength))
        {
            return Err(invalid("atomic constants must be positive and finite"));
        }
        let expected = angular(self.natural_linewidth);
        if ((self.gamma_0 - expected) / expected).abs() > T::lit(1e3) * T::epsilon() {
            return Err(invalid("gamma_0 must equal 2 pi natural_linewidth"));
        }
        Ok(())
    }
}

/// Van der Waals and decay-modification parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel<T> {
    /// Ground-state `C3` (J m^3).
    pub c3_ground: T,
    /// Excited minus ground `C3` (J m^3); positive means a red-shifted line.
    pub delta_c3: T,
    /// Guided-mode decay rate at the surface in units of `gamma_0`.
    pub guided_surface_factor: T,
    /// Excess free-space decay rate at the surface in units of `gamma_0`.
    pub free_surface_excess: T,
    /// Surface distance (m) below which potentials are clamped.
    pub cutoff_distance: T,
}

pub const DEFAULT_C3_GROUND: f64 = 5.6e-49;
pub const DEFAULT_GUIDED_SURFACE_FACTOR: f64 = 0.3;
pub const DEFAULT_FREE_SURFACE_EXCESS: f64 = 0.27;
pub const DEFAULT_CUTOFF_DISTANCE: f64 = 1e-9;
/// `delta_c3` that places the zero-power line center at -0.4 MHz for the
/// default fiber and cloud (see `spectroscopy::calibrate_delta_c3`).
pub const DEFAULT_DELTA_C3: f64 = 1.62e-49;

impl<T: Real> Default for SurfaceModel<T> {
    fn default() -> Self {
        Self::with_delta_c3(T::lit(DEFAULT_DELTA_C3))
    }
}

impl<T: Real> SurfaceModel<T> {
    /// Default model with the supplied `delta_c3`.
    pub fn with_delta_c3(delta_c3: T) -> Self {
        Self {
            c3_ground: T::lit(DEFAULT_C3_GROUND),
            delta_c3,
            guided_surface_factor: T::lit(DEFAULT_GUIDED_SURFACE_FACTOR),
            free_surface_excess: T::lit(DEFAULT_FREE_SURFACE_EXCESS),
            cutoff_distance: T::lit(DEFAULT_CUTOFF_DISTANCE),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c3_ground > T::zero() && self.c3_ground.is_finite()) {
            return Err(invalid("c3_ground must be positive"));
        }
        if !self.delta_c3.is_finite() {
            return Err(invalid("delta_c3 must be finite"));
        }
        if !(self.guided_surface_factor >= T::zero() && self.free_surface_excess >= T::zero()) {
            return Err(invalid("decay enhancement factors must be non-negative"));
        }
        if !(self.cutoff_distance > T::zero()) {
            return Err(invalid("cutoff_distance must be positive"));
        }
        Ok(())
    }

    /// Total decay rate at the surface in units of `gamma_0`.
    pub fn surface_enhancement(&self) -> T {
        T::one() + self.guided_surface_factor + self.free_surface_excess
    }

    fn clamped(&self, distance: T) -> T {
        distance.max(self.cutoff_distance)
    }

    /// `-C3 / d^3` at surface distance `d`, clamped below the cutoff.
    #[inline]
    pub fn potential_at_distance(&self, distance: T) -> T {
        let d = self.clamped(distance);
        -self.c3_ground / (d * d * d)
    }

    /// Radial derivative of [`Self::potential_at_distance`] (zero inside the clamp).
    #[inline]
    pub fn potential_slope_at_distance(&self, distance: T) -> T {
        if distance <= self.cutoff_distance {
            return T::zero();
        }
        let d2 = distance * distance;
        T::lit(3.0) * self.c3_ground / (d2 * d2)
    }

    /// Transition frequency shift (Hz) at surface distance `d`.
    #[inline]
    pub fn shift_at_distance(&self, distance: T) -> T {
        let d = self.clamped(distance);
        -self.delta_c3 / T::lit(PLANCK) / (d * d * d)
    }

    #[inline]
    pub fn shift_slope_at_distance(&self, distance: T) -> T {
        if distance <= self.cutoff_distance {
            return T::zero();
        }
        let d2 = distance * distance;
        T::lit(3.0) * self.delta_c3 / T::lit(PLANCK) / (d2 * d2)
    }

    /// Van der Waals potential energy (J) at radius `r > a`.
    pub fn vdw_potential(&self, r: T, fiber_radius: T) -> Result<T> {
        check_outside(r, fiber_radius, "van der Waals potential")?;
        Ok(self.potential_at_distance(r - fiber_radius))
    }

    /// Van der Waals shift of the transition frequency (Hz, negative = red).
    pub fn vdw_shift(&self, r: T, fiber_radius: T) -> Result<T> {
        check_outside(r, fiber_radius, "van der Waals shift")?;
        Ok(self.shift_at_distance(r - fiber_radius))
    }

    /// Decay rate into the guided mode (rad/s) at `r >= a`.
    pub fn gamma_guided<P: IntensityProfile<T>>(&self, atom: &AtomSpecies<T>, profile: &P, r: T) -> Result<T> {
        check_at_or_outside(r, profile.fiber_radius(), "guided decay rate")?;
        Ok(self.guided_surface_factor * atom.gamma_0 * relative_intensity(profile, r))
    }

    /// Decay rate into free-space modes (rad/s) at `r >= a`.
    pub fn gamma_free<P: IntensityProfile<T>>(&self, atom: &AtomSpecies<T>, profile: &P, r: T) -> Result<T> {
        check_at_or_outside(r, profile.fiber_radius(), "free-space decay rate")?;
        Ok(atom.gamma_0 * (T::one() + self.free_surface_excess * relative_intensity(profile, r)))
    }

    /// Total decay rate `gamma_free + gamma_guided` (rad/s) at `r >= a`.
    pub fn gamma_total<P: IntensityProfile<T>>(&self, atom: &AtomSpecies<T>, profile: &P, r: T) -> Result<T> {
        Ok(self.gamma_free(atom, profile, r)? + self.gamma_guided(atom, profile, r)?)
    }
}

fn relative_intensity<T: Real, P: IntensityProfile<T>>(profile: &P, r: T) -> T {
    profile.unit_intensity(r).0 / profile.surface_unit_intensity()
}

fn check_outside<T: Real>(r: T, radius: T, quantity: &'static str) -> Result<()> {
    if r > radius {
        Ok(())
    } else {
        Err(Error::Domain { quantity, r: r.to_f64_lossy(), radius: radius.to_f64_lossy() })
    }
}

fn check_at_or_outside<T: Real>(r: T, radius: T, quantity: &'static str) -> Result<()> {
    if r >= radius {
        Ok(())
    } else {
        Err(Error::Domain { quantity, r: r.to_f64_lossy(), radius: radius.to_f64_lossy() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber_mode::{solve_he11, FiberSpec, ModeSolution};
    use approx::assert_relative_eq;

    const A: f64 = 250e-9;

    fn mode() -> ModeSolution<f64> {
        solve_he11(&FiberSpec::cs_nanofiber(), 1e-12).unwrap()
    }

    fn model() -> SurfaceModel<f64> {
        SurfaceModel::with_delta_c3(2e-49)
    }

    #[test]
    fn cesium_constants() {
        let cs = AtomSpecies::<f64>::cesium_d2();
        assert_relative_eq!(cs.gamma_0 / std::f64::consts::TAU, 5.2e6, max_relative = 1e-15);
        assert_eq!(cs.i_sat_free, 18.0);
        assert!(AtomSpecies::new(5.2e6, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn potential_cubic_law_and_limits() {
        let m = model();
        let d = 40e-9;
        let u1 = m.vdw_potential(A + d, A).unwrap();
        let u2 = m.vdw_potential(A + 2.0 * d, A).unwrap();
        assert_relative_eq!(u1, 8.0 * u2, max_relative = 1e-14);
        assert!(u1 < 0.0 && u2 < 0.0);
        assert!(m.vdw_potential(A + 1.0, A).unwrap().abs() < 1e-45);
        let direct = -DEFAULT_C3_GROUND / (1e-7_f64 * 1e-7 * 1e-7);
        assert_relative_eq!(m.vdw_potential(A + 1e-7, A).unwrap(), direct, max_relative = 1e-14);
        assert!(matches!(m.vdw_potential(A, A), Err(Error::Domain { .. })));
    }

    #[test]
    fn log_log_slope_is_minus_three() {
        let m = model();
        for &d in &[3e-9, 17e-9, 120e-9, 800e-9] {
            let (d1, d2) = (d, d * 1.01);
            let slope_u =
                (m.vdw_potential(A + d2, A).unwrap() / m.vdw_potential(A + d1, A).unwrap()).ln() / (d2 / d1).ln();
            let slope_s = (m.vdw_shift(A + d2, A).unwrap() / m.vdw_shift(A + d1, A).unwrap()).ln() / (d2 / d1).ln();
            assert!((slope_u + 3.0).abs() < 1e-9);
            assert!((slope_s + 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clamp_keeps_values_finite() {
        let m = model();
        let at_cut = m.potential_at_distance(m.cutoff_distance);
        let inside = m.vdw_potential(A + 1e-15, A).unwrap();
        assert_eq!(at_cut, inside);
        assert_eq!(m.potential_at_distance(0.2e-9), at_cut);
        assert!(inside.is_finite());
        assert_eq!(m.potential_slope_at_distance(0.5e-9), 0.0);
        assert!(m.vdw_shift(A + 1e-15, A).unwrap().is_finite());
    }

    #[test]
    fn shift_sign_and_limits() {
        let m = model();
        assert!(m.vdw_shift(A + 50e-9, A).unwrap() < 0.0);
        assert!(m.vdw_shift(A + 1.0, A).unwrap().abs() < 1e-12);
        let zero = SurfaceModel::<f64>::with_delta_c3(0.0);
        for i in 1..50 {
            assert_eq!(zero.vdw_shift(A + i as f64 * 7e-9, A).unwrap(), 0.0);
        }
    }

    #[test]
    fn force_points_toward_fiber() {
        let m = model();
        for i in 1..200 {
            let d = i as f64 * 5e-9;
            // F = -dU/dr
            assert!(-m.potential_slope_at_distance(d) < 0.0);
        }
    }

    #[test]
    fn decay_rates_at_surface() {
        let (mode, m, cs) = (mode(), model(), AtomSpecies::<f64>::cesium_d2());
        assert_relative_eq!(m.gamma_guided(&cs, &mode, A).unwrap(), 0.3 * cs.gamma_0, max_relative = 1e-15);
        assert_relative_eq!(m.gamma_total(&cs, &mode, A).unwrap(), 1.57 * cs.gamma_0, max_relative = 1e-15);
        assert!(m.gamma_guided(&cs, &mode, A + 20e-6).unwrap() < 1e-10 * cs.gamma_0);
        assert_relative_eq!(m.gamma_total(&cs, &mode, A + 20e-6).unwrap(), cs.gamma_0, max_relative = 1e-10);
        assert!(matches!(m.gamma_total(&cs, &mode, 0.9 * A), Err(Error::Domain { .. })));
    }

    #[test]
    fn guided_rate_tracks_intensity_ratio() {
        let (mode, m, cs) = (mode(), model(), AtomSpecies::<f64>::cesium_d2());
        let surface = m.gamma_guided(&cs, &mode, A).unwrap();
        for i in 0..40 {
            let r = A + i as f64 * 23e-9;
            let ratio = mode.intensity_profile(1.0, r).unwrap() / mode.intensity_profile(1.0, A).unwrap();
            assert_relative_eq!(m.gamma_guided(&cs, &mode, r).unwrap() / surface, ratio, max_relative = 1e-12);
            let total = m.gamma_total(&cs, &mode, r).unwrap();
            assert!(total > cs.gamma_0);
        }
    }
}
