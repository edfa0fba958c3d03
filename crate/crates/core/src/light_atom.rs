//! Saturated two-level coupling: scattering rate, logarithmic dipole
//! potential, and the radial force that drives the trajectory simulation.

use serde::{Deserialize, Serialize};

use crate::atom_surface::{AtomSpecies, SurfaceModel};
use crate::constants::{angular, HBAR};
use crate::error::{invalid, Error, Result};
use crate::fiber_mode::IntensityProfile;
use crate::scalar::Real;

/// Probe laser settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec<T> {
    /// Guided probe power (W).
    pub power: T,
    /// Detuning from the unperturbed resonance (Hz).
    pub detuning: T,
    /// Probe angular frequency (rad/s).
    pub omega: T,
    /// Instrument frequency offset (Hz) applied when comparing with data.
    pub frequency_offset: T,
}

impl<T: Real> ProbeSpec<T> {
    pub fn new(power: T, detuning: T, omega: T) -> Result<Self> {
        let probe = Self { power, detuning, omega, frequency_offset: T::zero() };
        probe.validate()?;
        Ok(probe)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= T::zero() && self.power.is_finite()) {
            return Err(invalid("probe power must be non-negative"));
        }
        if !(self.omega > T::zero() && self.omega.is_finite()) {
            return Err(invalid("probe angular frequency must be positive"));
        }
        if !self.detuning.is_finite() || !self.frequency_offset.is_finite() {
            return Err(invalid("probe detuning must be finite"));
        }
        Ok(())
    }

    pub fn with_detuning(self, detuning: T) -> Self {
        Self { detuning, ..self }
    }

    pub fn with_power(self, power: T) -> Self {
        Self { power, ..self }
    }
}

/// Field and atomic response at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalField<T> {
    /// Intensity (W/m^2).
    pub intensity: T,
    /// Local decay rate (rad/s).
    pub gamma_local: T,
    /// Detuning from the locally shifted resonance (Hz).
    pub delta_effective: T,
    /// Saturation intensity in force at this point (W/m^2).
    pub saturation_intensity: T,
}

impl<T: Real> LocalField<T> {
    /// Field with the free-space saturation intensity of `atom`.
    pub fn new(intensity: T, gamma_local: T, delta_effective: T, atom: &AtomSpecies<T>) -> Self {
        Self { intensity, gamma_local, delta_effective, saturation_intensity: atom.i_sat_free }
    }

    /// `(2 Delta / gamma)^2` with `Delta` in rad/s.
    #[inline]
    fn detuning_term(&self) -> T {
        let x = T::lit(2.0) * angular(self.delta_effective) / self.gamma_local;
        x * x
    }
}

/// `s = (I / I_sat) / (1 + (2 Delta / gamma)^2)`.
#[inline]
pub fn saturation_parameter<T: Real>(f: &LocalField<T>) -> T {
    f.intensity / f.saturation_intensity / (T::one() + f.detuning_term())
}

/// Photon scattering rate (1/s).
#[inline]
pub fn scattering_rate<T: Real>(f: &LocalField<T>) -> T {
    let x = f.intensity / f.saturation_intensity;
    T::lit(0.5) * f.gamma_local * x / (T::one() + x + f.detuning_term())
}

/// Saturated dipole potential `(hbar Delta / 2) ln(1 + s)` (J).
#[inline]
pub fn dipole_potential<T: Real>(f: &LocalField<T>) -> T {
    T::lit(0.5 * HBAR) * angular(f.delta_effective) * saturation_parameter(f).ln_1p()
}

/// Switches for the individual pieces of the coupling model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CouplingOptions {
    pub dipole_force: bool,
    pub vdw_force: bool,
    pub vdw_shift: bool,
    pub surface_decay: bool,
    pub scale_isat_with_gamma: bool,
    pub include_axial_scattering_force: bool,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        Self {
            dipole_force: true,
            vdw_force: true,
            vdw_shift: true,
            surface_decay: true,
            scale_isat_with_gamma: false,
            include_axial_scattering_force: false,
        }
    }
}

impl CouplingOptions {
    /// Free-space atom in an unperturbed cloud: no forces, no shift, `gamma = gamma_0`.
    pub fn reduced() -> Self {
        Self {
            dipole_force: false,
            vdw_force: false,
            vdw_shift: false,
            surface_decay: false,
            scale_isat_with_gamma: false,
            include_axial_scattering_force: false,
        }
    }

    pub fn without_forces(self) -> Self {
        Self { dipole_force: false, vdw_force: false, include_axial_scattering_force: false, ..self }
    }

    pub fn has_forces(&self) -> bool {
        self.dipole_force || self.vdw_force || self.include_axial_scattering_force
    }
}

/// Radial state of the coupling at one radius, with radial derivatives.
#[derive(Debug, Clone, Copy)]
struct Local<T> {
    field: LocalField<T>,
    s: T,
    ds: T,
    delta: T,
    d_delta: T,
}

/// Light-atom-surface coupling around one fiber mode.
#[derive(Debug)]
pub struct Coupling<'a, T, P> {
    pub profile: &'a P,
    pub atom: AtomSpecies<T>,
    pub surface: SurfaceModel<T>,
    pub options: CouplingOptions,
}

impl<'a, T: Copy, P> Clone for Coupling<'a, T, P> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<'a, T: Copy, P> Copy for Coupling<'a, T, P> {}

impl<'a, T: Real, P: IntensityProfile<T>> Coupling<'a, T, P> {
    pub fn new(profile: &'a P, atom: AtomSpecies<T>, surface: SurfaceModel<T>, options: CouplingOptions) -> Self {
        Self { profile, atom, surface, options }
    }

    pub fn fiber_radius(&self) -> T {
        self.profile.fiber_radius()
    }

    /// Local decay rate and its radial derivative.
    #[inline]
    fn gamma_with_slope(&self, unit_i: T, unit_di: T) -> (T, T) {
        if !self.options.surface_decay {
            return (self.atom.gamma_0, T::zero());
        }
        let k = self.atom.gamma_0 * (self.surface.guided_surface_factor + self.surface.free_surface_excess)
            / self.profile.surface_unit_intensity();
        (self.atom.gamma_0 + k * unit_i, k * unit_di)
    }

    #[inline]
    fn local(&self, r: T, probe: &ProbeSpec<T>) -> Local<T> {
        let a = self.profile.fiber_radius();
        let distance = r - a;
        let (unit_i, unit_di) = self.profile.unit_intensity(r.max(a));
        let intensity = probe.power * unit_i;
        let d_intensity = probe.power * unit_di;
        let (gamma, d_gamma) = self.gamma_with_slope(unit_i, unit_di);
        let (shift, d_shift) = if self.options.vdw_shift {
            (self.surface.shift_at_distance(distance), self.surface.shift_slope_at_distance(distance))
        } else {
            (T::zero(), T::zero())
        };
        let delta_effective = probe.detuning - shift;
        let two = T::lit(2.0);

        let (i_sat, d_i_sat) = if self.options.scale_isat_with_gamma {
            let ratio = gamma / self.atom.gamma_0;
            let i_sat = self.atom.i_sat_free * ratio * ratio;
            (i_sat, two * i_sat * d_gamma / gamma)
        } else {
            (self.atom.i_sat_free, T::zero())
        };
        let x = intensity / i_sat;
        let dx = d_intensity / i_sat - x * d_i_sat / i_sat;

        let delta = angular(delta_effective);
        let d_delta = -angular(d_shift);
        let g2 = gamma * gamma;
        let denom = T::one() + T::lit(4.0) * delta * delta / g2;
        let d_denom = T::lit(8.0) * delta * d_delta / g2 - T::lit(8.0) * delta * delta * d_gamma / (g2 * gamma);
        let s = x / denom;
        let ds = dx / denom - x * d_denom / (denom * denom);

        Local {
            field: LocalField { intensity, gamma_local: gamma, delta_effective, saturation_intensity: i_sat },
            s,
            ds,
            delta,
            d_delta,
        }
    }

    /// Intensity, decay rate and effective detuning at radius `r >= a`.
    pub fn local_field(&self, r: T, probe: &ProbeSpec<T>) -> Result<LocalField<T>> {
        self.check(r, "local field")?;
        Ok(self.local(r, probe).field)
    }

    /// Total radial potential energy (J) at `r > a` for the enabled forces.
    pub fn potential(&self, r: T, probe: &ProbeSpec<T>) -> Result<T> {
        self.check_strict(r, "potential")?;
        Ok(self.potential_unchecked(r, probe))
    }

    #[inline]
    pub fn potential_unchecked(&self, r: T, probe: &ProbeSpec<T>) -> T {
        let mut u = T::zero();
        if self.options.dipole_force && probe.power > T::zero() {
            let l = self.local(r, probe);
            u = u + T::lit(0.5 * HBAR) * l.delta * l.s.ln_1p();
        }
        if self.options.vdw_force {
            u = u + self.surface.potential_at_distance(r - self.profile.fiber_radius());
        }
        u
    }

    /// Radial force (N, positive outward) at `r > a`.
    pub fn radial_force(&self, r: T, probe: &ProbeSpec<T>) -> Result<T> {
        self.check_strict(r, "radial force")?;
        Ok(self.radial_force_unchecked(r, probe))
    }

    /// [`Self::radial_force`] without the domain check; inside the fiber the
    /// value is that of the surface clamp.
    #[inline]
    pub fn radial_force_unchecked(&self, r: T, probe: &ProbeSpec<T>) -> T {
        let mut slope = T::zero();
        if self.options.dipole_force && probe.power > T::zero() {
            let l = self.local(r, probe);
            let log = l.s.ln_1p();
            slope = slope + T::lit(0.5 * HBAR) * (l.d_delta * log + l.delta * l.ds / (T::one() + l.s));
        }
        if self.options.vdw_force {
            slope = slope + self.surface.potential_slope_at_distance(r - self.profile.fiber_radius());
        }
        -slope
    }

    /// Photon scattering rate (1/s) at `r >= a`.
    pub fn scattering_rate(&self, r: T, probe: &ProbeSpec<T>) -> Result<T> {
        self.check(r, "scattering rate")?;
        Ok(scattering_rate(&self.local(r, probe).field))
    }

    /// Axial radiation-pressure force `hbar beta Gamma` (N), zero unless enabled.
    pub fn axial_force(&self, r: T, probe: &ProbeSpec<T>) -> T {
        if !self.options.include_axial_scattering_force || probe.power <= T::zero() {
            return T::zero();
        }
        T::lit(HBAR) * self.profile.propagation_constant() * scattering_rate(&self.local(r, probe).field)
    }

    fn check(&self, r: T, quantity: &'static str) -> Result<()> {
        let a = self.profile.fiber_radius();
        if r >= a {
            Ok(())
        } else {
            Err(Error::Domain { quantity, r: r.to_f64_lossy(), radius: a.to_f64_lossy() })
        }
    }

    fn check_strict(&self, r: T, quantity: &'static str) -> Result<()> {
        let a = self.profile.fiber_radius();
        if r > a {
            Ok(())
        } else {
            Err(Error::Domain { quantity, r: r.to_f64_lossy(), radius: a.to_f64_lossy() })
        }
    }
}
