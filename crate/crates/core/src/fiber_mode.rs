//! Fundamental HE11 mode of a step-index fiber with a homogeneous cladding
//! (vacuum for a bare nanofiber), and the evanescent intensity it produces.
//!
//! Field conventions follow the circularly polarized HE11 mode with
//! dependence `exp(i(beta z + phi - omega t))`. Writing
//! `E = (i R(r), -Phi(r), Z(r))` in cylindrical components, the
//! circular mode has an azimuthally uniform intensity which equals the
//! azimuthal average of the quasi-linearly polarized mode, so the profile
//! used downstream is independent of the (unknown) polarization orientation.

use serde::{Deserialize, Serialize};

use crate::constants::{SPEED_OF_LIGHT, VACUUM_PERMEABILITY, VACUUM_PERMITTIVITY};
use crate::error::{invalid, Error, Result};
use crate::numerics::bessel::{j01, k01};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::roots::{brent, scan_sign_changes, RootError};
use crate::scalar::Real;

/// Refractive index of fused silica at 852 nm (Sellmeier).
pub const SILICA_INDEX_852NM: f64 = 1.4525;

/// Number of uniform propagation-constant samples in the bracketing scan.
pub const SCAN_SAMPLES: usize = 2048;

/// Exterior quadrature is truncated at `a + EXTERIOR_DECAY_LENGTHS / q`.
const EXTERIOR_DECAY_LENGTHS: f64 = 50.0;
const INTERIOR_PANELS: usize = 32;
const EXTERIOR_PANELS: usize = 400;
const QUADRATURE_ORDER: usize = 12;

/// Step-index fiber geometry and probe wavelength (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec<T> {
    /// Fiber radius `a` (m).
    pub radius: T,
    pub core_index: T,
    /// Index of the surrounding medium; 1 for vacuum.
    pub cladding_index: T,
    /// Vacuum wavelength of the guided light (m).
    pub wavelength: T,
}

impl<T: Real> FiberSpec<T> {
    pub fn new(radius: T, core_index: T, cladding_index: T, wavelength: T) -> Result<Self> {
        let spec = Self { radius, core_index, cladding_index, wavelength };
        spec.validate()?;
        Ok(spec)
    }

    /// 500-nm diameter silica nanofiber in vacuum guiding the Cs D2 line.
    pub fn cs_nanofiber() -> Self {
        Self {
            radius: T::lit(250e-9),
            core_index: T::lit(SILICA_INDEX_852NM),
            cladding_index: T::one(),
            wavelength: T::lit(852e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero() && self.radius.is_finite()) {
            return Err(invalid("fiber radius must be positive and finite"));
        }
        if !(self.wavelength > T::zero() && self.wavelength.is_finite()) {
            return Err(invalid("wavelength must be positive and finite"));
        }
        if !(self.cladding_index >= T::one()) {
            return Err(invalid("cladding index must be >= 1"));
        }
        if !(self.core_index > self.cladding_index && self.core_index.is_finite()) {
            return Err(invalid("core index must exceed cladding index"));
        }
        Ok(())
    }

    /// Vacuum wavenumber `k = 2 pi / lambda`.
    pub fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength
    }

    pub fn angular_frequency(&self) -> T {
        T::lit(SPEED_OF_LIGHT) * self.wavenumber()
    }

    pub fn v_number(&self) -> T {
        self.wavenumber()
            * self.radius
            * (self.core_index * self.core_index - self.cladding_index * self.cladding_index).sqrt()
    }

    /// Open interval `(n2 k, n1 k)` that contains every guided propagation constant.
    pub fn beta_bracket(&self) -> (T, T) {
        let k = self.wavenumber();
        (self.cladding_index * k, self.core_index * k)
    }

    /// Residual of the HE11 branch of the exact hybrid-mode eigenvalue
    /// equation at propagation constant `beta`.
    ///
    /// With `U = h a`, `W = q a`, `X = J1'(U)/(U J1(U))` and
    /// `Y = K1'(W)/(W K1(W))`, HE modes satisfy
    /// `X = -(n1^2+n2^2)/(2 n1^2) Y - sqrt(((n1^2-n2^2)/(2 n1^2))^2 Y^2 + (beta/(n1 k))^2 (1/U^2 + 1/W^2)^2)`.
    /// The residual is normalized by the magnitude of its three terms, so it
    /// lies in `[-1, 1]` and tends to +/-1 at the poles (zeros of `J1(U)`).
    pub fn he11_dispersion(&self, beta: T) -> T {
        let k = self.wavenumber();
        let (n1, n2) = (self.core_index, self.cladding_index);
        let u = self.radius * (n1 * n1 * k * k - beta * beta).sqrt();
        let w = self.radius * (beta * beta - n2 * n2 * k * k).sqrt();
        let (j0u, j1u) = j01(u);
        let (k0w, k1w) = k01(w);
        let x = j0u / (u * j1u) - (u * u).recip();
        let y = -k0w / (w * k1w) - (w * w).recip();
        let two = T::lit(2.0);
        let mix = (n1 * n1 + n2 * n2) / (two * n1 * n1);
        let split = (n1 * n1 - n2 * n2) / (two * n1 * n1);
        let b = beta / (n1 * k) * ((u * u).recip() + (w * w).recip());
        let root = (split * split * y * y + b * b).sqrt();
        (x + mix * y + root) / (x.abs() + (mix * y).abs() + root)
    }
}

/// Solved HE11 mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution<T> {
    pub fiber: FiberSpec<T>,
    /// Propagation constant (rad/m).
    pub beta: T,
    /// Transverse wavenumber inside the core (rad/m).
    pub h: T,
    /// Exterior decay constant (rad/m).
    pub q: T,
    pub v_number: T,
    /// Mode amplitude `C` (V/m) that carries 1 W of guided power.
    pub amplitude_norm: T,
    /// Share of the guided power flowing outside the fiber.
    pub guided_fraction_outside: T,
    /// Hybrid-mode parameter `s` (close to -1 for HE11).
    pub s: T,
    /// Eigenvalue-equation residual at `beta`.
    pub residual: T,
}

/// Field amplitudes at one radius for 1 W of guided power.
///
/// The physical field is `(i e_r, -e_phi, e_z) exp(i(beta z + phi))`;
/// `de_*` are radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFields<T> {
    pub e_r: T,
    pub e_phi: T,
    pub e_z: T,
    pub de_r: T,
    pub de_phi: T,
    pub de_z: T,
}

impl<T: Real> ModeFields<T> {
    pub fn norm_sqr(&self) -> T {
        self.e_r * self.e_r + self.e_phi * self.e_phi + self.e_z * self.e_z
    }

    fn scaled(self, c: T) -> Self {
        Self {
            e_r: self.e_r * c,
            e_phi: self.e_phi * c,
            e_z: self.e_z * c,
            de_r: self.de_r * c,
            de_phi: self.de_phi * c,
            de_z: self.de_z * c,
        }
    }
}

/// Finds the HE11 propagation constant and builds the power-normalized mode.
///
/// `tol` bounds the accepted eigenvalue-equation residual. The root is
/// refined to full working precision; `tol` is only the acceptance gate.
pub fn solve_he11<T: Real>(spec: &FiberSpec<T>, tol: T) -> Result<ModeSolution<T>> {
    spec.validate()?;
    let (lo, hi) = spec.beta_bracket();
    let f = |beta: T| spec.he11_dispersion(beta);
    let mut brackets = scan_sign_changes(f, lo, hi, SCAN_SAMPLES);
    if brackets.is_empty() {
        brackets = refine_near_cutoff(f, lo, hi);
    }
    let no_bracket = || Error::NoBracket { lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy(), samples: SCAN_SAMPLES };
    // Working-precision floor keeps f32 instantiations usable.
    let accept = tol.max(T::lit(16.0) * T::epsilon());

    // HE11 is the guided root with the largest beta; poles of the dispersion
    // function also change sign, so each bracket is refined and checked.
    let mut last_residual = None;
    for &(a, b) in brackets.iter().rev() {
        let beta = match brent(f, a, b, T::epsilon() * hi, 400) {
            Ok(beta) => beta,
            Err(RootError::NonFinite) => return Err(Error::NonFinite("Bessel evaluation in dispersion relation")),
            Err(_) => continue,
        };
        let residual = f(beta);
        if residual.abs() <= accept {
            return build_mode(spec, beta, residual);
        }
        last_residual = Some(residual);
    }
    match last_residual {
        Some(r) if brackets.len() == 1 => Err(Error::NoConvergence { residual: r.to_f64_lossy() }),
        _ => Err(no_bracket()),
    }
}

/// Refinement schedule for weakly guiding fibers, where the HE11 root sits
/// inside the first scan cell above `n2 k`: the cell is subdivided
/// geometrically toward the lower edge (`REFINE_LEVELS` halvings).
fn refine_near_cutoff<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T) -> Vec<(T, T)> {
    const REFINE_LEVELS: i32 = 80;
    let cell = (hi - lo) / T::from_usize_lossy(SCAN_SAMPLES + 1);
    let mut upper = lo + cell;
    let mut f_upper = f(upper);
    for level in 1..=REFINE_LEVELS {
        let lower = lo + cell * T::lit(2.0).powi(-level);
        if lower <= lo {
            break;
        }
        let f_lower = f(lower);
        if f_lower.is_finite() && f_upper.is_finite() && (f_lower < T::zero()) != (f_upper < T::zero()) {
            return vec![(lower, upper)];
        }
        upper = lower;
        f_upper = f_lower;
    }
    Vec::new()
}

fn build_mode<T: Real>(spec: &FiberSpec<T>, beta: T, residual: T) -> Result<ModeSolution<T>> {
    let k = spec.wavenumber();
    let (n1, n2) = (spec.core_index, spec.cladding_index);
    let h = (n1 * n1 * k * k - beta * beta).sqrt();
    let q = (beta * beta - n2 * n2 * k * k).sqrt();
    let (u, w) = (h * spec.radius, q * spec.radius);
    let (j0u, j1u) = j01(u);
    let (k0w, k1w) = k01(w);
    let x = j0u / (u * j1u) - (u * u).recip();
    let y = -k0w / (w * k1w) - (w * w).recip();
    let s = ((u * u).recip() + (w * w).recip()) / (x + y);

    let mut mode = ModeSolution {
        fiber: *spec,
        beta,
        h,
        q,
        v_number: spec.v_number(),
        amplitude_norm: T::one(),
        guided_fraction_outside: T::zero(),
        s,
        residual,
    };
    let (inside, outside) = mode.power_integrals();
    let total = inside + outside;
    if !(total.is_finite() && total > T::zero()) {
        return Err(Error::NonFinite("guided power normalization"));
    }
    mode.amplitude_norm = total.sqrt().recip();
    mode.guided_fraction_outside = outside / total;
    Ok(mode)
}

impl<T: Real> ModeSolution<T> {
    pub fn radius(&self) -> T {
        self.fiber.radius
    }

    /// Unnormalized (C = 1) field components at radius `r >= 0`.
    fn raw_fields(&self, r: T) -> ModeFields<T> {
        let two = T::lit(2.0);
        let (one_m, one_p) = (T::one() - self.s, T::one() + self.s);
        let a = self.fiber.radius;
        if r < a {
            let x = self.h * r;
            let (j0, j1) = j01(x);
            // J1(x)/x and J2(x) with their small-argument limits
            let j1_over_x = if x > T::lit(1e-4) { j1 / x } else { T::lit(0.5) - x * x / T::lit(16.0) };
            let j2 = two * j1_over_x - j0;
            let dj0 = -j1;
            let dj1 = j0 - j1_over_x;
            let dj2 = if x > T::lit(1e-4) { j1 - two * j2 / x } else { x / T::lit(4.0) };
            let c = self.beta / (two * self.h);
            ModeFields {
                e_r: c * (one_m * j0 - one_p * j2),
                e_phi: c * (one_m * j0 + one_p * j2),
                e_z: j1,
                de_r: c * self.h * (one_m * dj0 - one_p * dj2),
                de_phi: c * self.h * (one_m * dj0 + one_p * dj2),
                de_z: self.h * dj1,
            }
        } else {
            let x = self.q * r;
            let (k0, k1) = k01(x);
            let k2 = k0 + two * k1 / x;
            let dk0 = -k1;
            let dk1 = -k0 - k1 / x;
            let dk2 = -k1 - two * k2 / x;
            let ratio = j01(self.h * a).1 / k01(self.q * a).1;
            let c = ratio * self.beta / (two * self.q);
            ModeFields {
                e_r: c * (one_m * k0 + one_p * k2),
                e_phi: c * (one_m * k0 - one_p * k2),
                e_z: ratio * k1,
                de_r: c * self.q * (one_m * dk0 + one_p * dk2),
                de_phi: c * self.q * (one_m * dk0 - one_p * dk2),
                de_z: ratio * self.q * dk1,
            }
        }
    }

    /// Field amplitudes at radius `r` for 1 W of guided power.
    pub fn fields(&self, r: T) -> ModeFields<T> {
        self.raw_fields(r).scaled(self.amplitude_norm)
    }

    fn local_index(&self, r: T) -> T {
        if r < self.fiber.radius {
            self.fiber.core_index
        } else {
            self.fiber.cladding_index
        }
    }

    fn raw_poynting(&self, r: T) -> T {
        let f = self.raw_fields(r);
        let omega = self.fiber.angular_frequency();
        let z_over_r = if r > T::zero() { f.e_z / r } else { f.de_z };
        (self.beta * (f.e_r * f.e_r + f.e_phi * f.e_phi) + f.e_r * f.de_z + f.e_phi * z_over_r)
            / (T::lit(2.0) * omega * T::lit(VACUUM_PERMEABILITY))
    }

    /// Time-averaged axial Poynting flux (W/m^2) at radius `r` for guided power `power`.
    pub fn axial_poynting(&self, power: T, r: T) -> T {
        self.raw_poynting(r) * self.amplitude_norm * self.amplitude_norm * power
    }

    /// Returns `(inside, outside)` power integrals of the raw (C = 1) mode.
    fn power_integrals(&self) -> (T, T) {
        let gl = GaussLegendre::<T>::new(QUADRATURE_ORDER);
        let a = self.fiber.radius;
        let tau = T::TAU();
        let inside = gl.integrate_composite(|r| tau * r * self.raw_poynting(r), T::zero(), a, INTERIOR_PANELS);
        let outer = a + T::lit(EXTERIOR_DECAY_LENGTHS) / self.q;
        let outside = gl.integrate_composite(|r| tau * r * self.raw_poynting(r), a, outer, EXTERIOR_PANELS);
        (inside, outside)
    }

    fn check_exterior(&self, r: T, quantity: &'static str) -> Result<()> {
        if r < self.fiber.radius || r.is_nan() {
            return Err(Error::Domain { quantity, r: r.to_f64_lossy(), radius: self.fiber.radius.to_f64_lossy() });
        }
        Ok(())
    }

    /// Azimuthally averaged intensity `(eps0 c n / 2) |E|^2` (W/m^2) at `r >= a`
    /// for guided power `power`.
    pub fn intensity_profile(&self, power: T, r: T) -> Result<T> {
        self.check_exterior(r, "intensity profile")?;
        Ok(self.unit_intensity_with_slope(r).0 * power)
    }

    /// Intensity per watt and its radial derivative, valid anywhere (inside uses n1).
    pub fn unit_intensity_with_slope(&self, r: T) -> (T, T) {
        let f = self.fields(r);
        let pref = T::lit(0.5 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT) * self.local_index(r);
        let value = pref * f.norm_sqr();
        let slope = pref * T::lit(2.0) * (f.e_r * f.de_r + f.e_phi * f.de_phi + f.e_z * f.de_z);
        (value, slope)
    }

    /// Share of the exterior power that flows within `depth` of the surface.
    pub fn evanescent_power_fraction(&self, depth: T) -> T {
        if !(depth > T::zero()) {
            return T::zero();
        }
        let a = self.fiber.radius;
        let outer = a + T::lit(EXTERIOR_DECAY_LENGTHS) / self.q;
        if a + depth >= outer {
            return T::one();
        }
        let gl = GaussLegendre::<T>::new(QUADRATURE_ORDER);
        let tau = T::TAU();
        let integrand = |r: T| tau * r * self.raw_poynting(r);
        let panels_for = |len: T| {
            let share = (len / (outer - a)).to_f64_lossy();
            ((EXTERIOR_PANELS as f64 * share).ceil() as usize).max(4)
        };
        let near = gl.integrate_composite(integrand, a, a + depth, panels_for(depth));
        let far = gl.integrate_composite(integrand, a + depth, outer, panels_for(outer - a - depth));
        (near / (near + far)).max(T::zero()).min(T::one())
    }

    pub fn summary(&self) -> ModeSummary {
        ModeSummary {
            beta: self.beta.to_f64_lossy(),
            h: self.h.to_f64_lossy(),
            q: self.q.to_f64_lossy(),
            v_number: self.v_number.to_f64_lossy(),
            guided_fraction_outside: self.guided_fraction_outside.to_f64_lossy(),
            effective_index: (self.beta / self.fiber.wavenumber()).to_f64_lossy(),
            residual: self.residual.to_f64_lossy(),
        }
    }
}

/// Flat key/value record of a solved mode for JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub beta: f64,
    pub h: f64,
    pub q: f64,
    pub v_number: f64,
    pub guided_fraction_outside: f64,
    pub effective_index: f64,
    pub residual: f64,
}

/// Radial intensity source used by the coupling and Monte Carlo layers.
pub trait IntensityProfile<T: Real>: Sync {
    fn fiber_radius(&self) -> T;

    /// Intensity per watt of guided power (1/m^2) and its radial derivative,
    /// for `r >= a`.
    fn unit_intensity(&self, r: T) -> (T, T);

    /// Intensity per watt at the fiber surface.
    fn surface_unit_intensity(&self) -> T;

    /// Propagation constant of the guided mode (rad/m).
    fn propagation_constant(&self) -> T;
}

impl<T: Real> IntensityProfile<T> for ModeSolution<T> {
    fn fiber_radius(&self) -> T {
        self.fiber.radius
    }

    fn unit_intensity(&self, r: T) -> (T, T) {
        self.unit_intensity_with_slope(r)
    }

    fn surface_unit_intensity(&self) -> T {
        self.unit_intensity_with_slope(self.fiber.radius).0
    }

    fn propagation_constant(&self) -> T {
        self.beta
    }
}

/// Exterior intensity profile sampled on a uniform grid and reconstructed by
/// cubic Hermite interpolation of `ln I`, which is close to linear in `r`.
/// Beyond the last node `ln I` is continued linearly.
#[derive(Debug, Clone)]
pub struct TabulatedProfile {
    radius: f64,
    step: f64,
    log_intensity: Vec<f64>,
    log_slope: Vec<f64>,
    surface: f64,
    beta: f64,
}

impl TabulatedProfile {
    pub fn new(mode: &ModeSolution<f64>, outer_radius: f64, step: f64) -> Result<Self> {
        let a = mode.fiber.radius;
        if !(outer_radius > a && step > 0.0) {
            return Err(invalid("tabulation range must extend beyond the fiber radius"));
        }
        let n = ((outer_radius - a) / step).ceil() as usize + 1;
        let mut log_intensity = Vec::with_capacity(n);
        let mut log_slope = Vec::with_capacity(n);
        for i in 0..n {
            let r = a + step * i as f64;
            let (value, slope) = mode.unit_intensity_with_slope(r);
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonFinite("tabulated intensity"));
            }
            log_intensity.push(value.ln());
            log_slope.push(slope / value);
        }
        let surface = mode.unit_intensity_with_slope(a).0;
        Ok(Self { radius: a, step, log_intensity, log_slope, surface, beta: mode.beta })
    }

    pub fn outer_radius(&self) -> f64 {
        self.radius + self.step * (self.log_intensity.len() - 1) as f64
    }
}

impl IntensityProfile<f64> for TabulatedProfile {
    fn fiber_radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    fn unit_intensity(&self, r: f64) -> (f64, f64) {
        let t = ((r - self.radius) / self.step).max(0.0);
        let last = self.log_intensity.len() - 1;
        let i = (t as usize).min(last - 1);
        let u = t - i as f64;
        let (y0, y1) = (self.log_intensity[i], self.log_intensity[i + 1]);
        let (m0, m1) = (self.log_slope[i] * self.step, self.log_slope[i + 1] * self.step);
        let (ln_i, d_ln_i) = if u > 1.0 {
            // linear continuation past the table
            let d = self.log_slope[last];
            (self.log_intensity[last] + d * (r - self.outer_radius()), d)
        } else {
            let u2 = u * u;
            let u3 = u2 * u;
            let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
            let h10 = u3 - 2.0 * u2 + u;
            let h01 = -2.0 * u3 + 3.0 * u2;
            let h11 = u3 - u2;
            let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
            let dh00 = 6.0 * u2 - 6.0 * u;
            let dh10 = 3.0 * u2 - 4.0 * u + 1.0;
            let dh01 = -6.0 * u2 + 6.0 * u;
            let dh11 = 3.0 * u2 - 2.0 * u;
            let deriv = (dh00 * y0 + dh10 * m0 + dh01 * y1 + dh11 * m1) / self.step;
            (value, deriv)
        };
        let intensity = ln_i.exp();
        (intensity, intensity * d_ln_i)
    }

    fn surface_unit_intensity(&self) -> f64 {
        self.surface
    }

    fn propagation_constant(&self) -> f64 {
        self.beta
    }
}
