//! CODATA constants (SI) and the single Hz <-> rad/s conversion used everywhere.

use crate::scalar::Real;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Converts a frequency in Hz to angular units (rad/s).
///
/// Detunings and linewidths are stored in Hz; every formula that needs an
/// angular quantity goes through this function.
#[inline]
pub fn angular<T: Real>(hz: T) -> T {
    hz * T::TAU()
}

/// Inverse of [`angular`].
#[inline]
pub fn hertz<T: Real>(rad_per_s: T) -> T {
    rad_per_s / T::TAU()
}
