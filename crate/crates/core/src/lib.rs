//! Cold-atom absorption spectroscopy in the evanescent field of a tapered
//! optical nanofiber: guided-mode fields, atom-surface physics, Monte Carlo
//! atom trajectories, synthetic spectra and line-shape fitting.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom_surface;
pub mod constants;
pub mod error;
pub mod fiber_mode;
pub mod fit_io;
pub mod light_atom;
pub mod numerics;
pub mod pipeline;
pub mod scalar;
pub mod spectroscopy;
pub mod trajectory_mc;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision forms of the generic physics types.
pub type Fiber = fiber_mode::FiberSpec<f64>;
pub type Mode = fiber_mode::ModeSolution<f64>;
pub type Atom = atom_surface::AtomSpecies<f64>;
pub type Surface = atom_surface::SurfaceModel<f64>;
pub type Probe = light_atom::ProbeSpec<f64>;

/// Single-precision forms, for quick field maps.
pub type Fiber32 = fiber_mode::FiberSpec<f32>;
pub type Mode32 = fiber_mode::ModeSolution<f32>;
pub type Atom32 = atom_surface::AtomSpecies<f32>;
pub type Surface32 = atom_surface::SurfaceModel<f32>;
pub type Probe32 = light_atom::ProbeSpec<f32>;
