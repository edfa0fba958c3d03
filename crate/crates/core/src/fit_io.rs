//! Measured transmission traces and the two-parameter line-shape fit.
//!
//! The model is linear in the atom number, so for a trial frequency offset
//! the best `n0` follows in closed form. Only the offset needs a search.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::roots::golden_section;
use crate::spectroscopy::Spectrum;
use crate::trajectory_mc::CloudSpec;

/// Default half-width of the offset search (Hz).
pub const DEFAULT_OFFSET_WINDOW: f64 = 5e6;

/// A transmission trace with its absorbance `-ln T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTrace {
    pub detunings: Vec<f64>,
    pub transmission: Vec<f64>,
    pub absorbance: Vec<f64>,
}

impl MeasuredTrace {
    /// Validates the grid and transmission range. Line numbers in errors are
    /// 1-based data rows offset by the header.
    pub fn new(detunings: Vec<f64>, transmission: Vec<f64>) -> Result<Self> {
        if detunings.len() != transmission.len() {
            return Err(invalid("detuning and transmission columns differ in length"));
        }
        if detunings.is_empty() {
            return Err(invalid("trace is empty"));
        }
        for (i, &t) in transmission.iter().enumerate() {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Range { line: i + 2, value: t });
            }
        }
        for (i, w) in detunings.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Grid { line: i + 3 });
            }
        }
        if let Some(i) = detunings.iter().position(|d| !d.is_finite()) {
            return Err(Error::Parse { line: i + 2, message: "non-finite detuning".into() });
        }
        let absorbance = transmission.iter().map(|t| -t.ln()).collect();
        Ok(Self { detunings, transmission, absorbance })
    }

    /// Trace whose absorbance is `a` exactly where representable.
    pub fn from_absorbance(detunings: Vec<f64>, absorbance: &[f64]) -> Result<Self> {
        let transmission = absorbance.iter().map(|a| (-a).exp()).collect();
        Self::new(detunings, transmission)
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Writes `detuning_hz,transmission` with shortest round-trip formatting.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["detuning_hz", "transmission"])?;
        for (d, t) in self.detunings.iter().zip(&self.transmission) {
            w.write_record([d.to_string(), t.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a `detuning_hz, transmission` CSV with a header row.
pub fn load_trace(path: &Path) -> Result<MeasuredTrace> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, message: format!("missing column '{name}'") })
    };
    let (cd, ct) = (column("detuning_hz")?, column("transmission")?);
    let mut detunings = Vec::new();
    let mut transmission = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let field = |c: usize| -> Result<f64> {
            let raw = row.get(c).ok_or_else(|| Error::Parse { line, message: "missing field".into() })?;
            raw.parse::<f64>().map_err(|e| Error::Parse { line, message: format!("'{raw}': {e}") })
        };
        detunings.push(field(cd)?);
        transmission.push(field(ct)?);
    }
    MeasuredTrace::new(detunings, transmission)
}

/// Model absorbance at unit `n0` on a strictly increasing detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitModel {
    pub detunings: Vec<f64>,
    pub absorbance: Vec<f64>,
}

impl UnitModel {
    pub fn new(detunings: Vec<f64>, absorbance: Vec<f64>) -> Result<Self> {
        if detunings.len() != absorbance.len() || detunings.len() < 2 {
            return Err(invalid("unit model needs at least two matching points"));
        }
        if detunings.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("unit model grid must be strictly increasing"));
        }
        Ok(Self { detunings, absorbance })
    }

    /// Divides out the spectrum's `n0`; flagged points are dropped.
    pub fn from_spectrum(s: &Spectrum) -> Result<Self> {
        if !(s.n0 > 0.0) {
            return Err(invalid("spectrum n0 must be positive"));
        }
        let (d, a): (Vec<f64>, Vec<f64>) = s
            .detunings
            .iter()
            .zip(&s.absorbance)
            .zip(&s.flagged)
            .filter(|(_, &bad)| !bad)
            .map(|((&d, &a), _)| (d, a / s.n0))
            .unzip();
        Self::new(d, a)
    }

    /// Piecewise-linear value at `x`, or `None` off the grid.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let d = &self.detunings;
        if !(x >= d[0] && x <= d[d.len() - 1]) {
            return None;
        }
        let j = d.partition_point(|&v| v <= x).clamp(1, d.len() - 1);
        let t = (x - d[j - 1]) / (d[j] - d[j - 1]);
        Some(self.absorbance[j - 1] + t * (self.absorbance[j] - self.absorbance[j - 1]))
    }

    fn span(&self) -> (f64, f64) {
        (self.detunings[0], self.detunings[self.detunings.len() - 1])
    }
}

/// Best-fit parameters. `data(delta) = n0 * model(delta - offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n0: f64,
    pub offset_hz: f64,
    /// Root-mean-square absorbance residual.
    pub residual_rms: f64,
    pub peak_density_per_cm3: f64,
    /// One-sigma uncertainties from the linearized residual.
    pub n0_stderr: f64,
    pub offset_stderr_hz: f64,
}

/// Fit settings. `sigma` is the cloud radius used for the peak density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub window: f64,
    /// Coarse scan spacing (Hz) before the golden-section refinement.
    pub scan_step: f64,
    pub xtol: f64,
    pub sigma: f64,
}

impl FitOptions {
    pub fn new(sigma: f64) -> Self {
        Self { window: DEFAULT_OFFSET_WINDOW, scan_step: 25e3, xtol: 1e-3, sigma }
    }
}

/// Closed-form scale and residual sum of squares at one offset.
fn profile(trace: &MeasuredTrace, model: &UnitModel, offset: f64) -> (f64, f64) {
    let mut mm = 0.0;
    let mut dm = 0.0;
    let mut dd = 0.0;
    for (&x, &y) in trace.detunings.iter().zip(&trace.absorbance) {
        let m = model.interpolate(x - offset).unwrap_or(0.0);
        mm += m * m;
        dm += y * m;
        dd += y * y;
    }
    if mm <= 0.0 {
        return (0.0, dd);
    }
    let n0 = (dm / mm).max(0.0);
    let mut rss = 0.0;
    for (&x, &y) in trace.detunings.iter().zip(&trace.absorbance) {
        let r = y - n0 * model.interpolate(x - offset).unwrap_or(0.0);
        rss += r * r;
    }
    (n0, rss)
}

/// Fits `n0` and the frequency offset. The window must lie inside the model
/// grid after shifting the trace; an edge minimum is a convergence failure.
pub fn fit_spectrum(trace: &MeasuredTrace, model: &UnitModel, opts: &FitOptions) -> Result<FitResult> {
    if !(opts.window > 0.0 && opts.scan_step > 0.0 && opts.xtol > 0.0 && opts.sigma > 0.0) {
        return Err(invalid("fit window, scan step, tolerance and sigma must be positive"));
    }
    let (lo, hi) = model.span();
    let (tlo, thi) = (trace.detunings[0], trace.detunings[trace.len() - 1]);
    if tlo - opts.window < lo || thi + opts.window > hi {
        return Err(invalid("model grid does not cover the trace grid plus the offset window"));
    }

    let n = (2.0 * opts.window / opts.scan_step).ceil().max(4.0) as usize;
    let step = 2.0 * opts.window / n as f64;
    let scan: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = -opts.window + step * i as f64;
            (x, profile(trace, model, x).1)
        })
        .collect();
    // Ties go to the smaller offset magnitude so the result is deterministic.
    let best = (0..scan.len())
        .min_by(|&i, &j| scan[i].1.total_cmp(&scan[j].1).then(scan[i].0.abs().total_cmp(&scan[j].0.abs())))
        .expect("scan is non-empty");
    if best == 0 || best == n {
        return Err(Error::NoFitConvergence { window: opts.window });
    }
    let (x_lo, x_hi) = (scan[best - 1].0, scan[best + 1].0);
    let (mut offset, mut rss) = golden_section(|x| profile(trace, model, x).1, x_lo, x_hi, opts.xtol, 200);
    if scan[best].1 < rss {
        offset = scan[best].0;
        rss = scan[best].1;
    }
    let (n0, _) = profile(trace, model, offset);
    let (n0_stderr, offset_stderr_hz) = uncertainties(trace, model, n0, offset, rss, step);
    Ok(FitResult {
        n0,
        offset_hz: offset,
        residual_rms: (rss / trace.len() as f64).sqrt(),
        peak_density_per_cm3: density_from_n0(n0, opts.sigma) * 1e-6,
        n0_stderr,
        offset_stderr_hz,
    })
}

/// Gauss-Newton covariance of `(n0, offset)`.
fn uncertainties(trace: &MeasuredTrace, model: &UnitModel, n0: f64, offset: f64, rss: f64, h: f64) -> (f64, f64) {
    let dof = trace.len().saturating_sub(2);
    if dof == 0 {
        return (f64::NAN, f64::NAN);
    }
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    for &x in &trace.detunings {
        let at = |o: f64| model.interpolate(x - o).unwrap_or(0.0);
        let m = at(offset);
        let dm = n0 * (at(offset + h) - at(offset - h)) / (2.0 * h);
        a11 += m * m;
        a12 += m * dm;
        a22 += dm * dm;
    }
    let det = a11 * a22 - a12 * a12;
    let s2 = rss / dof as f64;
    if !(det > 0.0) {
        return (f64::NAN, f64::NAN);
    }
    ((s2 * a22 / det).sqrt(), (s2 * a11 / det).sqrt())
}

/// Peak density `n0 / (sigma^3 (2 pi)^(3/2))` (1/m^3).
pub fn peak_density(cloud: &CloudSpec) -> f64 {
    density_from_n0(cloud.n0, cloud.sigma)
}

fn density_from_n0(n0: f64, sigma: f64) -> f64 {
    n0 / (sigma.powi(3) * std::f64::consts::TAU.powf(1.5))
}

/// Inverse of [`peak_density`]: `n0` for a target peak density (1/m^3).
pub fn n0_for_peak_density(density: f64, sigma: f64) -> f64 {
    density * sigma.powi(3) * std::f64::consts::TAU.powf(1.5)
}

/// Writes a fit result as JSON.
pub fn save_fit(result: &FitResult, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(result)?)?;
    Ok(())
}
