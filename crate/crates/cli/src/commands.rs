//! Subcommand implementations. Every artifact lands in the output directory
//! and carries the config hash, seed and version in its JSON sidecar.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fiberatom::fiber_mode::{IntensityProfile, ModeSummary, TabulatedProfile};
use fiberatom::fit_io::{fit_spectrum, load_trace, FitOptions, FitResult, UnitModel};
use fiberatom::light_atom::ProbeSpec;
use fiberatom::pipeline::{SweepRow, Workbench};
use fiberatom::spectroscopy::{
    fwhm, is_asymmetric, line_center, skewness, synthesize_full, DensitySource, LineModel, ModelVariant,
    MonteCarloSource, Spectrum,
};
use fiberatom::trajectory_mc::{CloudSpec, DensityFactor};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
struct Provenance {
    config_hash: String,
    seed: u64,
    version: &'static str,
}

impl Provenance {
    fn of(config: &RunConfig) -> Self {
        Self { config_hash: config.hash(), seed: config.seed, version: VERSION }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>, CliError> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(header).map_err(runtime)?;
    Ok(w)
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn output_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&config.output_dir)?;
    Ok(config.output_dir.clone())
}

fn cache_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.join("cache").join(&config.physics_hash()[..16])
}

/// Workbench for `config`, with `delta_c3` recalibrated when requested.
fn workbench(config: &RunConfig) -> Result<Workbench, CliError> {
    let mut bench = Workbench::new(&config.fiber, config.atom, config.surface, config.cloud, config.mc_config())?;
    bench.options = config.coupling;
    if config.calibration.enabled {
        bench.surface.delta_c3 = calibrated_delta_c3(config, &bench)?;
    }
    Ok(bench)
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationRecord {
    delta_c3: f64,
    target_center_hz: f64,
    n_trajectories: u64,
}

fn calibrated_delta_c3(config: &RunConfig, bench: &Workbench) -> Result<f64, CliError> {
    let path = cache_dir(config).join("calibration.json");
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(record) = serde_json::from_str::<CalibrationRecord>(&text) {
            return Ok(record.delta_c3);
        }
    }
    let mut probe_bench = bench.clone();
    probe_bench.mc.n_trajectories = config.calibration.n_trajectories;
    let delta_c3 = probe_bench.calibrate(config.calibration.target_center_hz)?;
    fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
    write_json(
        &path,
        &CalibrationRecord {
            delta_c3,
            target_center_hz: config.calibration.target_center_hz,
            n_trajectories: config.calibration.n_trajectories,
        },
    )?;
    Ok(delta_c3)
}

/// Monte Carlo density factors, read from and written to the disk cache.
struct CachedSource<'c, 'a> {
    inner: MonteCarloSource<'c, 'a, TabulatedProfile>,
    dir: PathBuf,
    hash: String,
}

impl CachedSource<'_, '_> {
    fn stem(probe: &ProbeSpec<f64>) -> String {
        format!("f_{:016x}_{:016x}", probe.detuning.to_bits(), probe.power.to_bits())
    }
}

impl DensitySource for CachedSource<'_, '_> {
    fn density(&self, probe: &ProbeSpec<f64>, index: usize) -> fiberatom::Result<DensityFactor> {
        let stem = Self::stem(probe);
        if let Ok(f) = DensityFactor::load(&self.dir, &stem) {
            if f.delta == probe.detuning && f.power == probe.power {
                return Ok(f);
            }
        }
        let f = self.inner.density(probe, index)?;
        f.save(&self.dir, &stem, Some(&self.hash))?;
        Ok(f)
    }
}

fn full_spectrum(config: &RunConfig, bench: &Workbench, detunings: &[f64], power: f64) -> Result<Spectrum, CliError> {
    let coupling = bench.coupling(ModelVariant::Full);
    let model = LineModel::new(&coupling, bench.cloud, bench.mc.launch_radius);
    let source = CachedSource {
        inner: MonteCarloSource { coupling: &coupling, cloud: bench.cloud, config: bench.mc },
        dir: cache_dir(config),
        hash: config.physics_hash(),
    };
    Ok(synthesize_full(detunings, &bench.probe(power, 0.0)?, &model, &source, bench.mc.seed)?)
}

fn any_spectrum(
    config: &RunConfig,
    bench: &Workbench,
    detunings: &[f64],
    power: f64,
    variant: ModelVariant,
) -> Result<Spectrum, CliError> {
    match variant {
        ModelVariant::Full => full_spectrum(config, bench, detunings, power),
        ModelVariant::Reduced => Ok(bench.spectrum(detunings, power, variant)?),
    }
}

#[derive(Serialize)]
struct ModeReport {
    #[serde(flatten)]
    provenance: Provenance,
    fiber_radius_m: f64,
    wavelength_m: f64,
    #[serde(flatten)]
    summary: ModeSummary,
    single_mode: bool,
    power_fraction_within_370nm: f64,
    surface_intensity_per_watt: f64,
}

pub fn mode(config: &RunConfig) -> Result<(), CliError> {
    let bench = workbench(&RunConfig { calibration: Default::default(), ..config.clone() })?;
    let dir = output_dir(config)?;
    let mode = &bench.mode;
    let summary = mode.summary();
    write_json(
        &dir.join("mode.json"),
        &ModeReport {
            provenance: Provenance::of(config),
            fiber_radius_m: mode.fiber.radius,
            wavelength_m: mode.fiber.wavelength,
            single_mode: summary.v_number < 2.405,
            summary,
            power_fraction_within_370nm: mode.evanescent_power_fraction(370e-9),
            surface_intensity_per_watt: mode.surface_unit_intensity(),
        },
    )?;
    let mut w = csv_writer(&dir.join("mode_intensity.csv"), &["r_m", "intensity_w_per_m2"])?;
    let a = mode.fiber.radius;
    let outer = bench.mc.launch_radius;
    let n = 400;
    for i in 0..=n {
        let r = a + (outer - a) * i as f64 / n as f64;
        w.write_record([r.to_string(), mode.unit_intensity(r).0.to_string()]).map_err(runtime)?;
    }
    w.flush()?;
    println!("V = {:.4}, beta = {:.6e} rad/m, q = {:.6e} 1/m", summary.v_number, summary.beta, summary.q);
    Ok(())
}

pub fn density(config: &RunConfig, power: f64, detuning: f64) -> Result<(), CliError> {
    let bench = workbench(config)?;
    let probe = bench.probe(power, detuning)?;
    let coupling = bench.coupling(ModelVariant::Full);
    let source = CachedSource {
        inner: MonteCarloSource { coupling: &coupling, cloud: bench.cloud, config: bench.mc },
        dir: cache_dir(config),
        hash: config.physics_hash(),
    };
    let f = source.density(&probe, 0)?;
    let dir = output_dir(config)?;
    let stem = format!("density_d{detuning:e}_p{power:e}");
    f.save(&dir, &stem, Some(&config.hash()))?;
    println!(
        "f averaged over 370 nm = {:.4}, over 100 nm = {:.4} ({} escaped, {} absorbed, {} timed out)",
        f.integrated_mean(370e-9),
        f.integrated_mean(100e-9),
        f.outcomes.escaped,
        f.outcomes.absorbed,
        f.outcomes.timed_out
    );
    Ok(())
}

#[derive(Serialize)]
struct SpectrumReport {
    #[serde(flatten)]
    provenance: Provenance,
    power_w: f64,
    variant: ModelVariant,
    n0: f64,
    delta_c3: f64,
    flagged_detunings_hz: Vec<f64>,
    fwhm_hz: Option<f64>,
    line_center_hz: Option<f64>,
    skewness: f64,
    asymmetric: bool,
}

fn write_spectrum(config: &RunConfig, bench: &Workbench, s: &Spectrum) -> Result<PathBuf, CliError> {
    let dir = output_dir(config)?;
    let stem = format!("spectrum_{}_p{:e}", s.variant, s.power);
    let mut w = csv_writer(&dir.join(format!("{stem}.csv")), &["detuning_hz", "absorbance"])?;
    for (d, a) in s.detunings.iter().zip(&s.absorbance) {
        w.write_record([d.to_string(), a.to_string()]).map_err(runtime)?;
    }
    w.flush()?;
    let flagged = s.detunings.iter().zip(&s.flagged).filter(|(_, &f)| f).map(|(&d, _)| d).collect();
    write_json(
        &dir.join(format!("{stem}.json")),
        &SpectrumReport {
            provenance: Provenance::of(config),
            power_w: s.power,
            variant: s.variant,
            n0: s.n0,
            delta_c3: bench.surface.delta_c3,
            flagged_detunings_hz: flagged,
            fwhm_hz: fwhm(s).ok(),
            line_center_hz: line_center(s).ok(),
            skewness: skewness(s),
            asymmetric: is_asymmetric(s),
        },
    )?;
    Ok(dir.join(format!("{stem}.csv")))
}

pub fn spectrum(config: &RunConfig, power: f64, variant: ModelVariant) -> Result<(), CliError> {
    let bench = workbench(config)?;
    let s = any_spectrum(config, &bench, &config.grids.detunings(), power, variant)?;
    let path = write_spectrum(config, &bench, &s)?;
    match fwhm(&s) {
        Ok(w) => println!("{}: FWHM {:.3} MHz, skewness {:.3}", path.display(), w / 1e6, skewness(&s)),
        Err(e) => println!("{}: {e}", path.display()),
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport {
    #[serde(flatten)]
    provenance: Provenance,
    delta_c3: f64,
    rows: Vec<SweepRow>,
}

pub fn sweep(config: &RunConfig) -> Result<(), CliError> {
    let bench = workbench(config)?;
    let detunings = config.grids.detunings();
    let mut rows = Vec::new();
    for power in config.grids.powers() {
        let full = any_spectrum(config, &bench, &detunings, power, ModelVariant::Full);
        let reduced = any_spectrum(config, &bench, &detunings, power, ModelVariant::Reduced)?;
        let row = SweepRow {
            power,
            fwhm_full: full.as_ref().ok().and_then(|s| fwhm(s).ok()),
            fwhm_reduced: fwhm(&reduced).ok(),
        };
        if let Ok(s) = &full {
            write_spectrum(config, &bench, s)?;
        }
        write_spectrum(config, &bench, &reduced)?;
        rows.push(row);
    }
    if rows.iter().all(|r| r.fwhm_full.is_none() && r.fwhm_reduced.is_none()) {
        return Err(CliError::Runtime("no line width could be determined at any power".into()));
    }
    let dir = output_dir(config)?;
    let mut w = csv_writer(&dir.join("sweep.csv"), &["power_w", "fwhm_hz_full", "fwhm_hz_reduced"])?;
    let cell = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &rows {
        w.write_record([r.power.to_string(), cell(r.fwhm_full), cell(r.fwhm_reduced)]).map_err(runtime)?;
        println!(
            "P = {:.3e} W: full {} MHz, reduced {} MHz",
            r.power,
            r.fwhm_full.map_or("-".into(), |v| format!("{:.3}", v / 1e6)),
            r.fwhm_reduced.map_or("-".into(), |v| format!("{:.3}", v / 1e6))
        );
    }
    w.flush()?;
    write_json(
        &dir.join("sweep.json"),
        &SweepReport { provenance: Provenance::of(config), delta_c3: bench.surface.delta_c3, rows },
    )
}

#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(flatten)]
    result: FitResult,
    power_w: f64,
    variant: ModelVariant,
    trace: String,
}

pub fn fit(config: &RunConfig, trace_path: &Path, power: f64, variant: ModelVariant) -> Result<(), CliError> {
    let trace = load_trace(trace_path)?;
    // the model is evaluated per unit atom number
    let unit = RunConfig { cloud: CloudSpec { n0: 1.0, ..config.cloud }, ..config.clone() };
    let bench = workbench(&unit)?;
    let step = config.fit.model_step_hz;
    let lo = trace.detunings[0] - config.fit.window_hz - step;
    let hi = trace.detunings[trace.len() - 1] + config.fit.window_hz + step;
    let n = ((hi - lo) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    let model = any_spectrum(config, &bench, &grid, power, variant)?;
    let unit_model = UnitModel::from_spectrum(&model)?;
    let opts = FitOptions { window: config.fit.window_hz, ..FitOptions::new(config.cloud.sigma) };
    let result = fit_spectrum(&trace, &unit_model, &opts)?;
    let dir = output_dir(config)?;
    write_json(
        &dir.join("fit.json"),
        &FitReport {
            provenance: Provenance::of(config),
            result,
            power_w: power,
            variant,
            trace: trace_path.display().to_string(),
        },
    )?;
    println!(
        "n0 = {:.4e} +/- {:.2e}, offset = {:.4} +/- {:.4} MHz, peak density {:.3e} cm^-3, rms residual {:.3e}",
        result.n0,
        result.n0_stderr,
        result.offset_hz / 1e6,
        result.offset_stderr_hz / 1e6,
        result.peak_density_per_cm3,
        result.residual_rms
    );
    Ok(())
}
