use fiberatom::atom_surface::{AtomSpecies, SurfaceModel};
use fiberatom::fiber_mode::{solve_he11, FiberSpec};
use fiberatom::fit_io::*;
use fiberatom::light_atom::{Coupling, CouplingOptions, ProbeSpec};
use fiberatom::spectroscopy::LineModel;
use fiberatom::trajectory_mc::CloudSpec;
use fiberatom::Error;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

const SIGMA: f64 = 0.6e-3;

fn grid(half_width: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * half_width / step).round() as usize;
    (0..=n).map(|i| -half_width + step * i as f64).collect()
}

/// Unit-n0 model with a surface-shifted, slightly asymmetric line.
fn unit_model() -> UnitModel {
    let mode = solve_he11(&FiberSpec::cs_nanofiber(), 1e-12).unwrap();
    let c = Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::default(), CouplingOptions::default());
    let model = LineModel::new(&c, CloudSpec::paper(), 2e-6);
    let detunings = grid(32e6, 0.25e6);
    let absorbance = detunings
        .iter()
        .map(|&d| {
            let p = ProbeSpec::new(1e-12, d, mode.fiber.angular_frequency()).unwrap();
            model.absorbance_at(&p, &model.unity_factor(&p)).unwrap()
        })
        .collect();
    UnitModel::new(detunings, absorbance).unwrap()
}

fn synthetic(model: &UnitModel, n0: f64, offset: f64) -> Vec<f64> {
    grid(24e6, 0.5e6).iter().map(|&d| n0 * model.interpolate(d - offset).unwrap()).collect()
}

fn peak(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

#[test]
fn recovers_parameters_from_noiseless_model_data() {
    let model = unit_model();
    let (n0, offset) = (1.5e8, 0.37e6);
    let a = synthetic(&model, n0, offset);
    let trace = MeasuredTrace::from_absorbance(grid(24e6, 0.5e6), &a).unwrap();
    let fit = fit_spectrum(&trace, &model, &FitOptions::new(SIGMA)).unwrap();
    assert!((fit.n0 / n0 - 1.0).abs() < 1e-3, "{fit:?}");
    assert!((fit.offset_hz - offset).abs() < 10e3, "{fit:?}");
    assert!(fit.residual_rms < 1e-10 * peak(&a), "{fit:?}");
    assert!(fit.n0_stderr.is_finite() && fit.offset_stderr_hz.is_finite());
}

#[test]
fn recovers_parameters_from_noisy_data() {
    let model = unit_model();
    let (n0, offset) = (1.5e8, -0.8e6);
    let clean = synthetic(&model, n0, offset);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut n0_err = Vec::new();
    let mut offset_err = Vec::new();
    for seed in 0..20 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = clean.iter().map(|&x| x * (1.0 + noise.sample(&mut rng))).collect();
        let trace = MeasuredTrace::from_absorbance(grid(24e6, 0.5e6), &a).unwrap();
        let fit = fit_spectrum(&trace, &model, &FitOptions::new(SIGMA)).unwrap();
        n0_err.push((fit.n0 / n0 - 1.0).abs());
        offset_err.push((fit.offset_hz - offset).abs());
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[9] + v[10])
    };
    assert!(median(&mut n0_err) < 0.05);
    assert!(median(&mut offset_err) < 0.2e6);
}

#[test]
fn scaling_the_data_scales_n0() {
    let model = unit_model();
    let a = synthetic(&model, 2.0e8, 0.1e6);
    let noisy: Vec<f64> = a.iter().enumerate().map(|(i, &x)| x * (1.0 + 0.03 * ((i * 7) as f64).sin())).collect();
    let base = fit_spectrum(
        &MeasuredTrace::from_absorbance(grid(24e6, 0.5e6), &noisy).unwrap(),
        &model,
        &FitOptions::new(SIGMA),
    )
    .unwrap();
    let scaled: Vec<f64> = noisy.iter().map(|x| 0.5 * x).collect();
    let fit = fit_spectrum(
        &MeasuredTrace::from_absorbance(grid(24e6, 0.5e6), &scaled).unwrap(),
        &model,
        &FitOptions::new(SIGMA),
    )
    .unwrap();
    assert!((fit.n0 / (0.5 * base.n0) - 1.0).abs() < 1e-9);
    assert!((fit.offset_hz - base.offset_hz).abs() < 1.0);
}

#[test]
fn minimum_outside_the_window_is_reported() {
    let model = unit_model();
    let a = synthetic(&model, 1e8, 4e6);
    let trace = MeasuredTrace::from_absorbance(grid(24e6, 0.5e6), &a).unwrap();
    let opts = FitOptions { window: 2e6, ..FitOptions::new(SIGMA) };
    assert!(matches!(fit_spectrum(&trace, &model, &opts), Err(Error::NoFitConvergence { .. })));
}

#[test]
fn model_must_cover_trace_plus_window() {
    let model = unit_model();
    let trace = MeasuredTrace::from_absorbance(grid(30e6, 0.5e6), &vec![0.1; 121]).unwrap();
    assert!(matches!(fit_spectrum(&trace, &model, &FitOptions::new(SIGMA)), Err(Error::Invalid(_))));
}

#[test]
fn absorbance_is_negative_log_transmission() {
    let t = MeasuredTrace::new(vec![-1.0, 0.0, 1.0], vec![1.0, (-1.0f64).exp(), 1.0]).unwrap();
    assert_eq!(t.absorbance[0], 0.0);
    assert_eq!(t.absorbance[2], 0.0);
    assert!((t.absorbance[1] - 1.0).abs() < 1e-15);
}

#[test]
fn trace_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    std::fs::write(&path, "detuning_hz, transmission\n-2.5e6, 0.999999999999\n0, 0.123456789012\n1.25e6, 1\n").unwrap();
    let t = load_trace(&path).unwrap();
    assert_eq!(t.detunings, vec![-2.5e6, 0.0, 1.25e6]);
    assert_eq!(t.transmission, vec![0.999999999999, 0.123456789012, 1.0]);
    let copy = dir.path().join("copy.csv");
    t.save(&copy).unwrap();
    assert_eq!(load_trace(&copy).unwrap(), t);
}

#[test]
fn malformed_traces_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("detuning_hz,transmission\n0,0.5\n1,abc\n", "parse"),
        ("detuning_hz,transmission\n0,0.5\n1\n", "parse"),
        ("frequency,transmission\n0,0.5\n", "parse"),
        ("detuning_hz,transmission\n0,0.5\n1,0\n", "range"),
        ("detuning_hz,transmission\n0,1.2\n", "range"),
        ("detuning_hz,transmission\n0,0.5\n0,0.6\n", "grid"),
        ("detuning_hz,transmission\n1,0.5\n0,0.6\n", "grid"),
    ];
    for (i, (body, kind)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("t{i}.csv"));
        std::fs::write(&path, body).unwrap();
        let err = load_trace(&path).unwrap_err();
        let ok = match *kind {
            "parse" => matches!(err, Error::Parse { .. }),
            "range" => matches!(err, Error::Range { .. }),
            _ => matches!(err, Error::Grid { .. }),
        };
        assert!(ok, "case {i}: {err:?}");
    }
}

#[test]
fn peak_density_closed_form() {
    let unit = CloudSpec { n0: 1.0, sigma: 1.0, temperature: 1e-4 };
    assert!((peak_density(&unit) - 0.063_493_635_934_240_97).abs() < 1e-15);
    let wide = CloudSpec { sigma: 2.0, ..unit };
    assert!((peak_density(&unit) / peak_density(&wide) - 8.0).abs() < 1e-12);
    let paper = CloudSpec { n0: 1.55e8, ..CloudSpec::paper() };
    let per_cm3 = peak_density(&paper) * 1e-6;
    assert!((per_cm3 / 4.4e10 - 1.0).abs() < 0.05, "{per_cm3:e}");
    let n0 = n0_for_peak_density(4.4e16, SIGMA);
    assert!((n0 / 1.5e8 - 1.0).abs() < 0.01, "{n0:e}");
}
