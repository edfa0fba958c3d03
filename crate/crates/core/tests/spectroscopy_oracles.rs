use fiberatom::atom_surface::{AtomSpecies, SurfaceModel};
use fiberatom::constants::HBAR;
use fiberatom::fiber_mode::{solve_he11, FiberSpec, IntensityProfile, ModeSolution};
use fiberatom::light_atom::{Coupling, CouplingOptions, ProbeSpec};
use fiberatom::spectroscopy::*;
use fiberatom::trajectory_mc::{CloudSpec, DensityFactor};

const OUTER: f64 = 2e-6;

fn mode() -> ModeSolution<f64> {
    solve_he11(&FiberSpec::cs_nanofiber(), 1e-12).unwrap()
}

fn grid(half_width: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * half_width / step).round() as usize;
    (0..=n).map(|i| -half_width + step * i as f64).collect()
}

fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let u = 2.0 * (x - center) / fwhm;
    1.0 / (1.0 + u * u)
}

/// Composite Simpson rule, kept separate from the library's Gauss-Legendre code.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn reduced_spectrum_matches_closed_form_lorentzian() {
    let mode = mode();
    let atom = AtomSpecies::cesium_d2();
    let c = Coupling::new(&mode, atom, SurfaceModel::default(), CouplingOptions::reduced());
    let cloud = CloudSpec { n0: 1.5e8, ..CloudSpec::paper() };
    let model = LineModel::new(&c, cloud, OUTER);
    let omega = mode.fiber.angular_frequency();
    // far below saturation the line is a Lorentzian of width gamma_0 / 2 pi
    let power = 1e-17;
    let a = mode.fiber.radius;
    let overlap = simpson(|r| std::f64::consts::TAU * r * mode.unit_intensity(r).0, a, OUTER, 40_000);
    let amplitude = HBAR * omega * cloud.column_density() * atom.gamma_0 / (2.0 * atom.i_sat_free) * overlap;
    for &delta in &[-10e6, -2.6e6, 0.0, 1e6, 7e6] {
        let probe = ProbeSpec::new(power, delta, omega).unwrap();
        let got = model.absorbance_at(&probe, &model.unity_factor(&probe)).unwrap();
        let want = amplitude * lorentzian(delta, 0.0, atom.natural_linewidth);
        assert!((got / want - 1.0).abs() < 1e-3, "delta {delta}: {got} vs {want}");
    }
}

#[test]
fn reduced_spectrum_is_symmetric() {
    let mode = mode();
    let c = Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::default(), CouplingOptions::reduced());
    let model = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let probe = ProbeSpec::new(1e-9, 0.0, mode.fiber.angular_frequency()).unwrap();
    let s = synthesize_reduced(&grid(24e6, 0.5e6), &probe, &model).unwrap();
    let n = s.absorbance.len();
    for i in 0..n / 2 {
        let (l, r) = (s.absorbance[i], s.absorbance[n - 1 - i]);
        assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()), "{l} vs {r}");
    }
    assert!(line_center(&s).unwrap().abs() < 1.0);
    assert!(skewness(&s).abs() < 1e-9);
    assert!(!is_asymmetric(&s));
}

#[test]
fn reduced_fwhm_at_low_power_is_natural_linewidth() {
    let mode = mode();
    let atom = AtomSpecies::cesium_d2();
    let c = Coupling::new(&mode, atom, SurfaceModel::default(), CouplingOptions::reduced());
    let model = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let probe = ProbeSpec::new(1e-16, 0.0, mode.fiber.angular_frequency()).unwrap();
    let s = synthesize_reduced(&grid(24e6, 0.1e6), &probe, &model).unwrap();
    let w = fwhm(&s).unwrap();
    assert!((w / atom.natural_linewidth - 1.0).abs() < 2e-3, "fwhm {w}");
}

#[test]
fn absorbance_and_atom_number_are_linear_in_n0() {
    let mode = mode();
    let c =
        Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::with_delta_c3(2e-49), CouplingOptions::default());
    let omega = mode.fiber.angular_frequency();
    let probe = ProbeSpec::new(52e-12, 0.0, omega).unwrap();
    let base = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let f = base.unity_factor(&probe);
    let a1 = base.absorbance_at(&probe, &f).unwrap();
    let n1 = base.effective_atom_number(&probe, &f).unwrap();
    for &k in &[2.0, 7.3, 1.5e8, 3.0e-4] {
        let scaled = LineModel::new(&c, CloudSpec { n0: k, ..CloudSpec::paper() }, OUTER);
        let a = scaled.absorbance_at(&probe, &f).unwrap();
        let n = scaled.effective_atom_number(&probe, &f).unwrap();
        assert!((a / (k * a1) - 1.0).abs() < 4.0 * f64::EPSILON, "A not linear at n0 = {k}");
        assert!((n / (k * n1) - 1.0).abs() < 4.0 * f64::EPSILON, "N_P not linear at n0 = {k}");
    }
}

#[test]
fn quadrature_refinement_changes_little() {
    let mode = mode();
    let c =
        Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::with_delta_c3(2e-49), CouplingOptions::default());
    let omega = mode.fiber.angular_frequency();
    let model = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let fine = LineModel { quadrature: model.quadrature.refined().refined(), ..model };
    for &(power, delta) in &[(1e-9, 0.0), (1e-9, -3e6), (6e-12, 1e6), (1e-13, -0.5e6)] {
        let probe = ProbeSpec::new(power, delta, omega).unwrap();
        // a wavy density factor on the Monte Carlo bin layout
        let mut f =
            DensityFactor::unity(delta, power, &fiberatom::trajectory_mc::BinGrid::new(mode.fiber.radius, OUTER, 100));
        for (k, v) in f.f_values.iter_mut().enumerate() {
            *v = 0.5 + 0.4 * (k as f64 * 0.37).sin().abs();
        }
        let coarse = model.absorbance_at(&probe, &f).unwrap();
        let refined = fine.absorbance_at(&probe, &f).unwrap();
        assert!((coarse / refined - 1.0).abs() < 1e-3, "P {power} delta {delta}: {coarse} vs {refined}");
    }
}

#[test]
fn constant_weight_mean_distance_matches_annulus_centroid() {
    let mode = mode();
    let c = Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::default(), CouplingOptions::reduced());
    let model = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let probe = ProbeSpec::new(1e-9, 0.0, mode.fiber.angular_frequency()).unwrap();
    let a = mode.fiber.radius;
    let r = OUTER;
    // int (r - a) r dr / int r dr over [a, R]
    let want = ((r.powi(3) - a.powi(3)) / 3.0 - a * (r * r - a * a) / 2.0) / ((r * r - a * a) / 2.0);
    let got = model.weighted_mean_distance(&model.unity_factor(&probe), |_| 1.0);
    assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
}

/// FWHM of `l(x + s) + l(x - s)` by bisection on the closed form.
fn double_lorentzian_fwhm(sep: f64, width: f64) -> f64 {
    let g = |x: f64| lorentzian(x, -sep, width) + lorentzian(x, sep, width);
    let peak = if sep < width / 12f64.sqrt() {
        g(0.0)
    } else {
        // maxima sit off-center; locate the right one by a dense scan
        (0..200_000).map(|i| g(i as f64 * 2.0 * sep / 200_000.0)).fold(0.0, f64::max)
    };
    let (mut lo, mut hi) = (sep, sep + 10.0 * width);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.5 * peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * lo
}

#[test]
fn fwhm_matches_dense_oracle_for_displaced_lorentzians() {
    for &(sep, width) in &[(0.0, 5.2e6), (1.0e6, 5.2e6), (2.0e6, 6.0e6)] {
        let detunings = grid(30e6, 10e3);
        let absorbance = detunings.iter().map(|&x| lorentzian(x, -sep, width) + lorentzian(x, sep, width)).collect();
        let s = Spectrum {
            flagged: vec![false; detunings.len()],
            detunings,
            absorbance,
            power: 1e-9,
            variant: ModelVariant::Full,
            n0: 1.0,
            seed: 0,
        };
        let want = double_lorentzian_fwhm(sep, width);
        let got = fwhm(&s).unwrap();
        assert!((got / want - 1.0).abs() < 1e-4, "sep {sep}: {got} vs {want}");
        assert!(line_center(&s).unwrap().abs() < 1.0);
    }
}

#[test]
fn mismatched_density_factor_is_rejected() {
    let mode = mode();
    let c = Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::default(), CouplingOptions::default());
    let model = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let probe = ProbeSpec::new(1e-9, 0.0, mode.fiber.angular_frequency()).unwrap();
    let f = model.unity_factor(&probe.with_detuning(1e6));
    assert!(matches!(model.absorbance_at(&probe, &f), Err(fiberatom::Error::GridMismatch { .. })));
}

#[test]
fn red_shifted_zero_power_line_after_calibration() {
    let mode = mode();
    let omega = mode.fiber.angular_frequency();
    let c0 =
        Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::with_delta_c3(0.0), CouplingOptions::default());
    let model = LineModel::new(&c0, CloudSpec::paper(), OUTER);
    // an unperturbed cloud stands in for the zero-power Monte Carlo factor
    let f0 = model.unity_factor(&ProbeSpec::new(1e-20, 0.0, omega).unwrap());
    let target = -0.3e6;
    let dc3 = calibrate_delta_c3(&model, omega, &f0, target).unwrap();
    assert!(dc3 > 0.0);
    let c =
        Coupling::new(&mode, AtomSpecies::cesium_d2(), SurfaceModel::with_delta_c3(dc3), CouplingOptions::default());
    let m = LineModel::new(&c, CloudSpec::paper(), OUTER);
    let s = zero_power_spectrum(&calibration_grid(), omega, &m, &f0).unwrap();
    assert!((line_center(&s).unwrap() - target).abs() < 1e3);
}
