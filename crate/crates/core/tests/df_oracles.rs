//! Quadrature-versus-closed-form oracles for the describing functions.

use oscdf_core::df;
use oscdf_core::nonlin::{Kind, Nonlinearity};
use oscdf_core::Complex64;

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Numeric DF matches the analytic table entry to 1e-6 relative across a
/// 20-point amplitude grid from the validity threshold to 100x it.
#[test]
fn classic_kinds_match_closed_forms() {
    let cases: Vec<(Nonlinearity, f64)> = vec![
        (Nonlinearity::new(Kind::Saturation { k: 2.0, a: 0.7 }).unwrap(), 0.7),
        (Nonlinearity::new(Kind::Relay { m: 1.3 }).unwrap(), 0.05),
        (Nonlinearity::new(Kind::DeadZone { k: 1.5, delta: 0.4 }).unwrap(), 0.4),
        (Nonlinearity::new(Kind::RelayHysteresis { m: 1.0, h: 0.5 }).unwrap(), 0.5),
    ];
    for (nl, threshold) in cases {
        for a in geometric_grid(threshold, 100.0 * threshold, 20) {
            let closed = df::closed_form(&nl, a).unwrap().unwrap();
            let numeric = df::numeric(&nl, a, 0.0, 8192).unwrap();
            let err = (numeric.n - closed).norm();
            assert!(
                err <= 1e-6 * closed.norm(),
                "{} at A = {a}: numeric {:?} closed {:?}",
                nl.kind_name(),
                numeric.n,
                closed
            );
        }
    }
}

/// The quadrature cosine coefficient of saturation vanishes at every
/// amplitude past the knee.
#[test]
fn saturation_b1_is_zero() {
    let nl = Nonlinearity::new(Kind::Saturation { k: 1.0, a: 1.0 }).unwrap();
    for a in geometric_grid(1.0, 100.0, 20) {
        let s = df::numeric(&nl, a, 0.0, 1024).unwrap();
        let b1 = s.n.im * a;
        assert!(b1.abs() <= 1e-10, "A = {a}: b1 = {b1}");
    }
}

/// Reparameterizing the phase variable with a nominal frequency does not
/// change the quadrature result.
#[test]
fn frequency_choice_is_irrelevant() {
    let nl = Nonlinearity::new(Kind::TanhRelaxation { k1: 2.0, k2: 6.25, k3: 0.4 }).unwrap();
    let a = 1.7;
    let n = 1024usize;
    let reference = df::numeric(&nl, a, 0.0, n).unwrap();
    for &omega in &[1.0, 377.0, 2.0 * std::f64::consts::PI * 50.0] {
        // sample over t in [0, 2pi/omega) instead of theta in [0, 2pi)
        let mut a1 = 0.0;
        let mut b1 = 0.0;
        for k in 0..n {
            let t = 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * omega);
            let (s, c) = (omega * t).sin_cos();
            let y = nl.eval(a * s).unwrap();
            a1 += y * s;
            b1 += y * c;
        }
        let n_val = Complex64::new(2.0 * a1 / n as f64, 2.0 * b1 / n as f64) / a;
        assert!(
            (n_val - reference.n).norm() <= 1e-12 * reference.n.norm().max(1.0),
            "omega = {omega}: {n_val:?} vs {:?}",
            reference.n
        );
    }
}

/// A linear map has a constant describing function equal to its gain.
#[test]
fn linear_gain_has_constant_df() {
    let g = 0.73;
    let nl = Nonlinearity::new(Kind::Polynomial { coeffs: vec![0.0, g] }).unwrap();
    for a in geometric_grid(1e-3, 1e3, 13) {
        let s = df::numeric(&nl, a, 0.0, 1024).unwrap();
        assert!((s.n.re - g).abs() <= 1e-14 * g);
        assert!(s.n.im.abs() <= 1e-15);
    }
}

/// Scaling the output by c scales N(A) by exactly c.
#[test]
fn output_scaling_is_exact() {
    let base = Nonlinearity::new(Kind::TanhInverter { amp: 1.0, k: 3.0 }).unwrap();
    let scaled = base.rescaled(2.5).unwrap();
    for a in geometric_grid(0.1, 10.0, 7) {
        let n0 = df::numeric(&base, a, 0.0, 1024).unwrap().n;
        let n1 = df::numeric(&scaled, a, 0.0, 1024).unwrap().n;
        assert!((n1 - n0 * 2.5).norm() <= 1e-14 * n1.norm());
    }
}

/// Odd memoryless kinds at zero bias have purely real describing functions.
#[test]
fn zero_quadrature_phase_for_odd_kinds() {
    let kinds: Vec<Nonlinearity> = vec![
        Nonlinearity::new(Kind::Saturation { k: 1.0, a: 0.5 }).unwrap(),
        Nonlinearity::new(Kind::Relay { m: 2.0 }).unwrap(),
        Nonlinearity::new(Kind::DeadZone { k: 1.0, delta: 0.3 }).unwrap(),
        Nonlinearity::new(Kind::TanhResistor { v_max: 1.0, r_max: 2.0 }).unwrap(),
        Nonlinearity::new(Kind::TanhInverter { amp: 1.0, k: 3.0 }).unwrap(),
        Nonlinearity::new(Kind::TanhRelaxation { k1: 2.0, k2: 6.25, k3: 0.4 }).unwrap(),
        Nonlinearity::new(Kind::Polynomial { coeffs: vec![0.0, 1.0, 0.0, -1.0 / 3.0] }).unwrap(),
    ];
    for nl in kinds {
        assert_eq!(nl.symmetry(2.0, 64).unwrap(), oscdf_core::Symmetry::Odd);
        for a in geometric_grid(0.4, 40.0, 9) {
            let s = df::numeric(&nl, a, 0.0, 1024).unwrap();
            assert!(
                s.n.im.abs() <= 1e-10 * s.n.norm().max(1e-30),
                "{}: Im N = {} at A = {a}",
                nl.kind_name(),
                s.n.im
            );
        }
    }
}

/// Hysteresis keeps its negative imaginary part everywhere above threshold.
#[test]
fn hysteresis_imaginary_part_law() {
    let nl = Nonlinearity::new(Kind::RelayHysteresis { m: 1.5, h: 0.8 }).unwrap();
    for a in geometric_grid(0.81, 80.0, 15) {
        let s = df::numeric(&nl, a, 0.0, 1024).unwrap();
        let expected = -4.0 * 1.5 * 0.8 / (std::f64::consts::PI * a * a);
        assert!(s.n.im < 0.0);
        assert!((s.n.im - expected).abs() <= 1e-9 * expected.abs());
    }
}
