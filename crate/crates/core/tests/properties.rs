//! Property tests over randomized parameters.

use oscdf_core::df;
use oscdf_core::linear::LinearBlock;
use oscdf_core::nonlin::{Kind, Nonlinearity};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Saturation output never exceeds the clipping level, with equality
    /// outside the knee.
    #[test]
    fn saturation_bound(k in 0.1f64..10.0, a in 0.1f64..10.0, x in -100.0f64..100.0) {
        let nl = Nonlinearity::new(Kind::Saturation { k, a }).unwrap();
        let y = nl.eval(x).unwrap();
        prop_assert!(y.abs() <= k * a * (1.0 + 1e-15));
        if x.abs() >= a {
            prop_assert!((y.abs() - k * a).abs() <= 1e-12 * k * a);
        }
    }

    /// Every odd-classified kind evaluates antisymmetrically.
    #[test]
    fn odd_kinds_are_antisymmetric(k in 0.5f64..4.0, x in -5.0f64..5.0) {
        let nl = Nonlinearity::new(Kind::TanhInverter { amp: 1.0, k }).unwrap();
        let fp = nl.eval(x).unwrap();
        let fm = nl.eval(-x).unwrap();
        prop_assert!((fp + fm).abs() <= 1e-12 * fp.abs().max(1.0));
    }

    /// Scaling the nonlinearity output scales its describing function.
    #[test]
    fn df_output_scaling(c in 0.01f64..100.0, amp in 0.2f64..20.0) {
        let base = Nonlinearity::new(Kind::TanhRelaxation { k1: 2.0, k2: 6.25, k3: 0.4 }).unwrap();
        let scaled = base.rescaled(c).unwrap();
        let n0 = df::numeric(&base, amp, 0.0, 256).unwrap().n;
        let n1 = df::numeric(&scaled, amp, 0.0, 256).unwrap().n;
        prop_assert!((n1 - n0 * c).norm() <= 1e-13 * n1.norm().max(1e-30));
    }

    /// Frequency responses stay conjugate-symmetric for any delay fraction.
    #[test]
    fn conjugate_symmetry(
        b0 in 0.2f64..5.0,
        b1 in 0.0f64..5.0,
        a1 in 0.1f64..5.0,
        a2 in 0.0f64..5.0,
        rho in 0.0f64..3.0,
        w in 1e-3f64..1e3,
    ) {
        let g = LinearBlock::new(vec![b0, b1], vec![1.0, a1, a2], rho).unwrap();
        if let (Ok(p), Ok(m)) = (g.response(w), g.response(-w)) {
            prop_assert!((p.re - m.re).abs() <= 1e-12 * p.norm().max(1e-30));
            prop_assert!((p.im + m.im).abs() <= 1e-12 * p.norm().max(1e-30));
        }
    }

    /// The delay factor never changes the response magnitude.
    #[test]
    fn delay_preserves_magnitude(rho in 0.0f64..1.0, w in 1e-2f64..1e2) {
        let with = LinearBlock::new(vec![1.0], vec![1.0, 0.3, 0.1], rho).unwrap();
        let without = LinearBlock::new(vec![1.0], vec![1.0, 0.3, 0.1], 0.0).unwrap();
        let a = with.response(w).unwrap().norm();
        let b = without.response(w).unwrap().norm();
        prop_assert!((a - b).abs() <= 1e-13 * b.max(1e-30));
    }

    /// Relay output is always one of {+M, -M} away from the origin.
    #[test]
    fn relay_two_levels(m in 0.1f64..10.0, x in -50.0f64..50.0) {
        prop_assume!(x != 0.0);
        let nl = Nonlinearity::new(Kind::Relay { m }).unwrap();
        let y = nl.eval(x).unwrap();
        prop_assert!(y == m || y == -m);
    }

    /// Closed forms agree with quadrature at random amplitudes too.
    #[test]
    fn closed_form_spot_checks(m in 0.2f64..5.0, h_frac in 0.05f64..0.95, a in 1.0f64..50.0) {
        let h = h_frac * a;
        let nl = Nonlinearity::new(Kind::RelayHysteresis { m, h }).unwrap();
        let closed = df::closed_form(&nl, a).unwrap().unwrap();
        let numeric = df::numeric(&nl, a, 0.0, 1024).unwrap().n;
        prop_assert!((closed - numeric).norm() <= 1e-9 * closed.norm());
    }
}
