//! Describing functions: closed forms, quadrature, sweeps, and Taylor
//! approximations.
//!
//! The describing function N(A) maps a sinusoid of amplitude A at the input
//! of a memoryless nonlinearity to the fundamental-frequency phasor of its
//! output, N(A) = (a1 + j*b1)/A with
//!
//!   a1 = (1/pi) ∫ f(B + A sin θ) sin θ dθ,
//!   b1 = (1/pi) ∫ f(B + A sin θ) cos θ dθ,
//!
//! over one period, plus the DC coefficient a0 = mean(f). A lagging
//! nonlinearity (the hysteretic relay) therefore gets Im N < 0. The phase
//! variable θ is dimensionless: the result does not depend on which
//! oscillation frequency the sinusoid is imagined to have.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::nonlin::{Kind, Nonlinearity, Polarity};

/// Default quadrature resolution. Trapezoid on a periodic grid converges
/// spectrally for smooth nonlinearities; discontinuous ones want more
/// samples (or, for the hysteretic relay, the event-located path below).
pub const DEFAULT_SAMPLES: usize = 1024;

/// One bias-aware describing-function sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfSample {
    /// Input amplitude A (> 0).
    pub amplitude: f64,
    /// DC input offset B.
    pub bias: f64,
    /// DC output coefficient a0.
    pub dc: f64,
    /// Complex describing-function value (a1 + j*b1)/A.
    pub n: Complex64,
}

/// A sampled DF curve over strictly increasing amplitudes.
#[derive(Debug, Clone)]
pub struct DfCurve {
    pub samples: Vec<DfSample>,
    pub nonlinearity: Nonlinearity,
}

/// Closed-form describing function where one exists.
///
/// Returns `Ok(None)` for kinds without a closed form (the tanh family,
/// Hill, polynomial, tabulated); errors when `a` sits below the formula's
/// validity threshold.
pub fn closed_form(nl: &Nonlinearity, a: f64) -> Result<Option<Complex64>> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Domain(format!("amplitude must be > 0, got {a}")));
    }
    let g = nl.output_gain();
    let value = match nl.kind() {
        Kind::Saturation { k, a: sat } => {
            if a < *sat {
                return Err(Error::Domain(format!(
                    "saturation closed form needs A >= a = {sat}, got A = {a}"
                )));
            }
            let r = sat / a;
            Complex64::new(2.0 * k / PI * (r.asin() + r * (1.0 - r * r).sqrt()), 0.0)
        }
        Kind::Relay { m } => Complex64::new(4.0 * m / (PI * a), 0.0),
        Kind::DeadZone { k, delta } => {
            if a < *delta {
                return Err(Error::Domain(format!(
                    "dead-zone closed form needs A >= delta = {delta}, got A = {a}"
                )));
            }
            let r = delta / a;
            Complex64::new(
                2.0 * k / PI * (PI / 2.0 - r.asin() - r * (1.0 - r * r).sqrt()),
                0.0,
            )
        }
        Kind::RelayHysteresis { m, h } => {
            if a < *h {
                return Err(Error::Domain(format!(
                    "hysteresis closed form needs A >= h = {h}, got A = {a}"
                )));
            }
            let r = h / a;
            Complex64::new(
                4.0 * m / (PI * a) * (1.0 - r * r).sqrt(),
                -4.0 * m * h / (PI * a * a),
            )
        }
        // Published neuron-model form; its cubic term carries no 1/3, so this
        // intentionally differs from the quadrature of `eval` for cubic_fn.
        Kind::CubicFn { .. } => Complex64::new(1.0 - 0.75 * a * a, 0.0),
        _ => return Ok(None),
    };
    Ok(Some(g * value))
}

fn validate_samples(n: usize) -> Result<()> {
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "n_samples must be a power of two >= 256, got {n}"
        )));
    }
    Ok(())
}

/// Sine table over θ_k = 2πk/n with exact quadrant symmetry, so that odd
/// integrands cancel pairwise instead of leaving sin(π) ≈ 1e-16 residue.
fn symmetric_sin_table(n: usize) -> Vec<f64> {
    let quarter = n / 4;
    let mut s = vec![0.0; n];
    for k in 0..=quarter {
        let v = (2.0 * PI * k as f64 / n as f64).sin();
        s[k] = v;
        s[n / 2 - k] = v;
        if k > 0 {
            s[n / 2 + k] = -v;
            s[n - k] = -v;
        }
    }
    s[n / 2] = 0.0;
    s
}

/// Numerical describing function with DC offset, by trapezoid quadrature on a
/// uniform θ grid.
///
/// For the hysteretic relay the grid is marched in θ with the switching
/// state, one warm-up cycle is discarded, and each switching angle is located
/// by bisection so the piecewise-constant output integrates exactly.
pub fn numeric(nl: &Nonlinearity, a: f64, bias: f64, n_samples: usize) -> Result<DfSample> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Domain(format!("amplitude must be > 0, got {a}")));
    }
    validate_samples(n_samples)?;
    if nl.is_hysteretic() {
        return numeric_hysteretic(nl, a, bias, n_samples);
    }
    let n = n_samples;
    let sin = symmetric_sin_table(n);
    // cos(θ_k) = sin(θ_{k + n/4})
    let cos_at = |k: usize| sin[(k + n / 4) % n];
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    let mut sum_b = 0.0;
    for k in 0..n {
        let y = nl.eval(bias + a * sin[k])?;
        sum0 += y;
        sum1 += y * sin[k];
        sum_b += y * cos_at(k);
    }
    let inv = 1.0 / n as f64;
    let a0 = sum0 * inv;
    let a1 = 2.0 * sum1 * inv;
    let b1 = 2.0 * sum_b * inv;
    Ok(DfSample { amplitude: a, bias, dc: a0, n: Complex64::new(a1, b1) / a })
}

fn numeric_hysteretic(nl: &Nonlinearity, a: f64, bias: f64, n_samples: usize) -> Result<DfSample> {
    let (m, h) = match nl.kind() {
        Kind::RelayHysteresis { m, h } => (*m, *h),
        _ => unreachable!(),
    };
    let g = nl.output_gain();
    let x = |theta: f64| bias + a * theta.sin();
    let mut state = nl.initial_polarity(x(0.0));
    let level = |s: Polarity| if s == Polarity::High { g * m } else { -g * m };

    let dtheta = 2.0 * PI / n_samples as f64;
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    let mut b1 = 0.0;
    let mut seg_start = 0.0;
    let mut accumulate = |start: f64, end: f64, y: f64| {
        // keep only the second cycle [2π, 4π)
        let s = start.max(2.0 * PI);
        let e = end.min(4.0 * PI);
        if e > s {
            a1 += y * (s.cos() - e.cos()) / PI;
            b1 += y * (e.sin() - s.sin()) / PI;
            a0 += y * (e - s) / (2.0 * PI);
        }
    };
    for k in 0..2 * n_samples {
        let t0 = k as f64 * dtheta;
        let t1 = t0 + dtheta;
        let next = {
            let v = x(t1);
            if v >= h {
                Polarity::High
            } else if v <= -h {
                Polarity::Low
            } else {
                state
            }
        };
        if next != state {
            // bisect the switching angle inside the cell
            let rising = next == Polarity::High;
            let thr = if rising { h } else { -h };
            let crossed = |t: f64| {
                if rising {
                    x(t) >= thr
                } else {
                    x(t) <= thr
                }
            };
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if crossed(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            accumulate(seg_start, hi, level(state));
            seg_start = hi;
            state = next;
        }
    }
    accumulate(seg_start, 4.0 * PI, level(state));
    Ok(DfSample { amplitude: a, bias, dc: a0, n: Complex64::new(a1, b1) / a })
}

/// Sweep a geometric amplitude grid, preferring closed forms at zero bias.
pub fn curve(
    nl: &Nonlinearity,
    a_min: f64,
    a_max: f64,
    n_points: usize,
    bias: f64,
    n_samples: usize,
) -> Result<DfCurve> {
    if !(a_min.is_finite() && a_max.is_finite() && 0.0 < a_min && a_min < a_max) {
        return Err(Error::Config(format!(
            "amplitude range must satisfy 0 < a_min < a_max, got [{a_min}, {a_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::Config(format!("n_points must be >= 2, got {n_points}")));
    }
    let ratio = a_max / a_min;
    let mut samples = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let a = a_min * ratio.powf(i as f64 / (n_points - 1) as f64);
        let sample = if bias == 0.0 {
            match closed_form(nl, a)? {
                Some(n) => {
                    // odd and hysteretic kinds have zero mean at zero bias;
                    // the cubic form carries its constant through.
                    let dc = match nl.kind() {
                        Kind::CubicFn { i_ext } => nl.output_gain() * i_ext,
                        _ => 0.0,
                    };
                    DfSample { amplitude: a, bias, dc, n }
                }
                None => numeric(nl, a, bias, n_samples)?,
            }
        } else {
            numeric(nl, a, bias, n_samples)?
        };
        samples.push(sample);
    }
    Ok(DfCurve { samples, nonlinearity: nl.clone() })
}

/// Critical locus σ/N(A) pointwise along a curve.
pub fn critical_locus(curve: &DfCurve, sign: f64) -> Result<Vec<(f64, Complex64)>> {
    curve
        .samples
        .iter()
        .map(|s| {
            if s.n.norm() == 0.0 {
                Err(Error::Domain(format!(
                    "describing function vanishes at A = {}; critical locus singular",
                    s.amplitude
                )))
            } else {
                Ok((s.amplitude, sign / s.n))
            }
        })
        .collect()
}

/// Truncated-series describing function for the tanh family.
#[derive(Debug, Clone, Copy)]
pub struct TaylorDf {
    pub value: f64,
    /// Set when the truncated series is a poor approximation at this
    /// amplitude (successive term ratio above 0.3).
    pub inaccurate: bool,
}

/// Taylor order for [`taylor`] and [`taylor_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaylorOrder {
    Two,
    Four,
}

/// Series coefficients (c0, c2, c4) of N(A) ≈ c0 + c2 A² + c4 A⁴ for the
/// tanh family, from tanh(u) = u - u³/3 + 2u⁵/15 and the sine-power moments.
fn taylor_coeffs(nl: &Nonlinearity) -> Result<(f64, f64, f64)> {
    let g = nl.output_gain();
    let (c0, c2, c4) = match nl.kind() {
        Kind::TanhResistor { v_max, r_max } => (
            -r_max,
            r_max.powi(3) / (4.0 * v_max * v_max),
            -r_max.powi(5) / (12.0 * v_max.powi(4)),
        ),
        Kind::TanhInverter { amp, k } => {
            (-amp * k, amp * k.powi(3) / 4.0, -amp * k.powi(5) / 12.0)
        }
        Kind::TanhRelaxation { k1, k2, k3 } => (
            -k1 + k2 * k3,
            -k2 * k3.powi(3) / 4.0,
            k2 * k3.powi(5) / 12.0,
        ),
        other => {
            return Err(Error::Domain(format!(
                "Taylor describing function only covers the tanh family, not `{:?}`",
                other
            )))
        }
    };
    Ok((g * c0, g * c2, g * c4))
}

/// Evaluate the truncated tanh-series describing function at amplitude `a`.
pub fn taylor(nl: &Nonlinearity, a: f64, order: TaylorOrder) -> Result<TaylorDf> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::Domain(format!("amplitude must be >= 0, got {a}")));
    }
    let (c0, c2, c4) = taylor_coeffs(nl)?;
    let u = a * a;
    let t2 = c2 * u;
    let value = match order {
        TaylorOrder::Two => c0 + t2,
        TaylorOrder::Four => c0 + t2 + c4 * u * u,
    };
    let mut ratio = (t2 / c0).abs();
    if order == TaylorOrder::Four && t2 != 0.0 {
        ratio = ratio.max((c4 * u * u / t2).abs());
    }
    Ok(TaylorDf { value, inaccurate: ratio > 0.3 })
}

/// Amplitude estimate from the truncated series.
#[derive(Debug, Clone, Copy)]
pub struct TaylorAmplitude {
    pub amplitude: f64,
    /// True when the amplitude is an exact root of the truncated series
    /// equation; false when the series never reaches the target and the
    /// returned amplitude is the edge of the expansion's validity instead
    /// (where the first correction term equals the leading term).
    pub exact_root: bool,
    pub inaccurate: bool,
}

/// Solve the truncated series N(A) = `target` for A.
///
/// The quartic truncation is quadratic in A²; the smallest positive real
/// root is returned. A saturating nonlinearity driven past its series radius
/// may admit no real root at all; the estimate then degrades to the series
/// breakdown amplitude sqrt(|c0/c2|) with `exact_root = false`.
pub fn taylor_amplitude(nl: &Nonlinearity, order: TaylorOrder, target: f64) -> Result<TaylorAmplitude> {
    let (c0, c2, c4) = taylor_coeffs(nl)?;
    if c2 == 0.0 {
        return Err(Error::Numerical("degenerate series: zero quadratic coefficient".into()));
    }
    let mut roots: Vec<f64> = Vec::new();
    match order {
        TaylorOrder::Two => {
            let u = (target - c0) / c2;
            if u > 0.0 {
                roots.push(u.sqrt());
            }
        }
        TaylorOrder::Four => {
            if c4 == 0.0 {
                let u = (target - c0) / c2;
                if u > 0.0 {
                    roots.push(u.sqrt());
                }
            } else {
                // c4 u^2 + c2 u + (c0 - target) = 0
                let disc = c2 * c2 - 4.0 * c4 * (c0 - target);
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    for u in [(-c2 - sq) / (2.0 * c4), (-c2 + sq) / (2.0 * c4)] {
                        if u > 0.0 {
                            roots.push(u.sqrt());
                        }
                    }
                }
            }
        }
    }
    if let Some(&a) = roots.iter().min_by(|x, y| x.partial_cmp(y).unwrap()) {
        let inaccurate = taylor(nl, a, order)?.inaccurate;
        return Ok(TaylorAmplitude { amplitude: a, exact_root: true, inaccurate });
    }
    let a_break = (c0 / c2).abs().sqrt();
    Ok(TaylorAmplitude { amplitude: a_break, exact_root: false, inaccurate: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlin::Kind;
    use approx::assert_relative_eq;

    fn nl(kind: Kind) -> Nonlinearity {
        Nonlinearity::new(kind).unwrap()
    }

    #[test]
    fn relay_closed_form_matches_table() {
        let n = closed_form(&nl(Kind::Relay { m: 1.0 }), 2.0).unwrap().unwrap();
        assert_relative_eq!(n.re, 4.0 / (PI * 2.0), max_relative = 1e-15);
        assert_eq!(n.im, 0.0);
    }

    #[test]
    fn saturation_boundary_gives_linear_gain() {
        let n = closed_form(&nl(Kind::Saturation { k: 3.0, a: 1.0 }), 1.0).unwrap().unwrap();
        assert_relative_eq!(n.re, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn saturation_below_threshold_is_a_domain_error() {
        let err = closed_form(&nl(Kind::Saturation { k: 3.0, a: 1.0 }), 0.5).unwrap_err();
        assert!(err.to_string().contains("A >= a = 1"));
    }

    #[test]
    fn hysteresis_boundary_is_purely_imaginary() {
        let n = closed_form(&nl(Kind::RelayHysteresis { m: 1.0, h: 1.0 }), 1.0).unwrap().unwrap();
        assert_eq!(n.re, 0.0);
        assert_relative_eq!(n.im, -4.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn cubic_published_form() {
        let n = closed_form(&nl(Kind::CubicFn { i_ext: 0.5 }), 2.0).unwrap().unwrap();
        assert_relative_eq!(n.re, -2.0, max_relative = 1e-15);
    }

    #[test]
    fn numeric_relay_matches_closed_form() {
        let r = nl(Kind::Relay { m: 1.0 });
        let s = numeric(&r, 2.0, 0.0, 4096).unwrap();
        let exact = 2.0 / PI;
        assert!((s.n.re - exact).abs() <= 1e-6 * exact);
        assert!(s.n.im.abs() <= 1e-12);
        assert!(s.dc.abs() <= 1e-12);
    }

    #[test]
    fn numeric_small_signal_slope_of_tanh_inverter() {
        let t = nl(Kind::TanhInverter { amp: 1.0, k: 3.0 });
        let s = numeric(&t, 1e-6, 0.0, 1024).unwrap();
        assert_relative_eq!(s.n.re, -3.0, max_relative = 1e-9);
    }

    #[test]
    fn numeric_hysteresis_matches_closed_form_tightly() {
        let h = nl(Kind::RelayHysteresis { m: 1.0, h: 0.5 });
        for &a in &[0.6, 1.0, 2.0, 10.0, 50.0] {
            let s = numeric(&h, a, 0.0, 1024).unwrap();
            let exact = closed_form(&h, a).unwrap().unwrap();
            assert!((s.n - exact).norm() <= 1e-12 * exact.norm(), "A = {a}");
            assert!(s.dc.abs() <= 1e-12);
        }
    }

    #[test]
    fn hysteresis_lag_sign() {
        let h = nl(Kind::RelayHysteresis { m: 2.0, h: 0.5 });
        let s = numeric(&h, 3.0, 0.0, 1024).unwrap();
        assert!(s.n.im < 0.0);
        assert_relative_eq!(s.n.im, -4.0 * 2.0 * 0.5 / (PI * 9.0), max_relative = 1e-10);
    }

    #[test]
    fn curve_is_geometric_and_decreasing_for_relay() {
        let c = curve(&nl(Kind::Relay { m: 1.0 }), 0.1, 10.0, 5, 0.0, 1024).unwrap();
        assert_eq!(c.samples.len(), 5);
        for w in c.samples.windows(2) {
            assert!(w[0].amplitude < w[1].amplitude);
            assert!(w[1].n.re < w[0].n.re);
        }
        let ratio0 = c.samples[1].amplitude / c.samples[0].amplitude;
        let ratio1 = c.samples[2].amplitude / c.samples[1].amplitude;
        assert_relative_eq!(ratio0, ratio1, max_relative = 1e-12);
    }

    #[test]
    fn saturation_curve_decays_toward_zero() {
        let c = curve(&nl(Kind::Saturation { k: 1.0, a: 1.0 }), 1.0, 100.0, 10, 0.0, 1024).unwrap();
        assert_relative_eq!(c.samples[0].n.re, 1.0, max_relative = 1e-12);
        assert!(c.samples.last().unwrap().n.re < 0.03);
    }

    #[test]
    fn tanh_inverter_curve_crosses_minus_two_near_half() {
        // 1/N(A) = -0.5 at A ≈ 0.51
        let t = nl(Kind::TanhInverter { amp: 1.0, k: 3.0 });
        let c = curve(&t, 0.3, 0.8, 33, 0.0, 4096).unwrap();
        let mut crossing = None;
        for w in c.samples.windows(2) {
            let (f0, f1) = (w[0].n.re + 2.0, w[1].n.re + 2.0);
            if f0 * f1 <= 0.0 {
                let t_ = f0 / (f0 - f1);
                crossing = Some(w[0].amplitude + t_ * (w[1].amplitude - w[0].amplitude));
            }
        }
        let a = crossing.expect("no crossing of N = -2 found");
        assert!((a - 0.51).abs() < 0.02, "A = {a}");
    }

    #[test]
    fn critical_locus_of_inverting_relay_is_negative_real_axis() {
        let inv = Nonlinearity::with_gain(Kind::Relay { m: 1.0 }, -1.0).unwrap();
        let c = curve(&inv, 0.1, 10.0, 7, 0.0, 1024).unwrap();
        let locus = critical_locus(&c, 1.0).unwrap();
        for (a, p) in locus {
            assert_relative_eq!(p.re, -PI * a / 4.0, max_relative = 1e-12);
            assert_eq!(p.im, 0.0);
        }
    }

    #[test]
    fn critical_locus_of_hysteresis_is_a_horizontal_line() {
        let h = nl(Kind::RelayHysteresis { m: 2.0, h: 0.5 });
        let c = curve(&h, 0.6, 20.0, 9, 0.0, 1024).unwrap();
        let locus = critical_locus(&c, 1.0).unwrap();
        let expect = PI * 0.5 / (4.0 * 2.0);
        for (a, p) in &locus {
            assert_relative_eq!(p.im, expect, max_relative = 1e-9);
            // brute-force inversion cross-check at this sample
            let n = closed_form(&h, *a).unwrap().unwrap();
            let inv = Complex64::new(1.0, 0.0) / n;
            assert_relative_eq!(p.re, inv.re, max_relative = 1e-12);
        }
    }

    #[test]
    fn taylor_leading_terms() {
        let r = nl(Kind::TanhResistor { v_max: 1.0, r_max: 2.0 });
        let t = taylor(&r, 1e-9, TaylorOrder::Four).unwrap();
        assert_relative_eq!(t.value, -2.0, max_relative = 1e-12);
        assert!(!t.inaccurate);

        let x = nl(Kind::TanhRelaxation { k1: 2.0, k2: 6.25, k3: 0.4 });
        let t = taylor(&x, 1e-9, TaylorOrder::Two).unwrap();
        assert_relative_eq!(t.value, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn taylor_amplitude_relaxation_root() {
        // series root of N(A) = 1/4 with the /4 and /12 coefficients
        let x = nl(Kind::TanhRelaxation { k1: 2.0, k2: 6.25, k3: 0.4 });
        let sol = taylor_amplitude(&x, TaylorOrder::Four, 0.25).unwrap();
        assert!(sol.exact_root);
        assert_relative_eq!(sol.amplitude, 1.723559, max_relative = 1e-5);
    }

    #[test]
    fn taylor_amplitude_inverter_breakdown_is_two_thirds() {
        // the saturated inverter's truncated series never reaches -2;
        // the validity-edge estimate is 2/k
        let t = nl(Kind::TanhInverter { amp: 1.0, k: 3.0 });
        let sol = taylor_amplitude(&t, TaylorOrder::Four, -2.0).unwrap();
        assert!(!sol.exact_root);
        assert!(sol.inaccurate);
        assert_relative_eq!(sol.amplitude, 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn taylor_rejects_non_tanh_kinds() {
        assert!(taylor(&nl(Kind::Relay { m: 1.0 }), 1.0, TaylorOrder::Two).is_err());
    }

    #[test]
    fn hill_numeric_agrees_with_refined_quadrature() {
        let h = nl(Kind::Hill { alpha: 300.0, alpha0: 0.03, n: 2.0 });
        let coarse = numeric(&h, 40.0, 40.0, 1024).unwrap();
        let oracle = numeric(&h, 40.0, 40.0, 1 << 20).unwrap();
        assert!((coarse.dc - oracle.dc).abs() <= 1e-6 * oracle.dc.abs());
        assert!((coarse.n - oracle.n).norm() <= 1e-6 * oracle.n.norm());
        // frozen oracle values
        assert_relative_eq!(oracle.dc, 23.8939102, max_relative = 1e-7);
        assert_relative_eq!(oracle.n.re, -1.1637362, max_relative = 1e-7);
    }
}
