//! Rational transfer functions with an optional period-fraction delay, plus
//! frequency-domain sampling and characteristic-frequency finders.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// G(s) = num(s)/den(s) times a delay of `rho` oscillation periods.
///
/// The delay is a fraction of the (unknown) oscillation period, so at the
/// fundamental it is the fixed phasor e^{-j2πρ} regardless of what the
/// period turns out to be. [`response`](Self::response) flips the delay
/// phase with the sign of ω so sampled spectra keep conjugate symmetry;
/// [`loop_response`](Self::loop_response) applies the fixed phasor on the
/// signed axis, which is the form the harmonic-balance loop equation uses.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBlock {
    num: Vec<f64>,
    den: Vec<f64>,
    rho: f64,
}

fn poly_eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn poly_scale(coeffs: &[f64], omega: f64) -> f64 {
    let mut scale = 0.0;
    let mut pw = 1.0;
    for &c in coeffs {
        scale += c.abs() * pw;
        pw *= omega.abs().max(1e-300);
    }
    scale
}

impl LinearBlock {
    pub fn new(num: Vec<f64>, den: Vec<f64>, rho: f64) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::Config("num and den must be nonempty coefficient lists".into()));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::Config("transfer-function coefficients must be finite".into()));
        }
        if den.iter().all(|&c| c == 0.0) {
            return Err(Error::Config("denominator is identically zero".into()));
        }
        if *den.last().unwrap() == 0.0 {
            return Err(Error::Config("leading denominator coefficient must be nonzero".into()));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::Config(format!("rho must be finite and >= 0, got {rho}")));
        }
        Ok(Self { num, den, rho: rho.rem_euclid(1.0) })
    }

    /// Pure rational part without any delay.
    pub fn rational(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        Self::new(num, den, 0.0)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Numerator scaled by `c` (used by gain-covariance checks).
    pub fn scaled(&self, c: f64) -> Self {
        let num = self.num.iter().map(|&v| c * v).collect();
        Self { num, den: self.den.clone(), rho: self.rho }
    }

    fn rational_at(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let d = poly_eval(&self.den, s);
        if d.norm() <= 1e-14 * poly_scale(&self.den, omega) {
            return Err(Error::Singularity { omega });
        }
        Ok(poly_eval(&self.num, s) / d)
    }

    /// Frequency response with conjugate symmetry: the delay phase flips
    /// sign with ω so that G(-jω) = conj G(jω).
    pub fn response(&self, omega: f64) -> Result<Complex64> {
        let r = self.rational_at(omega)?;
        let phase = -2.0 * PI * self.rho * omega.signum();
        let phase = if omega == 0.0 { 0.0 } else { phase };
        Ok(r * Complex64::from_polar(1.0, phase))
    }

    /// Loop-equation response: rational part times the fixed fundamental
    /// phasor e^{-j2πρ}, evaluated on the signed ω axis.
    pub fn loop_response(&self, omega: f64) -> Result<Complex64> {
        let r = self.rational_at(omega)?;
        Ok(r * Complex64::from_polar(1.0, -2.0 * PI * self.rho))
    }

    /// DC gain num(0)/den(0); errors when s = 0 is a pole.
    pub fn dc_gain(&self) -> Result<f64> {
        let g = self.rational_at(0.0)?;
        Ok(g.re)
    }
}

/// Strictly increasing ω sample points.
#[derive(Debug, Clone)]
pub struct FrequencyGrid(Vec<f64>);

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() || omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("frequency grid must be nonempty and finite".into()));
        }
        if omegas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("frequency grid must be strictly increasing".into()));
        }
        Ok(Self(omegas))
    }

    /// Logarithmic grid over [lo, hi].
    pub fn log(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) || n < 2 {
            return Err(Error::Config(format!(
                "log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}] n = {n}"
            )));
        }
        let ratio = hi / lo;
        let pts = (0..n)
            .map(|i| lo * ratio.powf(i as f64 / (n - 1) as f64))
            .collect();
        Ok(Self(pts))
    }

    /// Same grid mirrored to negative frequencies: -hi..-lo, lo..hi.
    pub fn sign_symmetric(&self) -> Self {
        let mut pts: Vec<f64> = self.0.iter().rev().map(|w| -w).collect();
        pts.extend(self.0.iter().copied());
        Self(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }
}

/// Pointwise Nyquist samples (ω, G(jω)).
pub fn nyquist(g: &LinearBlock, grid: &FrequencyGrid) -> Result<Vec<(f64, Complex64)>> {
    grid.points()
        .iter()
        .map(|&w| Ok((w, g.response(w)?)))
        .collect()
}

/// Bode samples (ω, |G| in dB, phase in degrees, unwrapped along the grid).
pub fn bode(g: &LinearBlock, grid: &FrequencyGrid) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(grid.points().len());
    let mut prev_phase: Option<f64> = None;
    for &w in grid.points() {
        let r = g.response(w)?;
        let mag_db = 20.0 * r.norm().log10();
        let mut phase = r.arg().to_degrees();
        if let Some(p) = prev_phase {
            while phase - p > 180.0 {
                phase -= 360.0;
            }
            while phase - p < -180.0 {
                phase += 360.0;
            }
        }
        prev_phase = Some(phase);
        out.push((w, mag_db, phase));
    }
    Ok(out)
}

/// A real-axis crossing of a frequency response.
#[derive(Debug, Clone, Copy)]
pub struct RealAxisCrossing {
    pub omega: f64,
    pub value: Complex64,
}

/// Find all ω in `[lo, hi]` where Im f(ω) changes sign, refined by bisection
/// to |Im| <= 1e-10 |f|. Shared by the public crossing finder and the loop
/// solver (which scans the signed axis).
pub(crate) fn im_zero_crossings<F>(f: F, lo: f64, hi: f64, n_grid: usize) -> Result<Vec<RealAxisCrossing>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::Config(format!("bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let ratio = hi / lo;
    let mut crossings = Vec::new();
    let mut prev: Option<(f64, Complex64)> = None;
    for i in 0..n_grid {
        let w = lo * ratio.powf(i as f64 / (n_grid - 1) as f64);
        let v = match f(w) {
            Ok(v) => v,
            Err(Error::Singularity { .. }) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some((w0, v0)) = prev {
            if v0.im == 0.0 {
                crossings.push(RealAxisCrossing { omega: w0, value: v0 });
            } else if v0.im * v.im < 0.0 {
                let (mut a, mut b) = (w0, w);
                let mut sign_a = v0.im.signum();
                let mut val = v;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let vm = f(mid)?;
                    val = vm;
                    if vm.im.abs() <= 1e-10 * vm.norm() {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if vm.im.signum() == sign_a {
                        a = mid;
                        sign_a = vm.im.signum();
                    } else {
                        b = mid;
                    }
                }
                crossings.push(RealAxisCrossing { omega: 0.5 * (a + b), value: val });
            }
        }
        prev = Some((w, v));
    }
    // trailing exact zero
    if let Some((w0, v0)) = prev {
        if v0.im == 0.0 {
            crossings.push(RealAxisCrossing { omega: w0, value: v0 });
        }
    }
    crossings.dedup_by(|a, b| ((a.omega - b.omega) / b.omega).abs() < 1e-9);
    Ok(crossings)
}

/// All positive ω in the bracket where Im G(jω) = 0, with G's value there.
pub fn real_axis_crossings(g: &LinearBlock, lo: f64, hi: f64) -> Result<Vec<RealAxisCrossing>> {
    im_zero_crossings(|w| g.response(w), lo, hi, 2048)
}

/// Result of a magnitude maximization.
#[derive(Debug, Clone, Copy)]
pub struct MagnitudePeak {
    pub omega: f64,
    pub magnitude: f64,
    /// False when the maximum sits on the bracket edge (monotone |G|).
    pub interior: bool,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_deriv(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    a.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect()
}

fn poly_eval_real(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// |p(jω)|² as a polynomial in u = ω²: split p into even and odd parts,
/// |p|² = E(u)² + u·O(u)².
fn mag_sq_poly(coeffs: &[f64]) -> Vec<f64> {
    let even: Vec<f64> = coeffs
        .iter()
        .step_by(2)
        .enumerate()
        .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
        .collect();
    let odd: Vec<f64> = coeffs
        .iter()
        .skip(1)
        .step_by(2)
        .enumerate()
        .map(|(k, &c)| if k % 2 == 0 { c } else { -c })
        .collect();
    let mut out = poly_mul(&even, &even);
    if !odd.is_empty() {
        let o2 = poly_mul(&odd, &odd);
        if out.len() < o2.len() + 1 {
            out.resize(o2.len() + 1, 0.0);
        }
        for (i, &c) in o2.iter().enumerate() {
            out[i + 1] += c;
        }
    }
    out
}

/// Locate max |G(jω)| on `[lo, hi]`: coarse log scan for the bracket, then
/// the stationarity condition of the rational |G|² in u = ω² refined by
/// bisection (exact polynomial arithmetic, so flat maxima localize far
/// below what value comparison alone could resolve).
pub fn magnitude_peak(g: &LinearBlock, lo: f64, hi: f64) -> Result<MagnitudePeak> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::Config(format!("bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let mag = |w: f64| -> f64 {
        match g.response(w) {
            Ok(v) => v.norm(),
            Err(_) => f64::INFINITY, // a pole is a magnitude peak
        }
    };
    let n = 512usize;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let w_at = |i: usize| (llo + (lhi - llo) * i as f64 / n as f64).exp();
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let m = mag(w_at(i));
        if m > best {
            best = m;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == n {
        let w = w_at(best_i);
        return Ok(MagnitudePeak { omega: w, magnitude: mag(w), interior: false });
    }
    // d/du [Pn(u)/Pd(u)] = 0  <=>  Pn' Pd - Pn Pd' = 0
    let pn = mag_sq_poly(&g.num);
    let pd = mag_sq_poly(&g.den);
    let r1 = poly_mul(&poly_deriv(&pn), &pd);
    let r2 = poly_mul(&pn, &poly_deriv(&pd));
    let stationarity = |u: f64| poly_eval_real(&r1, u) - poly_eval_real(&r2, u);
    let (mut ua, mut ub) = (w_at(best_i - 1).powi(2), w_at(best_i + 1).powi(2));
    let (fa, fb) = (stationarity(ua), stationarity(ub));
    if fa > 0.0 && fb < 0.0 {
        let mut f_lo = fa;
        for _ in 0..200 {
            let um = 0.5 * (ua + ub);
            let fm = stationarity(um);
            if fm == 0.0 || (ub - ua) / um < 1e-14 {
                ua = um;
                ub = um;
                break;
            }
            if fm.signum() == f_lo.signum() {
                ua = um;
                f_lo = fm;
            } else {
                ub = um;
            }
        }
        let w = (0.5 * (ua + ub)).sqrt();
        return Ok(MagnitudePeak { omega: w, magnitude: mag(w), interior: true });
    }
    let w = w_at(best_i);
    Ok(MagnitudePeak { omega: w, magnitude: mag(w), interior: true })
}

/// Number of open right-half-plane roots of a real polynomial (ascending
/// coefficients), by the Routh array. Errors on the degenerate cases
/// (zero first-column entry or vanishing row), which signal imaginary-axis
/// roots.
pub fn routh_rhp_count(den: &[f64]) -> Result<usize> {
    let mut coeffs: Vec<f64> = den.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs.len() <= 1 {
        return Ok(0);
    }
    let deg = coeffs.len() - 1;
    // rows indexed from s^deg downward; descending coefficient order
    let desc: Vec<f64> = coeffs.iter().rev().copied().collect();
    let cols = deg / 2 + 1;
    let mut row0: Vec<f64> = (0..cols).map(|i| *desc.get(2 * i).unwrap_or(&0.0)).collect();
    let mut row1: Vec<f64> = (0..cols).map(|i| *desc.get(2 * i + 1).unwrap_or(&0.0)).collect();
    let scale = desc.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-12 * scale;
    let mut first_col = vec![row0[0]];
    for _ in 0..deg {
        if row1.iter().all(|&v| v.abs() <= eps) {
            return Err(Error::Numerical("Routh array: vanishing row (imaginary-axis roots)".into()));
        }
        if row1[0].abs() <= eps {
            return Err(Error::Numerical("Routh array: zero pivot (marginal case)".into()));
        }
        first_col.push(row1[0]);
        let mut next = vec![0.0; cols];
        for i in 0..cols - 1 {
            next[i] = (row1[0] * row0[i + 1] - row0[0] * row1[i + 1]) / row1[0];
        }
        row0 = row1;
        row1 = next;
    }
    let mut sign_changes = 0;
    for w in first_col.windows(2) {
        if w[0].signum() != w[1].signum() {
            sign_changes += 1;
        }
    }
    Ok(sign_changes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lag(rc: f64) -> LinearBlock {
        LinearBlock::rational(vec![1.0], vec![1.0, rc]).unwrap()
    }

    /// G = 1/(tau_f s + 1/(tau_s s + 1)) = (tau_s s + 1)/(tau_f tau_s s^2 + tau_f s + 1)
    fn two_tau(tf: f64, ts: f64) -> LinearBlock {
        LinearBlock::rational(vec![1.0, ts], vec![1.0, tf, tf * ts]).unwrap()
    }

    #[test]
    fn first_order_lag_at_sqrt3() {
        let rc = 2.0;
        let g = lag(rc);
        let v = g.response(3f64.sqrt() / rc).unwrap();
        assert_relative_eq!(v.norm(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(v.arg().to_degrees(), -60.0, max_relative = 1e-12);
    }

    #[test]
    fn dc_response_is_real_even_with_delay() {
        let g = LinearBlock::new(vec![2.0], vec![1.0, 3.0], 0.37).unwrap();
        let v = g.response(0.0).unwrap();
        assert_eq!(v.im, 0.0);
        assert_relative_eq!(v.re, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn relaxation_block_real_crossing_value_is_tau_ratio() {
        let (tf, ts) = (2.5e-4, 1e-3);
        let g = two_tau(tf, ts);
        let w = (1.0 / ts) * ((ts - tf) / tf).sqrt();
        assert_relative_eq!(w, 1732.0508075688772, max_relative = 1e-12);
        let v = g.response(w).unwrap();
        assert!((v - Complex64::new(4.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn conjugate_symmetry_with_delay() {
        let g = LinearBlock::new(vec![0.0, 1.0], vec![1.0, 0.5, 0.2], 2.0 / 3.0).unwrap();
        for &w in &[0.1, 1.0, 17.3] {
            let p = g.response(w).unwrap();
            let m = g.response(-w).unwrap();
            assert_relative_eq!(p.re, m.re, max_relative = 1e-14);
            assert_relative_eq!(p.im, -m.im, max_relative = 1e-14);
        }
    }

    #[test]
    fn pure_half_period_delay_is_minus_one() {
        let g = LinearBlock::new(vec![1.0], vec![1.0], 0.5).unwrap();
        for &w in &[0.3, 2.0, 100.0] {
            let v = g.response(w).unwrap();
            assert_relative_eq!(v.re, -1.0, max_relative = 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn delay_has_unit_magnitude() {
        let with = LinearBlock::new(vec![0.0, 1.0], vec![1.0, 1.0, 0.25], 0.41).unwrap();
        let without = LinearBlock::new(vec![0.0, 1.0], vec![1.0, 1.0, 0.25], 0.0).unwrap();
        for &w in &[0.05, 0.7, 13.0] {
            assert_relative_eq!(
                with.response(w).unwrap().norm(),
                without.response(w).unwrap().norm(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn lower_half_circle_for_lag_nyquist() {
        let g = lag(1.0);
        let grid = FrequencyGrid::log(1e-2, 1e2, 64).unwrap();
        for (_, v) in nyquist(&g, &grid).unwrap() {
            assert!(v.im <= 0.0);
            // on the circle through (1,0) and (0,0): |v - 1/2| = 1/2
            assert_relative_eq!((v - Complex64::new(0.5, 0.0)).norm(), 0.5, max_relative = 1e-10);
        }
    }

    #[test]
    fn unity_block_bode_is_flat() {
        let g = LinearBlock::rational(vec![1.0], vec![1.0]).unwrap();
        let grid = FrequencyGrid::log(0.1, 10.0, 16).unwrap();
        for (_, mag, phase) in bode(&g, &grid).unwrap() {
            assert!(mag.abs() < 1e-12);
            assert!(phase.abs() < 1e-12);
        }
    }

    #[test]
    fn crossing_finder_matches_closed_form() {
        let (tf, ts) = (2.5e-4, 1e-3);
        let g = two_tau(tf, ts);
        let found = real_axis_crossings(&g, 1.0, 1e6).unwrap();
        assert_eq!(found.len(), 1);
        assert_relative_eq!(found[0].omega, 1732.0508075688772, max_relative = 1e-8);
        assert_relative_eq!(found[0].value.re, 4.0, max_relative = 1e-8);
    }

    #[test]
    fn fn_block_exact_b_crossing() {
        // feedback path 1/(tau s + b): G = (tau s + b)/(tau s^2 + b s + 1)
        let (tau, b) = (12.5, 0.8);
        let g = LinearBlock::rational(vec![b, tau], vec![1.0, b, tau]).unwrap();
        let found = real_axis_crossings(&g, 1e-3, 10.0).unwrap();
        assert_eq!(found.len(), 1);
        let w_exact = (tau - b * b).sqrt() / tau;
        assert_relative_eq!(found[0].omega, w_exact, max_relative = 1e-8);
        assert_relative_eq!(found[0].value.re, tau / b, max_relative = 1e-8);
        assert_relative_eq!(found[0].omega, 0.2755068, max_relative = 1e-6);
        assert_relative_eq!(found[0].value.re, 15.625, max_relative = 1e-8);
    }

    #[test]
    fn pure_lag_has_no_interior_crossing() {
        let found = real_axis_crossings(&lag(1.0), 1e-3, 1e3).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn magnitude_peak_matches_published_formula() {
        let (tf, ts) = (2.5e-4, 1e-3);
        let g = two_tau(tf, ts);
        let peak = magnitude_peak(&g, 1.0, 1e6).unwrap();
        let w2 = ((-tf + (ts * ts + 2.0 * tf * ts).sqrt()) / (tf * ts * ts)).sqrt();
        assert!(peak.interior);
        assert_relative_eq!(peak.omega, w2, max_relative = 1e-9);
    }

    #[test]
    fn undamped_tank_peaks_at_resonance() {
        let (tf, ts) = (2.5e-4, 1e-3);
        // tau_s s / (tau_f tau_s s^2 + 1)
        let g = LinearBlock::rational(vec![0.0, ts], vec![1.0, 0.0, tf * ts]).unwrap();
        let peak = magnitude_peak(&g, 10.0, 1e5).unwrap();
        assert!(peak.interior);
        assert_relative_eq!(peak.omega, 1.0 / (tf * ts).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn monotone_magnitude_flagged_non_interior() {
        let peak = magnitude_peak(&lag(1.0), 0.1, 100.0).unwrap();
        assert!(!peak.interior);
        assert_relative_eq!(peak.omega, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn routh_counts() {
        // (s+1)^3: stable
        assert_eq!(routh_rhp_count(&[1.0, 3.0, 3.0, 1.0]).unwrap(), 0);
        // (s-1)(s+2) = s^2 + s - 2: one RHP root
        assert_eq!(routh_rhp_count(&[-2.0, 1.0, 1.0]).unwrap(), 1);
        // s^2 + 1: imaginary-axis pair -> degenerate
        assert!(routh_rhp_count(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn omega_one_never_equals_omega_two() {
        // phase-zero crossing vs magnitude peak of the two-time-constant block
        for i in 0..6 {
            for j in 0..6 {
                let tf = 1e-5 * 10f64.powf(i as f64 / 3.0);
                let ts = tf * (2.0 + j as f64 * 20.0);
                let w1 = (1.0 / ts) * ((ts - tf) / tf).sqrt();
                let w2 = ((-tf + (ts * ts + 2.0 * tf * ts).sqrt()) / (tf * ts * ts)).sqrt();
                assert!(((w1 - w2) / w1).abs() > 1e-6, "tf={tf} ts={ts}");
            }
        }
    }

    #[test]
    fn singularity_reported_at_pole() {
        let (tf, ts) = (1e-4, 1e-3);
        let g = LinearBlock::rational(vec![0.0, ts], vec![1.0, 0.0, tf * ts]).unwrap();
        let w0 = 1.0 / (tf * ts).sqrt();
        assert!(matches!(g.response(w0), Err(Error::Singularity { .. })));
    }
}
