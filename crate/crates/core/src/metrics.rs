//! Steady-state waveform measurements: amplitude, offset, period, harmonic
//! content, and prediction-vs-simulation comparison.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::predict::PredictedOscillation;
use crate::sim::Trajectory;

/// Measurements over the late-time analysis window.
#[derive(Debug, Clone)]
pub struct WaveformMetrics {
    /// (max - min)/2 over the last five full periods.
    pub amplitude: f64,
    /// Mean over the same window.
    pub offset: f64,
    /// Mean spacing of rising zero crossings of the de-meaned signal.
    pub period: f64,
    /// Total harmonic distortion over the window, when computable.
    pub thd: Option<f64>,
    /// Analysis window [t_start, t_end].
    pub window: (f64, f64),
    /// False when the period dispersion exceeds 0.1% (not settled).
    pub steady: bool,
}

fn rising_crossings(times: &[f64], x: &[f64], mean: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i] - mean, x[i + 1] - mean);
        if a < 0.0 && b >= 0.0 {
            let t = times[i] + (times[i + 1] - times[i]) * a / (a - b);
            out.push(t);
        }
    }
    out
}

/// Measure the steady-state waveform of one node.
///
/// The analysis window is the last five full periods after discarding the
/// leading `settle_fraction` of the trajectory. Fewer than three rising
/// crossings is reported as no oscillation.
pub fn waveform_metrics(
    traj: &Trajectory,
    node: &str,
    settle_fraction: f64,
) -> Result<WaveformMetrics> {
    if !(0.0..1.0).contains(&settle_fraction) {
        return Err(Error::Config(format!(
            "settle_fraction must be in [0, 1), got {settle_fraction}"
        )));
    }
    let series = traj.node_series(node)?;
    let (t0, t1) = traj.span();
    let t_settle = t0 + settle_fraction * (t1 - t0);
    let start = traj.times.partition_point(|&t| t < t_settle);
    if traj.times.len() - start < 8 {
        return Err(Error::Config("trajectory too short after the settle window".into()));
    }
    let times = &traj.times[start..];
    let x = &series[start..];
    let mean: f64 = x.iter().sum::<f64>() / x.len() as f64;
    let crossings = rising_crossings(times, x, mean);
    if crossings.len() < 3 {
        return Err(Error::NoOscillation(format!(
            "{} rising crossings on node `{node}` after settle",
            crossings.len()
        )));
    }
    let spans: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let period = spans.iter().sum::<f64>() / spans.len() as f64;
    let var = spans.iter().map(|s| (s - period) * (s - period)).sum::<f64>() / spans.len() as f64;
    let steady = var.sqrt() / period < 1e-3;

    let t_end = *crossings.last().unwrap();
    let n_periods = 5.0f64.min(((t_end - times[0]) / period).floor());
    let t_start = t_end - n_periods * period;
    let lo = times.partition_point(|&t| t < t_start);
    let hi = times.partition_point(|&t| t <= t_end);
    let win = &x[lo..hi];
    if win.is_empty() {
        return Err(Error::Windowing("analysis window is empty".into()));
    }
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in win {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let thd = fourier_coeffs(traj, node, period, 20)
        .ok()
        .map(|c| thd_from_coeffs(&c));
    Ok(WaveformMetrics {
        amplitude: (max - min) / 2.0,
        offset: sum / win.len() as f64,
        period,
        thd,
        window: (t_start, t_end),
        steady,
    })
}

/// Complex harmonic coefficients c_1..c_k over the last integer-period
/// window (at least three periods), by trapezoid quadrature on the recorded
/// time grid.
pub fn fourier_coeffs(
    traj: &Trajectory,
    node: &str,
    period: f64,
    k_max: usize,
) -> Result<Vec<Complex64>> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::Windowing(format!("period must be > 0, got {period}")));
    }
    if k_max == 0 {
        return Err(Error::Windowing("k_max must be >= 1".into()));
    }
    let series = traj.node_series(node)?;
    let (t0, t1) = traj.span();
    let n_periods = ((t1 - t0) / period).floor();
    if n_periods < 3.0 {
        return Err(Error::Windowing(format!(
            "window holds {n_periods} full periods; need at least 3"
        )));
    }
    let n_periods = n_periods.min(5.0);
    let t_start = t1 - n_periods * period;
    let lo = traj.times.partition_point(|&t| t < t_start);
    let lo = lo.saturating_sub(1);
    let times = &traj.times[lo..];
    let x = &series[lo..];
    if times.len() < 16 {
        return Err(Error::Windowing("too few samples in the harmonic window".into()));
    }
    let span = n_periods * period;
    let w0 = 2.0 * PI / period;
    let mean = {
        // trapezoid mean over [t_start, t1]
        let mut acc = 0.0;
        for i in 0..times.len() - 1 {
            let (a, b) = (times[i].max(t_start), times[i + 1]);
            if b <= a {
                continue;
            }
            let xa = interp(times, x, a, i);
            acc += 0.5 * (xa + x[i + 1]) * (b - a);
        }
        acc / span
    };
    let mut coeffs = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..times.len() - 1 {
            let (a, b) = (times[i].max(t_start), times[i + 1]);
            if b <= a {
                continue;
            }
            let xa = interp(times, x, a, i) - mean;
            let xb = x[i + 1] - mean;
            let ea = Complex64::from_polar(1.0, -(k as f64) * w0 * (a - t_start));
            let eb = Complex64::from_polar(1.0, -(k as f64) * w0 * (b - t_start));
            acc += 0.5 * (xa * ea + xb * eb) * (b - a);
        }
        coeffs.push(acc * 2.0 / span);
    }
    Ok(coeffs)
}

fn interp(times: &[f64], x: &[f64], t: f64, i: usize) -> f64 {
    let (t0, t1) = (times[i], times[i + 1]);
    if t1 == t0 {
        return x[i];
    }
    x[i] + (x[i + 1] - x[i]) * (t - t0) / (t1 - t0)
}

/// THD = sqrt(sum |c_k|^2, k >= 2) / |c_1|.
pub fn thd_from_coeffs(coeffs: &[Complex64]) -> f64 {
    let fundamental = coeffs[0].norm();
    let harmonics: f64 = coeffs[1..].iter().map(|c| c.norm_sqr()).sum();
    harmonics.sqrt() / fundamental
}

/// One compared quantity.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub metric: String,
    pub predicted: f64,
    pub simulated: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

/// Relative prediction errors against per-case tolerances. Mismatches are
/// reported, never raised as errors.
pub fn compare(
    prediction: &PredictedOscillation,
    metrics: &WaveformMetrics,
    amplitude_tol: f64,
    period_tol: f64,
) -> ComparisonReport {
    let row = |metric: &str, predicted: f64, simulated: f64, tol: f64| {
        let rel_error = (predicted - simulated).abs() / simulated.abs().max(f64::MIN_POSITIVE);
        ComparisonRow { metric: metric.into(), predicted, simulated, rel_error, tolerance: tol, pass: rel_error <= tol }
    };
    ComparisonReport {
        rows: vec![
            row("amplitude", prediction.amplitude, metrics.amplitude, amplitude_tol),
            row("period", prediction.period(), metrics.period, period_tol),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::Stability;
    use approx::assert_relative_eq;

    fn synthetic(f: impl Fn(f64) -> f64, t_max: f64, dt: f64) -> Trajectory {
        let n = (t_max / dt) as usize;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![f(t)]).collect();
        Trajectory { times, states, node_names: vec!["x".into()] }
    }

    #[test]
    fn synthetic_sine_ground_truth() {
        let traj = synthetic(|t| 2.0 + 0.5 * (2.0 * PI * 10.0 * t).sin(), 2.0, 1e-3);
        let m = waveform_metrics(&traj, "x", 0.5).unwrap();
        assert_relative_eq!(m.amplitude, 0.5, max_relative = 1e-6);
        assert_relative_eq!(m.offset, 2.0, max_relative = 1e-6);
        assert_relative_eq!(m.period, 0.1, max_relative = 1e-6);
        assert!(m.steady);
    }

    #[test]
    fn decayed_signal_is_no_oscillation() {
        let traj = synthetic(|t| (-3.0 * t).exp(), 10.0, 1e-3);
        assert!(matches!(
            waveform_metrics(&traj, "x", 0.5),
            Err(Error::NoOscillation(_))
        ));
    }

    #[test]
    fn unknown_node_rejected() {
        let traj = synthetic(|t| t.sin(), 50.0, 0.01);
        assert!(waveform_metrics(&traj, "y", 0.5).is_err());
    }

    #[test]
    fn pure_sine_has_negligible_thd() {
        let traj = synthetic(|t| (2.0 * PI * 5.0 * t).sin(), 3.0, 1e-4);
        let c = fourier_coeffs(&traj, "x", 0.2, 20).unwrap();
        assert!(thd_from_coeffs(&c) < 1e-6);
        assert_relative_eq!(c[0].norm(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn square_wave_thd_matches_odd_harmonic_series() {
        let traj = synthetic(|t| if (2.0 * PI * 5.0 * t).sin() >= 0.0 { 1.0 } else { -1.0 }, 3.0, 1e-5);
        let c = fourier_coeffs(&traj, "x", 0.2, 49).unwrap();
        // analytic odd-harmonic series 1/k truncated at k = 49
        let expected: f64 = (3..=49)
            .step_by(2)
            .map(|k| 1.0 / (k as f64 * k as f64))
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(thd_from_coeffs(&c), expected, max_relative = 1e-3);
        assert_relative_eq!(expected, 0.4729713, max_relative = 1e-6);
    }

    #[test]
    fn window_must_hold_three_periods() {
        let traj = synthetic(|t| (2.0 * PI * t).sin(), 2.5, 1e-3);
        assert!(matches!(
            fourier_coeffs(&traj, "x", 1.0, 5),
            Err(Error::Windowing(_))
        ));
    }

    #[test]
    fn compare_reports_zero_error_on_identical_inputs() {
        let pred = PredictedOscillation {
            amplitude: 1.5,
            omega_signed: 2.0 * PI / 0.25,
            residual: 0.0,
            stability: Stability::Stable,
            bias: None,
        };
        let m = WaveformMetrics {
            amplitude: 1.5,
            offset: 0.0,
            period: 0.25,
            thd: None,
            window: (0.0, 1.0),
            steady: true,
        };
        let rep = compare(&pred, &m, 0.01, 0.01);
        assert!(rep.rows.iter().all(|r| r.pass && r.rel_error < 1e-12));
    }
}
