//! Harmonic-balance loop solving: G(jω)·N(A) = σ, stability classification
//! via Nyquist encirclements, and the geometric existence margin.
//!
//! The loop equation is evaluated with the delay as a fixed fundamental
//! phasor over the signed ω axis (see [`LinearBlock::loop_response`]); a
//! period-fraction delay of 2/3 places the ring-oscillator balance on the
//! ω < 0 branch, and results are reported as |ω|.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::df;
use crate::error::{Error, Result};
use crate::linear::{im_zero_crossings, routh_rhp_count, LinearBlock};
use crate::nonlin::Nonlinearity;

/// Whether to solve the zero-frequency balance alongside the fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    Off,
    DcBalance,
}

/// A feedback loop separated into a linear block and a nonlinearity.
///
/// `sign` is the loop constant σ: the balance solved is G(jω)N(A) = σ,
/// σ = -1 for the canonical negative-feedback arrangement and +1 for the
/// positive-feedback diagrams of the oscillator case studies.
#[derive(Debug, Clone)]
pub struct LoopSpec {
    pub linear: LinearBlock,
    pub nonlinearity: Nonlinearity,
    pub sign: f64,
    pub bias_mode: BiasMode,
}

impl LoopSpec {
    pub fn new(
        linear: LinearBlock,
        nonlinearity: Nonlinearity,
        sign: f64,
        bias_mode: BiasMode,
    ) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Config(format!("loop sign must be +1 or -1, got {sign}")));
        }
        Ok(Self { linear, nonlinearity, sign, bias_mode })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    MarginalUndetermined,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::MarginalUndetermined => "marginal-undetermined",
        }
    }
}

/// One balanced intersection of the loop equation.
#[derive(Debug, Clone, Copy)]
pub struct PredictedOscillation {
    /// Amplitude at the nonlinearity input.
    pub amplitude: f64,
    /// Signed solution frequency (rad/s); the reported value is |ω|.
    pub omega_signed: f64,
    /// |G(jω*)N(A*) - σ| at the returned point.
    pub residual: f64,
    pub stability: Stability,
    /// DC offset, present when solved with [`BiasMode::DcBalance`].
    pub bias: Option<f64>,
}

impl PredictedOscillation {
    pub fn omega(&self) -> f64 {
        self.omega_signed.abs()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega() / (2.0 * PI)
    }
}

/// Search ranges and tolerances for the loop solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub a_range: (f64, f64),
    pub omega_range: (f64, f64),
    /// Grid resolution per axis for scans (default 200).
    pub grid: usize,
    /// Residual tolerance for polished intersections.
    pub tol: f64,
    /// Quadrature samples for numeric describing functions.
    pub samples: usize,
}

impl SolveOptions {
    pub fn new(a_range: (f64, f64), omega_range: (f64, f64)) -> Self {
        Self { a_range, omega_range, grid: 200, tol: 1e-9, samples: df::DEFAULT_SAMPLES }
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi;
        if !ok(self.a_range) || !ok(self.omega_range) {
            return Err(Error::Config("solver ranges must be positive and ordered".into()));
        }
        if self.grid < 16 {
            return Err(Error::Config("solver grid must be >= 16".into()));
        }
        Ok(())
    }
}

/// Describing-function value used by the solver: closed form at zero bias
/// when available, numeric quadrature otherwise.
fn n_value(nl: &Nonlinearity, a: f64, bias: f64, samples: usize) -> Result<Complex64> {
    if bias == 0.0 {
        if let Some(n) = df::closed_form(nl, a)? {
            return Ok(n);
        }
    }
    Ok(df::numeric(nl, a, bias, samples)?.n)
}

fn dc_coefficient(nl: &Nonlinearity, a: f64, bias: f64, samples: usize) -> Result<f64> {
    Ok(df::numeric(nl, a, bias, samples)?.dc)
}

struct Candidate {
    amplitude: f64,
    omega_signed: f64,
    bias: f64,
}

/// 2x2 damped Newton on (ln A, ln |ω|) for the complex residual
/// F = G(jω)N(A) - σ.
fn polish_fundamental(
    spec: &LoopSpec,
    samples: usize,
    tol: f64,
    cand: &Candidate,
) -> Option<(f64, f64, f64)> {
    let sign_w = cand.omega_signed.signum();
    let residual = |la: f64, lw: f64| -> Result<Complex64> {
        let a = la.exp();
        let w = sign_w * lw.exp();
        let g = spec.linear.loop_response(w)?;
        let n = n_value(&spec.nonlinearity, a, cand.bias, samples)?;
        Ok(g * n - spec.sign)
    };
    let mut la = cand.amplitude.ln();
    let mut lw = cand.omega_signed.abs().ln();
    let mut f = residual(la, lw).ok()?;
    for _ in 0..60 {
        if f.norm() <= tol {
            return Some((la.exp(), sign_w * lw.exp(), f.norm()));
        }
        let h = 1e-7;
        let fa = residual(la + h, lw).ok()?;
        let fw = residual(la, lw + h).ok()?;
        let j = [
            [(fa.re - f.re) / h, (fw.re - f.re) / h],
            [(fa.im - f.im) / h, (fw.im - f.im) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let da = -(f.re * j[1][1] - f.im * j[0][1]) / det;
        let dw = -(j[0][0] * f.im - j[1][0] * f.re) / det;
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..20 {
            let (na, nw) = (la + step * da, lw + step * dw);
            if let Ok(nf) = residual(na, nw) {
                if nf.norm() < f.norm() {
                    la = na;
                    lw = nw;
                    f = nf;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if f.norm() <= tol {
        Some((la.exp(), sign_w * lw.exp(), f.norm()))
    } else {
        None
    }
}

/// Amplitude roots of Re N(A) = target on a log grid with bisection.
fn amplitude_roots(
    nl: &Nonlinearity,
    a_range: (f64, f64),
    grid: usize,
    samples: usize,
    bias: f64,
    target: f64,
) -> Result<Vec<f64>> {
    let (lo, hi) = a_range;
    let ratio = hi / lo;
    let g = |a: f64| -> Result<f64> { Ok(n_value(nl, a, bias, samples)?.re - target) };
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..grid {
        let a = lo * ratio.powf(i as f64 / (grid - 1) as f64);
        let v = match g(a) {
            Ok(v) => v,
            Err(_) => {
                prev = None;
                continue;
            }
        };
        if let Some((a0, v0)) = prev {
            if v0 == 0.0 {
                roots.push(a0);
            } else if v0 * v < 0.0 {
                let (mut x0, mut x1, mut f0) = (a0, a, v0);
                for _ in 0..100 {
                    let mid = 0.5 * (x0 + x1);
                    let fm = g(mid)?;
                    if fm == 0.0 || (x1 - x0) / mid < 1e-13 {
                        x0 = mid;
                        x1 = mid;
                        break;
                    }
                    if fm.signum() == f0.signum() {
                        x0 = mid;
                        f0 = fm;
                    } else {
                        x1 = mid;
                    }
                }
                roots.push(0.5 * (x0 + x1));
            }
        }
        prev = Some((a, v));
    }
    Ok(roots)
}

fn dedup_candidates(found: &mut Vec<PredictedOscillation>) {
    found.sort_by(|a, b| {
        a.amplitude
            .partial_cmp(&b.amplitude)
            .unwrap()
            .then(a.omega().partial_cmp(&b.omega()).unwrap())
    });
    found.dedup_by(|a, b| {
        ((a.amplitude - b.amplitude) / b.amplitude).abs() < 1e-6
            && ((a.omega() - b.omega()) / b.omega()).abs() < 1e-6
    });
}

/// Solve the loop equation over the given ranges and classify each
/// intersection. Returns an empty list when no balance exists.
pub fn solve_loop(spec: &LoopSpec, opts: &SolveOptions) -> Result<Vec<PredictedOscillation>> {
    opts.validate()?;
    let mut found: Vec<PredictedOscillation> = Vec::new();

    if spec.bias_mode == BiasMode::DcBalance {
        solve_dc_balance(spec, opts, &mut found)?;
    } else if spec.nonlinearity.is_hysteretic() {
        solve_grid_scan(spec, opts, &mut found)?;
    } else {
        solve_real_crossings(spec, opts, &mut found)?;
    }

    dedup_candidates(&mut found);
    for osc in found.iter_mut() {
        osc.stability = classify(spec, osc, opts)?;
    }
    Ok(found)
}

/// Real-N route: ω candidates are the real-axis crossings of the loop
/// response over both signs of ω; amplitudes solve N(A) = σ/G.
fn solve_real_crossings(
    spec: &LoopSpec,
    opts: &SolveOptions,
    found: &mut Vec<PredictedOscillation>,
) -> Result<()> {
    let (wlo, whi) = opts.omega_range;
    let n_scan = (opts.grid * 10).max(1000);
    for &branch in &[1.0f64, -1.0] {
        let crossings =
            im_zero_crossings(|w| spec.linear.loop_response(branch * w), wlo, whi, n_scan)?;
        for c in crossings {
            if c.value.norm() == 0.0 {
                continue;
            }
            let target = spec.sign / c.value.re;
            let roots = amplitude_roots(
                &spec.nonlinearity,
                opts.a_range,
                opts.grid.max(200),
                opts.samples,
                0.0,
                target,
            )?;
            for a in roots {
                let cand = Candidate { amplitude: a, omega_signed: branch * c.omega, bias: 0.0 };
                if let Some((a_p, w_p, r)) = polish_fundamental(spec, opts.samples, opts.tol, &cand)
                {
                    found.push(PredictedOscillation {
                        amplitude: a_p,
                        omega_signed: w_p,
                        residual: r,
                        stability: Stability::MarginalUndetermined,
                        bias: None,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Complex-N route: scan the residual on a log amplitude x signed log
/// frequency grid and polish every local minimum.
fn solve_grid_scan(
    spec: &LoopSpec,
    opts: &SolveOptions,
    found: &mut Vec<PredictedOscillation>,
) -> Result<()> {
    let g = opts.grid;
    let (alo, ahi) = opts.a_range;
    let (wlo, whi) = opts.omega_range;
    let a_at = |i: usize| alo * (ahi / alo).powf(i as f64 / (g - 1) as f64);
    let w_at = |j: usize| wlo * (whi / wlo).powf(j as f64 / (g - 1) as f64);

    let mut n_vals: Vec<Option<Complex64>> = Vec::with_capacity(g);
    for i in 0..g {
        n_vals.push(n_value(&spec.nonlinearity, a_at(i), 0.0, opts.samples).ok());
    }
    for &branch in &[1.0f64, -1.0] {
        let mut g_vals: Vec<Option<Complex64>> = Vec::with_capacity(g);
        for j in 0..g {
            g_vals.push(spec.linear.loop_response(branch * w_at(j)).ok());
        }
        let res = |i: usize, j: usize| -> Option<f64> {
            Some((g_vals[j]? * n_vals[i]? - spec.sign).norm())
        };
        for i in 0..g {
            for j in 0..g {
                let r = match res(i, j) {
                    Some(r) => r,
                    None => continue,
                };
                let mut is_min = true;
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= g as i64 || nj >= g as i64 {
                        continue;
                    }
                    if let Some(rn) = res(ni as usize, nj as usize) {
                        if rn < r {
                            is_min = false;
                            break;
                        }
                    }
                }
                if !is_min || r > 0.9 {
                    continue;
                }
                let cand =
                    Candidate { amplitude: a_at(i), omega_signed: branch * w_at(j), bias: 0.0 };
                if let Some((a_p, w_p, rr)) = polish_fundamental(spec, opts.samples, opts.tol, &cand)
                {
                    found.push(PredictedOscillation {
                        amplitude: a_p,
                        omega_signed: w_p,
                        residual: rr,
                        stability: Stability::MarginalUndetermined,
                        bias: None,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Bias-aware route: solve B = σ G(0) a0(A, B) along the amplitude sweep and
/// intersect with the fundamental balance, then polish all three unknowns.
fn solve_dc_balance(
    spec: &LoopSpec,
    opts: &SolveOptions,
    found: &mut Vec<PredictedOscillation>,
) -> Result<()> {
    let g0 = spec.linear.dc_gain()?;
    // DC balance ψ(B) = B - σ G(0) a0(A, B) can have several roots (odd
    // nonlinearities give symmetric spurious branches); take the one of
    // smallest magnitude.
    let bias_for = |a: f64| -> Option<f64> {
        let psi = |b: f64| -> Option<f64> {
            Some(b - spec.sign * g0 * dc_coefficient(&spec.nonlinearity, a, b, opts.samples).ok()?)
        };
        let r = 10.0 * opts.a_range.1;
        let n = 256usize;
        let mut best: Option<f64> = None;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=n {
            let b = -r + 2.0 * r * i as f64 / n as f64;
            let v = psi(b)?;
            if let Some((b0, v0)) = prev {
                if v0 == 0.0 {
                    best = pick_smaller(best, b0);
                } else if v0 * v < 0.0 {
                    let (mut lo, mut hi, mut flo) = (b0, b, v0);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        let fm = psi(mid)?;
                        if fm == 0.0 || (hi - lo).abs() < 1e-13 * (1.0 + mid.abs()) {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if fm.signum() == flo.signum() {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    best = pick_smaller(best, 0.5 * (lo + hi));
                }
            }
            prev = Some((b, v));
        }
        best
    };

    let (wlo, whi) = opts.omega_range;
    let n_scan = (opts.grid * 10).max(1000);
    for &branch in &[1.0f64, -1.0] {
        let crossings =
            im_zero_crossings(|w| spec.linear.loop_response(branch * w), wlo, whi, n_scan)?;
        for c in crossings {
            if c.value.norm() == 0.0 {
                continue;
            }
            let target = spec.sign / c.value.re;
            // scan A for sign changes of Re N(A, B(A)) - target
            let (alo, ahi) = opts.a_range;
            let grid = opts.grid.max(120);
            let mut prev: Option<(f64, f64, f64)> = None;
            for i in 0..grid {
                let a = alo * (ahi / alo).powf(i as f64 / (grid - 1) as f64);
                let b = match bias_for(a) {
                    Some(b) => b,
                    None => {
                        prev = None;
                        continue;
                    }
                };
                let v = match n_value(&spec.nonlinearity, a, b, opts.samples) {
                    Ok(n) => n.re - target,
                    Err(_) => {
                        prev = None;
                        continue;
                    }
                };
                if let Some((a0, _b0, v0)) = prev {
                    if v0 * v <= 0.0 {
                        // bisect on A along the dc-balance manifold
                        let (mut x0, mut x1, mut f0) = (a0, a, v0);
                        let mut b_mid = b;
                        for _ in 0..80 {
                            let mid = 0.5 * (x0 + x1);
                            b_mid = match bias_for(mid) {
                                Some(b) => b,
                                None => break,
                            };
                            let fm = match n_value(&spec.nonlinearity, mid, b_mid, opts.samples) {
                                Ok(n) => n.re - target,
                                Err(_) => break,
                            };
                            if fm == 0.0 || (x1 - x0) / mid < 1e-12 {
                                x0 = mid;
                                x1 = mid;
                                break;
                            }
                            if fm.signum() == f0.signum() {
                                x0 = mid;
                                f0 = fm;
                            } else {
                                x1 = mid;
                            }
                        }
                        let a_root = 0.5 * (x0 + x1);
                        if let Some((a_p, w_p, b_p, r)) = polish_three(
                            spec,
                            opts,
                            g0,
                            a_root,
                            branch * c.omega,
                            b_mid,
                        ) {
                            found.push(PredictedOscillation {
                                amplitude: a_p,
                                omega_signed: w_p,
                                residual: r,
                                stability: Stability::MarginalUndetermined,
                                bias: Some(b_p),
                            });
                        }
                    }
                }
                prev = Some((a, b, v));
            }
        }
    }
    Ok(())
}

/// 3x3 damped Newton on (ln A, ln |ω|, B) for fundamental plus DC balance.
fn polish_three(
    spec: &LoopSpec,
    opts: &SolveOptions,
    g0: f64,
    a: f64,
    omega_signed: f64,
    b: f64,
) -> Option<(f64, f64, f64, f64)> {
    let sign_w = omega_signed.signum();
    let eval = |la: f64, lw: f64, b: f64| -> Option<[f64; 3]> {
        let a = la.exp();
        let w = sign_w * lw.exp();
        let g = spec.linear.loop_response(w).ok()?;
        let s = df::numeric(&spec.nonlinearity, a, b, opts.samples).ok()?;
        let f = g * s.n - spec.sign;
        Some([f.re, f.im, b - spec.sign * g0 * s.dc])
    };
    let norm = |f: &[f64; 3]| (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
    let mut x = [a.ln(), omega_signed.abs().ln(), b];
    let mut f = eval(x[0], x[1], x[2])?;
    for _ in 0..80 {
        if norm(&f) <= opts.tol {
            return Some((x[0].exp(), sign_w * x[1].exp(), x[2], norm(&f)));
        }
        let h = [1e-7, 1e-7, 1e-7 * (1.0 + x[2].abs())];
        let mut j = [[0.0f64; 3]; 3];
        for k in 0..3 {
            let mut xp = x;
            xp[k] += h[k];
            let fp = eval(xp[0], xp[1], xp[2])?;
            for r in 0..3 {
                j[r][k] = (fp[r] - f[r]) / h[k];
            }
        }
        let dx = solve3(&j, &[-f[0], -f[1], -f[2]])?;
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..20 {
            let xn = [x[0] + step * dx[0], x[1] + step * dx[1], x[2] + step * dx[2]];
            if let Some(fn_) = eval(xn[0], xn[1], xn[2]) {
                if norm(&fn_) < norm(&f) {
                    x = xn;
                    f = fn_;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    if norm(&f) <= opts.tol {
        Some((x[0].exp(), sign_w * x[1].exp(), x[2], norm(&f)))
    } else {
        None
    }
}

fn pick_smaller(best: Option<f64>, candidate: f64) -> Option<f64> {
    match best {
        Some(b) if b.abs() <= candidate.abs() => Some(b),
        _ => Some(candidate),
    }
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0f64; 4]; 3];
    for r in 0..3 {
        m[r][..3].copy_from_slice(&a[r]);
        m[r][3] = b[r];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let factor = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= factor * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Clockwise encirclements of `point` by the loop-response locus over the
/// signed ω axis. The locus is continuous through ω = 0 because the delay
/// phasor is fixed, and strictly proper blocks close near the origin.
/// Segments are refined adaptively until each argument increment is small,
/// so sharp resonances cannot alias the winding count.
fn clockwise_encirclements(g: &LinearBlock, point: Complex64, omega_ref: f64) -> Result<i64> {
    let lo = omega_ref / 1e3;
    let hi = omega_ref * 1e3;
    let n = 512usize;
    let ratio: f64 = hi / lo;
    let mut omegas = Vec::with_capacity(2 * n + 1);
    for i in (0..n).rev() {
        omegas.push(-lo * ratio.powf(i as f64 / (n - 1) as f64));
    }
    omegas.push(0.0);
    for i in 0..n {
        omegas.push(lo * ratio.powf(i as f64 / (n - 1) as f64));
    }
    let at = |w: f64| -> Result<Complex64> {
        let v = g
            .loop_response(w)
            .map_err(|_| Error::Numerical("locus passes through a pole".into()))?;
        let z = v - point;
        if z.norm() == 0.0 {
            return Err(Error::Numerical("critical point on the locus".into()));
        }
        Ok(z)
    };
    let wrap = |mut d: f64| {
        if d > PI {
            d -= 2.0 * PI;
        }
        if d < -PI {
            d += 2.0 * PI;
        }
        d
    };
    let mut winding = 0.0;
    let mut budget = 400_000usize;
    let mut prev_w = omegas[0];
    let mut prev_z = at(prev_w)?;
    for &w in &omegas[1..] {
        // refine [prev_w, w] until each hop turns by less than 0.5 rad
        let mut stack = vec![(prev_w, prev_z, w, at(w)?)];
        while let Some((w0, z0, w1, z1)) = stack.pop() {
            let d = wrap(z1.arg() - z0.arg());
            let gap = w1 - w0;
            if d.abs() <= 0.5 || gap <= 1e-12 * (w0.abs() + w1.abs() + lo) || budget == 0 {
                winding += d;
            } else {
                budget -= 1;
                let wm = 0.5 * (w0 + w1);
                let zm = at(wm)?;
                stack.push((wm, zm, w1, z1));
                stack.push((w0, z0, wm, zm));
            }
        }
        prev_z = at(w)?;
        prev_w = w;
    }
    let _ = prev_w;
    // closure between the ±hi ends: both near the origin for proper blocks
    let first = at(omegas[0])?;
    let last = at(*omegas.last().unwrap())?;
    winding += wrap(first.arg() - last.arg());
    Ok((-winding / (2.0 * PI)).round() as i64)
}

/// Perturbation stability test: perturb the amplitude by ±0.1% and check
/// closed-loop stability of each perturbed operating point by encirclement
/// counting. A stable limit cycle decays back from above and grows back
/// from below.
pub fn classify(
    spec: &LoopSpec,
    osc: &PredictedOscillation,
    opts: &SolveOptions,
) -> Result<Stability> {
    let p_open = match routh_rhp_count(spec.linear.den()) {
        Ok(p) => p as i64,
        Err(_) => return Ok(Stability::MarginalUndetermined),
    };
    let bias = osc.bias.unwrap_or(0.0);
    let mut verdicts = [false; 2];
    for (idx, eps) in [(0usize, 1e-3f64), (1usize, -1e-3f64)] {
        let a = osc.amplitude * (1.0 + eps);
        let n = match n_value(&spec.nonlinearity, a, bias, opts.samples) {
            Ok(n) if n.norm() > 0.0 => n,
            _ => return Ok(Stability::MarginalUndetermined),
        };
        let point = spec.sign / n;
        let z = match clockwise_encirclements(&spec.linear, point, osc.omega()) {
            Ok(enc) => enc + p_open,
            Err(_) => return Ok(Stability::MarginalUndetermined),
        };
        verdicts[idx] = z == 0;
    }
    Ok(match verdicts {
        [true, false] => Stability::Stable,
        [false, true] => Stability::Unstable,
        _ => Stability::MarginalUndetermined,
    })
}

/// Existence test with a geometric margin.
#[derive(Debug, Clone, Copy)]
pub struct ExistenceMargin {
    pub oscillates: bool,
    /// Minimum distance between the critical locus σ/N(A) and the Nyquist
    /// locus; negative (penetration depth) when they intersect.
    pub margin: f64,
}

pub fn existence_margin(spec: &LoopSpec, opts: &SolveOptions) -> Result<ExistenceMargin> {
    opts.validate()?;
    let oscillates = !solve_loop(spec, opts)?.is_empty();

    let (alo, ahi) = opts.a_range;
    let grid = opts.grid.max(100);
    let mut locus = Vec::with_capacity(grid);
    for i in 0..grid {
        let a = alo * (ahi / alo).powf(i as f64 / (grid - 1) as f64);
        if let Ok(n) = n_value(&spec.nonlinearity, a, 0.0, opts.samples) {
            if n.norm() > 0.0 {
                locus.push(spec.sign / n);
            }
        }
    }
    if locus.is_empty() {
        return Err(Error::Domain("critical locus empty over the amplitude range".into()));
    }

    let (wlo, whi) = opts.omega_range;
    let n_w = (2 * grid).max(512);
    let mut nyq = Vec::with_capacity(2 * n_w);
    for &branch in &[-1.0f64, 1.0] {
        for i in 0..n_w {
            let w = branch * wlo * (whi / wlo).powf(i as f64 / (n_w - 1) as f64);
            if let Ok(v) = spec.linear.loop_response(w) {
                nyq.push(v);
            }
        }
    }
    let dist_to_nyq = |p: Complex64| {
        nyq.iter().map(|&v| (v - p).norm()).fold(f64::INFINITY, f64::min)
    };

    let margin = if oscillates {
        let w_ref = (wlo * whi).sqrt();
        let mut depth = 0.0f64;
        for &p in &locus {
            if let Ok(enc) = clockwise_encirclements(&spec.linear, p, w_ref) {
                if enc != 0 {
                    depth = depth.max(dist_to_nyq(p));
                }
            }
        }
        -depth
    } else {
        locus.iter().map(|&p| dist_to_nyq(p)).fold(f64::INFINITY, f64::min)
    };
    Ok(ExistenceMargin { oscillates, margin })
}

/// Transfer path from the nonlinearity input to a named loop node.
#[derive(Debug, Clone)]
pub enum NodePath {
    /// The nonlinearity input itself.
    Input,
    /// Directly after the nonlinear block: amplitude |N(A*)|·A*.
    Output,
    /// The input phasor filtered through a linear transfer.
    InputThrough(LinearBlock),
    /// The nonlinearity output filtered through a linear transfer.
    OutputThrough(LinearBlock),
}

#[derive(Debug, Clone)]
pub struct PredictionReport {
    pub amplitude: f64,
    pub omega: f64,
    pub period: f64,
    pub frequency_hz: f64,
    pub stability: Stability,
    pub residual: f64,
    pub bias: Option<f64>,
    /// Predicted amplitude at each probe node.
    pub node_amplitudes: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

/// Propagate a balanced intersection to named loop nodes.
pub fn report(
    spec: &LoopSpec,
    osc: &PredictedOscillation,
    nodes: &[(String, NodePath)],
    opts: &SolveOptions,
) -> Result<PredictionReport> {
    let bias = osc.bias.unwrap_or(0.0);
    let n = n_value(&spec.nonlinearity, osc.amplitude, bias, opts.samples)?;
    let mut node_amplitudes = Vec::with_capacity(nodes.len());
    for (name, path) in nodes {
        let amp = match path {
            NodePath::Input => osc.amplitude,
            NodePath::Output => osc.amplitude * n.norm(),
            NodePath::InputThrough(b) => osc.amplitude * b.response(osc.omega_signed)?.norm(),
            NodePath::OutputThrough(b) => {
                osc.amplitude * n.norm() * b.response(osc.omega_signed)?.norm()
            }
        };
        node_amplitudes.push((name.clone(), amp));
    }
    Ok(PredictionReport {
        amplitude: osc.amplitude,
        omega: osc.omega(),
        period: osc.period(),
        frequency_hz: osc.frequency_hz(),
        stability: osc.stability,
        residual: osc.residual,
        bias: osc.bias,
        node_amplitudes,
        warnings: Vec::new(),
    })
}
