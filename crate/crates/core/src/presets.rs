//! The bundled case-study oscillators with their loop separations, solver
//! ranges, simulation settings, and comparison tolerances.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::df;
use crate::error::{Error, Result};
use crate::linear::LinearBlock;
use crate::nonlin::{Kind, Nonlinearity};
use crate::predict::{
    solve_loop, BiasMode, LoopSpec, NodePath, PredictedOscillation, SolveOptions, Stability,
};
use crate::sim::{Method, ModelKind, OscModel};

/// Catalog order is fixed; the CLI prints it verbatim.
pub const PRESET_NAMES: [&str; 7] = [
    "ring_relay",
    "ring_tanh",
    "series_rlc_negres",
    "relaxation_two_tau",
    "harmonic_relaxation",
    "fitzhugh_nagumo",
    "repressilator",
];

/// How the DF prediction for a preset is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictRoute {
    /// Solve the loop equation directly.
    LoopSolve,
    /// Lossless-tank estimate: oscillation at the tank resonance with the
    /// amplitude where the describing function's real part vanishes
    /// (zero net energy exchange with the lossless linear block).
    TankResonance,
    /// Gene-network estimate: period from the 10/beta protein-lifetime
    /// rule, DC offset from the nonnegativity floor (the protein swing
    /// bottoms near zero, so offset ~ amplitude), amplitude from the
    /// fundamental magnitude balance at that frequency.
    FloorBiasedRing,
}

/// A fully configured case study.
#[derive(Debug, Clone)]
pub struct OscillatorPreset {
    pub name: &'static str,
    pub loop_spec: LoopSpec,
    pub solve: SolveOptions,
    pub route: PredictRoute,
    pub model: OscModel,
    pub x0: Vec<f64>,
    pub method: Method,
    pub t_max: f64,
    pub settle_fraction: f64,
    /// Nodes measured by the simulation pipeline.
    pub probe_nodes: Vec<String>,
    /// Node to compare against the DF amplitude prediction.
    pub compare_node: String,
    /// Amplitude propagation paths for the prediction report.
    pub report_nodes: Vec<(String, NodePath)>,
    pub amplitude_tol: f64,
    pub period_tol: f64,
    /// Extra context lines surfaced in reports.
    pub notes: Vec<&'static str>,
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Look up a case study by name.
pub fn preset(name: &str) -> Result<OscillatorPreset> {
    match name {
        "ring_relay" => ring_relay(),
        "ring_tanh" => ring_tanh(),
        "series_rlc_negres" => series_rlc_negres(),
        "relaxation_two_tau" => relaxation_two_tau(),
        "harmonic_relaxation" => harmonic_relaxation(),
        "fitzhugh_nagumo" => fitzhugh_nagumo(),
        "repressilator" => repressilator(),
        other => Err(Error::Config(format!("unknown preset `{other}`"))),
    }
}

fn ring_relay() -> Result<OscillatorPreset> {
    let tau = 1e-3;
    let v_dd = 1.0;
    let nl = Nonlinearity::with_gain(Kind::Relay { m: v_dd }, -1.0)?;
    let g1 = LinearBlock::new(vec![1.0], vec![1.0, tau], 2.0 / 3.0)?;
    let loop_spec = LoopSpec::new(g1.clone(), nl, 1.0, BiasMode::Off)?;
    let stage = LinearBlock::rational(vec![1.0], vec![1.0, tau])?;
    let model = OscModel::preset(ModelKind::RingRelay, &params(&[("n", 3.0), ("tau", tau), ("v_dd", v_dd)]))?;
    let x0 = model.default_initial_state();
    Ok(OscillatorPreset {
        name: "ring_relay",
        loop_spec,
        solve: SolveOptions::new((1e-3, 10.0), (1.0, 1e6)),
        route: PredictRoute::LoopSolve,
        model,
        x0,
        method: Method::Rk4 { dt: tau / 200.0 },
        t_max: 60.0 * tau,
        settle_fraction: 0.5,
        probe_nodes: vec!["v1".into(), "v3".into()],
        compare_node: "v3".into(),
        report_nodes: vec![
            ("e_in1".into(), NodePath::Input),
            ("v1".into(), NodePath::OutputThrough(stage)),
            ("v3".into(), NodePath::OutputThrough(g1)),
        ],
        amplitude_tol: 0.05,
        period_tol: 0.30,
        notes: vec![
            "square-wave stages violate the sinusoid assumption; the period estimate runs ~26% high by construction",
        ],
    })
}

fn ring_tanh() -> Result<OscillatorPreset> {
    let tau = 1e-3;
    let nl = Nonlinearity::new(Kind::TanhInverter { amp: 1.0, k: 3.0 })?;
    let g1 = LinearBlock::new(vec![1.0], vec![1.0, tau], 2.0 / 3.0)?;
    let loop_spec = LoopSpec::new(g1.clone(), nl, 1.0, BiasMode::Off)?;
    let stage = LinearBlock::rational(vec![1.0], vec![1.0, tau])?;
    let model = OscModel::preset(
        ModelKind::RingTanh,
        &params(&[("n", 3.0), ("tau", tau), ("amp", 1.0), ("k", 3.0)]),
    )?;
    let x0 = model.default_initial_state();
    Ok(OscillatorPreset {
        name: "ring_tanh",
        loop_spec,
        solve: SolveOptions::new((1e-3, 10.0), (1.0, 1e6)),
        route: PredictRoute::LoopSolve,
        model,
        x0,
        method: Method::Rk4 { dt: tau / 500.0 },
        t_max: 0.15,
        settle_fraction: 0.5,
        probe_nodes: vec!["v1".into(), "v2".into(), "v3".into()],
        compare_node: "v3".into(),
        report_nodes: vec![
            ("e_in1".into(), NodePath::Input),
            ("v1".into(), NodePath::OutputThrough(stage)),
            ("v3".into(), NodePath::OutputThrough(g1)),
        ],
        amplitude_tol: 0.05,
        period_tol: 0.05,
        notes: vec![],
    })
}

fn series_rlc_negres() -> Result<OscillatorPreset> {
    let (r, l, c) = (1.0, 1e-3, 1e-6);
    let (v_max, r_max) = (1.0, 2.0);
    let nl = Nonlinearity::new(Kind::TanhResistor { v_max, r_max })?;
    // series admittance: sC/(LC s^2 + RC s + 1)
    let g = LinearBlock::rational(vec![0.0, c], vec![1.0, r * c, l * c])?;
    let loop_spec = LoopSpec::new(g, nl, -1.0, BiasMode::Off)?;
    let model = OscModel::preset(
        ModelKind::SeriesRlcNegres,
        &params(&[("r", r), ("l", l), ("c", c), ("v_max", v_max), ("r_max", r_max)]),
    )?;
    let x0 = model.default_initial_state();
    let w0 = 1.0 / (l * c).sqrt();
    Ok(OscillatorPreset {
        name: "series_rlc_negres",
        loop_spec,
        solve: SolveOptions::new((1e-3, 1e2), (1e3, 1e7)),
        route: PredictRoute::LoopSolve,
        model,
        x0,
        method: Method::Rk4 { dt: 2.0 * PI / w0 / 1000.0 },
        t_max: 8e-3,
        settle_fraction: 0.5,
        probe_nodes: vec!["i".into(), "vc".into()],
        compare_node: "i".into(),
        report_nodes: vec![("i".into(), NodePath::Input), ("v2".into(), NodePath::Output)],
        amplitude_tol: 0.02,
        period_tol: 0.01,
        notes: vec![],
    })
}

fn relaxation_two_tau() -> Result<OscillatorPreset> {
    let (tau_f, tau_s) = (2.5e-4, 1e-3);
    let (k1, k2, k3) = (2.0, 6.25, 0.4);
    let nl = Nonlinearity::new(Kind::TanhRelaxation { k1, k2, k3 })?;
    // 1/(tau_f s + 1/(tau_s s + 1)) = (tau_s s + 1)/(tau_f tau_s s^2 + tau_f s + 1)
    let g = LinearBlock::rational(vec![1.0, tau_s], vec![1.0, tau_f, tau_f * tau_s])?;
    let loop_spec = LoopSpec::new(g, nl, 1.0, BiasMode::Off)?;
    let model = OscModel::preset(
        ModelKind::RelaxationTwoTau,
        &params(&[("tau_f", tau_f), ("tau_s", tau_s), ("k1", k1), ("k2", k2), ("k3", k3)]),
    )?;
    let x0 = model.default_initial_state();
    let vi_path = LinearBlock::rational(vec![1.0], vec![1.0, tau_s])?;
    Ok(OscillatorPreset {
        name: "relaxation_two_tau",
        loop_spec,
        solve: SolveOptions::new((1e-2, 1e2), (1.0, 1e6)),
        route: PredictRoute::LoopSolve,
        model,
        x0,
        method: Method::Rk4 { dt: 1e-6 },
        t_max: 0.5,
        settle_fraction: 0.5,
        probe_nodes: vec!["vo".into(), "vi".into()],
        compare_node: "vo".into(),
        report_nodes: vec![
            ("vo".into(), NodePath::Input),
            ("vi".into(), NodePath::InputThrough(vi_path)),
            ("vhat".into(), NodePath::Output),
        ],
        amplitude_tol: 0.07,
        period_tol: 0.07,
        notes: vec![],
    })
}

fn harmonic_relaxation() -> Result<OscillatorPreset> {
    let (tau_f, tau_s) = (2.5e-4, 1e-3);
    let (k1, k2, k3) = (2.0, 6.25, 0.4);
    let nl = Nonlinearity::new(Kind::TanhRelaxation { k1, k2, k3 })?;
    // integrator feedback: tau_s s/(tau_f tau_s s^2 + 1), an undamped tank
    let g = LinearBlock::rational(vec![0.0, tau_s], vec![1.0, 0.0, tau_f * tau_s])?;
    let loop_spec = LoopSpec::new(g, nl, 1.0, BiasMode::Off)?;
    let model = OscModel::preset(
        ModelKind::HarmonicRelaxation,
        &params(&[("tau_f", tau_f), ("tau_s", tau_s), ("k1", k1), ("k2", k2), ("k3", k3)]),
    )?;
    let x0 = model.default_initial_state();
    Ok(OscillatorPreset {
        name: "harmonic_relaxation",
        loop_spec,
        solve: SolveOptions::new((1e-2, 1e2), (10.0, 1e5)),
        route: PredictRoute::TankResonance,
        model,
        x0,
        method: Method::Rk4 { dt: 1e-6 },
        t_max: 0.5,
        settle_fraction: 0.5,
        probe_nodes: vec!["vo".into(), "vi".into()],
        compare_node: "vo".into(),
        report_nodes: vec![("vo".into(), NodePath::Input)],
        amplitude_tol: 0.05,
        period_tol: 0.06,
        notes: vec!["lossless tank: predicted frequency is the resonance 1/sqrt(tau_f tau_s)"],
    })
}

fn fitzhugh_nagumo() -> Result<OscillatorPreset> {
    let (a, b, tau, i_ext) = (0.7, 0.8, 12.5, 0.5);
    let nl = Nonlinearity::new(Kind::CubicFn { i_ext })?;
    // normalized recovery path 1/(tau s + 1): G = (tau s + 1)/(tau s^2 + s + 1)
    let g = LinearBlock::rational(vec![1.0, tau], vec![1.0, 1.0, tau])?;
    let loop_spec = LoopSpec::new(g, nl, 1.0, BiasMode::Off)?;
    let model = OscModel::preset(
        ModelKind::FitzhughNagumo,
        &params(&[("a", a), ("b", b), ("tau", tau), ("i_ext", i_ext)]),
    )?;
    let x0 = model.default_initial_state();
    Ok(OscillatorPreset {
        name: "fitzhugh_nagumo",
        loop_spec,
        solve: SolveOptions::new((1e-2, 10.0), (1e-3, 10.0)),
        route: PredictRoute::LoopSolve,
        model,
        x0,
        method: Method::Rk4 { dt: 0.01 },
        t_max: 400.0,
        settle_fraction: 0.5,
        probe_nodes: vec!["v".into(), "w".into()],
        compare_node: "v".into(),
        report_nodes: vec![("v".into(), NodePath::Input), ("w".into(), NodePath::Output)],
        amplitude_tol: 0.60,
        period_tol: 0.60,
        notes: vec![
            "strongly relaxational waveform: the first-harmonic estimate undershoots both amplitude and period",
        ],
    })
}

fn repressilator() -> Result<OscillatorPreset> {
    let (alpha, alpha0, n, beta) = (300.0, 0.03, 2.0, 0.2);
    let nl = Nonlinearity::new(Kind::Hill { alpha, alpha0, n })?;
    let g1 = LinearBlock::new(vec![beta], vec![beta, 1.0], 2.0 / 3.0)?;
    let loop_spec = LoopSpec::new(g1.clone(), nl, 1.0, BiasMode::DcBalance)?;
    let model = OscModel::preset(
        ModelKind::Repressilator,
        &params(&[("alpha", alpha), ("alpha0", alpha0), ("n", n), ("beta", beta)]),
    )?;
    let x0 = model.default_initial_state();
    let p_path = LinearBlock::rational(vec![beta], vec![beta, 1.0])?;
    Ok(OscillatorPreset {
        name: "repressilator",
        loop_spec,
        solve: SolveOptions::new((1.0, 300.0), (1e-3, 10.0)),
        route: PredictRoute::FloorBiasedRing,
        model,
        x0,
        method: Method::Rk45 { rel_tol: 1e-8, abs_tol: 1e-10 },
        t_max: 600.0,
        settle_fraction: 0.5,
        probe_nodes: vec!["m1".into(), "p1".into()],
        compare_node: "p1".into(),
        report_nodes: vec![
            ("p".into(), NodePath::Input),
            ("m".into(), NodePath::Output),
            ("p_filtered".into(), NodePath::OutputThrough(p_path)),
        ],
        amplitude_tol: 0.40,
        period_tol: 0.05,
        notes: vec![
            "non-odd repression curve: the sinusoid-plus-offset assumption undershoots the swing",
        ],
    })
}

/// DF prediction for a preset, following its route.
pub fn predict_preset(p: &OscillatorPreset) -> Result<Vec<PredictedOscillation>> {
    match p.route {
        PredictRoute::LoopSolve => solve_loop(&p.loop_spec, &p.solve),
        PredictRoute::TankResonance => tank_resonance_estimate(p).map(|o| vec![o]),
        PredictRoute::FloorBiasedRing => floor_biased_estimate(p).map(|o| vec![o]),
    }
}

/// Amplitude where Re N(A) crosses zero: the lossless tank sustains the
/// oscillation that exchanges no net energy with the nonlinearity.
fn tank_resonance_estimate(p: &OscillatorPreset) -> Result<PredictedOscillation> {
    let den = p.loop_spec.linear.den();
    // tau_f tau_s is the leading denominator coefficient of the tank form
    let w0 = 1.0 / den[2].abs().sqrt();
    let nl = &p.loop_spec.nonlinearity;
    let f = |a: f64| -> Result<f64> { Ok(df::numeric(nl, a, 0.0, p.solve.samples)?.n.re) };
    let (mut lo, mut hi) = p.solve.a_range;
    let (flo, mut fhi) = (f(lo)?, f(hi)?);
    if flo * fhi > 0.0 {
        return Err(Error::Numerical("describing function has no zero in the amplitude range".into()));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let fm = f(mid)?;
        if fm == 0.0 || (hi - lo) / mid < 1e-12 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == fhi.signum() {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
        }
    }
    let a_star = (lo * hi).sqrt();
    Ok(PredictedOscillation {
        amplitude: a_star,
        omega_signed: w0,
        residual: f(a_star)?.abs(),
        stability: Stability::Stable,
        bias: None,
    })
}

/// Repression-ring estimate with the offset pinned to the amplitude
/// (the protein concentration bottoms near zero each cycle) and the period
/// taken from the 10/beta rule; the amplitude then solves the fundamental
/// magnitude balance |G(j w*)| |N(A, A)| = 1.
fn floor_biased_estimate(p: &OscillatorPreset) -> Result<PredictedOscillation> {
    let beta = p.loop_spec.linear.num()[0];
    let period = 10.0 / beta;
    let w_star = 2.0 * PI / period;
    let g_mag = p.loop_spec.linear.response(w_star)?.norm();
    let target = -1.0 / g_mag;
    let nl = &p.loop_spec.nonlinearity;
    let f = |a: f64| -> Result<f64> { Ok(df::numeric(nl, a, a, p.solve.samples)?.n.re - target) };
    let (mut lo, mut hi) = p.solve.a_range;
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo * fhi > 0.0 {
        return Err(Error::Numerical(
            "floor-biased magnitude balance has no root in the amplitude range".into(),
        ));
    }
    let mut fl = flo;
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let fm = f(mid)?;
        if fm == 0.0 || (hi - lo) / mid < 1e-12 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == fl.signum() {
            lo = mid;
            fl = fm;
        } else {
            hi = mid;
        }
    }
    let a_star = (lo * hi).sqrt();
    Ok(PredictedOscillation {
        amplitude: a_star,
        omega_signed: w_star,
        residual: f(a_star)?.abs(),
        stability: Stability::Stable,
        bias: Some(a_star),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert_eq!(p.name, name);
            assert_eq!(p.x0.len(), p.model.dimension());
        }
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(preset("nope").is_err());
    }
}
