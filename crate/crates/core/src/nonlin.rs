//! Catalog of memoryless scalar nonlinearities.
//!
//! Every value is immutable data; evaluation is pure. The only kind with
//! memory-like behaviour is the hysteretic relay, which takes its previous
//! switching polarity as an explicit argument instead of holding state.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Switching polarity of a hysteretic relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    High,
    Low,
}

/// Symmetry classification over a sampled domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Odd,
    Even,
    Neither,
}

/// Parameter value accepted by the dynamic constructor.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// Ideal saturation: slope `k` clipped at `±k*a`.
    Saturation { k: f64, a: f64 },
    /// Ideal relay: `±m` (0 exactly at the origin).
    Relay { m: f64 },
    /// Dead zone: zero inside `±delta`, slope `k` outside.
    DeadZone { k: f64, delta: f64 },
    /// Relay with hysteresis: switches high at `+h`, low at `-h`.
    RelayHysteresis { m: f64, h: f64 },
    /// Negative nonlinear resistor `-v_max * tanh(r_max/v_max * x)`.
    TanhResistor { v_max: f64, r_max: f64 },
    /// Saturating inverter `-amp * tanh(k * x)`.
    TanhInverter { amp: f64, k: f64 },
    /// Relaxation-oscillator drive `-k1*x + k2*tanh(k3*x)`.
    TanhRelaxation { k1: f64, k2: f64, k3: f64 },
    /// Cubic neuron characteristic `x - x^3/3 + i_ext`.
    CubicFn { i_ext: f64 },
    /// Repressor Hill function `alpha/(1 + |x|^n) + alpha0`.
    Hill { alpha: f64, alpha0: f64, n: f64 },
    /// Polynomial with ascending coefficients.
    Polynomial { coeffs: Vec<f64> },
    /// Piecewise-linear interpolation of sorted samples; no extrapolation.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

/// A validated memoryless nonlinearity with an optional output gain.
///
/// The gain lets a catalog entry be flipped or rescaled without a new kind;
/// the ring presets use `output_gain = -1` on a relay to model an ideal
/// inverter.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    kind: Kind,
    output_gain: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("parameter `{name}` must be > 0, got {v}")))
    }
}

impl Nonlinearity {
    pub fn new(kind: Kind) -> Result<Self> {
        Self::with_gain(kind, 1.0)
    }

    pub fn with_gain(kind: Kind, output_gain: f64) -> Result<Self> {
        if !output_gain.is_finite() || output_gain == 0.0 {
            return Err(Error::Config(format!(
                "parameter `output_gain` must be finite and nonzero, got {output_gain}"
            )));
        }
        match &kind {
            Kind::Saturation { k, a } => {
                positive("k", *k)?;
                positive("a", *a)?;
            }
            Kind::Relay { m } => {
                positive("m", *m)?;
            }
            Kind::DeadZone { k, delta } => {
                positive("k", *k)?;
                positive("delta", *delta)?;
            }
            Kind::RelayHysteresis { m, h } => {
                positive("m", *m)?;
                positive("h", *h)?;
            }
            Kind::TanhResistor { v_max, r_max } => {
                positive("v_max", *v_max)?;
                positive("r_max", *r_max)?;
            }
            Kind::TanhInverter { amp, k } => {
                positive("amp", *amp)?;
                positive("k", *k)?;
            }
            Kind::TanhRelaxation { k1, k2, k3 } => {
                positive("k1", *k1)?;
                positive("k2", *k2)?;
                positive("k3", *k3)?;
            }
            Kind::CubicFn { i_ext } => {
                if !i_ext.is_finite() {
                    return Err(Error::Config("parameter `i_ext` must be finite".into()));
                }
            }
            Kind::Hill { alpha, alpha0, n } => {
                positive("alpha", *alpha)?;
                positive("alpha0", *alpha0)?;
                if !(n.is_finite() && *n >= 1.0) {
                    return Err(Error::Config(format!("parameter `n` must be >= 1, got {n}")));
                }
            }
            Kind::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config("parameter `coeffs` must be a nonempty finite list".into()));
                }
            }
            Kind::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::Config(
                        "parameters `xs`/`ys` must be equal-length lists with >= 2 samples".into(),
                    ));
                }
                if xs.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Config("parameter `xs` must be strictly increasing".into()));
                }
                if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Config("tabulated samples must be finite".into()));
                }
            }
        }
        Ok(Self { kind, output_gain })
    }

    /// Build from a kind tag and named parameters, rejecting unknown keys.
    pub fn from_params(kind: &str, params: &BTreeMap<String, ParamValue>) -> Result<Self> {
        let mut seen: Vec<&str> = vec!["output_gain"];
        let scalar = |name: &str| -> Result<f64> {
            match params.get(name) {
                Some(ParamValue::Scalar(v)) => Ok(*v),
                Some(ParamValue::List(_)) => {
                    Err(Error::Config(format!("parameter `{name}` must be a scalar")))
                }
                None => Err(Error::Config(format!(
                    "missing parameter `{name}` for kind `{kind}`"
                ))),
            }
        };
        let list = |name: &str| -> Result<Vec<f64>> {
            match params.get(name) {
                Some(ParamValue::List(v)) => Ok(v.clone()),
                Some(ParamValue::Scalar(_)) => {
                    Err(Error::Config(format!("parameter `{name}` must be a list")))
                }
                None => Err(Error::Config(format!(
                    "missing parameter `{name}` for kind `{kind}`"
                ))),
            }
        };
        let built = match kind {
            "saturation" => {
                seen.extend(["k", "a"]);
                Kind::Saturation { k: scalar("k")?, a: scalar("a")? }
            }
            "relay" => {
                seen.push("m");
                Kind::Relay { m: scalar("m")? }
            }
            "dead_zone" => {
                seen.extend(["k", "delta"]);
                Kind::DeadZone { k: scalar("k")?, delta: scalar("delta")? }
            }
            "relay_hysteresis" => {
                seen.extend(["m", "h"]);
                Kind::RelayHysteresis { m: scalar("m")?, h: scalar("h")? }
            }
            "tanh_resistor" => {
                seen.extend(["v_max", "r_max"]);
                Kind::TanhResistor { v_max: scalar("v_max")?, r_max: scalar("r_max")? }
            }
            "tanh_inverter" => {
                seen.extend(["amp", "k"]);
                Kind::TanhInverter { amp: scalar("amp")?, k: scalar("k")? }
            }
            "tanh_relaxation" => {
                seen.extend(["k1", "k2", "k3"]);
                Kind::TanhRelaxation { k1: scalar("k1")?, k2: scalar("k2")?, k3: scalar("k3")? }
            }
            "cubic_fn" => {
                seen.push("i_ext");
                Kind::CubicFn { i_ext: scalar("i_ext")? }
            }
            "hill" => {
                seen.extend(["alpha", "alpha0", "n"]);
                Kind::Hill { alpha: scalar("alpha")?, alpha0: scalar("alpha0")?, n: scalar("n")? }
            }
            "polynomial" => {
                seen.push("coeffs");
                Kind::Polynomial { coeffs: list("coeffs")? }
            }
            "tabulated" => {
                seen.extend(["xs", "ys"]);
                Kind::Tabulated { xs: list("xs")?, ys: list("ys")? }
            }
            other => return Err(Error::Config(format!("unknown nonlinearity kind `{other}`"))),
        };
        for key in params.keys() {
            if !seen.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown parameter `{key}` for kind `{kind}`"
                )));
            }
        }
        let gain = match params.get("output_gain") {
            Some(ParamValue::Scalar(g)) => *g,
            Some(ParamValue::List(_)) => {
                return Err(Error::Config("parameter `output_gain` must be a scalar".into()))
            }
            None => 1.0,
        };
        Self::with_gain(built, gain)
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Saturation { .. } => "saturation",
            Kind::Relay { .. } => "relay",
            Kind::DeadZone { .. } => "dead_zone",
            Kind::RelayHysteresis { .. } => "relay_hysteresis",
            Kind::TanhResistor { .. } => "tanh_resistor",
            Kind::TanhInverter { .. } => "tanh_inverter",
            Kind::TanhRelaxation { .. } => "tanh_relaxation",
            Kind::CubicFn { .. } => "cubic_fn",
            Kind::Hill { .. } => "hill",
            Kind::Polynomial { .. } => "polynomial",
            Kind::Tabulated { .. } => "tabulated",
        }
    }

    pub fn output_gain(&self) -> f64 {
        self.output_gain
    }

    /// Same nonlinearity with the output gain multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        Self::with_gain(self.kind.clone(), self.output_gain * c)
    }

    pub fn is_hysteretic(&self) -> bool {
        matches!(self.kind, Kind::RelayHysteresis { .. })
    }

    /// Pointwise evaluation of a memoryless kind.
    ///
    /// The hysteretic relay needs a switching state and is rejected here;
    /// use [`eval_hysteretic`](Self::eval_hysteretic) for it.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let y = match &self.kind {
            Kind::Saturation { k, a } => (k * x).clamp(-k * a, k * a),
            Kind::Relay { m } => {
                if x > 0.0 {
                    *m
                } else if x < 0.0 {
                    -*m
                } else {
                    0.0
                }
            }
            Kind::DeadZone { k, delta } => {
                if x > *delta {
                    k * (x - delta)
                } else if x < -*delta {
                    k * (x + delta)
                } else {
                    0.0
                }
            }
            Kind::RelayHysteresis { .. } => {
                return Err(Error::Domain(
                    "relay_hysteresis requires a switching state; use eval_hysteretic".into(),
                ))
            }
            Kind::TanhResistor { v_max, r_max } => -v_max * (r_max / v_max * x).tanh(),
            Kind::TanhInverter { amp, k } => -amp * (k * x).tanh(),
            Kind::TanhRelaxation { k1, k2, k3 } => -k1 * x + k2 * (k3 * x).tanh(),
            Kind::CubicFn { i_ext } => x - x * x * x / 3.0 + i_ext,
            Kind::Hill { alpha, alpha0, n } => alpha / (1.0 + x.abs().powf(*n)) + alpha0,
            Kind::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Kind::Tabulated { xs, ys } => {
                let lo = xs[0];
                let hi = *xs.last().unwrap();
                if x < lo || x > hi {
                    return Err(Error::Extrapolation { x, lo, hi });
                }
                let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                    Ok(i) => return Ok(self.output_gain * ys[i]),
                    Err(i) => i - 1,
                };
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        };
        Ok(self.output_gain * y)
    }

    /// Evaluate the hysteretic relay: output and updated polarity.
    ///
    /// Switches high when `x >= h`, low when `x <= -h`, holds otherwise.
    pub fn eval_hysteretic(&self, x: f64, prev: Polarity) -> Result<(f64, Polarity)> {
        match &self.kind {
            Kind::RelayHysteresis { m, h } => {
                let state = if x >= *h {
                    Polarity::High
                } else if x <= -*h {
                    Polarity::Low
                } else {
                    prev
                };
                let y = match state {
                    Polarity::High => *m,
                    Polarity::Low => -*m,
                };
                Ok((self.output_gain * y, state))
            }
            _ => Err(Error::Domain(format!(
                "eval_hysteretic is only defined for relay_hysteresis, not `{}`",
                self.kind_name()
            ))),
        }
    }

    /// Startup polarity when no previous state exists: sign of the initial
    /// input, high on ties.
    pub fn initial_polarity(&self, x0: f64) -> Polarity {
        if x0 >= 0.0 {
            Polarity::High
        } else {
            Polarity::Low
        }
    }

    /// Classify odd/even symmetry by sampling `±x` over `[0, domain_halfwidth]`.
    pub fn symmetry(&self, domain_halfwidth: f64, n_samples: usize) -> Result<Symmetry> {
        if n_samples < 8 {
            return Err(Error::Config(format!(
                "symmetry check needs n_samples >= 8, got {n_samples}"
            )));
        }
        if !(domain_halfwidth.is_finite() && domain_halfwidth > 0.0) {
            return Err(Error::Config("domain_halfwidth must be positive".into()));
        }
        if self.is_hysteretic() {
            // Branch-dependent output; neither classification applies.
            return Ok(Symmetry::Neither);
        }
        let mut odd_defect: f64 = 0.0;
        let mut even_defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 1..=n_samples {
            let x = domain_halfwidth * i as f64 / n_samples as f64;
            let (fp, fm) = match (self.eval(x), self.eval(-x)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Ok(Symmetry::Neither),
            };
            odd_defect = odd_defect.max((fp + fm).abs());
            even_defect = even_defect.max((fp - fm).abs());
            scale = scale.max(fp.abs()).max(fm.abs());
        }
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        if odd_defect <= tol {
            Ok(Symmetry::Odd)
        } else if even_defect <= tol {
            Ok(Symmetry::Even)
        } else {
            Ok(Symmetry::Neither)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nl(kind: Kind) -> Nonlinearity {
        Nonlinearity::new(kind).unwrap()
    }

    #[test]
    fn saturation_clips_at_ka() {
        let s = nl(Kind::Saturation { k: 2.0, a: 1.0 });
        assert_eq!(s.eval(3.0).unwrap(), 2.0);
        assert_eq!(s.eval(-3.0).unwrap(), -2.0);
        assert_eq!(s.eval(0.25).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_relay_rejected() {
        let err = Nonlinearity::new(Kind::Relay { m: 0.0 }).unwrap_err();
        assert!(err.to_string().contains("`m`"));
    }

    #[test]
    fn hill_repressor_accepts_paper_parameters() {
        let h = Nonlinearity::new(Kind::Hill { alpha: 300.0, alpha0: 0.03, n: 2.0 });
        assert!(h.is_ok());
    }

    #[test]
    fn from_params_rejects_unknown_key() {
        let mut p = BTreeMap::new();
        p.insert("m".to_string(), ParamValue::Scalar(1.0));
        p.insert("bogus".to_string(), ParamValue::Scalar(1.0));
        let err = Nonlinearity::from_params("relay", &p).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn from_params_reports_missing_key() {
        let p = BTreeMap::new();
        let err = Nonlinearity::from_params("saturation", &p).unwrap_err();
        assert!(err.to_string().contains("missing parameter"));
    }

    #[test]
    fn tanh_inverter_is_odd_through_origin() {
        let t = nl(Kind::TanhInverter { amp: 1.0, k: 3.0 });
        assert_eq!(t.eval(0.0).unwrap(), 0.0);
        assert_eq!(t.eval(0.5).unwrap(), -t.eval(-0.5).unwrap());
    }

    #[test]
    fn hysteresis_holds_previous_state_inside_band() {
        let h = nl(Kind::RelayHysteresis { m: 1.0, h: 0.5 });
        let (y, s) = h.eval_hysteretic(0.0, Polarity::High).unwrap();
        assert_eq!(y, 1.0);
        assert_eq!(s, Polarity::High);
        let (y, s) = h.eval_hysteretic(-0.6, s).unwrap();
        assert_eq!(y, -1.0);
        assert_eq!(s, Polarity::Low);
        let (y, _) = h.eval_hysteretic(0.49, s).unwrap();
        assert_eq!(y, -1.0);
    }

    #[test]
    fn relay_outputs_pm_m_off_origin_and_zero_at_it() {
        let r = nl(Kind::Relay { m: 2.5 });
        assert_eq!(r.eval(1e-300).unwrap(), 2.5);
        assert_eq!(r.eval(-1e-300).unwrap(), -2.5);
        assert_eq!(r.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn symmetry_classification() {
        assert_eq!(
            nl(Kind::Saturation { k: 1.0, a: 1.0 }).symmetry(3.0, 64).unwrap(),
            Symmetry::Odd
        );
        assert_eq!(
            nl(Kind::Hill { alpha: 300.0, alpha0: 0.03, n: 2.0 }).symmetry(3.0, 64).unwrap(),
            Symmetry::Even
        );
        // x - x^3/3 via polynomial coefficients
        assert_eq!(
            nl(Kind::Polynomial { coeffs: vec![0.0, 1.0, 0.0, -1.0 / 3.0] })
                .symmetry(2.0, 64)
                .unwrap(),
            Symmetry::Odd
        );
        // biased cubic is neither
        assert_eq!(
            nl(Kind::CubicFn { i_ext: 0.5 }).symmetry(2.0, 64).unwrap(),
            Symmetry::Neither
        );
    }

    #[test]
    fn tabulated_interpolates_and_refuses_extrapolation() {
        let t = nl(Kind::Tabulated { xs: vec![-1.0, 0.0, 1.0], ys: vec![-2.0, 0.0, 2.0] });
        assert_eq!(t.eval(0.5).unwrap(), 1.0);
        assert!(matches!(t.eval(1.5), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn output_gain_flips_a_relay_into_an_inverter() {
        let inv = Nonlinearity::with_gain(Kind::Relay { m: 1.0 }, -1.0).unwrap();
        assert_eq!(inv.eval(2.0).unwrap(), -1.0);
        assert_eq!(inv.eval(-2.0).unwrap(), 1.0);
    }
}
