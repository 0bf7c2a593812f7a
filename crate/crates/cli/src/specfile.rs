//! Line-oriented oscillator spec files.
//!
//! ```text
//! # either a bundled case study...
//! preset = "relaxation_two_tau"
//!
//! # ...or an explicit loop:
//! name = "custom"
//! [loop]
//! sign = 1
//! bias_mode = "off"
//! [linear]
//! num = [1.0, 1e-3]
//! den = [1.0, 2.5e-4, 2.5e-7]
//! rho = 0
//! [nonlinearity]
//! kind = "tanh_relaxation"
//! k1 = 2.0
//! k2 = 6.25
//! k3 = 0.4
//! [predict]
//! a_range = [1e-2, 1e2]
//! omega_range = [1, 1e6]
//! [simulate]
//! model = "relaxation_two_tau"
//! tau_f = 2.5e-4
//! tau_s = 1e-3
//! k1 = 2.0
//! k2 = 6.25
//! k3 = 0.4
//! t_max = 0.5
//! dt = 1e-6
//! nodes = "vo,vi"
//! ```
//!
//! Sections are `[loop]`, `[linear]`, `[nonlinearity]`, `[predict]`,
//! `[simulate]`; values are numbers, quoted strings, or bracketed numeric
//! lists. Unknown keys are rejected with their line number. A spec carries
//! either `preset = "..."` or explicit sections, never both.

use std::collections::BTreeMap;

use oscdf_core::error::{Error, Result};
use oscdf_core::nonlin::ParamValue;
use oscdf_core::predict::{BiasMode, LoopSpec, NodePath, SolveOptions};
use oscdf_core::presets::{self, PredictRoute};
use oscdf_core::sim::{Method, ModelKind, OscModel};
use oscdf_core::{LinearBlock, Nonlinearity};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Str(String),
    List(Vec<f64>),
}

type Section = BTreeMap<String, (Value, usize)>;

/// Parsed but not yet validated spec file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecFile {
    pub top: Section,
    pub sections: BTreeMap<String, Section>,
}

const SECTION_NAMES: [&str; 5] = ["loop", "linear", "nonlinearity", "predict", "simulate"];

fn syntax(line: usize, col: usize, msg: &str) -> Error {
    Error::Config(format!("line {line}, column {col}: {msg}"))
}

fn parse_value(raw: &str, line: usize, col: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(syntax(line, col, "missing value"));
    }
    if let Some(stripped) = raw.strip_prefix('"') {
        let inner = stripped
            .strip_suffix('"')
            .ok_or_else(|| syntax(line, col, "unterminated string"))?;
        if inner.contains('"') {
            return Err(syntax(line, col, "embedded quote in string"));
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if let Some(stripped) = raw.strip_prefix('[') {
        let inner = stripped
            .strip_suffix(']')
            .ok_or_else(|| syntax(line, col, "unterminated list"))?;
        let mut out = Vec::new();
        for (i, tok) in inner.split(',').enumerate() {
            let tok = tok.trim();
            if tok.is_empty() {
                if inner.trim().is_empty() && i == 0 {
                    break;
                }
                return Err(syntax(line, col, "empty list element"));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| syntax(line, col, &format!("malformed number `{tok}`")))?;
            if !v.is_finite() {
                return Err(syntax(line, col, &format!("non-finite number `{tok}`")));
            }
            out.push(v);
        }
        return Ok(Value::List(out));
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| syntax(line, col, &format!("malformed number `{raw}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, col, &format!("non-finite number `{raw}`")));
    }
    Ok(Value::Num(v))
}

/// Parse the spec grammar, reporting syntax errors with line and column.
pub fn parse(text: &str) -> Result<SpecFile> {
    let mut spec = SpecFile::default();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        // strip comments outside quotes
        let mut in_quote = false;
        let mut content = raw_line;
        for (i, ch) in raw_line.char_indices() {
            match ch {
                '"' => in_quote = !in_quote,
                '#' if !in_quote => {
                    content = &raw_line[..i];
                    break;
                }
                _ => {}
            }
        }
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(stripped) = trimmed.strip_prefix('[') {
            let name = stripped
                .strip_suffix(']')
                .ok_or_else(|| syntax(line_no, 1, "unterminated section header"))?
                .trim();
            if !SECTION_NAMES.contains(&name) {
                return Err(syntax(line_no, 2, &format!("unknown section `{name}`")));
            }
            if spec.sections.contains_key(name) {
                return Err(syntax(line_no, 1, &format!("duplicate section `{name}`")));
            }
            spec.sections.insert(name.to_string(), Section::new());
            current = Some(name.to_string());
            continue;
        }
        let eq = trimmed
            .find('=')
            .ok_or_else(|| syntax(line_no, 1, "expected `key = value`"))?;
        let key = trimmed[..eq].trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        {
            return Err(syntax(line_no, 1, &format!("bad key `{key}`")));
        }
        let col = raw_line.find('=').map(|i| i + 2).unwrap_or(1);
        let value = parse_value(&trimmed[eq + 1..], line_no, col)?;
        let target = match &current {
            Some(name) => spec.sections.get_mut(name).unwrap(),
            None => &mut spec.top,
        };
        if target.contains_key(key) {
            return Err(syntax(line_no, 1, &format!("duplicate key `{key}`")));
        }
        target.insert(key.to_string(), (value, line_no));
    }
    Ok(spec)
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Num(x) => format!("{x}"),
        Value::Str(s) => format!("\"{s}\""),
        Value::List(xs) => {
            let inner: Vec<String> = xs.iter().map(|x| format!("{x}")).collect();
            format!("[{}]", inner.join(", "))
        }
    }
}

/// Canonical serialization: top-level keys first, sections in fixed order,
/// keys alphabetical. `parse(serialize(s)) == s` for any parsed `s`.
pub fn serialize(spec: &SpecFile) -> String {
    let mut out = String::new();
    for (k, (v, _)) in &spec.top {
        out.push_str(&format!("{k} = {}\n", fmt_value(v)));
    }
    for name in SECTION_NAMES {
        if let Some(section) = spec.sections.get(name) {
            out.push_str(&format!("\n[{name}]\n"));
            for (k, (v, _)) in section {
                out.push_str(&format!("{k} = {}\n", fmt_value(v)));
            }
        }
    }
    out
}

/// Simulation half of a resolved run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: OscModel,
    pub x0: Vec<f64>,
    pub method: Method,
    pub t_max: f64,
    pub settle: f64,
    pub probe_nodes: Vec<String>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub loop_spec: LoopSpec,
    pub solve: SolveOptions,
    pub route: PredictRoute,
    pub sim: Option<SimConfig>,
    pub report_nodes: Vec<(String, NodePath)>,
    pub compare_node: String,
    pub amplitude_tol: f64,
    pub period_tol: f64,
    pub notes: Vec<String>,
}

fn known_keys(section: &Section, allowed: &[&str], name: &str) -> Result<()> {
    for (k, (_, line)) in section {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Config(format!(
                "line {line}: unknown key `{k}` in [{name}]"
            )));
        }
    }
    Ok(())
}

fn get_num(section: &Section, key: &str) -> Result<Option<f64>> {
    match section.get(key) {
        Some((Value::Num(v), _)) => Ok(Some(*v)),
        Some((_, line)) => Err(Error::Config(format!("line {line}: `{key}` must be a number"))),
        None => Ok(None),
    }
}

fn get_str(section: &Section, key: &str) -> Result<Option<String>> {
    match section.get(key) {
        Some((Value::Str(v), _)) => Ok(Some(v.clone())),
        Some((_, line)) => Err(Error::Config(format!("line {line}: `{key}` must be a string"))),
        None => Ok(None),
    }
}

fn get_list(section: &Section, key: &str) -> Result<Option<Vec<f64>>> {
    match section.get(key) {
        Some((Value::List(v), _)) => Ok(Some(v.clone())),
        Some((_, line)) => Err(Error::Config(format!("line {line}: `{key}` must be a list"))),
        None => Ok(None),
    }
}

fn get_pair(section: &Section, key: &str) -> Result<Option<(f64, f64)>> {
    match get_list(section, key)? {
        Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
        Some(_) => Err(Error::Config(format!("`{key}` must be a two-element list"))),
        None => Ok(None),
    }
}

/// Resolve a parsed spec into a runnable configuration.
pub fn resolve(spec: &SpecFile) -> Result<RunConfig> {
    known_keys(&spec.top, &["name", "preset"], "top level")?;
    let preset_name = get_str(&spec.top, "preset")?;
    if let Some(pname) = preset_name {
        if !spec.sections.is_empty() {
            return Err(Error::Config(
                "spec carries both `preset` and explicit sections; use one or the other".into(),
            ));
        }
        let p = presets::preset(&pname)?;
        return Ok(RunConfig {
            name: p.name.to_string(),
            loop_spec: p.loop_spec,
            solve: p.solve,
            route: p.route,
            sim: Some(SimConfig {
                model: p.model,
                x0: p.x0,
                method: p.method,
                t_max: p.t_max,
                settle: p.settle_fraction,
                probe_nodes: p.probe_nodes,
            }),
            report_nodes: p.report_nodes,
            compare_node: p.compare_node,
            amplitude_tol: p.amplitude_tol,
            period_tol: p.period_tol,
            notes: p.notes.iter().map(|s| s.to_string()).collect(),
        });
    }

    let name = get_str(&spec.top, "name")?.unwrap_or_else(|| "custom".to_string());
    let missing = |s: &str| Error::Config(format!("explicit spec needs a [{s}] section"));

    let linear_sec = spec.sections.get("linear").ok_or_else(|| missing("linear"))?;
    known_keys(linear_sec, &["num", "den", "rho"], "linear")?;
    let num = get_list(linear_sec, "num")?.ok_or_else(|| Error::Config("missing `num`".into()))?;
    let den = get_list(linear_sec, "den")?.ok_or_else(|| Error::Config("missing `den`".into()))?;
    let rho = get_num(linear_sec, "rho")?.unwrap_or(0.0);
    let linear = LinearBlock::new(num, den, rho)?;

    let nl_sec = spec.sections.get("nonlinearity").ok_or_else(|| missing("nonlinearity"))?;
    let kind = get_str(nl_sec, "kind")?.ok_or_else(|| Error::Config("missing `kind`".into()))?;
    let mut params: BTreeMap<String, ParamValue> = BTreeMap::new();
    for (k, (v, line)) in nl_sec {
        if k == "kind" {
            continue;
        }
        let pv = match v {
            Value::Num(x) => ParamValue::Scalar(*x),
            Value::List(xs) => ParamValue::List(xs.clone()),
            Value::Str(_) => {
                return Err(Error::Config(format!(
                    "line {line}: nonlinearity parameter `{k}` must be numeric"
                )))
            }
        };
        params.insert(k.clone(), pv);
    }
    let nonlinearity = Nonlinearity::from_params(&kind, &params)?;

    let loop_sec = spec.sections.get("loop").ok_or_else(|| missing("loop"))?;
    known_keys(loop_sec, &["sign", "bias_mode"], "loop")?;
    let sign = get_num(loop_sec, "sign")?.unwrap_or(1.0);
    let bias_mode = match get_str(loop_sec, "bias_mode")?.as_deref() {
        None | Some("off") => BiasMode::Off,
        Some("dc_balance") => BiasMode::DcBalance,
        Some(other) => {
            return Err(Error::Config(format!(
                "bias_mode must be \"off\" or \"dc_balance\", got \"{other}\""
            )))
        }
    };
    let loop_spec = LoopSpec::new(linear, nonlinearity, sign, bias_mode)?;

    let mut solve = SolveOptions::new((1e-3, 1e3), (1e-2, 1e6));
    if let Some(pred) = spec.sections.get("predict") {
        known_keys(pred, &["a_range", "omega_range", "grid", "tol", "samples"], "predict")?;
        if let Some(r) = get_pair(pred, "a_range")? {
            solve.a_range = r;
        }
        if let Some(r) = get_pair(pred, "omega_range")? {
            solve.omega_range = r;
        }
        if let Some(g) = get_num(pred, "grid")? {
            solve.grid = g as usize;
        }
        if let Some(t) = get_num(pred, "tol")? {
            solve.tol = t;
        }
        if let Some(s) = get_num(pred, "samples")? {
            solve.samples = s as usize;
        }
    }

    let sim = match spec.sections.get("simulate") {
        None => None,
        Some(sim_sec) => {
            let model_name = get_str(sim_sec, "model")?
                .ok_or_else(|| Error::Config("missing `model` in [simulate]".into()))?;
            let kind = ModelKind::parse(&model_name)?;
            let control_keys =
                ["model", "x0", "method", "dt", "rel_tol", "abs_tol", "t_max", "nodes", "settle"];
            let mut model_params: BTreeMap<String, f64> = BTreeMap::new();
            for (k, (v, line)) in sim_sec {
                if control_keys.contains(&k.as_str()) {
                    continue;
                }
                match v {
                    Value::Num(x) => {
                        model_params.insert(k.clone(), *x);
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "line {line}: model parameter `{k}` must be a number"
                        )))
                    }
                }
            }
            let model = OscModel::preset(kind, &model_params)?;
            let x0 = match get_list(sim_sec, "x0")? {
                Some(v) => v,
                None => model.default_initial_state(),
            };
            let t_max = get_num(sim_sec, "t_max")?
                .ok_or_else(|| Error::Config("missing `t_max` in [simulate]".into()))?;
            let method = match (get_str(sim_sec, "method")?.as_deref(), get_num(sim_sec, "dt")?) {
                (Some("rk4"), Some(dt)) | (None, Some(dt)) => Method::Rk4 { dt },
                (Some("rk4"), None) => {
                    return Err(Error::Config("rk4 needs a `dt`".into()));
                }
                (Some("rk45"), _) | (None, None) => Method::Rk45 {
                    rel_tol: get_num(sim_sec, "rel_tol")?.unwrap_or(1e-8),
                    abs_tol: get_num(sim_sec, "abs_tol")?.unwrap_or(1e-10),
                },
                (Some(other), _) => {
                    return Err(Error::Config(format!(
                        "method must be \"rk4\" or \"rk45\", got \"{other}\""
                    )))
                }
            };
            let probe_nodes = match get_str(sim_sec, "nodes")? {
                Some(s) => s.split(',').map(|t| t.trim().to_string()).collect(),
                None => model.node_names().to_vec(),
            };
            for node in &probe_nodes {
                if !model.node_names().iter().any(|n| n == node) {
                    return Err(Error::Config(format!("unknown node `{node}` for `{model_name}`")));
                }
            }
            let settle = get_num(sim_sec, "settle")?.unwrap_or(0.5);
            Some(SimConfig { model, x0, method, t_max, settle, probe_nodes })
        }
    };

    let compare_node = sim
        .as_ref()
        .and_then(|s| s.probe_nodes.first().cloned())
        .unwrap_or_default();
    Ok(RunConfig {
        name,
        loop_spec,
        solve,
        route: PredictRoute::LoopSolve,
        sim,
        report_nodes: vec![("nl_input".to_string(), NodePath::Input)],
        compare_node,
        amplitude_tol: 0.1,
        period_tol: 0.1,
        notes: Vec::new(),
    })
}
