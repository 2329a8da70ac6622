//! File formats and result rendering.
//!
//! Inputs are JSON documents. Scenario documents carry the keys `n_dims`,
//! `weights`, `coverage_k`, `reward_weights`, `lambda`, `budget` and
//! `production` (an array of `{"family": "power"|"log", "a": .., "p": ..}`).
//! Sweep and manipulation configs are sibling documents whose keys mirror the
//! config fields. Unknown keys are ignored so documents can carry metadata
//! such as a generating seed.
//!
//! Outputs are CSV or JSON. Every float is printed with 9 significant digits
//! (round-half-even), so identical inputs give byte-identical output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::amplification::{AmplificationConfig, AmplificationSeries, CostFamily, LossTemplate};
use crate::analysis::{ComplementarityGrid, LossRecord, VulnerabilityReport};
use crate::campbell::{log_grid, CampbellConfig, ThresholdScan};
use crate::error::{Error, Result, Violation, ViolationKind};
use crate::garp::{GarpVerdict, Observation, ObservationSet};
use crate::model::{validate_scenario, Allocation, ProductionFunction, Scenario, ScenarioSpec};
use crate::solver::OracleComparison;

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::SchemaType {
        key: "document".into(),
        context: format!("line {} column {}: {e}", e.line(), e.column()),
    })
}

fn as_object<'a>(v: &'a Value, key: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::SchemaType {
        key: key.into(),
        context: "expected a JSON object".into(),
    })
}

fn require<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Schema {
        key: key.into(),
        context: format!("missing required key `{key}`"),
    })
}

fn number(v: &Value, key: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::SchemaType {
        key: key.into(),
        context: format!("expected a number, got {v}"),
    })
}

fn integer(v: &Value, key: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::SchemaType {
        key: key.into(),
        context: format!("expected a non-negative integer, got {v}"),
    })
}

fn numbers(v: &Value, key: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::SchemaType {
        key: key.into(),
        context: "expected an array of numbers".into(),
    })?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{key}[{i}]")))
        .collect()
}

fn req_number(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    number(require(obj, key)?, key)
}

fn opt_number(obj: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => number(v, key).map(Some),
    }
}

fn req_integer(obj: &Map<String, Value>, key: &str) -> Result<u64> {
    integer(require(obj, key)?, key)
}

fn production_entry(v: &Value, key: &str, extra: &mut Vec<Violation>) -> Result<ProductionFunction> {
    let obj = as_object(v, key)?;
    let family_key = format!("{key}.family");
    let family = require(obj, "family")
        .map_err(|_| Error::Schema {
            key: family_key.clone(),
            context: "missing production family".into(),
        })?
        .as_str()
        .ok_or_else(|| Error::SchemaType {
            key: family_key.clone(),
            context: "expected \"power\" or \"log\"".into(),
        })?;
    let a_key = format!("{key}.a");
    let a = number(
        obj.get("a").ok_or_else(|| Error::Schema {
            key: a_key.clone(),
            context: "missing production scale".into(),
        })?,
        &a_key,
    )?;
    let p_key = format!("{key}.p");
    let p = match obj.get("p") {
        None | Some(Value::Null) => None,
        Some(v) => Some(number(v, &p_key)?),
    };
    match family {
        "power" => Ok(ProductionFunction::Power {
            a,
            p: p.ok_or_else(|| Error::Schema {
                key: p_key,
                context: "power family needs an exponent".into(),
            })?,
        }),
        "log" => {
            if p.is_some() {
                extra.push(Violation::new(
                    ViolationKind::ProductionParams,
                    p_key,
                    "the log family takes no exponent",
                ));
            }
            Ok(ProductionFunction::Log { a })
        }
        other => Err(Error::SchemaType {
            key: family_key,
            context: format!("unknown production family {other:?}"),
        }),
    }
}

struct ScenarioFields {
    spec: ScenarioSpec,
    extra: Vec<Violation>,
}

fn scenario_fields(obj: &Map<String, Value>, budget_required: bool) -> Result<ScenarioFields> {
    let n_dims = req_integer(obj, "n_dims")? as usize;
    let weights = numbers(require(obj, "weights")?, "weights")?;
    let coverage_k = req_integer(obj, "coverage_k")? as usize;
    let reward_weights = numbers(require(obj, "reward_weights")?, "reward_weights")?;
    let lambda = req_number(obj, "lambda")?;
    let budget = if budget_required {
        req_number(obj, "budget")?
    } else {
        opt_number(obj, "budget")?.unwrap_or(1.0)
    };
    let prod = require(obj, "production")?
        .as_array()
        .ok_or_else(|| Error::SchemaType {
            key: "production".into(),
            context: "expected an array of production functions".into(),
        })?;
    let mut extra = Vec::new();
    let production = prod
        .iter()
        .enumerate()
        .map(|(i, v)| production_entry(v, &format!("production[{i}]"), &mut extra))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioFields {
        spec: ScenarioSpec {
            n_dims,
            weights,
            coverage_k,
            reward_weights,
            lambda,
            budget,
            production,
        },
        extra,
    })
}

fn validated(fields: ScenarioFields) -> Result<Scenario> {
    match (validate_scenario(&fields.spec), fields.extra.is_empty()) {
        (Ok(s), true) => Ok(s),
        (Ok(_), false) => Err(Error::Invalid(fields.extra)),
        (Err(Error::Invalid(mut v)), _) => {
            v.extend(fields.extra);
            Err(Error::Invalid(v))
        }
        (Err(e), _) => Err(e),
    }
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let doc = parse_json(text)?;
    let obj = as_object(&doc, "document")?;
    validated(scenario_fields(obj, true)?)
}

/// Reads and validates a scenario document.
pub fn parse_scenario_file(path: &Path) -> Result<Scenario> {
    parse_scenario_str(&read(path)?)
}

pub fn scenario_document(s: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&s.to_spec()).expect("scenario serializes");
    text.push('\n');
    text
}

/// Writes a scenario with full float precision; parsing it back gives the
/// same scenario.
pub fn write_scenario_file(path: &Path, s: &Scenario) -> Result<()> {
    fs::write(path, scenario_document(s)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn cost_family(v: &Value) -> Result<CostFamily> {
    let obj = as_object(v, "cost_family")?;
    let family = require(obj, "family")
        .map_err(|_| Error::Schema {
            key: "cost_family.family".into(),
            context: "missing cost family".into(),
        })?
        .as_str()
        .ok_or_else(|| Error::SchemaType {
            key: "cost_family.family".into(),
            context: "expected \"linear\", \"power\" or \"quadratic\"".into(),
        })?;
    let get = |k: &str| -> Result<f64> {
        let key = format!("cost_family.{k}");
        number(
            obj.get(k).ok_or_else(|| Error::Schema {
                key: key.clone(),
                context: format!("the {family} cost family needs `{k}`"),
            })?,
            &key,
        )
    };
    match family {
        "linear" => Ok(CostFamily::Linear {
            c0: opt_number(obj, "c0")?.unwrap_or(0.0),
            c1: get("c1")?,
        }),
        "power" => Ok(CostFamily::Power {
            c1: get("c1")?,
            exponent: get("exponent")?,
        }),
        "quadratic" => Ok(CostFamily::Quadratic { c2: get("c2")? }),
        other => Err(Error::SchemaType {
            key: "cost_family.family".into(),
            context: format!("unknown cost family {other:?}"),
        }),
    }
}

/// Sweep config: `alpha`, `unit_cost`, `cost_family`, `t_min`, `t_max`,
/// optional `t_step`, and optional `lambda`/`budget` for the loss template
/// (`budget` defaults to 1).
pub fn parse_sweep_config_str(text: &str) -> Result<AmplificationConfig> {
    let doc = parse_json(text)?;
    let obj = as_object(&doc, "document")?;
    let cfg = AmplificationConfig {
        alpha: req_number(obj, "alpha")?,
        unit_cost: req_number(obj, "unit_cost")?,
        cost_family: cost_family(require(obj, "cost_family")?)?,
        t_min: req_integer(obj, "t_min")?,
        t_max: req_integer(obj, "t_max")?,
        t_step: match obj.get("t_step") {
            None => 1,
            Some(v) => integer(v, "t_step")?,
        },
        loss_template: opt_number(obj, "lambda")?
            .map(|lambda| -> Result<LossTemplate> {
                Ok(LossTemplate {
                    lambda,
                    budget: opt_number(obj, "budget")?.unwrap_or(1.0),
                })
            })
            .transpose()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_sweep_config_file(path: &Path) -> Result<AmplificationConfig> {
    parse_sweep_config_str(&read(path)?)
}

/// Manipulation config together with its capability grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CampbellDocument {
    pub config: CampbellConfig,
    pub b_grid: Vec<f64>,
}

fn b_grid(v: &Value) -> Result<Vec<f64>> {
    if v.is_array() {
        return numbers(v, "b_grid");
    }
    let obj = as_object(v, "b_grid")?;
    let min = number(require(obj, "min").map_err(|_| schema("b_grid.min"))?, "b_grid.min")?;
    let max = number(require(obj, "max").map_err(|_| schema("b_grid.max"))?, "b_grid.max")?;
    let points = integer(require(obj, "points").map_err(|_| schema("b_grid.points"))?, "b_grid.points")? as usize;
    let spacing = obj.get("spacing").and_then(Value::as_str).unwrap_or("log");
    if !(min > 0.0 && max > min) {
        return Err(Error::Grid(format!("need 0 < min < max, got [{min}, {max}]")));
    }
    match spacing {
        "log" => Ok(log_grid(min, max, points)),
        "linear" => Ok((0..points)
            .map(|i| min + (max - min) * i as f64 / (points.max(2) - 1) as f64)
            .collect()),
        other => Err(Error::SchemaType {
            key: "b_grid.spacing".into(),
            context: format!("expected \"log\" or \"linear\", got {other:?}"),
        }),
    }
}

fn schema(key: &str) -> Error {
    Error::Schema {
        key: key.into(),
        context: format!("missing required key `{key}`"),
    }
}

/// Manipulation config: the scenario keys (budget optional), plus `gamma`,
/// `spoof_scale`, `spoof_exponent`, optional `passive_delta`, and `b_grid`
/// given either as an array or as `{"min", "max", "points", "spacing"}`.
pub fn parse_campbell_config_str(text: &str) -> Result<CampbellDocument> {
    let doc = parse_json(text)?;
    let obj = as_object(&doc, "document")?;
    let template = validated(scenario_fields(obj, false)?)?;
    let config = CampbellConfig::new(
        template,
        req_number(obj, "gamma")?,
        req_number(obj, "spoof_scale")?,
        req_number(obj, "spoof_exponent")?,
        opt_number(obj, "passive_delta")?,
    )?;
    let b_grid = b_grid(require(obj, "b_grid")?)?;
    Ok(CampbellDocument { config, b_grid })
}

pub fn parse_campbell_config_file(path: &Path) -> Result<CampbellDocument> {
    parse_campbell_config_str(&read(path)?)
}

/// Observations file: a JSON array of `{"prices": [...], "bundle": [...]}`.
pub fn parse_observations_str(text: &str) -> Result<ObservationSet> {
    let doc = parse_json(text)?;
    let arr = doc.as_array().ok_or_else(|| Error::SchemaType {
        key: "document".into(),
        context: "expected an array of observations".into(),
    })?;
    let observations = arr
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let key = format!("observations[{t}]");
            let obj = as_object(v, &key)?;
            let field = |k: &str| -> Result<Vec<f64>> {
                let full = format!("{key}.{k}");
                numbers(obj.get(k).ok_or_else(|| schema(&full))?, &full)
            };
            Ok(Observation {
                prices: field("prices")?,
                bundle: field("bundle")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationSet::new(observations)
}

pub fn parse_observations_file(path: &Path) -> Result<ObservationSet> {
    parse_observations_str(&read(path)?)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Formats a float with 9 significant digits, `%g` style: positional for
/// decimal exponents in `[-5, 9)`, scientific otherwise, trailing zeros
/// trimmed.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = format_float(x).parse().unwrap_or(x);
            if let Some(num) = serde_json::Number::from_f64(rounded) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes to pretty JSON with every float rounded to 9 significant digits.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("result types serialize");
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
    text.push('\n');
    text
}

/// A result type that can be rendered as CSV as well as JSON.
pub trait Emit: Serialize {
    fn to_csv(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => to_json(self),
        }
    }
}

/// Renders `result` and writes it to `destination`, or stdout when `None`.
pub fn emit_results<T: Emit + ?Sized>(result: &T, format: Format, destination: Option<&Path>) -> Result<()> {
    let text = result.render(format);
    match destination {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}

fn f(x: f64) -> String {
    format_float(x)
}

impl Emit for Allocation {
    fn to_csv(&self) -> String {
        let mut out = String::from("dim,effort,quality,weight_used\n");
        for i in 0..self.effort.len() {
            out += &format!(
                "{},{},{},{}\n",
                i + 1,
                f(self.effort[i]),
                f(self.quality[i]),
                f(self.weights_used[i])
            );
        }
        out += &format!("# mu={}\n# objective={}\n", f(self.multiplier), f(self.objective_value));
        out
    }
}

impl Emit for LossRecord {
    fn to_csv(&self) -> String {
        let mut out = String::from("dim,effort_first_best,effort_agent,quality_first_best,quality_agent\n");
        for i in 0..self.agent.effort.len() {
            out += &format!(
                "{},{},{},{},{}\n",
                i + 1,
                f(self.first_best.effort[i]),
                f(self.agent.effort[i]),
                f(self.first_best.quality[i]),
                f(self.agent.quality[i])
            );
        }
        out += &format!(
            "# loss={}\n# mu_first_best={}\n# mu_agent={}\n",
            f(self.loss),
            f(self.first_best.multiplier),
            f(self.agent.multiplier)
        );
        out
    }
}

impl Emit for VulnerabilityReport {
    fn to_csv(&self) -> String {
        let mut out = String::from("rank,dim,distortion,contractible,classification\n");
        for d in &self.dimensions {
            out += &format!(
                "{},{},{},{},{}\n",
                d.rank,
                d.dimension,
                f(d.distortion),
                d.contractible,
                d.classification.as_str()
            );
        }
        out += &format!(
            "# lambda={}\n# kappa={}\n# fingerprint={}\n",
            f(self.alignment_gap),
            f(self.incompleteness),
            self.scenario_fingerprint
        );
        out
    }
}

impl Emit for AmplificationSeries {
    fn to_csv(&self) -> String {
        let mut out = String::from("T,N,K,kappa,ratio,loss\n");
        for r in &self.rows {
            out += &format!(
                "{},{},{},{},{},{}\n",
                r.t,
                r.n,
                r.k,
                f(r.kappa),
                f(r.ratio),
                r.loss.map(f).unwrap_or_default()
            );
        }
        out
    }
}

impl Emit for ComplementarityGrid {
    fn to_csv(&self) -> String {
        let mut out = String::from("K,kappa,lambda,loss\n");
        for (row, &k) in self.k_values.iter().enumerate() {
            for (col, &l) in self.lambda_values.iter().enumerate() {
                out += &format!(
                    "{},{},{},{}\n",
                    k,
                    f(self.kappa_of(k)),
                    f(l),
                    f(self.loss[row][col])
                );
            }
        }
        for (a, row) in self.mixed.iter().enumerate() {
            for (b, &m) in row.iter().enumerate() {
                out += &format!(
                    "# mixed kappa={}..{} lambda={}..{} value={}\n",
                    f(self.kappa_axis[a]),
                    f(self.kappa_axis[a + 1]),
                    f(self.lambda_axis[b]),
                    f(self.lambda_axis[b + 1]),
                    f(m)
                );
            }
        }
        out
    }
}

impl Emit for ThresholdScan {
    fn to_csv(&self) -> String {
        let mut out = String::from("B,m_star,k_eff,welfare,perceived\n");
        for p in &self.points {
            out += &format!(
                "{},{},{},{},{}\n",
                f(p.budget),
                f(p.manipulation),
                f(p.effective_coverage),
                f(p.welfare),
                f(p.perceived_value)
            );
        }
        out += &format!("# payoff_model={}\n", self.payoff_model);
        match &self.threshold {
            Some(t) => {
                out += &format!(
                    "# threshold grid=[{},{}] bracket=[{},{}] estimate={}\n",
                    f(t.grid_lower),
                    f(t.grid_upper),
                    f(t.lower),
                    f(t.upper),
                    f(t.estimate)
                )
            }
            None => out += "# threshold=none\n",
        }
        match &self.non_monotone_witness {
            Some(w) => {
                out += &format!(
                    "# welfare_dip B={}..{} W={}..{}\n",
                    f(w.budget_before),
                    f(w.budget_after),
                    f(w.welfare_before),
                    f(w.welfare_after)
                )
            }
            None => out += "# welfare_dip=none\n",
        }
        out
    }
}

impl Emit for GarpVerdict {
    fn to_csv(&self) -> String {
        match self {
            GarpVerdict::Consistent => "verdict,cycle\nconsistent,\n".into(),
            GarpVerdict::Violation { cycle } => {
                let c: Vec<String> = cycle.iter().map(ToString::to_string).collect();
                format!("verdict,cycle\nviolation,{}\n", c.join(" "))
            }
        }
    }
}

/// Solver-versus-oracle results for both weight vectors of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub grid_points: usize,
    pub first_best: OracleComparison,
    pub agent: OracleComparison,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.first_best.within_tolerance && self.agent.within_tolerance
    }
}

impl Emit for OracleReport {
    fn to_csv(&self) -> String {
        let mut out =
            String::from("problem,solver_value,oracle_value,delta,max_effort_gap,tolerance,pass\n");
        for (name, c) in [("first_best", &self.first_best), ("agent", &self.agent)] {
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                name,
                f(c.solver_value),
                f(c.oracle_value),
                f(c.delta),
                f(c.max_effort_gap),
                f(c.tolerance),
                c.within_tolerance
            );
        }
        out += &format!("# grid_points={}\n", self.grid_points);
        out
    }
}

impl ComplementarityGrid {
    fn kappa_of(&self, k: usize) -> f64 {
        // kappa_axis is sorted ascending, i.e. by descending K.
        let mut ks: Vec<usize> = self.k_values.clone();
        ks.sort_unstable();
        ks.dedup();
        let pos = ks.iter().rev().position(|&x| x == k).expect("k is on the axis");
        self.kappa_axis[pos]
    }
}
