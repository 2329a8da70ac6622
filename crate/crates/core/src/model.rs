//! Domain types shared by every other module: production technologies,
//! validated scenarios, allocations, and the effective-weight transform that
//! turns a principal's weights and an evaluator's reward weights into the
//! weights that actually drive the agent.
//!
//! Dimensions are stored zero-based. The evaluated (contractible) dimensions
//! are always the first `K` coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, ViolationKind};

/// Smallest admissible alignment gap. The largest is `1 - LAMBDA_MARGIN`.
pub const LAMBDA_MARGIN: f64 = 1e-9;

/// Per-dimension production technology `q = g(e)`.
///
/// Both families are strictly increasing and strictly concave with `g(0) = 0`.
/// The power family satisfies the Inada condition (`g'(0+) = +inf`), so it
/// always yields interior solutions. The log family has a finite marginal
/// product at zero and can produce corner solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ProductionFunction {
    /// `g(e) = a * e^p` with `a > 0`, `0 < p < 1`.
    Power { a: f64, p: f64 },
    /// `g(e) = a * ln(1 + e)` with `a > 0`.
    Log { a: f64 },
}

/// What [`ProductionFunction::query`] should evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductionQuery {
    Value,
    Deriv,
    InvDeriv,
}

impl ProductionFunction {
    pub fn power(a: f64, p: f64) -> Result<Self> {
        let pf = ProductionFunction::Power { a, p };
        pf.checked()
    }

    pub fn log(a: f64) -> Result<Self> {
        let pf = ProductionFunction::Log { a };
        pf.checked()
    }

    /// The square-root technology `g(e) = sqrt(e)` used by most fixtures.
    pub fn sqrt() -> Self {
        ProductionFunction::Power { a: 1.0, p: 0.5 }
    }

    fn checked(self) -> Result<Self> {
        let v = self.violations("production");
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub(crate) fn violations(&self, field: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let a = self.scale();
        if !(a.is_finite() && a > 0.0) {
            out.push(Violation::new(
                ViolationKind::ProductionParams,
                format!("{field}.a"),
                format!("scale must be finite and > 0, got {a}"),
            ));
        }
        if let ProductionFunction::Power { p, .. } = *self {
            if !(p > 0.0 && p < 1.0) {
                out.push(Violation::new(
                    ViolationKind::ProductionParams,
                    format!("{field}.p"),
                    format!("power exponent must lie in (0, 1), got {p}"),
                ));
            }
        }
        out
    }

    pub fn scale(&self) -> f64 {
        match *self {
            ProductionFunction::Power { a, .. } | ProductionFunction::Log { a } => a,
        }
    }

    pub fn satisfies_inada(&self) -> bool {
        matches!(self, ProductionFunction::Power { .. })
    }

    /// `g(e)`.
    pub fn value(&self, e: f64) -> f64 {
        match *self {
            ProductionFunction::Power { a, p } => {
                if e <= 0.0 {
                    0.0
                } else {
                    a * e.powf(p)
                }
            }
            ProductionFunction::Log { a } => a * e.max(0.0).ln_1p(),
        }
    }

    /// `g'(e)`. Returns `f64::INFINITY` for the power family at `e = 0`; that
    /// sentinel never ends up inside an [`Allocation`].
    pub fn deriv(&self, e: f64) -> f64 {
        match *self {
            ProductionFunction::Power { a, p } => {
                if e <= 0.0 {
                    f64::INFINITY
                } else {
                    a * p * e.powf(p - 1.0)
                }
            }
            ProductionFunction::Log { a } => a / (1.0 + e.max(0.0)),
        }
    }

    /// `g'(0)`: infinite under Inada, `a` for the log family.
    pub fn marginal_at_zero(&self) -> f64 {
        self.deriv(0.0)
    }

    /// The effort `e >= 0` with `g'(e) = x`, clamped to 0 when `x >= g'(0)`.
    ///
    /// Callers must pass `x > 0`; [`ProductionFunction::query`] is the checked
    /// entry point.
    pub fn inv_deriv(&self, x: f64) -> f64 {
        match *self {
            ProductionFunction::Power { a, p } => (x / (a * p)).powf(1.0 / (p - 1.0)),
            ProductionFunction::Log { a } => (a / x - 1.0).max(0.0),
        }
    }

    /// Checked evaluation of value, derivative or inverse derivative.
    pub fn query(&self, mode: ProductionQuery, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("argument must be >= 0, got {x}")));
        }
        match mode {
            ProductionQuery::Value => Ok(self.value(x)),
            ProductionQuery::Deriv => Ok(self.deriv(x)),
            ProductionQuery::InvDeriv => {
                if x <= 0.0 || !x.is_finite() {
                    Err(Error::Domain(format!(
                        "inverse derivative needs a finite marginal product > 0, got {x}"
                    )))
                } else {
                    Ok(self.inv_deriv(x))
                }
            }
        }
    }
}

/// Untyped scenario document as it appears on disk, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_dims: usize,
    pub weights: Vec<f64>,
    pub coverage_k: usize,
    pub reward_weights: Vec<f64>,
    pub lambda: f64,
    pub budget: f64,
    pub production: Vec<ProductionFunction>,
}

/// A validated model instance.
///
/// Invariants: `N >= 2`, `1 <= K < N`, `lambda` in `[1e-9, 1 - 1e-9]`,
/// `B > 0`, every principal and reward weight strictly positive, and one
/// admissible production function per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    weights: Vec<f64>,
    coverage: usize,
    reward_weights: Vec<f64>,
    alignment_gap: f64,
    budget: f64,
    production: Vec<ProductionFunction>,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks every constraint on a raw scenario and reports all violations.
pub fn validate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    let mut v = Vec::new();
    let n = spec.n_dims;
    let k = spec.coverage_k;

    if n < 2 {
        v.push(Violation::new(
            ViolationKind::Axiom1,
            "n_dims",
            format!("need at least 2 quality dimensions, got {n}"),
        ));
    }
    if k < 1 || k >= n {
        v.push(Violation::new(
            ViolationKind::Axiom2,
            "coverage_k",
            format!("coverage must satisfy 1 <= K < N, got K={k}, N={n}"),
        ));
    }
    let lambda = spec.lambda;
    if !(LAMBDA_MARGIN..=1.0 - LAMBDA_MARGIN).contains(&lambda) {
        v.push(Violation::new(
            ViolationKind::AlignmentGapRange,
            "lambda",
            format!("alignment gap must lie in (0, 1), got {lambda}"),
        ));
    }
    if !positive(spec.budget) {
        v.push(Violation::new(
            ViolationKind::Positivity,
            "budget",
            format!("budget must be > 0, got {}", spec.budget),
        ));
    }
    if spec.weights.len() != n {
        v.push(Violation::new(
            ViolationKind::Shape,
            "weights",
            format!("expected {n} principal weights, got {}", spec.weights.len()),
        ));
    }
    for (i, &w) in spec.weights.iter().enumerate() {
        if !positive(w) {
            v.push(Violation::new(
                ViolationKind::Positivity,
                format!("weights[{i}]"),
                format!("principal weight must be > 0, got {w}"),
            ));
        }
    }
    if spec.reward_weights.len() != k {
        v.push(Violation::new(
            ViolationKind::Shape,
            "reward_weights",
            format!("expected {k} reward weights, got {}", spec.reward_weights.len()),
        ));
    }
    for (i, &r) in spec.reward_weights.iter().enumerate() {
        if !positive(r) {
            v.push(Violation::new(
                ViolationKind::Positivity,
                format!("reward_weights[{i}]"),
                format!("reward weight must be > 0, got {r}"),
            ));
        }
    }
    if spec.production.len() != n {
        v.push(Violation::new(
            ViolationKind::Shape,
            "production",
            format!("expected {n} production functions, got {}", spec.production.len()),
        ));
    }
    for (i, pf) in spec.production.iter().enumerate() {
        v.extend(pf.violations(&format!("production[{i}]")));
    }

    if !v.is_empty() {
        return Err(Error::Invalid(v));
    }
    Ok(Scenario {
        weights: spec.weights.clone(),
        coverage: k,
        reward_weights: spec.reward_weights.clone(),
        alignment_gap: lambda,
        budget: spec.budget,
        production: spec.production.clone(),
    })
}

impl Scenario {
    pub fn new(
        weights: Vec<f64>,
        coverage: usize,
        reward_weights: Vec<f64>,
        alignment_gap: f64,
        budget: f64,
        production: Vec<ProductionFunction>,
    ) -> Result<Self> {
        validate_scenario(&ScenarioSpec {
            n_dims: weights.len(),
            weights,
            coverage_k: coverage,
            reward_weights,
            lambda: alignment_gap,
            budget,
            production,
        })
    }

    /// Same production function on every dimension.
    pub fn uniform(
        weights: Vec<f64>,
        coverage: usize,
        reward_weights: Vec<f64>,
        alignment_gap: f64,
        budget: f64,
        production: ProductionFunction,
    ) -> Result<Self> {
        let n = weights.len();
        Self::new(
            weights,
            coverage,
            reward_weights,
            alignment_gap,
            budget,
            vec![production; n],
        )
    }

    pub fn to_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            n_dims: self.n_dims(),
            weights: self.weights.clone(),
            coverage_k: self.coverage,
            reward_weights: self.reward_weights.clone(),
            lambda: self.alignment_gap,
            budget: self.budget,
            production: self.production.clone(),
        }
    }

    pub fn n_dims(&self) -> usize {
        self.weights.len()
    }

    pub fn coverage(&self) -> usize {
        self.coverage
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn reward_weights(&self) -> &[f64] {
        &self.reward_weights
    }

    pub fn alignment_gap(&self) -> f64 {
        self.alignment_gap
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn production(&self) -> &[ProductionFunction] {
        &self.production
    }

    pub fn is_contractible(&self, dim: usize) -> bool {
        dim < self.coverage
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        let mut spec = self.to_spec();
        spec.budget = budget;
        validate_scenario(&spec)
    }

    pub fn with_alignment_gap(&self, lambda: f64) -> Result<Self> {
        let mut spec = self.to_spec();
        spec.lambda = lambda;
        validate_scenario(&spec)
    }

    /// Changes the coverage to `k`. Reward weights are truncated, or extended
    /// with the principal's own weights for newly evaluated dimensions.
    pub fn with_coverage(&self, k: usize) -> Result<Self> {
        let mut spec = self.to_spec();
        spec.reward_weights.truncate(k);
        while spec.reward_weights.len() < k.min(spec.weights.len()) {
            let i = spec.reward_weights.len();
            spec.reward_weights.push(spec.weights[i]);
        }
        spec.coverage_k = k;
        validate_scenario(&spec)
    }

    /// Weights driving the agent: `lambda*r_i + (1-lambda)*w_i` on evaluated
    /// dimensions and `(1-lambda)*w_i` elsewhere.
    pub fn effective_weights(&self) -> Vec<f64> {
        let lambda = self.alignment_gap;
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if i < self.coverage {
                    lambda * self.reward_weights[i] + (1.0 - lambda) * w
                } else {
                    (1.0 - lambda) * w
                }
            })
            .collect()
    }

    /// Contract incompleteness `(N - K) / N`.
    pub fn incompleteness(&self) -> f64 {
        (self.n_dims() - self.coverage) as f64 / self.n_dims() as f64
    }
}

/// Convenience free-function forms of the scenario accessors.
pub fn effective_weights(s: &Scenario) -> Vec<f64> {
    s.effective_weights()
}

pub fn incompleteness(s: &Scenario) -> f64 {
    s.incompleteness()
}

/// An effort vector together with the multiplier and quality it implies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub effort: Vec<f64>,
    /// Budget multiplier `mu`. Zero when the allocated budget is zero.
    pub multiplier: f64,
    pub quality: Vec<f64>,
    /// `sum_i weights_used[i] * g_i(effort[i])`.
    pub objective_value: f64,
    pub weights_used: Vec<f64>,
}

impl Allocation {
    pub(crate) fn from_effort(
        effort: Vec<f64>,
        multiplier: f64,
        weights: &[f64],
        production: &[ProductionFunction],
    ) -> Self {
        let quality: Vec<f64> = effort
            .iter()
            .zip(production)
            .map(|(&e, pf)| pf.value(e))
            .collect();
        let objective_value = quality.iter().zip(weights).map(|(q, c)| q * c).sum();
        Allocation {
            effort,
            multiplier,
            quality,
            objective_value,
            weights_used: weights.to_vec(),
        }
    }

    pub fn total_effort(&self) -> f64 {
        self.effort.iter().sum()
    }
}
