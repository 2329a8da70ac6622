//! Coverage collapse as the tool count grows.
//!
//! The quality-dimension count grows at least like `T + alpha * T(T-1)/2`
//! while evaluation coverage is capped by `C(T) / c`. Both bounds are taken
//! with equality here: `N` at its lower bound and `K` at its upper bound,
//! which is the most evaluation-friendly world the bounds allow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::model::{ProductionFunction, LAMBDA_MARGIN};
use crate::solver::solve_allocation;

/// Largest `N(T_max)` for which a loss sweep will run the solver.
pub const LOSS_SWEEP_MAX_DIMS: u64 = 5000;

// Absorbs round-off in alpha * pairs before ceil/floor, e.g. 0.7 * 10.
const ROUNDING_SLACK: f64 = 1e-9;

/// Evaluation engineering budget `C(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CostFamily {
    /// `C(T) = c0 + c1 * T`.
    Linear { c0: f64, c1: f64 },
    /// `C(T) = c1 * T^exponent` with `0 < exponent < 2`.
    Power { c1: f64, exponent: f64 },
    /// `C(T) = c2 * T^2`, the quadratic escape case.
    Quadratic { c2: f64 },
}

impl CostFamily {
    pub fn cost(&self, t: u64) -> f64 {
        let t = t as f64;
        match *self {
            CostFamily::Linear { c0, c1 } => c0 + c1 * t,
            CostFamily::Power { c1, exponent } => c1 * t.powf(exponent),
            CostFamily::Quadratic { c2 } => c2 * t * t,
        }
    }

    /// `true` for the sub-quadratic families under which coverage collapses.
    pub fn is_subquadratic(&self) -> bool {
        !matches!(self, CostFamily::Quadratic { .. })
    }

    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut need = |ok: bool, field: &str, msg: String| {
            if !ok {
                v.push(Violation::new(ViolationKind::ConfigRange, field, msg));
            }
        };
        match *self {
            CostFamily::Linear { c0, c1 } => {
                need(c0.is_finite() && c0 >= 0.0, "cost_family.c0", format!("c0 must be >= 0, got {c0}"));
                need(c1.is_finite() && c1 > 0.0, "cost_family.c1", format!("c1 must be > 0, got {c1}"));
            }
            CostFamily::Power { c1, exponent } => {
                need(c1.is_finite() && c1 > 0.0, "cost_family.c1", format!("c1 must be > 0, got {c1}"));
                need(
                    exponent > 0.0 && exponent < 2.0,
                    "cost_family.exponent",
                    format!("exponent must lie in (0, 2), got {exponent}"),
                );
            }
            CostFamily::Quadratic { c2 } => {
                need(c2.is_finite() && c2 > 0.0, "cost_family.c2", format!("c2 must be > 0, got {c2}"));
            }
        }
        v
    }
}

/// Parameters for the synthetic loss attached to each sweep row: unit
/// principal weights, unit reward weights on evaluated dimensions and
/// square-root production.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTemplate {
    pub lambda: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationConfig {
    pub alpha: f64,
    pub unit_cost: f64,
    pub cost_family: CostFamily,
    pub t_min: u64,
    pub t_max: u64,
    #[serde(default = "default_step")]
    pub t_step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_template: Option<LossTemplate>,
}

fn default_step() -> u64 {
    1
}

impl AmplificationConfig {
    pub fn new(alpha: f64, unit_cost: f64, cost_family: CostFamily, t_min: u64, t_max: u64) -> Result<Self> {
        let cfg = AmplificationConfig {
            alpha,
            unit_cost,
            cost_family,
            t_min,
            t_max,
            t_step: 1,
            loss_template: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_step(mut self, step: u64) -> Result<Self> {
        self.t_step = step;
        self.validate()?;
        Ok(self)
    }

    pub fn with_loss_template(mut self, lambda: f64, budget: f64) -> Result<Self> {
        self.loss_template = Some(LossTemplate { lambda, budget });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            v.push(Violation::new(
                ViolationKind::ConfigRange,
                "alpha",
                format!("alpha must lie in (0, 1], got {}", self.alpha),
            ));
        }
        if !(self.unit_cost.is_finite() && self.unit_cost > 0.0) {
            v.push(Violation::new(
                ViolationKind::Positivity,
                "unit_cost",
                format!("unit cost must be > 0, got {}", self.unit_cost),
            ));
        }
        v.extend(self.cost_family.violations());
        if self.t_min < 2 || self.t_max < self.t_min {
            v.push(Violation::new(
                ViolationKind::ConfigRange,
                "t_min",
                format!("need 2 <= t_min <= t_max, got [{}, {}]", self.t_min, self.t_max),
            ));
        }
        if self.t_step == 0 {
            v.push(Violation::new(ViolationKind::ConfigRange, "t_step", "step must be >= 1"));
        }
        if let Some(t) = self.loss_template {
            if !(LAMBDA_MARGIN..=1.0 - LAMBDA_MARGIN).contains(&t.lambda) {
                v.push(Violation::new(
                    ViolationKind::AlignmentGapRange,
                    "lambda",
                    format!("alignment gap must lie in (0, 1), got {}", t.lambda),
                ));
            }
            if !(t.budget.is_finite() && t.budget > 0.0) {
                v.push(Violation::new(
                    ViolationKind::Positivity,
                    "budget",
                    format!("budget must be > 0, got {}", t.budget),
                ));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn tool_counts(&self) -> impl Iterator<Item = u64> {
        (self.t_min..=self.t_max).step_by(self.t_step as usize)
    }
}

/// `N(T) = T + ceil(alpha * T(T-1)/2)`.
pub fn dimension_count(t: u64, alpha: f64) -> Result<u64> {
    if t < 2 {
        return Err(Error::Axiom5Domain(t));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(
            ViolationKind::ConfigRange,
            "alpha",
            format!("alpha must lie in (0, 1], got {alpha}"),
        ));
    }
    let pairs = (t * (t - 1) / 2) as f64;
    let interactions = alpha * pairs;
    let rounded = (interactions - ROUNDING_SLACK * interactions.max(1.0)).ceil();
    Ok(t + rounded as u64)
}

/// `K(T) = min(floor(C(T) / c), N(T))`.
pub fn coverage_count(t: u64, cfg: &AmplificationConfig) -> Result<u64> {
    let n = dimension_count(t, cfg.alpha)?;
    let affordable = cfg.cost_family.cost(t) / cfg.unit_cost;
    let k = (affordable + ROUNDING_SLACK * affordable.max(1.0)).floor().max(0.0);
    Ok(if k >= n as f64 { n } else { k as u64 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: u64,
    pub n: u64,
    pub k: u64,
    pub kappa: f64,
    pub ratio: f64,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationSeries {
    pub rows: Vec<SeriesRow>,
}

impl AmplificationSeries {
    pub fn row(&self, t: u64) -> Option<&SeriesRow> {
        self.rows.iter().find(|r| r.t == t)
    }
}

/// Coverage counts, incompleteness and optionally the synthetic alignment
/// loss for every tool count in the configured range.
pub fn amplification_sweep(cfg: &AmplificationConfig, with_loss: bool) -> Result<AmplificationSeries> {
    cfg.validate()?;
    let template = if with_loss {
        let template = cfg.loss_template.ok_or_else(|| Error::Schema {
            key: "lambda".into(),
            context: "a loss sweep needs the synthetic template's lambda and budget".into(),
        })?;
        let n_max = dimension_count(cfg.t_max, cfg.alpha)?;
        if n_max > LOSS_SWEEP_MAX_DIMS {
            return Err(Error::SweepBudget {
                n: n_max,
                limit: LOSS_SWEEP_MAX_DIMS,
            });
        }
        Some(template)
    } else {
        None
    };

    let rows = cfg
        .tool_counts()
        .map(|t| {
            let n = dimension_count(t, cfg.alpha)?;
            let k = coverage_count(t, cfg)?;
            let ratio = k as f64 / n as f64;
            let loss = template
                .map(|tpl| synthetic_loss(n as usize, k as usize, tpl))
                .transpose()?;
            Ok(SeriesRow {
                t,
                n,
                k,
                kappa: 1.0 - ratio,
                ratio,
                loss,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AmplificationSeries { rows })
}

/// Alignment loss of the uniform-weight, square-root world with `k` of `n`
/// dimensions evaluated. With `k = 0` or `k = n` the effective weights are
/// proportional to the principal's and the loss is zero.
pub fn synthetic_loss(n: usize, k: usize, template: LossTemplate) -> Result<f64> {
    if k == 0 || k >= n {
        return Ok(0.0);
    }
    let production = vec![ProductionFunction::sqrt(); n];
    let principal = vec![1.0; n];
    let agent_weights: Vec<f64> = (0..n)
        .map(|i| if i < k { 1.0 } else { 1.0 - template.lambda })
        .collect();
    let first_best = solve_allocation(&principal, &production, template.budget)?;
    let agent = solve_allocation(&agent_weights, &production, template.budget)?;
    let w = |e: &[f64]| -> f64 { e.iter().map(|&x| x.sqrt()).sum() };
    Ok((w(&first_best.effort) - w(&agent.effort)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> AmplificationConfig {
        AmplificationConfig::new(1.0, 1.0, CostFamily::Linear { c0: 0.0, c1: 10.0 }, 2, 100).unwrap()
    }

    #[test]
    fn dimension_count_fixtures() {
        assert_eq!(dimension_count(3, 1.0).unwrap(), 6);
        assert_eq!(dimension_count(2, 0.5).unwrap(), 3);
        assert_eq!(dimension_count(100, 1.0).unwrap(), 5050);
        assert_eq!(dimension_count(5, 0.7).unwrap(), 12);
        assert_eq!(dimension_count(1, 1.0).unwrap_err().code(), "axiom5_domain");
    }

    #[test]
    fn dimension_count_meets_lower_bound() {
        for t in 2..200u64 {
            for &a in &[0.01, 0.1, 0.3, 0.7, 1.0] {
                let n = dimension_count(t, a).unwrap() as f64;
                let bound = t as f64 + a * (t * (t - 1) / 2) as f64;
                assert!(n >= bound - 1e-6, "T={t} alpha={a}: {n} < {bound}");
                assert!(n < bound + 1.0);
            }
        }
    }

    #[test]
    fn coverage_fixtures() {
        assert_eq!(coverage_count(100, &linear()).unwrap(), 1000);
        let quad = AmplificationConfig::new(1.0, 1.0, CostFamily::Quadratic { c2: 1.0 }, 2, 10).unwrap();
        assert_eq!(coverage_count(10, &quad).unwrap(), 55);
        let tiny = AmplificationConfig::new(1.0, 1.0, CostFamily::Linear { c0: 0.5, c1: 1e-12 }, 2, 10).unwrap();
        assert_eq!(coverage_count(7, &tiny).unwrap(), 0);
    }

    #[test]
    fn config_validation() {
        let bad = AmplificationConfig::new(0.0, -1.0, CostFamily::Power { c1: 1.0, exponent: 2.0 }, 1, 0);
        let codes = bad.unwrap_err().violation_codes();
        assert!(codes.contains(&"config_range") && codes.contains(&"positivity"));
    }

    #[test]
    fn sweep_rows() {
        let s = amplification_sweep(&linear(), false).unwrap();
        assert_eq!(s.rows.len(), 99);
        let r = s.row(100).unwrap();
        assert_eq!((r.n, r.k), (5050, 1000));
        assert!((r.ratio - 0.198019802).abs() < 1e-9);
        assert!((r.kappa + r.ratio - 1.0).abs() < 1e-15);
        assert!(r.loss.is_none());
    }

    #[test]
    fn loss_sweep_needs_template_and_guard() {
        assert_eq!(amplification_sweep(&linear(), true).unwrap_err().code(), "schema:lambda");
        let big = AmplificationConfig::new(1.0, 1.0, CostFamily::Linear { c0: 0.0, c1: 10.0 }, 2, 200)
            .unwrap()
            .with_loss_template(0.5, 1.0)
            .unwrap();
        assert_eq!(amplification_sweep(&big, true).unwrap_err().code(), "sweep_budget");
    }

    #[test]
    fn synthetic_loss_matches_closed_form() {
        let tpl = LossTemplate { lambda: 0.4, budget: 2.0 };
        for (n, k) in [(4usize, 1usize), (10, 3), (55, 40)] {
            let (kf, m) = (k as f64, (n - k) as f64);
            let sum = kf + m * 0.6;
            let sq = kf + m * 0.36;
            let closed = (2.0 * n as f64).sqrt() - 2f64.sqrt() * sum / sq.sqrt();
            assert!((synthetic_loss(n, k, tpl).unwrap() - closed).abs() < 1e-9);
        }
        assert_eq!(synthetic_loss(5, 0, tpl).unwrap(), 0.0);
        assert_eq!(synthetic_loss(5, 5, tpl).unwrap(), 0.0);
    }
}
