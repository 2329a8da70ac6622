//! Strategic degradation of the evaluator.
//!
//! The agent first diverts `m` of its budget `B` into degrading the
//! evaluator, which lowers effective coverage to `K_eff = K0 - gamma * m`,
//! then allocates the remaining `B - m` across quality dimensions. Coverage
//! is fractional: evaluated dimension `i` (zero-based) keeps a share
//! `phi_i = clamp(K_eff - i, 0, 1)` of its evaluated status. Its effective
//! weight interpolates between the evaluated and unevaluated forms, and the
//! lost share `1 - phi_i` is credited with a spoofed score
//! `sigma(B) = s0 * B^beta` in the agent's perceived objective.
//!
//! The spoof payoff is one modelling choice for what a degraded evaluator
//! rewards; it is reported as [`PAYOFF_MODEL`] alongside every scan. In the
//! optional passive mode the evaluator also loses coverage on its own as the
//! agent grows more capable: `K_base(B) = K0 / (1 + delta * B)`.
//!
//! Nothing here asserts the threshold or welfare-dip behaviour as theorems;
//! the outputs are measurements for a given parametrization.

use serde::Serialize;

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::model::{Allocation, Scenario};
use crate::solver::solve_allocation;

pub const PAYOFF_MODEL: &str =
    "spoof_score: sigma(B) = spoof_scale * B^spoof_exponent credited on degraded evaluated coverage";

/// Minimum number of uniform grid cells in the outer search over `m`.
pub const OUTER_GRID_CELLS: usize = 256;
/// `m* <= MANIPULATION_EPSILON * B` counts as no manipulation.
pub const MANIPULATION_EPSILON: f64 = 1e-6;
/// Welfare drop that qualifies as a non-monotonicity witness.
pub const WELFARE_DIP_TOLERANCE: f64 = 1e-9;

const GOLDEN_TOLERANCE: f64 = 1e-10;
const THRESHOLD_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct CampbellConfig {
    template: Scenario,
    degradation_rate: f64,
    spoof_scale: f64,
    spoof_exponent: f64,
    passive_delta: Option<f64>,
}

impl CampbellConfig {
    /// `template` supplies everything except the budget, which is given per
    /// call. `spoof_scale = 0` is accepted and means the spoof is worthless.
    pub fn new(
        template: Scenario,
        degradation_rate: f64,
        spoof_scale: f64,
        spoof_exponent: f64,
        passive_delta: Option<f64>,
    ) -> Result<Self> {
        let mut v = Vec::new();
        if !(degradation_rate.is_finite() && degradation_rate >= 0.0) {
            v.push(Violation::new(
                ViolationKind::ConfigRange,
                "gamma",
                format!("degradation rate must be >= 0, got {degradation_rate}"),
            ));
        }
        if !(spoof_scale.is_finite() && spoof_scale >= 0.0) {
            v.push(Violation::new(
                ViolationKind::ConfigRange,
                "spoof_scale",
                format!("spoof scale must be >= 0, got {spoof_scale}"),
            ));
        }
        if !(spoof_exponent > 0.0 && spoof_exponent <= 1.0) {
            v.push(Violation::new(
                ViolationKind::ConfigRange,
                "spoof_exponent",
                format!("spoof exponent must lie in (0, 1], got {spoof_exponent}"),
            ));
        }
        if let Some(d) = passive_delta {
            if !(d.is_finite() && d >= 0.0) {
                v.push(Violation::new(
                    ViolationKind::ConfigRange,
                    "passive_delta",
                    format!("passive rate must be >= 0, got {d}"),
                ));
            }
        }
        if !v.is_empty() {
            return Err(Error::Invalid(v));
        }
        Ok(CampbellConfig {
            template,
            degradation_rate,
            spoof_scale,
            spoof_exponent,
            passive_delta,
        })
    }

    pub fn template(&self) -> &Scenario {
        &self.template
    }

    pub fn degradation_rate(&self) -> f64 {
        self.degradation_rate
    }

    pub fn spoof_scale(&self) -> f64 {
        self.spoof_scale
    }

    pub fn spoof_exponent(&self) -> f64 {
        self.spoof_exponent
    }

    pub fn passive_delta(&self) -> Option<f64> {
        self.passive_delta
    }

    fn base_coverage(&self) -> f64 {
        self.template.coverage() as f64
    }

    /// Coverage before any strategic manipulation at capability `budget`.
    pub fn baseline_coverage(&self, budget: f64) -> f64 {
        match self.passive_delta {
            Some(delta) => self.base_coverage() / (1.0 + delta * budget),
            None => self.base_coverage(),
        }
    }

    /// `clamp(K_base(B) - gamma * m, 0, K0)`.
    pub fn effective_coverage(&self, manipulation: f64, budget: f64) -> f64 {
        (self.baseline_coverage(budget) - self.degradation_rate * manipulation)
            .clamp(0.0, self.base_coverage())
    }

    pub fn spoof_score(&self, budget: f64) -> f64 {
        self.spoof_scale * budget.powf(self.spoof_exponent)
    }

    /// Share of evaluated status retained by each dimension.
    pub fn coverage_fractions(&self, k_eff: f64) -> Vec<f64> {
        (0..self.template.n_dims())
            .map(|i| {
                if self.template.is_contractible(i) {
                    (k_eff - i as f64).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn weights_at(&self, fractions: &[f64]) -> Vec<f64> {
        let s = &self.template;
        let lambda = s.alignment_gap();
        s.weights()
            .iter()
            .zip(fractions)
            .enumerate()
            .map(|(i, (&w, &phi))| {
                let unevaluated = (1.0 - lambda) * w;
                if s.is_contractible(i) {
                    let evaluated = lambda * s.reward_weights()[i] + (1.0 - lambda) * w;
                    phi * evaluated + (1.0 - phi) * unevaluated
                } else {
                    unevaluated
                }
            })
            .collect()
    }

    /// Result of committing to manipulation `m` at capability `budget`.
    pub fn evaluate(&self, budget: f64, manipulation: f64) -> Result<Outcome> {
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::invalid(
                ViolationKind::Positivity,
                "budget",
                format!("budget must be > 0, got {budget}"),
            ));
        }
        if !(0.0..=budget).contains(&manipulation) {
            return Err(Error::Domain(format!(
                "manipulation must lie in [0, {budget}], got {manipulation}"
            )));
        }
        let k_eff = self.effective_coverage(manipulation, budget);
        let fractions = self.coverage_fractions(k_eff);
        let weights = self.weights_at(&fractions);
        let production = self.template.production();
        let remaining = budget - manipulation;
        let allocation = if remaining > 0.0 {
            solve_allocation(&weights, production, remaining)?
        } else {
            Allocation::from_effort(vec![0.0; weights.len()], 0.0, &weights, production)
        };

        let s = &self.template;
        let sigma = self.spoof_score(budget);
        let spoof: f64 = (0..s.coverage())
            .map(|i| s.alignment_gap() * s.reward_weights()[i] * (1.0 - fractions[i]) * sigma)
            .sum();
        let welfare = s
            .weights()
            .iter()
            .zip(production)
            .zip(&allocation.effort)
            .map(|((w, pf), &e)| w * pf.value(e))
            .sum();
        Ok(Outcome {
            budget,
            manipulation,
            effective_coverage: k_eff,
            perceived_value: allocation.objective_value + spoof,
            welfare,
            allocation,
        })
    }

    /// Points where `K_eff` crosses an integer, i.e. where the perceived
    /// objective has kinks.
    fn breakpoints(&self, budget: f64) -> Vec<f64> {
        if self.degradation_rate == 0.0 {
            return Vec::new();
        }
        let base = self.baseline_coverage(budget);
        (0..=base.floor() as usize)
            .map(|level| (base - level as f64) / self.degradation_rate)
            .filter(|&m| m > 0.0 && m <= budget)
            .collect()
    }
}

/// Agent's state after choosing `m` and allocating the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub budget: f64,
    pub manipulation: f64,
    pub effective_coverage: f64,
    /// Agent's perceived objective, spoof credit included.
    pub perceived_value: f64,
    /// Principal's true welfare; the spoof contributes nothing here.
    pub welfare: f64,
    pub allocation: Allocation,
}

/// Maximizes the perceived objective over `m` in `[0, B]`.
///
/// The objective need not be unimodal, so the search evaluates a uniform grid
/// of [`OUTER_GRID_CELLS`] cells plus every coverage breakpoint, then refines
/// the best point by golden-section search between its neighbours. The final
/// answer is the better of the refined point and the best grid point.
pub fn agent_best_response(budget: f64, cfg: &CampbellConfig) -> Result<Outcome> {
    if cfg.degradation_rate == 0.0 || cfg.spoof_scale == 0.0 {
        return cfg.evaluate(budget, 0.0);
    }
    let mut candidates: Vec<f64> = (0..=OUTER_GRID_CELLS)
        .map(|j| budget * j as f64 / OUTER_GRID_CELLS as f64)
        .collect();
    candidates.extend(cfg.breakpoints(budget));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut best: Option<(usize, Outcome)> = None;
    for (j, &m) in candidates.iter().enumerate() {
        let out = cfg.evaluate(budget, m)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| out.perceived_value > b.perceived_value)
        {
            best = Some((j, out));
        }
    }
    let (j, best) = best.expect("grid is never empty");

    let lo = candidates[j.saturating_sub(1)];
    let hi = candidates[(j + 1).min(candidates.len() - 1)];
    if hi > lo {
        let objective = |m: f64| {
            cfg.evaluate(budget, m)
                .map(|o| o.perceived_value)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (m, value) = golden_section_max(objective, lo, hi, GOLDEN_TOLERANCE * budget);
        if value > best.perceived_value {
            return cfg.evaluate(budget, m);
        }
    }
    Ok(best)
}

/// Golden-section search for a maximum of `f` on `[a, b]`. Returns the best
/// evaluated point.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(a, fa), (c, fc), (d, fd), (b, fb)]
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub budget: f64,
    pub manipulation: f64,
    pub effective_coverage: f64,
    pub welfare: f64,
    pub perceived_value: f64,
}

impl ScanPoint {
    pub fn manipulates(&self) -> bool {
        self.manipulation > MANIPULATION_EPSILON * self.budget
    }
}

/// First regime change from no manipulation to manipulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    /// Index of the last grid point before the transition.
    pub grid_index: usize,
    pub grid_lower: f64,
    pub grid_upper: f64,
    /// Bracket after bisection between the two grid points.
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareDip {
    /// Index `k` such that `W(B_{k+1}) < W(B_k)`.
    pub index: usize,
    pub budget_before: f64,
    pub budget_after: f64,
    pub welfare_before: f64,
    pub welfare_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdScan {
    pub payoff_model: &'static str,
    pub points: Vec<ScanPoint>,
    pub threshold: Option<ThresholdEstimate>,
    pub non_monotone_witness: Option<WelfareDip>,
}

/// Best responses along an increasing capability grid, the first
/// no-manipulation to manipulation transition, and the first welfare dip.
pub fn threshold_scan(b_grid: &[f64], cfg: &CampbellConfig) -> Result<ThresholdScan> {
    if b_grid.len() < 3 {
        return Err(Error::Grid(format!(
            "capability grid needs at least 3 points, got {}",
            b_grid.len()
        )));
    }
    if b_grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) || b_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(
            "capability grid must be positive and strictly increasing".into(),
        ));
    }

    let points = b_grid
        .iter()
        .map(|&b| {
            agent_best_response(b, cfg).map(|o| ScanPoint {
                budget: b,
                manipulation: o.manipulation,
                effective_coverage: o.effective_coverage,
                welfare: o.welfare,
                perceived_value: o.perceived_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let threshold = match points
        .windows(2)
        .position(|w| !w[0].manipulates() && w[1].manipulates())
    {
        Some(k) => Some(refine_threshold(cfg, k, points[k].budget, points[k + 1].budget)?),
        None => None,
    };

    let non_monotone_witness = points
        .windows(2)
        .position(|w| w[1].welfare < w[0].welfare - WELFARE_DIP_TOLERANCE)
        .map(|k| WelfareDip {
            index: k,
            budget_before: points[k].budget,
            budget_after: points[k + 1].budget,
            welfare_before: points[k].welfare,
            welfare_after: points[k + 1].welfare,
        });

    Ok(ThresholdScan {
        payoff_model: PAYOFF_MODEL,
        points,
        threshold,
        non_monotone_witness,
    })
}

fn refine_threshold(cfg: &CampbellConfig, k: usize, grid_lower: f64, grid_upper: f64) -> Result<ThresholdEstimate> {
    let (mut lo, mut hi) = (grid_lower, grid_upper);
    for _ in 0..THRESHOLD_ITERATIONS {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let o = agent_best_response(mid, cfg)?;
        if o.manipulation > MANIPULATION_EPSILON * mid {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdEstimate {
        grid_index: k,
        grid_lower,
        grid_upper,
        lower: lo,
        upper: hi,
        estimate: 0.5 * (lo + hi),
    })
}

/// `points` values spaced evenly in log space from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..points)
                .map(|i| {
                    if i == 0 {
                        min
                    } else if i == points - 1 {
                        max
                    } else {
                        (a + (b - a) * i as f64 / (points - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
