//! Budget-constrained maximization of separable concave objectives.
//!
//! The problem is `max sum_i c_i g_i(e_i)` subject to `sum_i p_i e_i <= B`,
//! `e >= 0`. Every `g_i` is strictly increasing and strictly concave, so the
//! budget binds and the maximizer is unique. Given a multiplier `mu`, the KKT
//! conditions pin each coordinate down independently:
//! `e_i(mu) = (g_i')^{-1}(mu * p_i / c_i)`, clamped at zero when the marginal
//! product at zero is already below the water level. Total spend is continuous
//! and strictly decreasing in `mu` wherever it is positive, so bisection on
//! `mu` finds the level at which the budget is exactly exhausted.

use serde::Serialize;

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::model::{Allocation, ProductionFunction, Scenario};

/// Relative budget residual at which the multiplier search stops.
pub const BUDGET_TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

/// Largest dimension count accepted by [`oracle_grid_solve`].
pub const ORACLE_MAX_DIMS: usize = 6;
/// Largest per-dimension resolution accepted by [`oracle_grid_solve`].
pub const ORACLE_MAX_GRID_POINTS: usize = 401;
/// Upper bound on simplex points the oracle is willing to visit.
pub const ORACLE_POINT_LIMIT: u128 = 50_000_000;

fn check_inputs(
    weights: &[f64],
    production: &[ProductionFunction],
    prices: Option<&[f64]>,
    budget: f64,
) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Shape("need at least one dimension".into()));
    }
    if weights.len() != production.len() {
        return Err(Error::Shape(format!(
            "{} weights but {} production functions",
            weights.len(),
            production.len()
        )));
    }
    if let Some(p) = prices {
        if p.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} weights but {} prices",
                weights.len(),
                p.len()
            )));
        }
    }
    let mut v = Vec::new();
    for (i, &c) in weights.iter().enumerate() {
        if !(c.is_finite() && c > 0.0) {
            v.push(Violation::new(
                ViolationKind::Positivity,
                format!("weights[{i}]"),
                format!("weight must be > 0, got {c}"),
            ));
        }
    }
    for (i, &p) in prices.unwrap_or(&[]).iter().enumerate() {
        if !(p.is_finite() && p > 0.0) {
            v.push(Violation::new(
                ViolationKind::Positivity,
                format!("prices[{i}]"),
                format!("price must be > 0, got {p}"),
            ));
        }
    }
    if !(budget.is_finite() && budget > 0.0) {
        v.push(Violation::new(
            ViolationKind::Positivity,
            "budget",
            format!("budget must be > 0, got {budget}"),
        ));
    }
    for (i, pf) in production.iter().enumerate() {
        v.extend(pf.violations(&format!("production[{i}]")));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(v))
    }
}

/// Unique maximizer of `sum_i c_i g_i(e_i)` subject to `sum_i e_i <= B`.
pub fn solve_allocation(
    weights: &[f64],
    production: &[ProductionFunction],
    budget: f64,
) -> Result<Allocation> {
    check_inputs(weights, production, None, budget)?;
    let prices = vec![1.0; weights.len()];
    water_fill(weights, production, &prices, budget)
}

/// Like [`solve_allocation`] but with a general linear budget
/// `sum_i p_i e_i <= B`.
pub fn solve_priced_allocation(
    weights: &[f64],
    production: &[ProductionFunction],
    prices: &[f64],
    budget: f64,
) -> Result<Allocation> {
    check_inputs(weights, production, Some(prices), budget)?;
    water_fill(weights, production, prices, budget)
}

/// First-best allocation: the principal's own weights.
pub fn solve_first_best(s: &Scenario) -> Result<Allocation> {
    solve_allocation(s.weights(), s.production(), s.budget())
}

/// Agent equilibrium: the effective weights.
pub fn solve_agent(s: &Scenario) -> Result<Allocation> {
    solve_allocation(&s.effective_weights(), s.production(), s.budget())
}

// The negated comparisons also reject NaN spend.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn water_fill(
    weights: &[f64],
    production: &[ProductionFunction],
    prices: &[f64],
    budget: f64,
) -> Result<Allocation> {
    let n = weights.len();
    // Normalizing by the largest weight makes the argmax exactly invariant to
    // a common rescaling of the weights.
    let c_max = weights.iter().cloned().fold(0.0_f64, f64::max);
    let c: Vec<f64> = weights.iter().map(|w| w / c_max).collect();

    let effort_at = |mu: f64| -> Vec<f64> {
        (0..n)
            .map(|i| production[i].inv_deriv(mu * prices[i] / c[i]))
            .collect()
    };
    let spend = |e: &[f64]| -> f64 { e.iter().zip(prices).map(|(e, p)| e * p).sum() };

    let slice = budget / (2.0 * n as f64);
    let mut hi = (0..n)
        .map(|i| c[i] * production[i].deriv(slice / prices[i]) / prices[i])
        .fold(0.0_f64, f64::max);
    let mut lo = (0..n)
        .map(|i| c[i] * production[i].deriv(budget / prices[i]) / prices[i])
        .fold(f64::INFINITY, f64::min);

    let mut grown = 0;
    while !(spend(&effort_at(hi)) <= budget) {
        hi *= 2.0;
        grown += 1;
        if grown > MAX_ITERATIONS || !hi.is_finite() {
            return Err(Error::Bracket(format!("upper multiplier diverged at {hi}")));
        }
    }
    grown = 0;
    while !(spend(&effort_at(lo)) >= budget) {
        lo *= 0.5;
        grown += 1;
        if grown > MAX_ITERATIONS || lo <= 0.0 {
            return Err(Error::Bracket(format!("lower multiplier collapsed at {lo}")));
        }
    }
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }

    let mut mu = (lo * hi).sqrt();
    let mut effort = effort_at(mu);
    for _ in 0..MAX_ITERATIONS {
        let total = spend(&effort);
        if (total - budget).abs() <= BUDGET_TOLERANCE * budget {
            break;
        }
        if total > budget {
            lo = mu;
        } else {
            hi = mu;
        }
        let next = (lo * hi).sqrt();
        if next == mu || hi / lo - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
        mu = next;
        effort = effort_at(mu);
    }

    // Close the remaining residual so the budget is spent exactly.
    let total = spend(&effort);
    if total > 0.0 {
        let scale = budget / total;
        effort.iter_mut().for_each(|e| *e *= scale);
    }

    Ok(Allocation::from_effort(effort, mu * c_max, weights, production))
}

/// Exhaustive search over the discretized simplex `{e >= 0, sum e = B}`.
///
/// Each coordinate takes values `k * B / (grid_points - 1)`. Points are
/// visited in ascending lexicographic order and only strict improvements are
/// kept, so ties resolve to the lexicographically smallest effort vector.
/// The returned multiplier is the mean weighted marginal product over
/// dimensions with positive effort; it is an estimate, not a KKT certificate.
pub fn oracle_grid_solve(
    weights: &[f64],
    production: &[ProductionFunction],
    budget: f64,
    grid_points: usize,
) -> Result<Allocation> {
    check_inputs(weights, production, None, budget)?;
    let n = weights.len();
    if n > ORACLE_MAX_DIMS {
        return Err(Error::OracleDims {
            max: ORACLE_MAX_DIMS,
            got: n,
        });
    }
    if !(2..=ORACLE_MAX_GRID_POINTS).contains(&grid_points) {
        return Err(Error::Grid(format!(
            "grid_points must lie in [2, {ORACLE_MAX_GRID_POINTS}], got {grid_points}"
        )));
    }
    let steps = grid_points - 1;
    let points = binomial((steps + n - 1) as u128, (n - 1) as u128);
    if points > ORACLE_POINT_LIMIT {
        return Err(Error::OracleBudget {
            points,
            limit: ORACLE_POINT_LIMIT,
        });
    }

    let h = budget / steps as f64;
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..=steps)
                .map(|k| weights[i] * production[i].value(k as f64 * h))
                .collect()
        })
        .collect();

    let mut best = Best {
        value: f64::NEG_INFINITY,
        ks: vec![0; n],
    };
    let mut ks = vec![0usize; n];
    enumerate(&table, 0, steps, 0.0, &mut ks, &mut best);

    let effort: Vec<f64> = best.ks.iter().map(|&k| k as f64 * h).collect();
    let marginals: Vec<f64> = effort
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(i, &e)| weights[i] * production[i].deriv(e))
        .collect();
    let mu = if marginals.is_empty() {
        0.0
    } else {
        marginals.iter().sum::<f64>() / marginals.len() as f64
    };
    Ok(Allocation::from_effort(effort, mu, weights, production))
}

/// Solver-versus-oracle agreement on one problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub solver_value: f64,
    pub oracle_value: f64,
    /// `solver_value - oracle_value`; never meaningfully negative.
    pub delta: f64,
    pub max_effort_gap: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Default agreement tolerance: `5e-3` at 401 points and unit budget, scaled
/// linearly with the grid spacing.
pub fn oracle_tolerance(budget: f64, grid_points: usize) -> f64 {
    5e-3 * budget * 400.0 / (grid_points.max(2) - 1) as f64
}

/// Runs both the water-filling solver and the grid oracle. The check passes
/// when the values agree within `tolerance` and the solver is not beaten by
/// the oracle beyond round-off.
pub fn compare_with_oracle(
    weights: &[f64],
    production: &[ProductionFunction],
    budget: f64,
    grid_points: usize,
    tolerance: f64,
) -> Result<OracleComparison> {
    let exact = solve_allocation(weights, production, budget)?;
    let grid = oracle_grid_solve(weights, production, budget, grid_points)?;
    let delta = exact.objective_value - grid.objective_value;
    let max_effort_gap = exact
        .effort
        .iter()
        .zip(&grid.effort)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let slack = 1e-12 * grid.objective_value.abs().max(1.0);
    Ok(OracleComparison {
        solver_value: exact.objective_value,
        oracle_value: grid.objective_value,
        delta,
        max_effort_gap,
        tolerance,
        within_tolerance: delta.abs() <= tolerance && delta >= -slack,
    })
}

struct Best {
    value: f64,
    ks: Vec<usize>,
}

fn enumerate(
    table: &[Vec<f64>],
    dim: usize,
    remaining: usize,
    partial: f64,
    ks: &mut [usize],
    best: &mut Best,
) {
    let n = table.len();
    if dim == n - 1 {
        ks[dim] = remaining;
        let value = partial + table[dim][remaining];
        if value > best.value {
            best.value = value;
            best.ks.copy_from_slice(ks);
        }
        return;
    }
    for k in 0..=remaining {
        ks[dim] = k;
        enumerate(table, dim + 1, remaining - k, partial + table[dim][k], ks, best);
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}
