//! Distortion indices, welfare and alignment loss, the per-dimension
//! vulnerability assessment, and the coverage/alignment complementarity grid.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::model::{Allocation, Scenario, LAMBDA_MARGIN};
use crate::solver::{solve_agent, solve_first_best};

/// Band around `D = 1` inside which a contractible dimension counts as aligned.
pub const CLASSIFICATION_TOLERANCE: f64 = 1e-9;

/// `D_i = w~_i / w_i`: `lambda * r_i / w_i + (1 - lambda)` on evaluated
/// dimensions, exactly `1 - lambda` elsewhere.
pub fn distortion_index(s: &Scenario) -> Vec<f64> {
    let lambda = s.alignment_gap();
    s.weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if s.is_contractible(i) {
                lambda * s.reward_weights()[i] / w + (1.0 - lambda)
            } else {
                1.0 - lambda
            }
        })
        .collect()
}

/// Distortion index around an operating point for a non-linear principal
/// objective, using local gradients in place of fixed weights. The number of
/// evaluated dimensions is `grad_reward.len()`.
pub fn distortion_index_local(grad_welfare: &[f64], grad_reward: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if grad_reward.len() > grad_welfare.len() {
        return Err(Error::Shape(format!(
            "{} reward gradients for {} dimensions",
            grad_reward.len(),
            grad_welfare.len()
        )));
    }
    if !(LAMBDA_MARGIN..=1.0 - LAMBDA_MARGIN).contains(&lambda) {
        return Err(Error::invalid(
            ViolationKind::AlignmentGapRange,
            "lambda",
            format!("alignment gap must lie in (0, 1), got {lambda}"),
        ));
    }
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if let Some(index) = grad_welfare.iter().position(|&g| !positive(g)) {
        return Err(Error::GradientSign { index });
    }
    if let Some(index) = grad_reward.iter().position(|&g| !positive(g)) {
        return Err(Error::GradientSign { index });
    }
    Ok(grad_welfare
        .iter()
        .enumerate()
        .map(|(i, &gw)| match grad_reward.get(i) {
            Some(&gr) => (lambda * gr + (1.0 - lambda) * gw) / gw,
            None => 1.0 - lambda,
        })
        .collect())
}

/// Principal's welfare `W = sum_i w_i g_i(e_i)` at an allocation.
pub fn welfare(s: &Scenario, alloc: &Allocation) -> Result<f64> {
    if alloc.effort.len() != s.n_dims() {
        return Err(Error::Shape(format!(
            "allocation has {} entries, scenario has {} dimensions",
            alloc.effort.len(),
            s.n_dims()
        )));
    }
    Ok(welfare_of_effort(s, &alloc.effort))
}

pub(crate) fn welfare_of_effort(s: &Scenario, effort: &[f64]) -> f64 {
    s.weights()
        .iter()
        .zip(s.production())
        .zip(effort)
        .map(|((w, pf), &e)| w * pf.value(e))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRecord {
    /// `W(q^FB) - W(q*)`, never negative.
    pub loss: f64,
    pub first_best: Allocation,
    pub agent: Allocation,
}

/// Welfare lost by letting the agent optimize its effective weights.
pub fn alignment_loss(s: &Scenario) -> Result<LossRecord> {
    let first_best = solve_first_best(s)?;
    let agent = solve_agent(s)?;
    let fb = welfare(s, &first_best)?;
    let ag = welfare(s, &agent)?;
    // The first-best maximizes W, so any negative gap is solver round-off.
    let loss = (fb - ag).max(0.0);
    Ok(LossRecord {
        loss,
        first_best,
        agent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    OverInvestment,
    Aligned,
    UnderInvestment,
    MaxVulnerable,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::OverInvestment => "over_investment",
            Classification::Aligned => "aligned",
            Classification::UnderInvestment => "under_investment",
            Classification::MaxVulnerable => "max_vulnerable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionRecord {
    /// One-based dimension label.
    pub dimension: usize,
    pub distortion: f64,
    pub contractible: bool,
    pub classification: Classification,
    /// One-based rank by descending distortion index.
    pub rank: usize,
}

/// Per-dimension distortion, classification and ranking. `dimensions` is
/// ordered by rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VulnerabilityReport {
    pub scenario_fingerprint: String,
    pub alignment_gap: f64,
    pub incompleteness: f64,
    pub dimensions: Vec<DimensionRecord>,
}

/// SHA-256 of the canonical JSON encoding of the scenario.
pub fn fingerprint(s: &Scenario) -> String {
    let canonical = serde_json::to_string(&s.to_spec()).expect("scenario serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn classify(d: f64, contractible: bool) -> Classification {
    if !contractible {
        Classification::MaxVulnerable
    } else if d > 1.0 + CLASSIFICATION_TOLERANCE {
        Classification::OverInvestment
    } else if d < 1.0 - CLASSIFICATION_TOLERANCE {
        Classification::UnderInvestment
    } else {
        Classification::Aligned
    }
}

/// Classifies and ranks every dimension by its distortion index. Ties in `D`
/// keep ascending dimension order.
pub fn assess(s: &Scenario) -> VulnerabilityReport {
    let d = distortion_index(s);
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let dimensions = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| DimensionRecord {
            dimension: i + 1,
            distortion: d[i],
            contractible: s.is_contractible(i),
            classification: classify(d[i], s.is_contractible(i)),
            rank: rank + 1,
        })
        .collect();
    VulnerabilityReport {
        scenario_fingerprint: fingerprint(s),
        alignment_gap: s.alignment_gap(),
        incompleteness: s.incompleteness(),
        dimensions,
    }
}

/// Alignment loss over a `K x lambda` grid with its mixed second differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplementarityGrid {
    /// Coverage values in input order (rows of `loss`).
    pub k_values: Vec<usize>,
    /// Alignment gaps in input order (columns of `loss`).
    pub lambda_values: Vec<f64>,
    pub loss: Vec<Vec<f64>>,
    /// Distinct incompleteness values, ascending.
    pub kappa_axis: Vec<f64>,
    /// Distinct alignment gaps, ascending.
    pub lambda_axis: Vec<f64>,
    /// `mixed[a][b] = [L(k_{a+1}, l_{b+1}) - L(k_a, l_{b+1})] - [L(k_{a+1}, l_b) - L(k_a, l_b)]`
    /// over the sorted axes. Reported with sign; positivity is not assumed.
    pub mixed: Vec<Vec<f64>>,
}

/// Evaluates the alignment loss for every `(K, lambda)` pair. Reward weights
/// for dimensions that become evaluated default to the principal's weights.
pub fn complementarity_grid(
    template: &Scenario,
    k_values: &[usize],
    lambda_values: &[f64],
) -> Result<ComplementarityGrid> {
    let mut k_axis: Vec<usize> = k_values.to_vec();
    k_axis.sort_unstable();
    k_axis.dedup();
    let mut lambda_axis: Vec<f64> = lambda_values.to_vec();
    lambda_axis.sort_by(f64::total_cmp);
    lambda_axis.dedup();
    if k_axis.len() < 2 || lambda_axis.len() < 2 {
        return Err(Error::Grid(format!(
            "need at least two distinct K and two distinct lambda values, got {} and {}",
            k_axis.len(),
            lambda_axis.len()
        )));
    }

    let n = template.n_dims();
    let mut errors: Vec<Violation> = Vec::new();
    for &k in &k_axis {
        if k < 1 || k >= n {
            errors.push(Violation::new(
                ViolationKind::Axiom2,
                "k_values",
                format!("K={k} outside [1, {}]", n - 1),
            ));
        }
    }
    for &l in &lambda_axis {
        if !(LAMBDA_MARGIN..=1.0 - LAMBDA_MARGIN).contains(&l) {
            errors.push(Violation::new(
                ViolationKind::AlignmentGapRange,
                "lambda_values",
                format!("lambda={l} outside (0, 1)"),
            ));
        }
    }
    if !errors.is_empty() {
        return Err(Error::Invalid(errors));
    }

    let cell = |k: usize, l: f64| -> Result<f64> {
        let s = template.with_coverage(k)?.with_alignment_gap(l)?;
        Ok(alignment_loss(&s)?.loss)
    };

    let loss = k_values
        .iter()
        .map(|&k| lambda_values.iter().map(|&l| cell(k, l)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    // Larger K means smaller kappa, so the ascending kappa axis walks K down.
    let k_by_kappa: Vec<usize> = k_axis.iter().rev().cloned().collect();
    let sorted = k_by_kappa
        .iter()
        .map(|&k| lambda_axis.iter().map(|&l| cell(k, l)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mixed = (0..k_by_kappa.len() - 1)
        .map(|a| {
            (0..lambda_axis.len() - 1)
                .map(|b| {
                    (sorted[a + 1][b + 1] - sorted[a][b + 1]) - (sorted[a + 1][b] - sorted[a][b])
                })
                .collect()
        })
        .collect();

    Ok(ComplementarityGrid {
        k_values: k_values.to_vec(),
        lambda_values: lambda_values.to_vec(),
        loss,
        kappa_axis: k_by_kappa
            .iter()
            .map(|&k| (n - k) as f64 / n as f64)
            .collect(),
        lambda_axis,
        mixed,
    })
}
