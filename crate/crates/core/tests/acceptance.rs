//! Exit criteria for the crate. Each criterion prints one PASS/FAIL line with
//! its measured numbers; the process fails if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use distortion::amplification::{amplification_sweep, AmplificationConfig, CostFamily};
use distortion::analysis::{alignment_loss, complementarity_grid, distortion_index, welfare};
use distortion::campbell::{log_grid, threshold_scan, CampbellConfig};
use distortion::garp::{check_garp, Observation, ObservationSet};
use distortion::sampling::{FamilyMix, ScenarioSampler};
use distortion::solver::{oracle_grid_solve, solve_agent, solve_allocation, solve_first_best};
use distortion::{ProductionFunction, Scenario};
use rand::Rng;

use common::manipulation_fixture;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn solver_matches_grid_search() -> Verdict {
    const SCENARIOS: usize = 200;
    const GRID_POINTS: usize = 401;
    const VALUE_TOLERANCE: f64 = 5e-3;
    const DOMINANCE_SLACK: f64 = 1e-12;

    let mut sampler = ScenarioSampler::new(0x5eed_0001);
    let (mut worst_gap, mut worst_dominance, mut failures) = (0.0f64, f64::INFINITY, 0);
    for _ in 0..SCENARIOS {
        let s = sampler.scenario_in(2, 3, FamilyMix::Mixed);
        for weights in [s.weights().to_vec(), s.effective_weights()] {
            let exact = solve_allocation(&weights, s.production(), s.budget()).unwrap();
            let grid = oracle_grid_solve(&weights, s.production(), s.budget(), GRID_POINTS).unwrap();
            let gap = (exact.objective_value - grid.objective_value).abs();
            let dominance = exact.objective_value - grid.objective_value;
            worst_gap = worst_gap.max(gap);
            worst_dominance = worst_dominance.min(dominance);
            if gap > VALUE_TOLERANCE || dominance < -DOMINANCE_SLACK {
                failures += 1;
            }
        }
    }
    verdict(
        failures == 0,
        format!("{SCENARIOS} scenarios x 2 problems, max |gap| {worst_gap:.3e}, min solver-oracle {worst_dominance:.3e}, {failures} failures"),
    )
}

fn closed_form_equilibria() -> Verdict {
    const TOLERANCE: f64 = 1e-8;
    let sqrt = vec![ProductionFunction::sqrt(); 2];
    let interior = solve_allocation(&[1.0, 0.5], &sqrt, 1.0).unwrap();
    let log = vec![ProductionFunction::log(1.0).unwrap(); 2];
    let corner = solve_allocation(&[1.0, 0.1], &log, 0.5).unwrap();
    let err_interior = (interior.effort[0] - 0.8).abs().max((interior.effort[1] - 0.2).abs());
    let err_corner = (corner.effort[0] - 0.5).abs().max(corner.effort[1].abs());
    verdict(
        err_interior <= TOLERANCE && err_corner <= TOLERANCE,
        format!("interior error {err_interior:.1e}, corner error {err_corner:.1e}"),
    )
}

fn distortion_is_inevitable() -> Verdict {
    const SCENARIOS: usize = 1000;
    const EFFORT_SLACK: f64 = 1e-9;
    const DISTINCT: f64 = 1e-7;
    const WELFARE_MARGIN: f64 = 1e-12;

    let mut sampler = ScenarioSampler::new(0x5eed_0003);
    let (mut unevaluated_gains, mut identical, mut no_welfare_loss, mut non_parallel) = (0, 0, 0, 0);
    let mut first_identical: Option<String> = None;
    for _ in 0..SCENARIOS {
        let s = sampler.scenario();
        let fb = solve_first_best(&s).unwrap();
        let agent = solve_agent(&s).unwrap();
        for i in s.coverage()..s.n_dims() {
            if agent.effort[i] > fb.effort[i] + EFFORT_SLACK {
                unevaluated_gains += 1;
            }
        }
        let d = distortion_index(&s);
        let spread = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread <= 1e-12 {
            continue;
        }
        non_parallel += 1;
        let gap = fb
            .effort
            .iter()
            .zip(&agent.effort)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap <= DISTINCT {
            identical += 1;
            first_identical.get_or_insert_with(|| {
                format!("e.g. N={} K={} effort {:?}", s.n_dims(), s.coverage(), fb.effort)
            });
        }
        if welfare(&s, &agent).unwrap() >= welfare(&s, &fb).unwrap() - WELFARE_MARGIN {
            no_welfare_loss += 1;
        }
    }
    verdict(
        unevaluated_gains == 0 && identical == 0 && no_welfare_loss == 0,
        format!(
            "{SCENARIOS} scenarios ({non_parallel} non-parallel): (a) {unevaluated_gains} violations, (b) {identical} identical allocations, (c) {no_welfare_loss} without welfare loss{}",
            first_identical.map(|s| format!("; {s}")).unwrap_or_default()
        ),
    )
}

fn lowest_ratio_never_gains() -> Verdict {
    const PAIRS: usize = 500;
    const SLACK: f64 = 1e-9;

    let mut sampler = ScenarioSampler::new(0x5eed_0004);
    let (mut tested, mut violations) = (0, 0);
    while tested < PAIRS {
        let n = sampler.rng().gen_range(2..=6);
        let alpha = sampler.weights(n);
        let beta = sampler.weights(n);
        let production: Vec<_> = (0..n).map(|_| sampler.production(FamilyMix::InadaOnly)).collect();
        let ratio: Vec<f64> = beta.iter().zip(&alpha).map(|(b, a)| b / a).collect();
        let lowest = (0..n).min_by(|&i, &j| ratio[i].total_cmp(&ratio[j])).unwrap();
        if (0..n).any(|j| j != lowest && ratio[j] <= ratio[lowest]) {
            continue;
        }
        tested += 1;
        let ea = solve_allocation(&alpha, &production, 1.0).unwrap();
        let eb = solve_allocation(&beta, &production, 1.0).unwrap();
        if eb.effort[lowest] > ea.effort[lowest] + SLACK {
            violations += 1;
        }
    }
    verdict(violations == 0, format!("{PAIRS} weight pairs, {violations} violations"))
}

fn symmetric_ranking() -> Verdict {
    const SCENARIOS: usize = 500;
    const D_GAP: f64 = 1e-6;
    const MARGIN: f64 = 1e-9;

    let mut sampler = ScenarioSampler::new(0x5eed_0005);
    let (mut accepted, mut rank, mut over, mut under, mut over_cases, mut under_cases) = (0, 0, 0, 0, 0, 0);
    let mut example: Option<String> = None;
    while accepted < SCENARIOS {
        let s = sampler.symmetric_scenario(FamilyMix::InadaOnly);
        let d = distortion_index(&s);
        let close = |x: f64, y: f64| x != y && (x - y).abs() < D_GAP;
        if d.iter().any(|&x| close(x, 1.0)) || d.iter().any(|&x| d.iter().any(|&y| close(x, y))) {
            continue;
        }
        accepted += 1;
        let fb = solve_first_best(&s).unwrap();
        let agent = solve_agent(&s).unwrap();
        let e = &agent.effort;
        for i in 0..d.len() {
            for j in 0..d.len() {
                if d[i] > d[j] && e[i] <= e[j] {
                    rank += 1;
                }
            }
        }
        for i in 0..s.coverage() {
            if d[i] > 1.0 {
                over_cases += 1;
                if e[i] <= fb.effort[i] + MARGIN {
                    over += 1;
                    example.get_or_insert_with(|| {
                        format!("D={:?} agent {:?} first-best {:?}", d, e, fb.effort)
                    });
                }
            } else if d[i] < 1.0 {
                under_cases += 1;
                if e[i] >= fb.effort[i] - MARGIN {
                    under += 1;
                }
            }
        }
    }
    verdict(
        rank == 0 && over == 0 && under == 0,
        format!(
            "{SCENARIOS} scenarios: ranking {rank} violations, D>1 not over-invested {over}/{over_cases}, D<1 not under-invested {under}/{under_cases}{}",
            example.map(|s| format!("; e.g. {s}")).unwrap_or_default()
        ),
    )
}

fn two_dimension_loss() -> Verdict {
    const EXPECTED: f64 = 0.072573;
    const TOLERANCE: f64 = 1e-6;
    let s = Scenario::uniform(vec![1.0, 1.0], 1, vec![1.0], 0.5, 1.0, ProductionFunction::sqrt()).unwrap();
    let loss = alignment_loss(&s).unwrap().loss;
    let closed = 2.0 * 0.5f64.sqrt() - (0.8f64.sqrt() + 0.2f64.sqrt());
    verdict(
        (loss - EXPECTED).abs() <= TOLERANCE && (loss - closed).abs() <= 1e-12,
        format!("loss {loss:.9}, closed form {closed:.9}"),
    )
}

fn coverage_collapse() -> Verdict {
    const TOLERANCE: f64 = 1e-6;
    let linear = AmplificationConfig::new(1.0, 1.0, CostFamily::Linear { c0: 0.0, c1: 10.0 }, 2, 10_000).unwrap();
    let series = amplification_sweep(&linear, false).unwrap();
    let r100 = series.row(100).unwrap().ratio;
    let r1000 = series.row(1000).unwrap().ratio;
    let k10000 = series.row(10_000).unwrap().kappa;
    let quadratic = AmplificationConfig::new(1.0, 1.0, CostFamily::Quadratic { c2: 1.0 }, 2, 1000).unwrap();
    let q1000 = amplification_sweep(&quadratic, false).unwrap().row(1000).unwrap().ratio;
    verdict(
        (r100 - 0.198020).abs() <= TOLERANCE
            && (r1000 - 0.019980).abs() <= TOLERANCE
            && k10000 >= 0.997
            && q1000 >= 0.99,
        format!("ratio(100) {r100:.6}, ratio(1000) {r1000:.6}, kappa(10^4) {k10000:.6}, quadratic ratio(1000) {q1000:.6}"),
    )
}

fn complementarity_fixture() -> Verdict {
    const TOLERANCE: f64 = 1e-6;
    // Closed-form values 2 - sum(w~) / sqrt(sum(w~^2)), rows K = 1, 2 and
    // columns lambda = 0.3, 0.6.
    const EXPECTED: [[f64; 2]; 2] = [[0.0275172, 0.1916111], [0.0304329, 0.1617099]];
    const MIXED: f64 = 0.0328169;

    let template = Scenario::uniform(vec![1.0; 4], 2, vec![1.0; 2], 0.5, 1.0, ProductionFunction::sqrt()).unwrap();
    let grid = complementarity_grid(&template, &[1, 2], &[0.3, 0.6]).unwrap();
    let mut worst = 0.0f64;
    for (row, k) in [1usize, 2].iter().enumerate() {
        for (col, l) in [0.3, 0.6].iter().enumerate() {
            let r = vec![1.0; *k];
            let oracle = common::sqrt_loss(&[1.0; 4], &common::agent_weights(&[1.0; 4], &r, *l), 1.0);
            worst = worst
                .max((grid.loss[row][col] - EXPECTED[row][col]).abs())
                .max((oracle - EXPECTED[row][col]).abs());
        }
    }
    let mixed = grid.mixed[0][0];
    verdict(
        worst <= TOLERANCE && (mixed - MIXED).abs() <= TOLERANCE && mixed > 0.0,
        format!(
            "losses {:?}, max deviation {worst:.1e}, mixed difference {mixed:.7}",
            grid.loss
        ),
    )
}

fn manipulation_threshold() -> Verdict {
    // Frozen from the brute-force (B, m) oracle over 64 log-spaced budgets in
    // [0.1, 100]: no manipulation up to index 5, manipulation from index 6 on,
    // and welfare falls between those two points.
    const LAST_HONEST: usize = 5;
    const DIP_INDEX: usize = 5;
    const M_AT_MAX: f64 = 0.5;

    let grid = log_grid(0.1, 100.0, 64);
    let oracle: Vec<(f64, f64)> = grid
        .iter()
        .map(|&b| manipulation_fixture::best_response(b, 200_000))
        .collect();
    let oracle_honest = oracle.iter().take_while(|(m, _)| *m == 0.0).count() - 1;
    let oracle_dip = oracle.windows(2).position(|w| w[1].1 < w[0].1 - 1e-9);
    let oracle_ok = oracle_honest == LAST_HONEST
        && oracle_dip == Some(DIP_INDEX)
        && oracle[0].0 == 0.0
        && (oracle[63].0 - M_AT_MAX).abs() < 1e-3;

    let template = Scenario::uniform(vec![1.0; 4], 2, vec![2.0; 2], 0.6, 1.0, ProductionFunction::sqrt()).unwrap();
    let cfg = CampbellConfig::new(template, 4.0, 2.0, 0.5, None).unwrap();
    let scan = threshold_scan(&grid, &cfg).unwrap();
    let found = scan.threshold.as_ref().map(|t| t.grid_index);
    let dip = scan.non_monotone_witness.as_ref().map(|w| w.index);
    let scan_ok = found.is_some_and(|k| k.abs_diff(LAST_HONEST) <= 1)
        && !scan.points[0].manipulates()
        && scan.points[63].manipulates()
        && dip.is_some_and(|k| k.abs_diff(DIP_INDEX) <= 1);
    verdict(
        oracle_ok && scan_ok,
        format!(
            "oracle bracket index {oracle_honest}, dip {oracle_dip:?}; scan bracket {:?} estimate {:?}, dip {dip:?}, m*(0.1) {:.3e}, m*(100) {:.6}",
            found,
            scan.threshold.as_ref().map(|t| t.estimate),
            scan.points[0].manipulation,
            scan.points[63].manipulation
        ),
    )
}

fn revealed_preference() -> Verdict {
    let set = |pairs: &[(&[f64], &[f64])]| {
        ObservationSet::new(
            pairs
                .iter()
                .map(|(p, x)| Observation {
                    prices: p.to_vec(),
                    bundle: x.to_vec(),
                })
                .collect(),
        )
        .unwrap()
    };
    let violation = check_garp(&set(&[(&[1.0, 2.0], &[2.0, 2.0]), (&[2.0, 1.0], &[4.0, 0.0])]));
    let hand_ok = matches!(&violation, distortion::garp::GarpVerdict::Violation { cycle } if cycle == &[0, 1]);
    let disjoint_ok = check_garp(&set(&[(&[1.0, 2.0], &[2.0, 0.0]), (&[2.0, 1.0], &[0.0, 2.0])])).is_consistent();

    let mut sampler = ScenarioSampler::new(0x5eed_000a);
    let mut inconsistent = 0;
    for _ in 0..50 {
        let s = sampler.scenario();
        let observations = (0..8)
            .map(|_| {
                let budget = sampler.log_uniform(0.1, 10.0);
                let prices = vec![1.0; s.n_dims()];
                let effort = solve_allocation(&s.effective_weights(), s.production(), budget)
                    .unwrap()
                    .effort;
                Observation { prices, bundle: effort }
            })
            .collect();
        if !check_garp(&ObservationSet::new(observations).unwrap()).is_consistent() {
            inconsistent += 1;
        }
    }
    verdict(
        hand_ok && disjoint_ok && inconsistent == 0,
        format!("hand fixture {violation:?}, disjoint consistent {disjoint_ok}, {inconsistent}/50 solver-generated sets inconsistent"),
    )
}

fn cli_is_deterministic() -> Verdict {
    let dir = common::scratch_dir();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    std::fs::write(
        path("scenario.json"),
        r#"{"n_dims": 4, "weights": [1, 1, 1, 1], "coverage_k": 2, "reward_weights": [1.5, 0.5],
            "lambda": 0.4, "budget": 1,
            "production": [{"family": "power", "a": 1, "p": 0.5}, {"family": "log", "a": 1.5},
                           {"family": "power", "a": 1, "p": 0.3}, {"family": "log", "a": 0.7}]}"#,
    )
    .unwrap();
    std::fs::write(
        path("sweep.json"),
        r#"{"alpha": 1, "unit_cost": 1, "cost_family": {"family": "linear", "c1": 10},
            "t_min": 2, "t_max": 40, "lambda": 0.5, "budget": 1}"#,
    )
    .unwrap();
    std::fs::write(
        path("campbell.json"),
        r#"{"n_dims": 4, "weights": [1, 1, 1, 1], "coverage_k": 2, "reward_weights": [2, 2], "lambda": 0.6,
            "production": [{"family": "power", "a": 1, "p": 0.5}, {"family": "power", "a": 1, "p": 0.5},
                           {"family": "power", "a": 1, "p": 0.5}, {"family": "power", "a": 1, "p": 0.5}],
            "gamma": 4, "spoof_scale": 2, "spoof_exponent": 0.5,
            "b_grid": {"min": 0.1, "max": 100, "points": 16}}"#,
    )
    .unwrap();
    std::fs::write(
        path("observations.json"),
        r#"[{"prices": [1, 2], "bundle": [2, 2]}, {"prices": [2, 1], "bundle": [4, 0]}]"#,
    )
    .unwrap();

    let commands: Vec<Vec<String>> = [
        vec!["solve", "--scenario", &path("scenario.json")],
        vec!["solve", "--scenario", &path("scenario.json"), "--first-best", "--format", "json"],
        vec!["assess", "--scenario", &path("scenario.json")],
        vec!["loss", "--scenario", &path("scenario.json"), "--format", "json"],
        vec!["sweep-t", "--config", &path("sweep.json"), "--with-loss"],
        vec!["complementarity", "--scenario", &path("scenario.json"), "--k-values", "1,2,3", "--lambda-values", "0.3,0.6"],
        vec!["campbell", "--config", &path("campbell.json")],
        vec!["garp", "--observations", &path("observations.json")],
        vec!["oracle-check", "--scenario", &path("scenario.json"), "--grid-points", "41"],
        vec!["random-scenario", "--seed", "42"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();

    let mut mismatched = Vec::new();
    for args in &commands {
        let run = || Command::new(common::binary()).args(args).output().unwrap();
        let (first, second) = (run(), run());
        if first.stdout != second.stdout || first.status.code() != second.status.code() || first.stdout.is_empty() {
            mismatched.push(args[0].clone());
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{} commands run twice, differing: {mismatched:?}", commands.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("solver agrees with grid search", solver_matches_grid_search),
        ("closed-form equilibria", closed_form_equilibria),
        ("misalignment always distorts", distortion_is_inevitable),
        ("lowest-ratio dimension never gains effort", lowest_ratio_never_gains),
        ("distortion index orders effort", symmetric_ranking),
        ("two-dimension alignment loss", two_dimension_loss),
        ("coverage ratio collapse", coverage_collapse),
        ("complementarity fixture", complementarity_fixture),
        ("manipulation threshold bracket", manipulation_threshold),
        ("revealed preference checks", revealed_preference),
        ("CLI output is deterministic", cli_is_deterministic),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        println!(
            "[{}] criterion {:>2} {name}: {} ({:.2}s)",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
