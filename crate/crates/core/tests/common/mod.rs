//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls the water-filling solver or the manipulation search;
//! everything is either a closed form for square-root production or a plain
//! brute-force grid.

#![allow(dead_code)]

use std::path::PathBuf;

/// Square-root production with weights `c` and budget `b`: the optimum puts
/// `e_i = b c_i^2 / sum c^2` and attains `sqrt(b sum c^2)`.
pub fn sqrt_effort(c: &[f64], b: f64) -> Vec<f64> {
    let s: f64 = c.iter().map(|x| x * x).sum();
    c.iter().map(|x| b * x * x / s).collect()
}

/// Principal welfare `sum w_i sqrt(e_i)`.
pub fn sqrt_welfare(w: &[f64], e: &[f64]) -> f64 {
    w.iter().zip(e).map(|(w, e)| w * e.sqrt()).sum()
}

/// Alignment loss for square-root production.
pub fn sqrt_loss(principal: &[f64], agent: &[f64], b: f64) -> f64 {
    sqrt_welfare(principal, &sqrt_effort(principal, b)) - sqrt_welfare(principal, &sqrt_effort(agent, b))
}

/// Weights `(lambda r_i + (1 - lambda) w_i)` on the first `r.len()`
/// dimensions and `(1 - lambda) w_i` on the rest.
pub fn agent_weights(w: &[f64], r: &[f64], lambda: f64) -> Vec<f64> {
    w.iter()
        .enumerate()
        .map(|(i, &wi)| match r.get(i) {
            Some(&ri) => lambda * ri + (1.0 - lambda) * wi,
            None => (1.0 - lambda) * wi,
        })
        .collect()
}

/// The manipulation fixture: four square-root dimensions with unit
/// principal weights, two of them evaluated with reward weight 2,
/// `lambda = 0.6`, degradation rate 4, spoof scale 2 and spoof exponent 1/2.
pub mod manipulation_fixture {
    pub const LAMBDA: f64 = 0.6;
    pub const GAMMA: f64 = 4.0;
    pub const SPOOF_SCALE: f64 = 2.0;
    pub const SPOOF_EXPONENT: f64 = 0.5;
    pub const BASE_COVERAGE: f64 = 2.0;
    pub const REWARD: f64 = 2.0;

    fn shares(m: f64) -> [f64; 2] {
        let k = (BASE_COVERAGE - GAMMA * m).clamp(0.0, BASE_COVERAGE);
        [k.clamp(0.0, 1.0), (k - 1.0).clamp(0.0, 1.0)]
    }

    fn weights(m: f64) -> [f64; 4] {
        let evaluated = LAMBDA * REWARD + (1.0 - LAMBDA);
        let open = 1.0 - LAMBDA;
        let [p0, p1] = shares(m);
        [
            p0 * evaluated + (1.0 - p0) * open,
            p1 * evaluated + (1.0 - p1) * open,
            open,
            open,
        ]
    }

    /// `(perceived, welfare)` after diverting `m` of `b`.
    pub fn value(b: f64, m: f64) -> (f64, f64) {
        let c = weights(m);
        let s: f64 = c.iter().map(|x| x * x).sum();
        let rest = b - m;
        let sigma = SPOOF_SCALE * b.powf(SPOOF_EXPONENT);
        let lost: f64 = shares(m).iter().map(|p| 1.0 - p).sum();
        let perceived = (rest * s).sqrt() + LAMBDA * REWARD * sigma * lost;
        let welfare = rest.sqrt() * c.iter().sum::<f64>() / s.sqrt();
        (perceived, welfare)
    }

    /// Brute-force best response over a uniform grid on `[0, b]` plus the
    /// coverage kinks. Returns `(m*, welfare)`.
    pub fn best_response(b: f64, cells: usize) -> (f64, f64) {
        let mut candidates: Vec<f64> = (0..=cells).map(|j| b * j as f64 / cells as f64).collect();
        candidates.extend([0.25, 0.5].into_iter().filter(|&m| m <= b));
        let mut best = (0.0, f64::NEG_INFINITY, 0.0);
        for m in candidates {
            let (p, w) = value(b, m);
            if p > best.1 {
                best = (m, p, w);
            }
        }
        (best.0, best.2)
    }
}

pub fn scratch_dir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

pub fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_distortion"))
}
