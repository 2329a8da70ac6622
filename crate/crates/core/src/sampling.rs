//! Seeded random scenario generators for property suites and the
//! `random-scenario` command.
//!
//! Scenario draws: `N` uniform in `2..=6`, `K` uniform in `1..N`, principal and
//! reward weights log-uniform in `[0.1, 10]`, `lambda` uniform in
//! `[0.05, 0.95]`, `B = 1`, and each dimension's family is power or log with
//! probability one half. Production scales are log-uniform in `[0.5, 2]` and
//! power exponents uniform in `[0.2, 0.8]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ProductionFunction, Scenario};

pub const MIN_DIMS: usize = 2;
pub const MAX_DIMS: usize = 6;

/// Deterministic source of random model instances.
pub struct ScenarioSampler {
    rng: ChaCha8Rng,
}

/// Which production families a draw may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMix {
    /// Power or log per dimension, each with probability one half.
    Mixed,
    /// Power family only, so every solution is interior.
    InadaOnly,
}

impl ScenarioSampler {
    pub fn new(seed: u64) -> Self {
        ScenarioSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.rng.gen_range(lo.ln()..=hi.ln());
        u.exp()
    }

    pub fn weights(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.log_uniform(0.1, 10.0)).collect()
    }

    pub fn production(&mut self, mix: FamilyMix) -> ProductionFunction {
        let a = self.log_uniform(0.5, 2.0);
        let power = match mix {
            FamilyMix::InadaOnly => true,
            FamilyMix::Mixed => self.rng.gen_bool(0.5),
        };
        if power {
            ProductionFunction::Power {
                a,
                p: self.rng.gen_range(0.2..=0.8),
            }
        } else {
            ProductionFunction::Log { a }
        }
    }

    /// One draw from the property-suite distribution with `N` in
    /// `min_dims..=max_dims`.
    pub fn scenario_in(&mut self, min_dims: usize, max_dims: usize, mix: FamilyMix) -> Scenario {
        let n = self.rng.gen_range(min_dims.max(MIN_DIMS)..=max_dims);
        self.scenario_with_dims(n, mix)
    }

    pub fn scenario(&mut self) -> Scenario {
        self.scenario_in(MIN_DIMS, MAX_DIMS, FamilyMix::Mixed)
    }

    pub fn scenario_with_dims(&mut self, n: usize, mix: FamilyMix) -> Scenario {
        let k = self.rng.gen_range(1..n);
        let w = self.weights(n);
        let r = self.weights(k);
        let lambda = self.rng.gen_range(0.05..=0.95);
        let production = (0..n).map(|_| self.production(mix)).collect();
        Scenario::new(w, k, r, lambda, 1.0, production)
            .expect("sampler only draws admissible parameters")
    }

    /// Equal principal weights and one production function shared by every
    /// dimension. Reward weights are log-uniform in `[0.1, 10]` relative to
    /// the common principal weight.
    pub fn symmetric_scenario(&mut self, mix: FamilyMix) -> Scenario {
        let n = self.rng.gen_range(MIN_DIMS..=MAX_DIMS);
        let k = self.rng.gen_range(1..n);
        let w0 = self.log_uniform(0.1, 10.0);
        let r: Vec<f64> = (0..k).map(|_| w0 * self.log_uniform(0.1, 10.0)).collect();
        let lambda = self.rng.gen_range(0.05..=0.95);
        let pf = self.production(mix);
        Scenario::uniform(vec![w0; n], k, r, lambda, 1.0, pf)
            .expect("sampler only draws admissible parameters")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = ScenarioSampler::new(7);
        let mut b = ScenarioSampler::new(7);
        for _ in 0..20 {
            assert_eq!(a.scenario(), b.scenario());
        }
    }

    #[test]
    fn draws_respect_ranges() {
        let mut s = ScenarioSampler::new(1);
        for _ in 0..200 {
            let sc = s.scenario();
            assert!((2..=6).contains(&sc.n_dims()));
            assert!(sc.coverage() >= 1 && sc.coverage() < sc.n_dims());
            assert!((0.05..=0.95).contains(&sc.alignment_gap()));
            assert!(sc.weights().iter().all(|w| (0.1 - 1e-12..=10.0 + 1e-12).contains(w)));
        }
    }
}
