//! Shared helpers for the integration suites: a small deterministic RNG and
//! random market/schedule generators.
#![allow(dead_code)] // each test target compiles its own view of this module

use rebate_core::{MarketParams, RewardForm, RewardSchedule};

pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn pick(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Interior market parameters: theta in [2, 8], sigma in [0.5, 2], and a
/// taste share bounded away from the degenerate ends.
pub fn random_params(rng: &mut TestRng) -> MarketParams {
    let theta = rng.range(2.0, 8.0);
    let sigma = rng.range(0.5, 2.0);
    let frac = rng.range(0.15, 0.95);
    MarketParams::new(theta, sigma * frac, sigma * (1.0 - frac * frac).sqrt().min(0.99))
        .unwrap_or_else(|_| MarketParams::new(theta, sigma * 0.6, sigma * 0.8).unwrap())
}

/// A schedule of any representation, bounded by `cap`, with features placed
/// around theta.
pub fn random_schedule(rng: &mut TestRng, params: &MarketParams, cap: f64) -> RewardSchedule {
    let theta = params.theta;
    let sigma = params.sigma();
    match rng.pick(5) {
        0 => RewardSchedule::constant(rng.range(0.0, cap), cap).unwrap(),
        1 => RewardSchedule::step(
            rng.range(0.1, cap),
            theta + rng.range(-1.5, 1.5) * sigma,
            cap,
        )
        .unwrap(),
        2 => {
            let lo = theta + rng.range(-2.0, 0.5) * sigma;
            RewardSchedule::saturated_linear(cap, lo, lo + rng.range(0.3, 2.0) * sigma).unwrap()
        }
        3 => {
            let a = theta + rng.range(-2.0, -0.5) * sigma;
            let b = a + rng.range(0.2, 0.8) * sigma;
            let c = b + rng.range(0.2, 0.8) * sigma;
            let d = c + rng.range(0.2, 0.8) * sigma;
            RewardSchedule::interval_refund(cap, vec![(a, b), (c, d)]).unwrap()
        }
        _ => {
            let n = 3 + rng.pick(3);
            let mut bps = Vec::with_capacity(n);
            let mut x = theta - 2.0 * sigma;
            for _ in 0..n {
                bps.push(x);
                x += rng.range(0.3, 1.2) * sigma;
            }
            let values = (0..n).map(|_| rng.range(0.0, cap)).collect();
            RewardSchedule::tabulated(cap, bps, values).unwrap()
        }
    }
}

/// A nonconstant nondecreasing tabulated schedule whose spread stays inside
/// both the price cap and the spread-certificate bound.
pub fn random_nondecreasing_certified(
    rng: &mut TestRng,
    params: &MarketParams,
    p: f64,
) -> RewardSchedule {
    let bound = (2.0 * std::f64::consts::PI).sqrt() * params.sigma_eps * params.sigma()
        / params.sigma_theta;
    let spread = rng.range(0.3, 0.95) * bound.min(p);
    let n = 3 + rng.pick(4);
    let sigma = params.sigma();
    let mut bps = Vec::with_capacity(n);
    let mut x = params.theta - 2.0 * sigma;
    for _ in 0..n {
        bps.push(x);
        x += rng.range(0.3, 1.0) * sigma;
    }
    let mut raw: Vec<f64> = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += rng.range(0.05, 1.0);
        raw.push(acc);
    }
    let last = *raw.last().unwrap();
    let base = rng.range(0.0, (p - spread).max(0.0) * 0.5);
    let values: Vec<f64> = raw.iter().map(|r| base + spread * r / last).collect();
    let sched = RewardSchedule::tabulated(p, bps, values).unwrap();
    debug_assert!(matches!(sched.form, RewardForm::Tabulated { .. }));
    sched
}

/// A nonincreasing certified schedule (tabulated or the two closed shapes).
pub fn random_nonincreasing_certified(
    rng: &mut TestRng,
    params: &MarketParams,
    p: f64,
) -> RewardSchedule {
    let bound = (2.0 * std::f64::consts::PI).sqrt() * params.sigma_eps * params.sigma()
        / params.sigma_theta;
    match rng.pick(3) {
        0 => {
            let level = rng.range(0.2, 0.95) * bound.min(p);
            RewardSchedule::step(level, params.theta + rng.range(-1.0, 1.0) * params.sigma(), p)
                .unwrap()
        }
        1 => {
            let width = params.tau() * p * rng.range(1.0, 2.0);
            let lo = params.theta + rng.range(-1.5, 0.5) * params.sigma();
            RewardSchedule::saturated_linear(p, lo, lo + width).unwrap()
        }
        _ => {
            let mut sched = random_nondecreasing_certified(rng, params, p);
            if let RewardForm::Tabulated { values, .. } = &mut sched.form {
                values.reverse();
            }
            sched
        }
    }
}
