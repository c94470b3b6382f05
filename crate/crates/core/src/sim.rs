//! Finite-agent Monte Carlo oracle for the continuum formulas.
//!
//! Randomness is counter-based: every variate is a pure function of
//! (seed, stream, draw index, agent index) through a SplitMix64 mix and the
//! inverse normal CDF, so results are bit-identical regardless of evaluation
//! order and the draw loop can be split arbitrarily.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{std_cdf, std_inv_cdf};
use crate::market::MarketParams;
use crate::schedule::RewardSchedule;

const STREAM_QUALITY: u64 = 0x71;
const STREAM_TASTE: u64 = 0x7a;
const STREAM_BELIEF: u64 = 0xb5;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the (seed, stream, draw) sub-stream.
#[inline]
fn stream_key(seed: u64, stream: u64, draw: u64) -> u64 {
    let z = splitmix64(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F));
    splitmix64(z ^ draw.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}

#[inline]
fn uniform_from(key: u64, agent: u64) -> f64 {
    let z = splitmix64(key ^ agent.wrapping_mul(0x8EBC_6AF0_9C88_C6E3));
    ((z >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform in the open interval (0, 1) at counter (seed, stream, draw, agent).
#[inline]
fn uniform_at(seed: u64, stream: u64, draw: u64, agent: u64) -> f64 {
    uniform_from(stream_key(seed, stream, draw), agent)
}

fn normal_at(seed: u64, stream: u64, draw: u64, agent: u64) -> f64 {
    std_inv_cdf(uniform_at(seed, stream, draw, agent)).expect("u in (0,1)")
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_agents: usize,
    pub n_quality_draws: usize,
    pub seed: u64,
    /// Pair quality draws (z, -z) to cut variance.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(n_agents: usize, n_quality_draws: usize, seed: u64) -> Self {
        Self { n_agents, n_quality_draws, seed, antithetic: false }
    }

    fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.n_quality_draws == 0 {
            return Err(Error::Domain("simulation needs agents and draws".into()));
        }
        Ok(())
    }
}

/// One simulated sales period.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DrawRecord {
    pub draw_index: usize,
    /// Realized quality.
    pub v: f64,
    /// Realized sales volume (buyer fraction).
    pub a_bar: f64,
    /// Per-buyer payout computed in the sales-volume domain.
    pub payout: f64,
    /// (p - payout) * a_bar.
    pub profit: f64,
    /// Volume saturated at {0,1}: the volume-quality map carries no quality
    /// information there, so the payout fell back to the quality-domain value.
    pub clamped: bool,
}

/// Aggregates over quality draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimResult {
    pub mean_profit: f64,
    /// Sample stddev of per-draw profit divided by sqrt(n_quality_draws).
    pub profit_std_error: f64,
    pub mean_sales_volume: f64,
    /// Kept for runs up to 1e5 quality draws; None beyond that.
    pub per_draw_records: Option<Vec<DrawRecord>>,
}

/// Largest observed inconsistency with the threshold rule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub max_violation: f64,
    pub violating_valuation: Option<f64>,
}

fn quality_draw(params: &MarketParams, config: &SimConfig, k: usize) -> f64 {
    let z = if config.antithetic {
        let base = normal_at(config.seed, STREAM_QUALITY, (k / 2) as u64, 0);
        if k.is_multiple_of(2) {
            base
        } else {
            -base
        }
    } else {
        normal_at(config.seed, STREAM_QUALITY, k as u64, 0)
    };
    params.theta + params.sigma_theta * z
}

/// Simulate the market at a solved cutoff: agents buy iff v + eps_i > cutoff
/// (strict; ties do not buy), the payout is read off the announced
/// volume-domain contract at the realized volume, and profit is
/// (p - payout) * volume.
///
/// When the realized volume saturates at 0 or 1 (every agent on one side; the
/// finite crowd cannot resolve the quality any further), the draw is flagged
/// and the payout falls back to the quality-domain value of the contract.
///
/// Common random numbers: the same seed reproduces the same quality and taste
/// draws for any schedule, so profit differences across programs are
/// low-variance.
pub fn simulate(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
    cutoff: f64,
    config: &SimConfig,
) -> Result<SimResult> {
    params.validate()?;
    schedule.validate()?;
    config.validate()?;
    let keep_records = config.n_quality_draws <= 100_000;
    let mut records = if keep_records {
        Vec::with_capacity(config.n_quality_draws)
    } else {
        Vec::new()
    };
    let se = params.sigma_eps;
    let n = config.n_agents;
    let mut sum_profit = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_volume = 0.0;
    for k in 0..config.n_quality_draws {
        let v = quality_draw(params, config, k);
        // agent i buys iff v + sigma_eps * Phi^{-1}(u_i) > cutoff, i.e. its
        // uniform exceeds the conditional non-purchase probability
        let buyers = if se > 0.0 {
            let t = std_cdf((cutoff - v) / se);
            let key = stream_key(config.seed, STREAM_TASTE, k as u64);
            let mut count = 0usize;
            for i in 0..n {
                if uniform_from(key, i as u64 + 1) > t {
                    count += 1;
                }
            }
            count
        } else if v > cutoff {
            n
        } else {
            0
        };
        let a_bar = buyers as f64 / n as f64;
        let (payout, clamped) = if buyers == 0 || buyers == n {
            (schedule.evaluate(v), true)
        } else {
            (schedule.to_sales_volume_domain(params, cutoff, a_bar)?, false)
        };
        let profit = (p - payout) * a_bar;
        sum_profit += profit;
        sum_sq += profit * profit;
        sum_volume += a_bar;
        if keep_records {
            records.push(DrawRecord { draw_index: k, v, a_bar, payout, profit, clamped });
        }
    }
    let m = config.n_quality_draws as f64;
    let mean_profit = sum_profit / m;
    let variance = if config.n_quality_draws > 1 {
        ((sum_sq - m * mean_profit * mean_profit) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimResult {
        mean_profit,
        profit_std_error: (variance / m).sqrt(),
        mean_sales_volume: sum_volume / m,
        per_draw_records: keep_records.then_some(records),
    })
}

/// Estimate E[u_i | v_i] on a valuation grid by Monte Carlo over the posterior
/// and report the largest inconsistency with the threshold rule: positive
/// expected payoff below the cutoff, or negative above.
pub fn best_response_check(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
    cutoff: f64,
    config: &SimConfig,
) -> Result<BestResponseReport> {
    params.validate()?;
    config.validate()?;
    let sigma = params.sigma();
    let grid_n = 41;
    let draws = config.n_quality_draws.max(1000);
    let mut worst = (0.0f64, None);
    for gi in 0..grid_n {
        let v_i = params.theta - 4.0 * sigma + 8.0 * sigma * gi as f64 / (grid_n - 1) as f64;
        if (v_i - cutoff).abs() < 1e-9 {
            continue;
        }
        let post = crate::market::posterior(params, v_i)?;
        let mut acc = 0.0;
        for j in 0..draws {
            let v = post.mean
                + post.stddev * normal_at(config.seed, STREAM_BELIEF, gi as u64, j as u64 + 1);
            acc += schedule.evaluate(v);
        }
        let expected_payoff = v_i - p + acc / draws as f64;
        let violation = if v_i < cutoff { expected_payoff } else { -expected_payoff };
        if violation > worst.0 {
            worst = (violation, Some(v_i));
        }
    }
    Ok(BestResponseReport { max_violation: worst.0, violating_valuation: worst.1 })
}

/// Per-draw records as CSV: draw_index,v,a_bar,payout,profit.
pub fn records_to_csv(records: &[DrawRecord]) -> String {
    use crate::fmt::fmt_g12;
    let mut out = String::from("draw_index,v,a_bar,payout,profit\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.draw_index,
            fmt_g12(r.v),
            fmt_g12(r.a_bar),
            fmt_g12(r.payout),
            fmt_g12(r.profit)
        ));
    }
    out
}
