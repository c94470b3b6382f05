//! Consumer-side threshold equilibrium and the seller's expected profit.
//!
//! The cutoff solves the marginal buyer's indifference
//! `c + E[r(V) | v_i = c] = p`. Profit is evaluated two independent ways —
//! integrating over realized quality, and integrating over consumer
//! valuations — which must agree by a change of conditioning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{find_root, gauss_expect_piecewise, integrate_segmented, std_cdf, std_pdf, RootBracket};
use crate::market::{no_reward_profit, MarketParams};
use crate::schedule::RewardSchedule;

/// Integration window half-width in standard deviations.
const RADIUS: f64 = 10.0;
/// Grid size for the multi-root cutoff scan.
const SCAN_POINTS: usize = 2000;

/// A solved threshold equilibrium.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Equilibrium {
    /// Valuation threshold: consumers with v_i above it buy.
    pub cutoff: f64,
    /// Residual of c + E[r|c] - p at the returned cutoff.
    pub indifference_residual: f64,
    /// Seller's expected profit at this cutoff.
    pub expected_profit: f64,
    /// Expected reward of the marginal buyer, E[r(V) | v_i = cutoff].
    pub reward_at_cutoff: f64,
    /// True when the cutoff is unique: guaranteed for monotone certified
    /// schedules, otherwise established by a fine sign-change scan.
    pub unique: bool,
}

/// Profit split by conditioning on valuations: the no-reward profit a price
/// equal to the cutoff would earn, plus the surplus extracted through
/// valuation-dependent expected rewards.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfitDecomposition {
    pub baseline_at_cutoff: f64,
    pub discrimination_surplus: f64,
    pub total: f64,
}

/// Comparison of the marginal buyer's expected reward with the ex-ante mean
/// reward paid per purchase; profitability against the cutoff baseline
/// requires the former to exceed the latter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RewardPremium {
    pub holds: bool,
    pub reward_at_cutoff: f64,
    pub mean_reward_per_purchase: f64,
}

fn indifference_gap(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
) -> impl Fn(f64) -> f64 {
    let params = *params;
    let schedule = schedule.clone();
    move |c: f64| c + schedule.expected_reward(&params, c).expect("valid params") - p
}

/// All indifference roots found by scanning `[p - cap - 5 sigma_v, p]` with
/// `n` grid cells and refining each sign change.
pub(crate) fn cutoff_roots_scanned(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
    n: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    schedule.validate()?;
    let g = indifference_gap(params, p, schedule);
    let lo = p - schedule.price_cap - 5.0 * params.sigma_v() - 1e-9;
    let hi = p + 1e-9;
    let mut roots = Vec::new();
    let mut prev_x = lo;
    let mut prev_g = g(lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let gx = g(x);
        if prev_g == 0.0 {
            roots.push(prev_x);
        } else if prev_g * gx < 0.0 {
            let bracket = RootBracket { lo: prev_x, hi: x, tol_abs: 1e-12, max_iter: 200 };
            roots.push(find_root(&g, &bracket)?);
        }
        prev_x = x;
        prev_g = gx;
    }
    if prev_g == 0.0 {
        roots.push(prev_x);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(roots)
}

/// All indifference roots on `[p - cap - 5 sigma_v, p]`, from a 2000-cell
/// sign-change scan with bracketed refinement.
pub fn solve_cutoff_all(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
) -> Result<Vec<f64>> {
    cutoff_roots_scanned(params, p, schedule, SCAN_POINTS)
}

/// Solve the cutoff indifference equation.
///
/// When several cutoffs exist (possible only for non-monotone or uncertified
/// schedules), the smallest is returned with `unique = false`; use
/// [`solve_cutoff_all`] to enumerate them.
pub fn solve_cutoff(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
) -> Result<Equilibrium> {
    params.validate()?;
    schedule.validate()?;
    if !(p > 0.0) {
        return Err(Error::Domain(format!("price must be positive, got {p}")));
    }
    let g = indifference_gap(params, p, schedule);

    // 0 <= E[r] <= cap forces a sign change on [p - cap, p]
    let mut lo = p - schedule.price_cap - 1e-12;
    let mut hi = p + 1e-12;
    let mut widened = 0;
    while g(lo) > 0.0 && widened < 60 {
        lo -= (hi - lo).max(1e-3);
        widened += 1;
    }
    while g(hi) < 0.0 && widened < 60 {
        hi += (hi - lo).max(1e-3);
        widened += 1;
    }
    if g(lo) * g(hi) > 0.0 {
        return Err(Error::NoEquilibrium { lo, hi, residual: g(lo).abs().min(g(hi).abs()) });
    }

    let monotone_certified = (schedule.is_nonincreasing() && schedule.certified(params))
        || schedule.is_nondecreasing();

    let (cutoff, unique) = if monotone_certified {
        (find_root(&g, &RootBracket { lo, hi, tol_abs: 1e-12, max_iter: 200 })?, true)
    } else {
        let roots = solve_cutoff_all(params, p, schedule)?;
        match roots.first() {
            Some(&c) => (c, roots.len() == 1),
            None => {
                (find_root(&g, &RootBracket { lo, hi, tol_abs: 1e-12, max_iter: 200 })?, false)
            }
        }
    };
    let residual = g(cutoff);
    // a jump of E[r|c] across zero is not an equilibrium (degenerate posteriors)
    if residual.abs() > 1e-6 * p.max(1.0) {
        return Err(Error::NoEquilibrium { lo, hi, residual });
    }
    Ok(Equilibrium {
        cutoff,
        indifference_residual: residual,
        expected_profit: expected_profit_quality(params, p, schedule, cutoff)?,
        reward_at_cutoff: schedule.expected_reward(params, cutoff)?,
        unique,
    })
}

/// Breakpoints for profit integrands: schedule kinks plus the transition
/// layer of Phi((v - cutoff)/sigma_eps).
fn quality_splits(schedule: &RewardSchedule, params: &MarketParams, cutoff: f64) -> Vec<f64> {
    let mut splits = schedule.breakpoints();
    let se = params.sigma_eps;
    if se > 0.0 {
        splits.extend([cutoff - 8.0 * se, cutoff, cutoff + 8.0 * se]);
    } else {
        splits.push(cutoff);
    }
    splits
}

/// Expected profit integrating over realized quality:
/// E_V[(p - r(V)) Phi((V - cutoff)/sigma_eps)], V ~ N(theta, sigma_theta^2).
pub fn expected_profit_quality(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
    cutoff: f64,
) -> Result<f64> {
    params.validate()?;
    let se = params.sigma_eps;
    let volume = move |v: f64| {
        if se > 0.0 {
            std_cdf((v - cutoff) / se)
        } else if v > cutoff {
            1.0
        } else {
            0.0
        }
    };
    let f = |v: f64| (p - schedule.evaluate(v)) * volume(v);
    gauss_expect_piecewise(
        f,
        params.theta,
        params.sigma_theta,
        &quality_splits(schedule, params, cutoff),
        RADIUS,
    )
}

/// Splits for valuation-domain integrands: posterior means hit schedule kinks
/// at v_i = (b - (1 - tau) theta)/tau.
fn valuation_splits(schedule: &RewardSchedule, params: &MarketParams) -> Vec<f64> {
    let tau = params.tau();
    if tau == 0.0 {
        return vec![];
    }
    schedule
        .breakpoints()
        .iter()
        .map(|b| (b - (1.0 - tau) * params.theta) / tau)
        .collect()
}

/// Expected profit integrating over consumer valuations, with its
/// decomposition into the cutoff-price baseline and the discrimination
/// surplus. The decomposition identity `total = baseline + surplus` holds at
/// an equilibrium cutoff (where p = c + E[r|c]); `total` itself equals the
/// quality-domain integral for any cutoff.
pub fn expected_profit_valuation(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
    cutoff: f64,
) -> Result<ProfitDecomposition> {
    params.validate()?;
    let sigma = params.sigma();
    let theta = params.theta;
    let hi = theta + RADIUS * sigma;
    let splits = valuation_splits(schedule, params);
    let density = move |vi: f64| std_pdf((vi - theta) / sigma) / sigma;

    let total = if cutoff >= hi {
        0.0
    } else {
        integrate_segmented(
            |vi| (p - schedule.expected_reward(params, vi).expect("valid")) * density(vi),
            cutoff,
            hi,
            &splits,
            sigma / 2.0,
        )?
    };
    let r_c = schedule.expected_reward(params, cutoff)?;
    let surplus = if cutoff >= hi {
        0.0
    } else {
        integrate_segmented(
            |vi| (r_c - schedule.expected_reward(params, vi).expect("valid")) * density(vi),
            cutoff,
            hi,
            &splits,
            sigma / 2.0,
        )?
    };
    Ok(ProfitDecomposition {
        baseline_at_cutoff: cutoff * std_cdf((theta - cutoff) / sigma),
        discrimination_surplus: surplus,
        total,
    })
}

/// Marginal-buyer reward vs. mean reward per purchase (the profitability
/// criterion relative to offering the cutoff as a plain price).
pub fn reward_premium(
    params: &MarketParams,
    _p: f64,
    schedule: &RewardSchedule,
    cutoff: f64,
) -> Result<RewardPremium> {
    params.validate()?;
    let sigma = params.sigma();
    let theta = params.theta;
    let hi = theta + RADIUS * sigma;
    let splits = valuation_splits(schedule, params);
    let num = integrate_segmented(
        |vi| {
            schedule.expected_reward(params, vi).expect("valid") * std_pdf((vi - theta) / sigma)
                / sigma
        },
        cutoff,
        hi,
        &splits,
        sigma / 2.0,
    )?;
    // same rule for the buyer mass, so flat schedules compare exactly
    let mass =
        integrate_segmented(|vi| std_pdf((vi - theta) / sigma) / sigma, cutoff, hi, &splits, sigma / 2.0)?;
    let mean = if mass > 0.0 { num / mass } else { 0.0 };
    let r_c = schedule.expected_reward(params, cutoff)?;
    let tol = 1e-9 * (1.0 + r_c.abs().max(mean.abs()));
    Ok(RewardPremium {
        holds: r_c > mean + tol,
        reward_at_cutoff: r_c,
        mean_reward_per_purchase: mean,
    })
}

/// Equilibrium expected profit of the schedule minus the no-reward profit at
/// the same price. Positive means the program is profitable.
pub fn profitability_gap(
    params: &MarketParams,
    p: f64,
    schedule: &RewardSchedule,
) -> Result<f64> {
    let eq = solve_cutoff(params, p, schedule)?;
    Ok(eq.expected_profit - no_reward_profit(params, p))
}
