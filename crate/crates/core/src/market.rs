//! Market primitives: the uncertainty parameters, posterior beliefs, the
//! no-reward baseline, and the optimal-price fixed point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{find_root, mills_ratio, std_cdf, RootBracket};

/// Prior mean quality plus the two uncertainty components.
///
/// Derived quantities (total uncertainty `sigma`, posterior weight `tau`,
/// posterior stddev `sigma_v`) are recomputed on demand and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Prior mean quality.
    pub theta: f64,
    /// Idiosyncratic taste stddev.
    pub sigma_eps: f64,
    /// Quality-uncertainty stddev.
    pub sigma_theta: f64,
}

impl MarketParams {
    pub fn new(theta: f64, sigma_eps: f64, sigma_theta: f64) -> Result<Self> {
        let p = Self { theta, sigma_eps, sigma_theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::Domain(format!("theta must be finite, got {}", self.theta)));
        }
        if !(self.sigma_eps >= 0.0) || !(self.sigma_theta >= 0.0) {
            return Err(Error::Domain(format!(
                "stddevs must be nonnegative, got sigma_eps={}, sigma_theta={}",
                self.sigma_eps, self.sigma_theta
            )));
        }
        if self.sigma_eps + self.sigma_theta <= 0.0 {
            return Err(Error::Domain("sigma_eps + sigma_theta must be positive".into()));
        }
        Ok(())
    }

    /// Total valuation uncertainty sqrt(sigma_eps^2 + sigma_theta^2).
    pub fn sigma(&self) -> f64 {
        self.sigma_eps.hypot(self.sigma_theta)
    }

    /// Posterior weight on the private valuation, sigma_theta^2 / sigma^2.
    pub fn tau(&self) -> f64 {
        let s2 = self.sigma_eps * self.sigma_eps + self.sigma_theta * self.sigma_theta;
        self.sigma_theta * self.sigma_theta / s2
    }

    /// Posterior stddev of quality given one valuation: sigma_eps*sigma_theta/sigma.
    pub fn sigma_v(&self) -> f64 {
        self.sigma_eps * self.sigma_theta / self.sigma()
    }

    /// All three parameters scaled by k (the model is homogeneous of degree 1).
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            theta: self.theta * k,
            sigma_eps: self.sigma_eps * k,
            sigma_theta: self.sigma_theta * k,
        }
    }
}

/// Conditional law of quality given one private valuation: N(mean, stddev^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub stddev: f64,
}

/// Belief update after observing own valuation `v_i`:
/// quality | v_i ~ N(tau*v_i + (1-tau)*theta, sigma_v^2).
pub fn posterior(params: &MarketParams, v_i: f64) -> Result<Posterior> {
    params.validate()?;
    let tau = params.tau();
    Ok(Posterior {
        mean: tau * v_i + (1.0 - tau) * params.theta,
        stddev: params.sigma_v(),
    })
}

/// Ex-ante expected profit at price p with no reward: p * Phi((theta-p)/sigma).
pub fn no_reward_profit(params: &MarketParams, p: f64) -> f64 {
    p * std_cdf((params.theta - p) / params.sigma())
}

/// Expected sales volume under a threshold strategy with the given cutoff.
pub fn expected_sales_volume(params: &MarketParams, cutoff: f64) -> f64 {
    std_cdf((params.theta - cutoff) / params.sigma())
}

/// The profit-maximizing fixed price: unique positive root of
/// p/sigma = Phi((theta-p)/sigma)/phi((theta-p)/sigma).
pub fn optimal_price(params: &MarketParams) -> Result<f64> {
    params.validate()?;
    let sigma = params.sigma();
    let theta = params.theta;
    let g = |p: f64| p / sigma - mills_ratio((theta - p) / sigma);
    let lo = 1e-12 * sigma.max(theta.abs().max(1.0));
    let mut hi = theta + 6.0 * sigma;
    if hi <= lo {
        hi = lo + 6.0 * sigma;
    }
    // widen geometrically until the root is bracketed
    for _ in 0..64 {
        if g(lo) * g(hi) <= 0.0 {
            let bracket = RootBracket { lo, hi, tol_abs: 1e-12 * sigma.max(1.0), max_iter: 200 };
            return find_root(g, &bracket);
        }
        hi = lo + 2.0 * (hi - lo);
    }
    Err(Error::NoBracket { lo, hi, g_lo: g(lo), g_hi: g(hi) })
}
