//! Reward programs as functions of realized quality, r(v) in [0, p].
//!
//! The quality-domain form is canonical; the sales-volume-domain payout is
//! derived on demand through the monotone map between quality and volume.
//! Expectations against the posterior use closed Gaussian forms wherever the
//! representation allows, and segmented quadrature otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{
    gauss_expect_piecewise, gaussian_mass, gaussian_partial_mean, std_cdf, std_inv_cdf, std_pdf,
    SQRT_2PI,
};
use crate::market::{posterior, MarketParams};

/// Relative slack when checking certificate inequalities, so solver outputs
/// that meet their constraint with equality still certify.
const CERT_SLACK: f64 = 1e-9;

/// The shape of a reward program.
///
/// Boundary conventions are closed where the shape has a jump: a step pays at
/// its threshold, a refund interval pays at both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RewardForm {
    /// Flat payment at every realized quality.
    Constant { level: f64 },
    /// `level` when v <= threshold_quality, zero above.
    Step { level: f64, threshold_quality: f64 },
    /// Full cap below `v_lo`, linear down to zero at `v_hi`, zero after.
    SaturatedLinear { v_lo: f64, v_hi: f64 },
    /// Full cap exactly when v lies in one of the closed intervals.
    IntervalRefund { intervals: Vec<(f64, f64)> },
    /// Piecewise-linear interpolation with constant extension outside.
    Tabulated { breakpoints: Vec<f64>, values: Vec<f64> },
}

/// A reward program bounded by the price: 0 <= r(v) <= price_cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSchedule {
    pub price_cap: f64,
    pub form: RewardForm,
}

/// Outcome of the reward-spread check r_max - r_min <= sqrt(2 pi) sigma_eps sigma / sigma_theta.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpreadCertificate {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// True when sigma_theta = 0 makes the condition vacuous.
    pub vacuous: bool,
}

/// Outcome of the rate-of-change check |dr/dv| <= 1/tau.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateCertificate {
    pub holds: bool,
    pub max_slope: f64,
    pub bound: f64,
    /// True when tau = 0 makes the condition vacuous.
    pub vacuous: bool,
}

impl RewardSchedule {
    pub fn new(price_cap: f64, form: RewardForm) -> Result<Self> {
        let s = Self { price_cap, form };
        s.validate()?;
        Ok(s)
    }

    /// The trivial no-reward program.
    pub fn zero(price_cap: f64) -> Self {
        Self { price_cap, form: RewardForm::Constant { level: 0.0 } }
    }

    pub fn constant(level: f64, price_cap: f64) -> Result<Self> {
        Self::new(price_cap, RewardForm::Constant { level })
    }

    pub fn step(level: f64, threshold_quality: f64, price_cap: f64) -> Result<Self> {
        Self::new(price_cap, RewardForm::Step { level, threshold_quality })
    }

    pub fn saturated_linear(price_cap: f64, v_lo: f64, v_hi: f64) -> Result<Self> {
        Self::new(price_cap, RewardForm::SaturatedLinear { v_lo, v_hi })
    }

    pub fn interval_refund(price_cap: f64, intervals: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(price_cap, RewardForm::IntervalRefund { intervals })
    }

    pub fn tabulated(price_cap: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(price_cap, RewardForm::Tabulated { breakpoints, values })
    }

    pub fn validate(&self) -> Result<()> {
        let cap = self.price_cap;
        if !(cap >= 0.0) || !cap.is_finite() {
            return Err(Error::Domain(format!("price_cap must be finite and >= 0, got {cap}")));
        }
        let in_cap = |x: f64| x.is_finite() && x >= 0.0 && x <= cap + 1e-12 * cap.max(1.0);
        match &self.form {
            RewardForm::Constant { level } => {
                if !in_cap(*level) {
                    return Err(Error::Domain(format!("constant level {level} outside [0, {cap}]")));
                }
            }
            RewardForm::Step { level, threshold_quality } => {
                if !in_cap(*level) {
                    return Err(Error::Domain(format!("step level {level} outside [0, {cap}]")));
                }
                if !threshold_quality.is_finite() {
                    return Err(Error::Domain("step threshold must be finite".into()));
                }
            }
            RewardForm::SaturatedLinear { v_lo, v_hi } => {
                if !(v_lo.is_finite() && v_hi.is_finite() && v_lo < v_hi) {
                    return Err(Error::Domain(format!(
                        "saturated-linear needs v_lo < v_hi, got [{v_lo}, {v_hi}]"
                    )));
                }
            }
            RewardForm::IntervalRefund { intervals } => {
                let mut prev_hi = f64::NEG_INFINITY;
                for &(lo, hi) in intervals {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(Error::Domain(format!("bad refund interval [{lo}, {hi}]")));
                    }
                    if lo <= prev_hi {
                        return Err(Error::Domain(
                            "refund intervals must be sorted and disjoint".into(),
                        ));
                    }
                    prev_hi = hi;
                }
            }
            RewardForm::Tabulated { breakpoints, values } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::Domain(
                        "tabulated schedule needs equal, nonempty breakpoints and values".into(),
                    ));
                }
                for w in breakpoints.windows(2) {
                    if !(w[0] < w[1]) {
                        return Err(Error::Domain("breakpoints must be strictly increasing".into()));
                    }
                }
                if !breakpoints.iter().all(|b| b.is_finite()) {
                    return Err(Error::Domain("breakpoints must be finite".into()));
                }
                if !values.iter().all(|v| in_cap(*v)) {
                    return Err(Error::Domain(format!("tabulated values outside [0, {cap}]")));
                }
            }
        }
        Ok(())
    }

    /// Pointwise reward at realized quality v.
    pub fn evaluate(&self, v: f64) -> f64 {
        match &self.form {
            RewardForm::Constant { level } => *level,
            RewardForm::Step { level, threshold_quality } => {
                if v <= *threshold_quality {
                    *level
                } else {
                    0.0
                }
            }
            RewardForm::SaturatedLinear { v_lo, v_hi } => {
                if v < *v_lo {
                    self.price_cap
                } else if v < *v_hi {
                    self.price_cap * (v_hi - v) / (v_hi - v_lo)
                } else {
                    0.0
                }
            }
            RewardForm::IntervalRefund { intervals } => {
                for &(lo, hi) in intervals {
                    if v >= lo && v <= hi {
                        return self.price_cap;
                    }
                }
                0.0
            }
            RewardForm::Tabulated { breakpoints, values } => {
                if v <= breakpoints[0] {
                    return values[0];
                }
                if v >= *breakpoints.last().unwrap() {
                    return *values.last().unwrap();
                }
                let i = breakpoints.partition_point(|b| *b <= v) - 1;
                let t = (v - breakpoints[i]) / (breakpoints[i + 1] - breakpoints[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// Exact (min, max) of the reward over all qualities.
    pub fn reward_range(&self) -> (f64, f64) {
        match &self.form {
            RewardForm::Constant { level } => (*level, *level),
            RewardForm::Step { level, .. } => (0.0f64.min(*level), 0.0f64.max(*level)),
            RewardForm::SaturatedLinear { .. } => (0.0, self.price_cap),
            RewardForm::IntervalRefund { intervals } => {
                if intervals.is_empty() || self.price_cap == 0.0 {
                    (0.0, 0.0)
                } else {
                    (0.0, self.price_cap)
                }
            }
            RewardForm::Tabulated { values, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &v in values {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
        }
    }

    /// Largest |dr/dv|; infinite across jumps.
    pub fn max_abs_slope(&self) -> f64 {
        match &self.form {
            RewardForm::Constant { .. } => 0.0,
            RewardForm::Step { level, .. } => {
                if *level > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            RewardForm::SaturatedLinear { v_lo, v_hi } => self.price_cap / (v_hi - v_lo),
            RewardForm::IntervalRefund { intervals } => {
                if intervals.is_empty() || self.price_cap == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            RewardForm::Tabulated { breakpoints, values } => {
                let mut m = 0.0f64;
                for i in 0..breakpoints.len() - 1 {
                    let s = (values[i + 1] - values[i]) / (breakpoints[i + 1] - breakpoints[i]);
                    m = m.max(s.abs());
                }
                m
            }
        }
    }

    /// Kink/jump locations, for segmented integration.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            RewardForm::Constant { .. } => vec![],
            RewardForm::Step { threshold_quality, .. } => vec![*threshold_quality],
            RewardForm::SaturatedLinear { v_lo, v_hi } => vec![*v_lo, *v_hi],
            RewardForm::IntervalRefund { intervals } => {
                intervals.iter().flat_map(|&(lo, hi)| [lo, hi]).collect()
            }
            RewardForm::Tabulated { breakpoints, .. } => breakpoints.clone(),
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match &self.form {
            RewardForm::Constant { .. } => true,
            RewardForm::Step { level, .. } => *level >= 0.0,
            RewardForm::SaturatedLinear { .. } => true,
            RewardForm::IntervalRefund { intervals } => {
                intervals.is_empty() || self.price_cap == 0.0
            }
            RewardForm::Tabulated { values, .. } => values.windows(2).all(|w| w[0] >= w[1]),
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match &self.form {
            RewardForm::Constant { .. } => true,
            RewardForm::Step { level, .. } => *level <= 0.0,
            RewardForm::SaturatedLinear { .. } => false,
            RewardForm::IntervalRefund { intervals } => {
                intervals.is_empty() || self.price_cap == 0.0
            }
            RewardForm::Tabulated { values, .. } => values.windows(2).all(|w| w[0] <= w[1]),
        }
    }

    /// The payout announced as a function of ex-post sales volume:
    /// r(cutoff + sigma_eps * Phi^{-1}(a_bar)).
    pub fn to_sales_volume_domain(
        &self,
        params: &MarketParams,
        cutoff: f64,
        a_bar: f64,
    ) -> Result<f64> {
        if !(a_bar > 0.0 && a_bar < 1.0) {
            return Err(Error::Domain(format!("sales volume must lie in (0,1), got {a_bar}")));
        }
        if params.sigma_eps <= 0.0 {
            return Err(Error::Domain(
                "volume-domain payout needs sigma_eps > 0 (volume-quality map is flat)".into(),
            ));
        }
        Ok(self.evaluate(cutoff + params.sigma_eps * std_inv_cdf(a_bar)?))
    }

    /// E[r(V) | v_i] against the posterior; closed forms where available,
    /// segmented quadrature for tabulated shapes.
    pub fn expected_reward(&self, params: &MarketParams, v_i: f64) -> Result<f64> {
        let post = posterior(params, v_i)?;
        let (mu, sv) = (post.mean, post.stddev);
        if sv == 0.0 {
            return Ok(self.evaluate(mu));
        }
        match &self.form {
            RewardForm::Constant { level } => Ok(*level),
            RewardForm::Step { level, threshold_quality } => {
                Ok(level * std_cdf((threshold_quality - mu) / sv))
            }
            RewardForm::IntervalRefund { intervals } => {
                let mut acc = 0.0;
                for &(lo, hi) in intervals {
                    acc += gaussian_mass(mu, sv, lo, hi);
                }
                Ok(self.price_cap * acc)
            }
            RewardForm::SaturatedLinear { v_lo, v_hi } => {
                let alpha = (v_lo - mu) / sv;
                let beta = (v_hi - mu) / sv;
                let slope = self.price_cap / (v_hi - v_lo);
                Ok(self.price_cap * std_cdf(alpha)
                    + slope
                        * ((v_hi - mu) * (std_cdf(beta) - std_cdf(alpha))
                            + sv * (std_pdf(beta) - std_pdf(alpha))))
            }
            RewardForm::Tabulated { breakpoints, values } => {
                // per-segment truncated moments; algebraically identical to
                // segmented quadrature of the piecewise-linear interpolant
                let first = breakpoints[0];
                let last = *breakpoints.last().unwrap();
                let mut acc = values[0] * gaussian_mass(mu, sv, f64::NEG_INFINITY, first)
                    + values.last().unwrap() * gaussian_mass(mu, sv, last, f64::INFINITY);
                for i in 0..breakpoints.len() - 1 {
                    let (a, b) = (breakpoints[i], breakpoints[i + 1]);
                    let slope = (values[i + 1] - values[i]) / (b - a);
                    let intercept = values[i] - slope * a;
                    acc += intercept * gaussian_mass(mu, sv, a, b)
                        + slope * gaussian_partial_mean(mu, sv, a, b);
                }
                Ok(acc)
            }
        }
    }

    /// d/dv_i E[r(V) | v_i] = (tau/sigma_v) E[r(V) (V - mu_i)/sigma_v | v_i].
    pub fn expected_reward_derivative(&self, params: &MarketParams, v_i: f64) -> Result<f64> {
        let post = posterior(params, v_i)?;
        let (mu, sv) = (post.mean, post.stddev);
        if sv == 0.0 {
            return Err(Error::Domain(
                "expected-reward derivative needs sigma_v > 0".into(),
            ));
        }
        let tau = params.tau();
        match &self.form {
            RewardForm::Constant { .. } => Ok(0.0),
            RewardForm::Step { level, threshold_quality } => {
                Ok(-tau * level * std_pdf((threshold_quality - mu) / sv) / sv)
            }
            RewardForm::IntervalRefund { intervals } => {
                let mut acc = 0.0;
                for &(lo, hi) in intervals {
                    acc += std_pdf((lo - mu) / sv) - std_pdf((hi - mu) / sv);
                }
                Ok(tau * self.price_cap * acc / sv)
            }
            RewardForm::SaturatedLinear { v_lo, v_hi } => {
                let alpha = (v_lo - mu) / sv;
                let beta = (v_hi - mu) / sv;
                let slope = self.price_cap / (v_hi - v_lo);
                Ok(-tau * slope * (std_cdf(beta) - std_cdf(alpha)))
            }
            RewardForm::Tabulated { .. } => {
                let f = |v: f64| self.evaluate(v) * (v - mu) / sv;
                let e = gauss_expect_piecewise(f, mu, sv, &self.breakpoints(), 10.0)?;
                Ok(tau * e / sv)
            }
        }
    }

    /// Reward-spread condition sufficient for monotone consumer payoffs.
    pub fn spread_certificate(&self, params: &MarketParams) -> SpreadCertificate {
        let (r_min, r_max) = self.reward_range();
        let lhs = r_max - r_min;
        if params.sigma_theta == 0.0 {
            return SpreadCertificate { holds: true, lhs, rhs: f64::INFINITY, vacuous: true };
        }
        let rhs = SQRT_2PI * params.sigma_eps * params.sigma() / params.sigma_theta;
        SpreadCertificate {
            holds: lhs <= rhs * (1.0 + CERT_SLACK),
            lhs,
            rhs,
            vacuous: false,
        }
    }

    /// Rate-of-change condition |dr/dv| <= 1/tau, the alternative sufficient
    /// condition for monotone consumer payoffs.
    pub fn rate_certificate(&self, params: &MarketParams) -> RateCertificate {
        let max_slope = self.max_abs_slope();
        let tau = params.tau();
        if tau == 0.0 {
            return RateCertificate { holds: true, max_slope, bound: f64::INFINITY, vacuous: true };
        }
        let bound = 1.0 / tau;
        RateCertificate {
            holds: max_slope <= bound * (1.0 + CERT_SLACK),
            max_slope,
            bound,
            vacuous: false,
        }
    }

    /// True when either sufficient condition certifies monotone payoffs.
    pub fn certified(&self, params: &MarketParams) -> bool {
        let s = self.spread_certificate(params);
        let r = self.rate_certificate(params);
        (s.holds && !s.vacuous) || (r.holds && !r.vacuous) || s.vacuous
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}
