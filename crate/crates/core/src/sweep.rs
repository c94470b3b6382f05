//! The profit-comparison sweep over allocations of a fixed total uncertainty
//! between taste diversity and quality uncertainty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::fmt_g12;
use crate::market::{no_reward_profit, optimal_price, MarketParams};
use crate::solvers::{
    optimize_interval_refund, solve_rate_constrained, solve_relaxed, solve_spread_constrained,
    valuation_cap_bound, IntervalSearchConfig,
};

/// Sweep behavior knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Interval-refund searches to run per row, by interval count.
    pub interval_levels: Vec<usize>,
    pub interval_config: IntervalSearchConfig,
}

/// One grid point of the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma_eps: f64,
    pub sigma_theta: f64,
    pub p: f64,
    pub profit_no_reward: f64,
    pub profit_sc: f64,
    pub profit_rc: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub pi_h: f64,
    /// (interval count, profit) for each requested search.
    pub profit_intervals: Vec<(usize, f64)>,
    /// "ok", or the failure description for this row.
    pub status: String,
}

/// Solve every program and bound at each sigma_eps grid point, holding the
/// total uncertainty fixed. The price is computed once: it depends on the
/// total uncertainty only. Rows are emitted in grid order; a failing row
/// carries its error in `status` and the sweep continues.
pub fn run_sweep(
    theta: f64,
    sigma_total: f64,
    grid: &[f64],
    options: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if !(sigma_total > 0.0) {
        return Err(Error::Domain(format!("sigma_total must be positive, got {sigma_total}")));
    }
    for &se in grid {
        if !(se > 0.0 && se < sigma_total) {
            return Err(Error::Domain(format!(
                "grid points must lie strictly inside (0, {sigma_total}), got {se}"
            )));
        }
    }
    // price depends only on (theta, sigma): compute once from an arbitrary split
    let p = optimal_price(&MarketParams::new(
        theta,
        sigma_total / 2.0f64.sqrt(),
        sigma_total / 2.0f64.sqrt(),
    )?)?;

    let mut rows = Vec::with_capacity(grid.len());
    for &sigma_eps in grid {
        let sigma_theta = (sigma_total * sigma_total - sigma_eps * sigma_eps).sqrt();
        let params = MarketParams::new(theta, sigma_eps, sigma_theta)?;
        let mut row = SweepRow {
            sigma_eps,
            sigma_theta,
            p,
            profit_no_reward: no_reward_profit(&params, p),
            profit_sc: f64::NAN,
            profit_rc: f64::NAN,
            pi1: f64::NAN,
            pi2: f64::NAN,
            pi_h: f64::NAN,
            profit_intervals: Vec::new(),
            status: "ok".into(),
        };
        let fail = |row: &mut SweepRow, e: Error| {
            if row.status == "ok" {
                row.status = e.to_string();
            }
        };
        match solve_spread_constrained(&params, p) {
            Ok(r) => row.profit_sc = r.expected_profit,
            Err(e) => fail(&mut row, e),
        }
        match solve_rate_constrained(&params, p) {
            Ok(r) => row.profit_rc = r.expected_profit,
            Err(e) => fail(&mut row, e),
        }
        match valuation_cap_bound(&params, p) {
            Ok(v) => row.pi1 = v,
            Err(e) => fail(&mut row, e),
        }
        match solve_relaxed(&params, p) {
            Ok((_, pi2)) => row.pi2 = pi2,
            Err(e) => fail(&mut row, e),
        }
        row.pi_h = row.pi1.min(row.pi2);
        for &l in &options.interval_levels {
            match optimize_interval_refund(&params, p, l, &options.interval_config) {
                Ok(r) => row.profit_intervals.push((l, r.expected_profit)),
                Err(e) => {
                    row.profit_intervals.push((l, f64::NAN));
                    fail(&mut row, e);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Fixed CSV header for the given interval levels.
pub fn csv_header(interval_levels: &[usize]) -> String {
    let mut h = String::from(
        "sigma_eps,sigma_theta,p,profit_no_reward,profit_sc,profit_rc,pi1,pi2,pi_h",
    );
    for l in interval_levels {
        h.push_str(&format!(",profit_interval_{l}"));
    }
    h
}

/// Rows as CSV with 12-significant-digit fields (byte-stable across runs).
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let levels: Vec<usize> =
        rows.first().map(|r| r.profit_intervals.iter().map(|(l, _)| *l).collect()).unwrap_or_default();
    let mut out = csv_header(&levels);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_g12(r.sigma_eps),
            fmt_g12(r.sigma_theta),
            fmt_g12(r.p),
            fmt_g12(r.profit_no_reward),
            fmt_g12(r.profit_sc),
            fmt_g12(r.profit_rc),
            fmt_g12(r.pi1),
            fmt_g12(r.pi2),
            fmt_g12(r.pi_h)
        ));
        for (_, v) in &r.profit_intervals {
            out.push(',');
            out.push_str(&fmt_g12(*v));
        }
        out.push('\n');
    }
    out
}

/// Rows as a schema-versioned JSON document carrying the same numeric values
/// as the CSV encoding.
pub fn rows_to_json(theta: f64, sigma_total: f64, rows: &[SweepRow]) -> serde_json::Value {
    let rows_json: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let mut obj = serde_json::Map::new();
            let mut put = |k: &str, v: f64| {
                obj.insert(
                    k.to_string(),
                    serde_json::from_str(&fmt_g12_json(v)).expect("valid json number"),
                );
            };
            put("sigma_eps", r.sigma_eps);
            put("sigma_theta", r.sigma_theta);
            put("p", r.p);
            put("profit_no_reward", r.profit_no_reward);
            put("profit_sc", r.profit_sc);
            put("profit_rc", r.profit_rc);
            put("pi1", r.pi1);
            put("pi2", r.pi2);
            put("pi_h", r.pi_h);
            for (l, v) in &r.profit_intervals {
                put(&format!("profit_interval_{l}"), *v);
            }
            obj.insert("status".into(), serde_json::Value::String(r.status.clone()));
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::json!({
        "schema": 1,
        "theta": theta,
        "sigma_total": sigma_total,
        "rows": rows_json,
    })
}

/// JSON numbers cannot be nan/inf; encode those as null.
fn fmt_g12_json(x: f64) -> String {
    if x.is_finite() {
        fmt_g12(x)
    } else {
        "null".into()
    }
}
