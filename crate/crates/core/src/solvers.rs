//! The analytically characterized reward programs and profit bounds: the
//! spread-constrained step program, the rate-constrained saturated-linear
//! program, the relaxed-problem benchmark (indifference constraint only),
//! the closed-form valuation-cap bound, and a discretized search over
//! full-refund interval policies.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{cutoff_roots_scanned, expected_profit_quality};
use crate::error::{Error, Result};
use crate::gauss::{
    find_root, integrate_segmented, mills_ratio, solve_system, std_cdf, std_pdf, RootBracket,
    SQRT_2PI,
};
use crate::market::MarketParams;
use crate::schedule::RewardSchedule;

const NEWTON_TOL: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 120;
/// Residual level under which a solution counts as converged.
const REPORT_TOL: f64 = 1e-9;

/// Solution of one nonlinear program-construction system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    /// Component names for `solution`, in order.
    pub names: Vec<String>,
    pub solution: Vec<f64>,
    pub residual_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The constructed program.
    pub schedule: RewardSchedule,
    /// Consumer cutoff consistent with the program.
    pub cutoff: f64,
    pub expected_profit: f64,
}

impl SolverReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Upper bounds on the expected profit of any implementable reward program.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfitBounds {
    /// Cap from charging each buyer at most min(price, valuation).
    pub pi1: f64,
    /// Bound from relaxing all constraints except cutoff indifference.
    pub pi2: f64,
    /// min(pi1, pi2).
    pub pi_h: f64,
}

fn require_interior(params: &MarketParams) -> Result<()> {
    params.validate()?;
    if params.sigma_eps <= 0.0 || params.sigma_theta <= 0.0 {
        return Err(Error::Domain(
            "this solver needs sigma_eps > 0 and sigma_theta > 0".into(),
        ));
    }
    Ok(())
}

/// Largest reward spread compatible with monotone consumer payoffs.
fn spread_cap(params: &MarketParams) -> f64 {
    SQRT_2PI * params.sigma_eps * params.sigma() / params.sigma_theta
}

/// Residuals of the two-equation step-program system for a given step size.
///
/// f1 is the cutoff indifference; f2 equates the profit-weighted density
/// ratio at the refund threshold with its first-order-condition value. The
/// Mills-ratio form keeps the system free of spurious roots in the tails;
/// the argument is clamped far outside any solution region so damped trial
/// steps stay finite.
fn step_system(
    params: &MarketParams,
    p: f64,
    r_m: f64,
) -> impl Fn(&[f64]) -> Vec<f64> {
    let (theta, se) = (params.theta, params.sigma_eps);
    let (tau, sv) = (params.tau(), params.sigma_v());
    move |x: &[f64]| {
        let (c, v_c) = (x[0], x[1]);
        let mu_c = tau * c + (1.0 - tau) * theta;
        let z = (v_c - mu_c) / sv;
        let y = ((v_c - c) / se).clamp(-40.0, 30.0);
        let f1 = c + r_m * std_cdf(z) - p;
        let f2 = mills_ratio(y) * se * (1.0 - tau * r_m * std_pdf(z) / sv) - c;
        vec![f1, f2]
    }
}

/// Indifference cutoffs for a step program with the given threshold: roots of
/// c + r_m Phi((v_c - mu_c)/sigma_v) = p in c.
fn step_cutoffs(params: &MarketParams, p: f64, r_m: f64, v_c: f64, n: usize) -> Vec<f64> {
    let (theta, tau, sv) = (params.theta, params.tau(), params.sigma_v());
    let g = |c: f64| c + r_m * std_cdf((v_c - (tau * c + (1.0 - tau) * theta)) / sv) - p;
    let lo = p - r_m - 1e-9;
    let hi = p + 1e-9;
    let mut roots = Vec::new();
    let mut prev_x = lo;
    let mut prev_g = g(lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let gx = g(x);
        if prev_g * gx <= 0.0 && prev_g != 0.0 {
            if let Ok(r) =
                find_root(g, &RootBracket { lo: prev_x, hi: x, tol_abs: 1e-13, max_iter: 200 })
            {
                roots.push(r);
            }
        }
        prev_x = x;
        prev_g = gx;
    }
    if roots.is_empty() {
        // endpoints: g(lo) <= 0 <= g(hi) always, so a root exists up to rounding
        roots.push(if prev_g.abs() < g(lo).abs() { hi } else { lo });
    }
    roots
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Shared machinery for the step-shaped systems: maximize `objective` over
/// the indifference manifold (scan + golden refinement over the threshold,
/// best root per threshold), then polish with damped Newton, keeping the
/// polished point only if it converged without giving up objective value.
fn solve_step_family(
    params: &MarketParams,
    p: f64,
    r_m: f64,
    objective: &dyn Fn(f64, f64) -> f64,
    spec_init: &[f64],
) -> Result<(f64, f64, f64, usize, bool)> {
    let theta = params.theta;
    let sigma = params.sigma();
    let system = step_system(params, p, r_m);

    // coarse manifold scan
    let n_grid = 160;
    let (lo, hi) = (theta - 6.0 * sigma, theta + 3.0 * sigma);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0); // (objective, c, v_c)
    for i in 0..=n_grid {
        let v_c = lo + (hi - lo) * i as f64 / n_grid as f64;
        for c in step_cutoffs(params, p, r_m, v_c, 400) {
            let val = objective(c, v_c);
            if val > best.0 {
                best = (val, c, v_c);
            }
        }
    }
    let grid_h = (hi - lo) / n_grid as f64;
    let best_of_vc = |v_c: f64| -> (f64, f64) {
        let mut out = (f64::NEG_INFINITY, 0.0);
        for c in step_cutoffs(params, p, r_m, v_c, 1200) {
            let val = objective(c, v_c);
            if val > out.0 {
                out = (val, c);
            }
        }
        out
    };
    let v_c = golden_max(
        |v| best_of_vc(v).0,
        best.2 - 1.5 * grid_h,
        best.2 + 1.5 * grid_h,
        1e-10 * sigma.max(1.0),
    );
    let (obj_scan, c_scan) = best_of_vc(v_c);
    let scan = (c_scan, v_c, obj_scan);

    // Newton polish: documented initialization first, then the scan point
    let mut iterations = 0;
    let mut polished: Option<(f64, f64, f64)> = None;
    for start in [spec_init.to_vec(), vec![scan.0, scan.1]] {
        let rep = solve_system(&system, &start, NEWTON_TOL, NEWTON_MAX_ITER)?;
        iterations += rep.iterations;
        if rep.converged {
            let (c, v_c) = (rep.solution[0], rep.solution[1]);
            let val = objective(c, v_c);
            if val >= scan.2 - 1e-7 * scan.2.abs().max(1.0) {
                polished = Some((c, v_c, val));
                break;
            }
        }
    }
    let (c, v_c, _obj) = polished.unwrap_or(scan);
    let residual = inf_norm(&system(&[c, v_c]));
    Ok((c, v_c, residual, iterations, residual <= REPORT_TOL))
}

/// Optimal program under the reward-spread constraint: a step paying
/// r_M = min(p, sqrt(2 pi) sigma_eps sigma / sigma_theta) on low qualities.
pub fn solve_spread_constrained(params: &MarketParams, p: f64) -> Result<SolverReport> {
    require_interior(params)?;
    let r_m = p.min(spread_cap(params));
    let objective = |c: f64, v_c: f64| -> f64 {
        let sched = RewardSchedule::step(r_m, v_c, p).expect("valid step");
        expected_profit_quality(params, p, &sched, c).unwrap_or(f64::NEG_INFINITY)
    };
    let c0 = p - r_m / 2.0;
    let spec_init = vec![c0, params.tau() * c0 + (1.0 - params.tau()) * params.theta];
    let (c, v_c, residual, iterations, converged) =
        solve_step_family(params, p, r_m, &objective, &spec_init)?;
    let schedule = RewardSchedule::step(r_m, v_c, p)?;
    Ok(SolverReport {
        names: vec!["cutoff".into(), "threshold_quality".into()],
        solution: vec![c, v_c],
        residual_inf_norm: residual,
        iterations,
        converged,
        expected_profit: expected_profit_quality(params, p, &schedule, c)?,
        schedule,
        cutoff: c,
    })
}

/// Profit of the full-refund step evaluated on the quality side; this is the
/// integral that defines the relaxed-problem bound.
fn full_refund_tail_profit(params: &MarketParams, p: f64, c: f64, v_c: f64) -> f64 {
    let (theta, se, st) = (params.theta, params.sigma_eps, params.sigma_theta);
    let f = |v: f64| std_cdf((v - c) / se) * std_pdf((theta - v) / st) / st;
    let hi = theta + 10.0 * st;
    if v_c >= hi {
        return 0.0;
    }
    p * integrate_segmented(f, v_c, hi, &[c - 8.0 * se, c + 8.0 * se], st / 2.0)
        .unwrap_or(f64::NEG_INFINITY)
}

/// Relaxation keeping only the indifference constraint. Returns the solved
/// full-refund step program (for reference) and the bound pi2 it induces.
///
/// The objective is maximized over every indifference branch, so the bound is
/// valid even where the step program itself would admit multiple equilibria.
pub fn solve_relaxed(params: &MarketParams, p: f64) -> Result<(SolverReport, f64)> {
    require_interior(params)?;
    let objective =
        |c: f64, v_c: f64| -> f64 { full_refund_tail_profit(params, p, c, v_c) };
    let c0 = p / 2.0;
    let spec_init = vec![c0, params.theta];
    let (c, v_c, residual, iterations, converged) =
        solve_step_family(params, p, p, &objective, &spec_init)?;
    let pi2 = full_refund_tail_profit(params, p, c, v_c);
    let schedule = RewardSchedule::step(p, v_c, p)?;
    Ok((
        SolverReport {
            names: vec!["cutoff".into(), "threshold_quality".into()],
            solution: vec![c, v_c],
            residual_inf_norm: residual,
            iterations,
            converged,
            expected_profit: pi2,
            schedule,
            cutoff: c,
        },
        pi2,
    ))
}

/// Closed-form cap on expected profit: each buyer pays at most
/// min(price, own valuation).
pub fn valuation_cap_bound(params: &MarketParams, p: f64) -> Result<f64> {
    params.validate()?;
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("price must be nonnegative, got {p}")));
    }
    let sigma = params.sigma();
    let theta = params.theta;
    let a = (theta - p) / sigma;
    let b = theta / sigma;
    Ok(p * std_cdf(a) + theta * (std_cdf(b) - std_cdf(a)) + sigma * (std_pdf(b) - std_pdf(a)))
}

// ---------------------------------------------------------------------------
// rate-constrained program

/// E[r|c] for the saturated-linear ramp, in the form whose root is the cutoff.
fn satlin_cutoff_gap(
    params: &MarketParams,
    p: f64,
    v_lo: f64,
    v_hi: f64,
) -> impl Fn(f64) -> f64 {
    let (theta, tau, sv) = (params.theta, params.tau(), params.sigma_v());
    move |c: f64| {
        let mu_c = tau * c + (1.0 - tau) * theta;
        let z_l = (v_lo - mu_c) / sv;
        let z_h = (v_hi - mu_c) / sv;
        let expected = (sv / tau)
            * (z_h * std_cdf(z_h) - z_l * std_cdf(z_l) + std_pdf(z_h) - std_pdf(z_l));
        c + expected - p
    }
}

fn satlin_cutoff(params: &MarketParams, p: f64, v_lo: f64, v_hi: f64) -> Result<f64> {
    // 0 <= E[r|c] <= p pins the root inside [0, p]
    let g = satlin_cutoff_gap(params, p, v_lo, v_hi);
    let eps = 1e-9 * p.abs().max(1.0);
    find_root(
        g,
        &RootBracket { lo: -eps, hi: p + eps, tol_abs: 1e-13 * p.abs().max(1.0), max_iter: 200 },
    )
}

/// Residuals of the three-equation ramp system: the threshold first-order
/// condition in ratio form, the imposed ramp width, and cutoff indifference.
fn ramp_system(params: &MarketParams, p: f64) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    let (theta, se, st) = (params.theta, params.sigma_eps, params.sigma_theta);
    let (tau, sv, sigma) = (params.tau(), params.sigma_v(), params.sigma());
    move |x: &[f64]| {
        let (c, v_lo, v_hi) = (x[0], x[1], x[2]);
        let mu_c = tau * c + (1.0 - tau) * theta;
        let z_l = (v_lo - mu_c) / sv;
        let z_h = (v_hi - mu_c) / sv;
        let mass = (std_cdf(z_h) - std_cdf(z_l)).max(1e-300);
        let numerator = integrate_segmented(
            |w| std_cdf((w - c) / se) * std_pdf((theta - w) / st) / st,
            v_lo.min(v_hi),
            v_hi.max(v_lo),
            &[c - 8.0 * se, c, c + 8.0 * se],
            st / 2.0,
        )
        .unwrap_or(f64::NAN);
        let f1 = numerator / mass
            - c * std_pdf((theta - c) / sigma) / sigma / (1.0 - mass).max(1e-300);
        let f2 = v_hi - v_lo - tau * p;
        let f3 = satlin_cutoff_gap(params, p, v_lo, v_hi)(c);
        vec![f1, f2, f3]
    }
}

/// Optimal program under the rate-of-change constraint |dr/dv| <= 1/tau:
/// full refund below a ramp of width tau*p that decreases at the maximal rate.
pub fn solve_rate_constrained(params: &MarketParams, p: f64) -> Result<SolverReport> {
    require_interior(params)?;
    let (theta, tau) = (params.theta, params.tau());
    let sigma = params.sigma();
    let width = tau * p;
    if width <= 0.0 {
        return Err(Error::Domain("rate-constrained ramp needs tau * p > 0".into()));
    }

    let profit_at = |v_lo: f64| -> Result<(f64, f64)> {
        let c = satlin_cutoff(params, p, v_lo, v_lo + width)?;
        let sched = RewardSchedule::saturated_linear(p, v_lo, v_lo + width)?;
        Ok((expected_profit_quality(params, p, &sched, c)?, c))
    };

    // scan the ramp start, refine, then polish the full system
    let n_grid = 140;
    let (lo, hi) = (theta - 6.0 * sigma, theta + 2.0 * sigma);
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=n_grid {
        let v_lo = lo + (hi - lo) * i as f64 / n_grid as f64;
        if let Ok((profit, _)) = profit_at(v_lo) {
            if profit > best.0 {
                best = (profit, v_lo);
            }
        }
    }
    let grid_h = (hi - lo) / n_grid as f64;
    let v_lo = golden_max(
        |v| profit_at(v).map(|t| t.0).unwrap_or(f64::NEG_INFINITY),
        best.1 - 1.5 * grid_h,
        best.1 + 1.5 * grid_h,
        1e-10 * sigma.max(1.0),
    );
    let (scan_profit, c_scan) = profit_at(v_lo)?;

    let system = ramp_system(params, p);
    let spec_init = vec![p / 2.0, theta - width / 2.0, theta + width / 2.0];
    let mut iterations = 0;
    let mut chosen = (c_scan, v_lo, v_lo + width);
    for start in [spec_init, vec![c_scan, v_lo, v_lo + width]] {
        let rep = solve_system(&system, &start, NEWTON_TOL, NEWTON_MAX_ITER)?;
        iterations += rep.iterations;
        if rep.converged {
            let sched =
                RewardSchedule::saturated_linear(p, rep.solution[1], rep.solution[2])?;
            let profit = expected_profit_quality(params, p, &sched, rep.solution[0])?;
            if profit >= scan_profit - 1e-7 * scan_profit.abs().max(1.0) {
                chosen = (rep.solution[0], rep.solution[1], rep.solution[2]);
                break;
            }
        }
    }
    let (c, v_lo, v_hi) = chosen;
    let residual = inf_norm(&system(&[c, v_lo, v_hi]));
    let schedule = RewardSchedule::saturated_linear(p, v_lo, v_hi)?;
    Ok(SolverReport {
        names: vec!["cutoff".into(), "v_lo".into(), "v_hi".into()],
        solution: vec![c, v_lo, v_hi],
        residual_inf_norm: residual,
        iterations,
        converged: residual <= REPORT_TOL,
        expected_profit: expected_profit_quality(params, p, &schedule, c)?,
        schedule,
        cutoff: c,
    })
}

/// Assembled profit bounds pi1, pi2, and their minimum.
pub fn profit_bounds(params: &MarketParams, p: f64) -> Result<ProfitBounds> {
    let pi1 = valuation_cap_bound(params, p)?;
    let (_, pi2) = solve_relaxed(params, p)?;
    Ok(ProfitBounds { pi1, pi2, pi_h: pi1.min(pi2) })
}

// ---------------------------------------------------------------------------
// interval-refund search

/// Settings for the interval-refund search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IntervalSearchConfig {
    /// Points per axis of the level-0 grid.
    pub coarse_points: usize,
    /// Refinement levels; the step shrinks by 10x per level.
    pub refine_levels: usize,
    /// Coordinate-cycling sweeps per level.
    pub refine_cycles: usize,
    /// Valuation grid size for the participation constraints (>= 400).
    pub constraint_grid: usize,
    /// Tolerance on the participation constraints.
    pub constraint_tol: f64,
    /// Cells of the inner cutoff sign-change scan.
    pub cutoff_scan: usize,
}

impl Default for IntervalSearchConfig {
    fn default() -> Self {
        Self {
            coarse_points: 33,
            refine_levels: 3,
            refine_cycles: 8,
            constraint_grid: 400,
            constraint_tol: 1e-7,
            cutoff_scan: 800,
        }
    }
}

impl IntervalSearchConfig {
    fn validate(&self) -> Result<()> {
        if self.coarse_points < 3 || self.refine_levels == 0 || self.refine_cycles == 0 {
            return Err(Error::Domain("interval search needs a nontrivial grid".into()));
        }
        if self.constraint_grid < 400 {
            return Err(Error::Domain(format!(
                "constraint grid must have >= 400 points, got {}",
                self.constraint_grid
            )));
        }
        if !(self.constraint_tol > 0.0) {
            return Err(Error::Domain("constraint tolerance must be positive".into()));
        }
        Ok(())
    }
}

struct IntervalSearch<'a> {
    params: &'a MarketParams,
    p: f64,
    cfg: IntervalSearchConfig,
    grid: Vec<f64>,
    evaluations: usize,
}

impl<'a> IntervalSearch<'a> {
    fn new(params: &'a MarketParams, p: f64, cfg: IntervalSearchConfig) -> Self {
        let sigma = params.sigma();
        let n = cfg.constraint_grid;
        let grid = (0..n)
            .map(|i| params.theta - 8.0 * sigma + 16.0 * sigma * i as f64 / (n - 1) as f64)
            .collect();
        Self { params, p, cfg, grid, evaluations: 0 }
    }

    fn schedule_of(&self, ws: &[(f64, f64)]) -> Option<RewardSchedule> {
        let mut sorted = ws.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        RewardSchedule::interval_refund(self.p, sorted).ok()
    }

    /// Feasible cutoffs: indifference roots at which every consumer above
    /// participates and every consumer below stays out, on the check grid.
    fn feasible_cutoffs(&self, sched: &RewardSchedule) -> Result<(Vec<f64>, f64)> {
        let roots = cutoff_roots_scanned(self.params, self.p, sched, self.cfg.cutoff_scan)?;
        let slack: Vec<f64> = self
            .grid
            .iter()
            .map(|&vi| {
                sched.expected_reward(self.params, vi).map(|e| e + vi - self.p)
            })
            .collect::<Result<_>>()?;
        let mut feasible = Vec::new();
        let mut best_violation = f64::INFINITY;
        for &c in &roots {
            let mut violation = 0.0f64;
            for (vi, s) in self.grid.iter().zip(&slack) {
                if *vi >= c {
                    violation = violation.max(-s);
                } else {
                    violation = violation.max(*s);
                }
            }
            best_violation = best_violation.min(violation);
            if violation <= self.cfg.constraint_tol {
                feasible.push(c);
            }
        }
        Ok((feasible, best_violation))
    }

    /// Best feasible profit of a candidate endpoint vector, if any.
    fn evaluate(&mut self, ws: &[(f64, f64)]) -> Option<(f64, f64)> {
        self.evaluations += 1;
        for &(lo, hi) in ws {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return None;
            }
        }
        let sched = self.schedule_of(ws)?;
        let (feasible, _) = self.feasible_cutoffs(&sched).ok()?;
        let mut best: Option<(f64, f64)> = None;
        for c in feasible {
            let profit = expected_profit_quality(self.params, self.p, &sched, c).ok()?;
            if best.is_none_or(|(bp, _)| profit > bp) {
                best = Some((profit, c));
            }
        }
        best
    }
}

/// Best full-refund interval policy with `l` refund intervals, by nested grid
/// search (coarse grid, then coordinate cycling with the step shrunk 10x per
/// level), re-solving the cutoff per candidate and enforcing the
/// participation constraints on a valuation grid.
///
/// This is a lower-bound approximation to the true variational optimum, not a
/// certificate of it.
pub fn optimize_interval_refund(
    params: &MarketParams,
    p: f64,
    l: usize,
    cfg: &IntervalSearchConfig,
) -> Result<SolverReport> {
    require_interior(params)?;
    cfg.validate()?;
    if !(1..=8).contains(&l) {
        return Err(Error::Domain(format!("interval count must lie in [1, 8], got {l}")));
    }
    let sigma = params.sigma();
    let theta = params.theta;
    let mut search = IntervalSearch::new(params, p, *cfg);

    // degenerate floor: zero-width intervals parked below the active window
    let parked: Vec<(f64, f64)> = (0..l)
        .map(|k| {
            let x = theta - 7.0 * sigma - 0.2 * sigma * k as f64;
            (x, x)
        })
        .collect();
    let mut best_ws = parked.clone();
    let mut best = match search.evaluate(&best_ws) {
        Some(v) => v,
        None => {
            return Err(Error::Infeasible { violation: f64::INFINITY });
        }
    };

    // level-0 grid over a single interval; extra intervals stay parked
    let (lo, hi) = (theta - 6.0 * sigma, theta + 2.0 * sigma);
    let n0 = cfg.coarse_points;
    let h0 = (hi - lo) / (n0 - 1) as f64;
    for i in 0..n0 {
        for j in i..n0 {
            let w_lo = lo + h0 * i as f64;
            let w_hi = lo + h0 * j as f64;
            if w_hi <= w_lo {
                continue;
            }
            let mut ws = parked.clone();
            ws[0] = (w_lo, w_hi);
            if let Some((profit, c)) = search.evaluate(&ws) {
                if profit > best.0 + 1e-12 {
                    best = (profit, c);
                    best_ws = ws;
                }
            }
        }
    }

    // re-park the spare intervals just below the winning one, zero width,
    // where the cycling steps can actually open them
    if l > 1 {
        let anchor = best_ws[0].0;
        for (k, w) in best_ws.iter_mut().enumerate().skip(1) {
            let x = anchor - 0.4 * sigma * k as f64;
            *w = (x, x);
        }
        if let Some((profit, c)) = search.evaluate(&best_ws) {
            best = (profit, c);
        }
    }

    // coordinate cycling over all 2l endpoints
    for level in 0..cfg.refine_levels {
        let step = h0 / 10f64.powi(level as i32);
        for _ in 0..cfg.refine_cycles {
            let mut improved = false;
            for idx in 0..l {
                for side in 0..2 {
                    let base = best_ws.clone();
                    let base_val = if side == 0 { base[idx].0 } else { base[idx].1 };
                    for mult in -6..=6i32 {
                        if mult == 0 {
                            continue;
                        }
                        let mut ws = base.clone();
                        let v = base_val + f64::from(mult) * step;
                        if side == 0 {
                            ws[idx].0 = v;
                            ws[idx].1 = ws[idx].1.max(v);
                        } else {
                            ws[idx].1 = v;
                            ws[idx].0 = ws[idx].0.min(v);
                        }
                        if let Some((profit, c)) = search.evaluate(&ws) {
                            if profit > best.0 + 1e-12 {
                                best = (profit, c);
                                best_ws = ws;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    // continuous per-endpoint polish around the final grid point
    let polish_step = h0 / 10f64.powi(cfg.refine_levels as i32 - 1);
    for _ in 0..2 {
        for idx in 0..l {
            for side in 0..2 {
                let base = best_ws.clone();
                let center = if side == 0 { base[idx].0 } else { base[idx].1 };
                let value_at = |v: f64, search: &mut IntervalSearch| -> f64 {
                    let mut ws = base.clone();
                    if side == 0 {
                        ws[idx].0 = v;
                        ws[idx].1 = ws[idx].1.max(v);
                    } else {
                        ws[idx].1 = v;
                        ws[idx].0 = ws[idx].0.min(v);
                    }
                    search.evaluate(&ws).map_or(f64::NEG_INFINITY, |(p, _)| p)
                };
                let v = {
                    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
                    let (mut a, mut b) = (center - polish_step, center + polish_step);
                    let (mut x1, mut x2) = (b - gr * (b - a), a + gr * (b - a));
                    let (mut f1, mut f2) = (value_at(x1, &mut search), value_at(x2, &mut search));
                    while b - a > 1e-9 * sigma {
                        if f1 > f2 {
                            b = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = b - gr * (b - a);
                            f1 = value_at(x1, &mut search);
                        } else {
                            a = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = a + gr * (b - a);
                            f2 = value_at(x2, &mut search);
                        }
                    }
                    0.5 * (a + b)
                };
                let mut ws = base.clone();
                if side == 0 {
                    ws[idx].0 = v;
                    ws[idx].1 = ws[idx].1.max(v);
                } else {
                    ws[idx].1 = v;
                    ws[idx].0 = ws[idx].0.min(v);
                }
                if let Some((profit, c)) = search.evaluate(&ws) {
                    if profit > best.0 {
                        best = (profit, c);
                        best_ws = ws;
                    }
                }
            }
        }
    }

    // prune zero-width intervals from the reported schedule
    let mut final_ws: Vec<(f64, f64)> =
        best_ws.iter().copied().filter(|(a, b)| b > a).collect();
    final_ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let schedule = RewardSchedule::interval_refund(p, final_ws.clone())?;
    let (profit, cutoff) = best;
    let g_residual =
        cutoff + schedule.expected_reward(params, cutoff)? - p;

    let mut names = vec!["cutoff".to_string()];
    let mut solution = vec![cutoff];
    for (k, (a, b)) in final_ws.iter().enumerate() {
        names.push(format!("w_lo_{}", k + 1));
        names.push(format!("w_hi_{}", k + 1));
        solution.push(*a);
        solution.push(*b);
    }
    Ok(SolverReport {
        names,
        solution,
        residual_inf_norm: g_residual.abs(),
        iterations: search.evaluations,
        converged: g_residual.abs() <= 1e-7,
        expected_profit: profit,
        schedule,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_cutoff;
    use crate::market::{no_reward_profit, optimal_price};
    use approx::assert_relative_eq;

    fn params(se: f64) -> MarketParams {
        MarketParams::new(5.0, se, (1.0 - se * se).sqrt()).unwrap()
    }

    #[test]
    fn spread_solver_fig1_point() {
        // cross-checked against an independent high-precision solve
        let pm = params(0.9);
        let p = optimal_price(&pm).unwrap();
        let rep = solve_spread_constrained(&pm, p).unwrap();
        assert!(rep.converged, "residual {}", rep.residual_inf_norm);
        assert_relative_eq!(rep.solution[0], 2.92249840, epsilon = 2e-6);
        assert_relative_eq!(rep.solution[1], 4.34398488, epsilon = 2e-6);
        assert_relative_eq!(rep.expected_profit, 3.6013246884, epsilon = 1e-6);
        // indifference consistency with the cutoff solver
        let eq = solve_cutoff(&pm, p, &rep.schedule).unwrap();
        assert!((eq.cutoff - rep.cutoff).abs() <= 1e-8);
        assert!(eq.indifference_residual.abs() <= 1e-9);
        // certificate closure, and strictly profitable in this regime
        assert!(rep.schedule.spread_certificate(&pm).holds);
        assert!(rep.expected_profit > no_reward_profit(&pm, p) + 0.1);
    }

    #[test]
    fn spread_solver_small_sigma_eps() {
        // the small-taste-diversity regime where the naive start degenerates
        let pm = params(0.1);
        let p = optimal_price(&pm).unwrap();
        let rep = solve_spread_constrained(&pm, p).unwrap();
        assert!(rep.converged);
        assert_relative_eq!(rep.expected_profit, 3.546016114, epsilon = 1e-5);
        assert!(rep.expected_profit > no_reward_profit(&pm, p) + 0.1);
    }

    #[test]
    fn relaxed_coincides_with_spread_when_cap_binds() {
        let pm = params(0.9); // sigma_eps/sigma_theta above p/sqrt(2 pi): r_M = p
        let p = optimal_price(&pm).unwrap();
        let sc = solve_spread_constrained(&pm, p).unwrap();
        let (relaxed, pi2) = solve_relaxed(&pm, p).unwrap();
        assert_relative_eq!(sc.solution[0], relaxed.solution[0], epsilon = 1e-9);
        assert_relative_eq!(sc.solution[1], relaxed.solution[1], epsilon = 1e-9);
        assert_relative_eq!(sc.expected_profit, pi2, epsilon = 1e-8);
    }

    #[test]
    fn relaxed_bound_survives_multibranch_regime() {
        // small sigma_eps: the indifference equation has several branches and
        // the bound must come from the best one
        let pm = params(0.2);
        let p = optimal_price(&pm).unwrap();
        let (_, pi2) = solve_relaxed(&pm, p).unwrap();
        assert_relative_eq!(pi2, 3.910677980, epsilon = 1e-5);
        let sc = solve_spread_constrained(&pm, p).unwrap();
        assert!(pi2 >= sc.expected_profit - 1e-8);
    }

    #[test]
    fn valuation_cap_bound_closed_form() {
        let pm = params(0.6);
        // golden value from the quadrature oracle at p = 3.91
        assert_relative_eq!(
            valuation_cap_bound(&pm, 3.91).unwrap(),
            3.8400129502935407436,
            epsilon = 1e-12
        );
        // p -> 0 collapses the cap window
        assert!(valuation_cap_bound(&pm, 1e-12).unwrap() < 1e-11);
        // quadrature cross-check
        let p = 3.91;
        let quad = integrate_segmented(
            |x| x * std_pdf((pm.theta - x) / pm.sigma()) / pm.sigma(),
            0.0,
            p,
            &[],
            0.5,
        )
        .unwrap();
        assert_relative_eq!(
            valuation_cap_bound(&pm, p).unwrap(),
            p * std_cdf((pm.theta - p) / pm.sigma()) + quad,
            epsilon = 1e-10
        );
    }

    #[test]
    fn rate_solver_width_and_cutoff_line() {
        let pm = params(0.2);
        let p = optimal_price(&pm).unwrap();
        let rep = solve_rate_constrained(&pm, p).unwrap();
        assert!(rep.converged, "residual {}", rep.residual_inf_norm);
        let (c, v_lo, v_hi) = (rep.solution[0], rep.solution[1], rep.solution[2]);
        assert_relative_eq!(v_hi - v_lo, pm.tau() * p, epsilon = 1e-9);
        // closed-form cutoff line agrees with quadrature of the expected reward
        let e_closed = rep.schedule.expected_reward(&pm, c).unwrap();
        assert_relative_eq!(c + e_closed, p, epsilon = 1e-9);
        // certificate closure: slope is exactly the bound
        assert!(rep.schedule.rate_certificate(&pm).holds);
        // reference from an independent solve
        assert_relative_eq!(rep.expected_profit, 3.8360082744, epsilon = 1e-6);
    }

    #[test]
    fn profit_bounds_ordering() {
        for se in [0.2, 0.5, 0.85] {
            let pm = params(se);
            let p = optimal_price(&pm).unwrap();
            let b = profit_bounds(&pm, p).unwrap();
            assert!(b.pi_h <= b.pi1 + 1e-12 && b.pi_h <= b.pi2 + 1e-12);
            assert!(b.pi_h >= no_reward_profit(&pm, p) - 1e-8);
        }
    }

    #[test]
    fn interval_search_beats_spread_program_when_it_is_an_interval() {
        // r_M = p regime: the step program is itself a refund interval, so the
        // l = 1 search must match or beat it (and stay under the bound)
        let pm = params(0.9);
        let p = optimal_price(&pm).unwrap();
        let sc = solve_spread_constrained(&pm, p).unwrap();
        let bounds = profit_bounds(&pm, p).unwrap();
        let rep = optimize_interval_refund(&pm, p, 1, &IntervalSearchConfig::default()).unwrap();
        assert!(
            rep.expected_profit >= sc.expected_profit - 1e-6,
            "interval {} vs step {}",
            rep.expected_profit,
            sc.expected_profit
        );
        assert!(rep.expected_profit <= bounds.pi_h + 1e-6);
        assert!(rep.expected_profit >= no_reward_profit(&pm, p) - 1e-9);
    }

    #[test]
    fn interval_search_rejects_bad_inputs() {
        let pm = params(0.5);
        let p = optimal_price(&pm).unwrap();
        assert!(optimize_interval_refund(&pm, p, 0, &IntervalSearchConfig::default()).is_err());
        assert!(optimize_interval_refund(&pm, p, 9, &IntervalSearchConfig::default()).is_err());
        let cfg = IntervalSearchConfig { constraint_grid: 100, ..Default::default() };
        assert!(optimize_interval_refund(&pm, p, 1, &cfg).is_err());
        let degenerate = MarketParams::new(5.0, 1.0, 0.0).unwrap();
        assert!(optimize_interval_refund(&degenerate, p, 1, &IntervalSearchConfig::default())
            .is_err());
    }
}
