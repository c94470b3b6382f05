//! Bracketed scalar root finding: safeguarded secant/bisection hybrid.

use crate::error::{Error, Result};

/// A sign-change bracket plus termination settings.
#[derive(Debug, Clone, Copy)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, tol_abs: 1e-12, max_iter: 200 }
    }

    pub fn with_tol(mut self, tol_abs: f64) -> Self {
        self.tol_abs = tol_abs;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::Domain(format!(
                "bracket requires lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.tol_abs > 0.0) {
            return Err(Error::Domain("tol_abs must be positive".into()));
        }
        Ok(())
    }
}

/// Find x in [lo, hi] with g(x) = 0, given g(lo)·g(hi) <= 0.
///
/// Secant steps are taken while they stay inside the current bracket and make
/// progress; otherwise the step falls back to bisection, so the iterate never
/// leaves the bracket and the width contracts to `tol_abs`.
pub fn find_root<F: Fn(f64) -> f64>(g: F, bracket: &RootBracket) -> Result<f64> {
    bracket.validate()?;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut fa = g(a);
    let mut fb = g(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoBracket { lo: a, hi: b, g_lo: fa, g_hi: fb });
    }
    let mut iters = 0;
    while b - a > bracket.tol_abs {
        if iters >= bracket.max_iter {
            return Err(Error::NoConvergence {
                iterations: iters,
                residual: fa.abs().min(fb.abs()),
                last: vec![0.5 * (a + b)],
            });
        }
        iters += 1;
        // secant through the bracket endpoints (regula falsi candidate);
        // every other step bisects so the width halves geometrically even
        // when the secant creeps along one flat side
        let mut x = if iters % 2 == 0 {
            0.5 * (a + b)
        } else if (fb - fa).abs() > f64::MIN_POSITIVE {
            b - fb * (b - a) / (fb - fa)
        } else {
            0.5 * (a + b)
        };
        let margin = 0.01 * (b - a);
        if !(x > a + margin && x < b - margin) {
            x = 0.5 * (a + b);
        }
        let fx = g(x);
        if fx == 0.0 || !fx.is_finite() {
            if fx.is_finite() {
                return Ok(x);
            }
            return Err(Error::NonFinite { at: x });
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    // midpoint of the final bracket; prefer the endpoint with smaller residual
    let mid = 0.5 * (a + b);
    Ok(if fa.abs() < fb.abs() {
        if g(mid).abs() < fa.abs() { mid } else { a }
    } else if g(mid).abs() < fb.abs() {
        mid
    } else {
        b
    })
}
