//! Gaussian expectations: transformed Gauss-Hermite, adaptive Simpson on a
//! truncated window, and segmented Gauss-Legendre for piecewise integrands.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::gauss::special::std_pdf;

/// Which quadrature rule `gauss_expect` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadRule {
    GaussHermiteTransformed,
    AdaptiveSimpson,
}

/// Quadrature configuration for expectations against a Gaussian weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadRule,
    pub node_count: usize,
    /// Half-width of the integration window, in standard deviations.
    pub truncation_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadRule::GaussHermiteTransformed,
            node_count: 128,
            truncation_radius: 10.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::Domain("node_count must be positive".into()));
        }
        if self.rule == QuadRule::GaussHermiteTransformed && self.node_count < 32 {
            return Err(Error::Domain(format!(
                "gauss_hermite_transformed needs node_count >= 32, got {}",
                self.node_count
            )));
        }
        if !(self.truncation_radius >= 8.0) {
            return Err(Error::Domain(format!(
                "truncation_radius must be >= 8, got {}",
                self.truncation_radius
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// node tables

/// Physicists' Gauss-Hermite nodes/weights (weight exp(-t^2), weights sum to sqrt(pi)).
/// Newton iteration on the orthonormal recurrence; stable well past n = 128.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // orthonormal Hermite recurrence
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// Gauss-Legendre nodes/weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

fn gh_128() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_hermite(128))
}

fn gl_48() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_legendre(48))
}

// ---------------------------------------------------------------------------
// expectations

/// E[f(V)] for V ~ N(mu, sigma^2). `sigma == 0` is treated as a point mass.
pub fn gauss_expect<F: Fn(f64) -> f64>(
    f: F,
    mu: f64,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if sigma < 0.0 {
        return Err(Error::Domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        let y = f(mu);
        if !y.is_finite() {
            return Err(Error::NonFinite { at: mu });
        }
        return Ok(y);
    }
    match spec.rule {
        QuadRule::GaussHermiteTransformed => {
            let (nodes, weights) = if spec.node_count == 128 {
                let t = gh_128();
                (t.0.clone(), t.1.clone())
            } else {
                gauss_hermite(spec.node_count)
            };
            let scale = std::f64::consts::SQRT_2 * sigma;
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(weights.iter()) {
                let x = mu + scale * t;
                let y = f(x);
                if !y.is_finite() {
                    return Err(Error::NonFinite { at: x });
                }
                acc += w * y;
            }
            Ok(acc / std::f64::consts::PI.sqrt())
        }
        QuadRule::AdaptiveSimpson => {
            let r = spec.truncation_radius;
            let g = |x: f64| f(x) * std_pdf((x - mu) / sigma) / sigma;
            adaptive_simpson(&g, mu - r * sigma, mu + r * sigma, 1e-12, 1e-14, 60)
        }
    }
}

/// Adaptive Simpson on [a, b] with absolute/relative tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: usize,
) -> Result<f64> {
    fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { at: x })
        }
    }
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        rel_tol: f64,
        abs_tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = eval(f, lm)?;
        let frm = eval(f, rm)?;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * abs_tol.max(rel_tol * (left + right).abs()) {
            return Ok(left + right + delta / 15.0);
        }
        let tl = recurse(f, a, m, fa, flm, fm, left, rel_tol, abs_tol / 2.0, depth - 1)?;
        let tr = recurse(f, m, b, fm, frm, fb, right, rel_tol, abs_tol / 2.0, depth - 1)?;
        Ok(tl + tr)
    }
    if b <= a {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let fa = eval(f, a)?;
    let fm = eval(f, m)?;
    let fb = eval(f, b)?;
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, rel_tol, abs_tol, max_depth)
}

/// Raw integral of `f` over [a, b] with hard splits at `splits`.
///
/// Each segment uses composite 48-point Gauss-Legendre panels, doubling the
/// panel count until two refinements agree to ~1e-13 relative. Splits keep the
/// panels off kinks so the per-panel rate stays spectral.
pub fn integrate_segmented<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    splits: &[f64],
    initial_panel: f64,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut pts = vec![a, b];
    for &s in splits {
        if s > a && s < b && s.is_finite() {
            pts.push(s);
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let (gl_x, gl_w) = gl_48();
    let mut total = 0.0;
    for win in pts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let mut n = ((len / initial_panel).ceil() as usize).max(1);
        let mut prev = f64::NAN;
        let mut cur = 0.0;
        for _ in 0..9 {
            cur = 0.0;
            let h = len / n as f64;
            for k in 0..n {
                let x0 = lo + h * k as f64;
                let half = 0.5 * h;
                let mid = x0 + half;
                for (t, w) in gl_x.iter().zip(gl_w.iter()) {
                    let x = mid + half * t;
                    let y = f(x);
                    if !y.is_finite() {
                        return Err(Error::NonFinite { at: x });
                    }
                    cur += w * half * y;
                }
            }
            if prev.is_finite() && (cur - prev).abs() <= 1e-13 * cur.abs().max(1e-3) {
                break;
            }
            prev = cur;
            n *= 2;
        }
        total += cur;
    }
    Ok(total)
}

/// E[f(V)] for V ~ N(mu, sigma^2) where `f` is piecewise smooth with kinks at
/// `splits`; integrates segment by segment so panels never straddle a kink.
pub fn gauss_expect_piecewise<F: Fn(f64) -> f64>(
    f: F,
    mu: f64,
    sigma: f64,
    splits: &[f64],
    radius: f64,
) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        let y = f(mu);
        if !y.is_finite() {
            return Err(Error::NonFinite { at: mu });
        }
        return Ok(y);
    }
    let a = mu - radius * sigma;
    let b = mu + radius * sigma;
    let g = |x: f64| f(x) * std_pdf((x - mu) / sigma) / sigma;
    integrate_segmented(g, a, b, splits, sigma / 2.0)
}
