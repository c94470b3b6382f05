//! Damped Newton for small (2-3 dimensional) nonlinear systems with a
//! finite-difference Jacobian and an optional caller-supplied fallback.

use crate::error::{Error, Result};

/// Outcome of a Newton solve. `converged` means the sup-norm residual met the
/// tolerance; otherwise the report carries the best iterate seen.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    pub residual_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting for n <= 3. Returns None when a
/// pivot collapses (singular Jacobian).
#[allow(clippy::needless_range_loop)] // rows `row` and `col` of `a` are borrowed together
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: &F, x: &[f64], fx: &[f64]) -> Option<Vec<Vec<f64>>> {
    let n = x.len();
    let mut j = vec![vec![0.0; n]; n];
    for col in 0..n {
        let h = 6e-7 * x[col].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[col] += h;
        xm[col] -= h;
        let fp = f(&xp);
        let fm = f(&xm);
        for row in 0..n {
            if !fp[row].is_finite() || !fm[row].is_finite() {
                return None;
            }
            j[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    let _ = fx;
    Some(j)
}

/// Solve F(x) = 0 from `x0` by damped Newton (step halved until the residual
/// norm decreases, at most 30 halvings). Success: ||F||_inf <= tol.
pub fn solve_system<F: Fn(&[f64]) -> Vec<f64>>(
    f: F,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport> {
    let n = x0.len();
    if !(2..=3).contains(&n) {
        return Err(Error::Domain(format!("solve_system supports n in {{2,3}}, got {n}")));
    }
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if fx.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("F non-finite at the initial point".into()));
    }
    let mut res = inf_norm(&fx);
    let mut best = (x.clone(), res);
    let mut iters = 0;
    while res > tol && iters < max_iter {
        iters += 1;
        let Some(mut j) = jacobian(&f, &x, &fx) else {
            break;
        };
        let mut rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
        let Some(step) = solve_linear(&mut j, &mut rhs) else {
            break; // singular Jacobian
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + lambda * si).collect();
            let fc = f(&cand);
            if fc.iter().all(|v| v.is_finite()) && inf_norm(&fc) < res {
                x = cand;
                fx = fc;
                res = inf_norm(&fx);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break; // stalled
        }
        if res < best.1 {
            best = (x.clone(), res);
        }
    }
    Ok(NewtonReport {
        converged: best.1 <= tol,
        solution: best.0,
        residual_inf_norm: best.1,
        iterations: iters,
    })
}

/// As `solve_system`, but when Newton stalls the caller-declared coordinate
/// solve supplies a candidate (exploiting a monotone sub-structure) which is
/// then polished by Newton.
pub fn solve_system_with_fallback<F, G>(
    f: F,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    fallback: G,
) -> Result<NewtonReport>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn() -> Option<Vec<f64>>,
{
    let first = solve_system(&f, x0, tol, max_iter)?;
    if first.converged {
        return Ok(first);
    }
    if let Some(seed) = fallback() {
        let second = solve_system(&f, &seed, tol, max_iter)?;
        if second.converged || second.residual_inf_norm < first.residual_inf_norm {
            let iterations = first.iterations + second.iterations;
            return Ok(NewtonReport { iterations, ..second });
        }
    }
    Ok(first)
}
