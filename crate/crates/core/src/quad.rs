//! Adaptive Simpson quadrature.
//!
//! The integrands in this crate are smooth away from the left endpoint
//! (kernel evaluation may have an algebraic singularity of the derivative
//! at zero), so classic tolerance-halving bisection converges everywhere
//! we need it.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("interval budget exhausted after {0} subdivisions")]
    BudgetExhausted(usize),
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

/// Integrate `f` over `[a, b]` to the requested relative tolerance.
///
/// The error control is `|error| <= rel_tol * |integral| + abs_floor`,
/// with at most `max_subdivisions` interval splits.
pub fn adaptive_simpson<F>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite(x))
        }
    };

    // Composite sweep to estimate the magnitude: a bare 3-point rule badly
    // misjudges integrands concentrated near one end of a wide interval.
    let panels = 64usize;
    let h = (b - a) / panels as f64;
    let mut scale_est = 0.0;
    for i in 0..panels {
        let x0 = a + i as f64 * h;
        let x1 = x0 + h;
        scale_est += simpson(x0, x1, eval(x0)?, eval(0.5 * (x0 + x1))?, eval(x1)?).abs();
    }
    let tol = rel_tol * scale_est.max(f64::MIN_POSITIVE);

    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = simpson(a, b, fa, fm, fb);
    let mut budget = max_subdivisions;
    let v = recurse(&eval, a, b, fa, fm, fb, whole, tol, &mut budget, 96)?;
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<E>(
    eval: &E,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    budget: &mut usize,
    depth: usize,
) -> Result<f64, QuadError>
where
    E: Fn(f64) -> Result<f64, QuadError>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // 15 = 2^4 - 1: Richardson factor for Simpson's rule. The floor stops
    // refinement once the discrepancy is at the rounding level of the
    // sub-integrals themselves.
    let floor = f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= (15.0 * tol).max(floor) || depth == 0 || m <= a || m >= b {
        return Ok(left + right + delta / 15.0);
    }
    if *budget == 0 {
        return Err(QuadError::BudgetExhausted(0));
    }
    *budget -= 1;
    let l = recurse(eval, a, m, fa, flm, fm, left, 0.5 * tol, budget, depth - 1)?;
    let r = recurse(eval, m, b, fm, frm, fb, right, 0.5 * tol, budget, depth - 1)?;
    Ok(l + r)
}
