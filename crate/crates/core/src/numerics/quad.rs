use thiserror::Error;

const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
}

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `[a, b]` is first cut into `panels` equal pieces; each is refined
/// independently with its share of `abs_tol`. Pre-splitting keeps the
/// refinement local when the integrand has an unbounded derivative at an
/// endpoint (square-root turning points).
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, abs_tol: f64, panels: usize) -> Result<f64, QuadError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, abs_tol, panels).map(|v| -v);
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let tol = abs_tol / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = a + h * k as f64;
        let x1 = if k + 1 == panels { b } else { a + h * (k + 1) as f64 };
        let f0 = eval(&f, x0)?;
        let f1 = eval(&f, x1)?;
        let xm = 0.5 * (x0 + x1);
        let fm = eval(&f, xm)?;
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += refine(&f, x0, x1, f0, fm, f1, whole, tol, MAX_DEPTH)?;
    }
    Ok(total)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QuadError::NonFinite { x })
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm)?;
    let frm = eval(f, rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
