use serde::Serialize;

use crate::error::{Error, Result};

/// Tangent through the origin to `f(t) = a/t^p + b t^q`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tangency {
    /// Tangency point, closed form.
    pub t0: f64,
    /// Slope of the tangent, `f(t₀)/t₀`.
    pub lambda_c: f64,
    /// Tangency point from bisection on `f(t)/t − f'(t)`.
    pub t0_numeric: f64,
}

/// Closed-form tangency point `t₀ = (a(p+1)/(b(q−1)))^{1/(p+q)}` and slope
/// `λ_c = a/t₀^{p+1} + b t₀^{q−1}`, cross-checked numerically. A line `λ t`
/// meets the graph of `f` iff `λ ≥ λ_c`.
pub fn tangent_slope_root(a: f64, b: f64, p: f64, q: f64) -> Result<Tangency> {
    if !(a > 0.0 && b > 0.0 && p > 1.0) {
        return Err(Error::InvalidProblem(format!(
            "tangency needs a, b > 0 and p > 1 (a = {a}, b = {b}, p = {p})"
        )));
    }
    if !(q > 1.0) {
        return Err(Error::InvalidProblem(format!(
            "no tangency for q = {q}: the power term is not superlinear"
        )));
    }
    let t0 = (a * (p + 1.0) / (b * (q - 1.0))).powf(1.0 / (p + q));
    let lambda_c = a / t0.powf(p + 1.0) + b * t0.powf(q - 1.0);
    let t0_numeric = bisect_tangency(a, b, p, q);
    Ok(Tangency {
        t0,
        lambda_c,
        t0_numeric,
    })
}

/// `f(t)/t − f'(t) = (p+1)a t^{−p−1} − (q−1)b t^{q−1}` is decreasing; bisect
/// its sign change in `log t`.
fn bisect_tangency(a: f64, b: f64, p: f64, q: f64) -> f64 {
    let g = |t: f64| (p + 1.0) * a * t.powf(-p - 1.0) - (q - 1.0) * b * t.powf(q - 1.0);
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    while g(lo.exp()) <= 0.0 {
        lo -= 1.0;
    }
    while g(hi.exp()) > 0.0 {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// `((q−1)/(p+1))^{(p+1)/(p+q)} + ((p+1)/(q−1))^{(q−1)/(p+q)}`, the slope of
/// the tangent for `a = b = 1`.
pub fn tangency_constant(p: f64, q: f64) -> f64 {
    let r = (q - 1.0) / (p + 1.0);
    r.powf((p + 1.0) / (p + q)) + r.recip().powf((q - 1.0) / (p + q))
}
