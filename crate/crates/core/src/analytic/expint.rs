use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::quadrature::adaptive_simpson;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E₁(x) = ∫₁^∞ e^{−xs}/s ds for x > 0.
///
/// Power series for x ≤ 1, modified Lentz continued fraction above. Underflows
/// to zero for x ≳ 740.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("E1 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x <= 1.0 { e1_series(x) } else { e1_continued_fraction(x) })
}

pub(crate) fn e1_series(x: f64) -> f64 {
    // −log x − γ + Σ (−1)^{k+1} x^k / (k·k!)
    let mut sum = 0.0;
    let mut term = 1.0; // (−1)^{k+1} x^k / k!
    for k in 1..200 {
        term *= -x / k as f64;
        let add = -term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -x.ln() - EULER_GAMMA + sum
}

pub(crate) fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// E₁ by direct quadrature of ∫₀^∞ exp(−x·eᵛ) dv (the substitution s = eᵛ),
/// as an independent reference for [`exp_integral_e1`].
pub fn e1_by_quadrature(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("E1 requires finite x > 0, got {x}")));
    }
    let v_max = (740.0 / x).ln().max(0.0);
    let f = |v: f64| (-x * v.exp()).exp();
    // E₁(x) ≥ e^{−x}/(x + 1) keeps the tolerance relative
    let tol = 1e-13 * (-x).exp() / (x + 1.0);
    let knee = (-x.ln()).clamp(0.0, v_max);
    let cuts = [0.0, knee, (knee + 3.0).min(v_max), v_max];
    Ok(cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| adaptive_simpson(&f, w[0], w[1], tol))
        .sum())
}

/// Free-space concentration of a unit point source switched on at t = 0 with unit
/// diffusivity: (1/4π)·E₁(|x|²/4t).
pub fn freespace_solution(x: Point2, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let r2 = x.dot(x);
    if r2 == 0.0 {
        return Err(Error::Domain("free-space solution is singular at the source".into()));
    }
    Ok(exp_integral_e1(r2 / (4.0 * t))? / (4.0 * PI))
}

/// Gradient of [`freespace_solution`]: −x·e^{−|x|²/4t}/(2π|x|²).
pub fn freespace_gradient(x: Point2, t: f64) -> Result<Point2> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let r2 = x.dot(x);
    if r2 == 0.0 {
        return Err(Error::Domain("free-space gradient is singular at the source".into()));
    }
    Ok((-(-r2 / (4.0 * t)).exp() / (2.0 * PI * r2)) * x)
}
