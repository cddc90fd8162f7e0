//! Cosine-series solutions on the square (0, π)² with no-flux walls and unit
//! diffusivity. Other squares map onto this one by x → πx/L, t → π²Dt/L².

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point2;

use super::expint::exp_integral_e1;

/// Truncation controls for the cosine series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    /// Bound on the dropped tail of every truncated sum.
    pub tolerance: f64,
    /// Largest admissible truncation order per index.
    pub max_terms: usize,
}

impl Default for SeriesParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-14,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesParams {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_terms == 0 {
            return Err(Error::param(format!(
                "series tolerance must be positive and max_terms ≥ 1, got {} / {}",
                self.tolerance, self.max_terms
            )));
        }
        Ok(())
    }
}

/// Upper bound on Σ_{m>M} e^{−m²t}.
fn gaussian_tail(m: usize, t: f64) -> f64 {
    let k = (m + 1) as f64;
    (-k * k * t).exp() * (1.0 + 1.0 / (2.0 * k * t))
}

/// Smallest order whose dropped tail, as measured by `tail`, falls below `tol`.
fn order_for(tol: f64, max_terms: usize, what: &str, tail: impl Fn(usize) -> f64) -> Result<usize> {
    let mut m = 0;
    while tail(m) >= tol {
        m += 1;
        if m > max_terms {
            return Err(Error::Truncation(format!(
                "{what}: more than {max_terms} terms needed for tolerance {tol:e}"
            )));
        }
    }
    Ok(m)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be positive and finite, got {t}")));
    }
    Ok(())
}

fn check_in_square(p: Point2, name: &str) -> Result<()> {
    if !(p.is_finite() && (0.0..=PI).contains(&p.x) && (0.0..=PI).contains(&p.y)) {
        return Err(Error::Domain(format!("{name} ({}, {}) lies outside [0, π]²", p.x, p.y)));
    }
    Ok(())
}

/// Neumann heat kernel h_t(x, x₀) on (0, π)², written as the product of two
/// one-dimensional cosine series.
pub fn neumann_heat_kernel(x: Point2, x0: Point2, t: f64, params: &SeriesParams) -> Result<f64> {
    params.validate()?;
    check_time(t)?;
    check_in_square(x, "point")?;
    check_in_square(x0, "source")?;
    let m_max = order_for(params.tolerance, params.max_terms, "heat kernel", |m| {
        2.0 * gaussian_tail(m, t) / (PI * PI)
    })?;
    let kernel_1d = |a: f64, b: f64| {
        let mut s = 1.0;
        for m in 1..=m_max {
            let mf = m as f64;
            s += 2.0 * (-mf * mf * t).exp() * ((mf * a).cos() * (mf * b).cos());
        }
        s / PI
    };
    Ok(kernel_1d(x.x, x0.x) * kernel_1d(x.y, x0.y))
}

/// Σ_{m≥1} cos(mθ)/m² for θ ∈ [0, 2π].
fn cos_over_m2(theta: f64) -> f64 {
    PI * PI / 6.0 - PI * theta / 2.0 + theta * theta / 4.0
}

/// Σ_{m≥1} cos(ma)cos(mb)/m² for a, b ∈ [0, π].
fn cos_cos_over_m2(a: f64, b: f64) -> f64 {
    0.5 * (cos_over_m2((a - b).abs()) + cos_over_m2(a + b))
}

/// Concentration on (0, π)² of a unit point source at `source` switched on at
/// t = 0, no uptake and zero initial data:
///
/// u = t/π² + Σ_m 2(1 − e^{−m²t})/(π²m²)·[cos(mx)cos(mξ) + cos(my)cos(mη)]
///       + Σ_{m,n} 4(1 − e^{−(m²+n²)t})/(π²(m²+n²))·cos(mx)cos(mξ)cos(ny)cos(nη).
///
/// The time-independent parts are summed in closed form over one index (the
/// double sum is not absolutely convergent), the decaying parts by truncation at
/// `params.tolerance`.
pub fn series_point_solution(x: Point2, t: f64, source: Point2, params: &SeriesParams) -> Result<f64> {
    params.validate()?;
    check_time(t)?;
    check_in_square(x, "point")?;
    check_in_square(source, "source")?;
    if !(source.x > 0.0 && source.x < PI && source.y > 0.0 && source.y < PI) {
        return Err(Error::Domain("the source must lie inside the open square".into()));
    }
    if x == source {
        return Err(Error::Domain("the series solution is singular at the source".into()));
    }
    let tol = params.tolerance;
    let pi2 = PI * PI;

    // single sums
    let m1 = order_for(tol, params.max_terms, "single sum", |m| {
        2.0 * gaussian_tail(m, t) / (pi2 * ((m + 1) * (m + 1)) as f64)
    })?;
    let mut single = cos_cos_over_m2(x.x, source.x) + cos_cos_over_m2(x.y, source.y);
    for m in 1..=m1 {
        let mf = m as f64;
        let c = (mf * x.x).cos() * (mf * source.x).cos() + (mf * x.y).cos() * (mf * source.y).cos();
        single -= (-mf * mf * t).exp() * c / (mf * mf);
    }

    // stationary double sum, closed form over the index with the larger separation
    let (a, alpha, b, beta) = if (x.y - source.y).abs() >= (x.x - source.x).abs() {
        (x.x, source.x, x.y, source.y)
    } else {
        (x.y, source.y, x.x, source.x)
    };
    let phi1 = (b - beta).abs();
    let phi2 = b + beta;
    let rate = phi1.min(phi2).min(2.0 * PI - phi1).min(2.0 * PI - phi2);
    let damp = 1.0 / (1.0 - (-2.0 * PI).exp());
    let m2 = order_for(tol, params.max_terms, "stationary double sum", |m| {
        let k = (m + 1) as f64;
        4.0 / pi2 * PI * damp * (-k * rate).exp() / (k * (1.0 - (-rate).exp()))
    })?;
    let mut stationary = -0.5 * cos_cos_over_m2(a, alpha);
    for m in 1..=m2 {
        let mf = m as f64;
        let e = |phi: f64| (-mf * phi).exp() + (-mf * (2.0 * PI - phi)).exp();
        let inner = PI / (4.0 * mf) * (e(phi1) + e(phi2)) / (1.0 - (-2.0 * PI * mf).exp());
        stationary += (mf * a).cos() * (mf * alpha).cos() * inner;
    }

    // decaying double sum
    let a0 = 1.0 + 0.5 * exp_integral_e1(t)?;
    let n3 = order_for(tol, params.max_terms, "decaying double sum", |m| {
        4.0 / pi2 * a0 * gaussian_tail(m, t) / (m + 1) as f64
    })?;
    let cx: Vec<f64> = (1..=n3)
        .map(|m| {
            let mf = m as f64;
            (-mf * mf * t).exp() * (mf * x.x).cos() * (mf * source.x).cos()
        })
        .collect();
    let cy: Vec<f64> = (1..=n3)
        .map(|n| {
            let nf = n as f64;
            (-nf * nf * t).exp() * (nf * x.y).cos() * (nf * source.y).cos()
        })
        .collect();
    let mut decaying = 0.0;
    for (i, cxm) in cx.iter().enumerate() {
        let m2f = ((i + 1) * (i + 1)) as f64;
        let row: f64 = cy
            .iter()
            .enumerate()
            .map(|(j, cyn)| cyn / (m2f + ((j + 1) * (j + 1)) as f64))
            .sum();
        decaying += cxm * row;
    }

    Ok(t / pi2 + 2.0 / pi2 * single + 4.0 / pi2 * (stationary - decaying))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::expint::freespace_solution;
    use crate::quadrature::gauss_legendre;

    fn params() -> SeriesParams {
        SeriesParams::default()
    }

    /// Method-of-images oracle: reflected copies of the free-space solution.
    fn images(x: Point2, t: f64, s: Point2) -> f64 {
        let k_max = (2.0 + (40.0 * t).sqrt() / (2.0 * PI)).ceil() as i32;
        let mut sum = 0.0;
        for k in -k_max..=k_max {
            for l in -k_max..=k_max {
                for sx in [1.0, -1.0] {
                    for sy in [1.0, -1.0] {
                        let img = Point2::new(sx * s.x + 2.0 * PI * k as f64, sy * s.y + 2.0 * PI * l as f64);
                        let d = x - img;
                        let z = d.dot(d) / (4.0 * t);
                        if z < 700.0 {
                            sum += freespace_solution(d, t).unwrap();
                        }
                    }
                }
            }
        }
        sum
    }

    #[test]
    fn closed_form_cosine_sum() {
        for theta in [0.0, 0.3, 1.7, PI, 4.0, 2.0 * PI] {
            let direct: f64 = (1..200_000).map(|m| (m as f64 * theta).cos() / (m as f64).powi(2)).sum();
            assert!((direct - cos_over_m2(theta)).abs() < 1e-5, "θ={theta}");
        }
    }

    #[test]
    fn heat_kernel_limits_and_symmetry() {
        let p = Point2::new(0.4, 2.9);
        let q = Point2::new(1.3, 0.2);
        let h = |t| neumann_heat_kernel(p, q, t, &params()).unwrap();
        assert!((h(60.0) - 1.0 / (PI * PI)).abs() < 1e-14);
        assert_eq!(h(0.3), neumann_heat_kernel(q, p, 0.3, &params()).unwrap());
    }

    #[test]
    fn heat_kernel_has_unit_integral() {
        let rule = gauss_legendre(40);
        let x0 = Point2::new(1.1, 2.0);
        let t = 0.2;
        let mut total = 0.0;
        // composite Gauss in each direction: smooth integrand at t = 0.2
        let panels = 4;
        for px in 0..panels {
            for py in 0..panels {
                for (u, wu) in &rule {
                    for (v, wv) in &rule {
                        let hx = PI / panels as f64;
                        let x = Point2::new(hx * (px as f64 + 0.5 * (u + 1.0)), hx * (py as f64 + 0.5 * (v + 1.0)));
                        total += wu * wv * hx * hx / 4.0 * neumann_heat_kernel(x, x0, t, &params()).unwrap();
                    }
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn heat_kernel_matches_images() {
        // h_t is the t-derivative of the images sum of free-space solutions
        let x = Point2::new(0.7, 1.9);
        let s = Point2::new(1.4, 2.5);
        let t = 0.5;
        let mut img = 0.0;
        for k in -3..=3 {
            for l in -3..=3 {
                for sx in [1.0, -1.0] {
                    for sy in [1.0, -1.0] {
                        let c = Point2::new(sx * s.x + 2.0 * PI * k as f64, sy * s.y + 2.0 * PI * l as f64);
                        let d = x - c;
                        img += (-d.dot(d) / (4.0 * t)).exp() / (4.0 * PI * t);
                    }
                }
            }
        }
        assert!((neumann_heat_kernel(x, s, t, &params()).unwrap() - img).abs() < 1e-13);
    }

    #[test]
    fn semigroup_property() {
        let (s, t) = (0.15, 0.25);
        let x = Point2::new(0.5, 1.0);
        let x0 = Point2::new(2.2, 2.7);
        let rule = gauss_legendre(48);
        let panels = 4;
        let hx = PI / panels as f64;
        let mut total = 0.0;
        for px in 0..panels {
            for py in 0..panels {
                for (u, wu) in &rule {
                    for (v, wv) in &rule {
                        let z = Point2::new(hx * (px as f64 + 0.5 * (u + 1.0)), hx * (py as f64 + 0.5 * (v + 1.0)));
                        total += wu * wv * hx * hx / 4.0
                            * neumann_heat_kernel(x, z, s, &params()).unwrap()
                            * neumann_heat_kernel(z, x0, t, &params()).unwrap();
                    }
                }
            }
        }
        let direct = neumann_heat_kernel(x, x0, s + t, &params()).unwrap();
        assert!((total - direct).abs() < 1e-10, "{total} vs {direct}");
    }

    #[test]
    fn truncation_cap_is_reported() {
        let tight = SeriesParams {
            tolerance: 1e-14,
            max_terms: 10,
        };
        let err = neumann_heat_kernel(Point2::new(1.0, 1.0), Point2::new(2.0, 2.0), 1e-4, &tight).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }

    #[test]
    fn series_matches_images() {
        let s = Point2::new(1.3, 1.9);
        for t in [0.05, 0.5, 2.0] {
            for x in [Point2::new(0.2, 0.3), Point2::new(1.3, 2.4), Point2::new(3.0, 1.9), Point2::new(PI, 0.0), Point2::new(1.31, 1.9)] {
                let series = series_point_solution(x, t, s, &params()).unwrap();
                let oracle = images(x, t, s);
                assert!((series - oracle).abs() < 1e-11, "t={t} x={x:?}: {series} vs {oracle}");
            }
        }
    }

    #[test]
    fn series_time_increment_matches_kernel_integral() {
        let s = Point2::new(2.0, 0.9);
        let x = Point2::new(0.6, 1.7);
        let (t1, t2) = (0.3, 1.1);
        let rule = gauss_legendre(30);
        let integral: f64 = rule
            .iter()
            .map(|(u, w)| {
                let tau = t1 + 0.5 * (t2 - t1) * (u + 1.0);
                0.5 * (t2 - t1) * w * neumann_heat_kernel(x, s, tau, &params()).unwrap()
            })
            .sum();
        let diff = series_point_solution(x, t2, s, &params()).unwrap() - series_point_solution(x, t1, s, &params()).unwrap();
        assert!((diff - integral).abs() < 1e-12, "{diff} vs {integral}");
    }

    #[test]
    fn series_vanishes_as_t_shrinks() {
        let s = Point2::new(1.5, 1.5);
        let x = Point2::new(2.5, 0.8);
        let v: Vec<f64> = [0.5, 0.2, 0.1, 0.05]
            .iter()
            .map(|&t| series_point_solution(x, t, s, &params()).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
        // below ~1e-2 the exact value is under rounding level
        assert!(series_point_solution(x, 0.002, s, &params()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn series_minus_freespace_stays_bounded() {
        let s = Point2::new(1.2, 2.1);
        let t = 0.5;
        let diffs: Vec<f64> = (1..=7)
            .map(|k| {
                let r = 10f64.powf(-0.5 * (k + 1) as f64);
                let x = s + Point2::new(r * 0.6, r * 0.8);
                series_point_solution(x, t, s, &params()).unwrap() - freespace_solution(x - s, t).unwrap()
            })
            .collect();
        let spread = diffs.iter().cloned().fold(f64::MIN, f64::max) - diffs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-2, "{diffs:?}");
    }

    #[test]
    fn series_domain_errors() {
        let s = Point2::new(1.0, 1.0);
        assert!(matches!(series_point_solution(s, 1.0, s, &params()), Err(Error::Domain(_))));
        assert!(series_point_solution(Point2::new(4.0, 1.0), 1.0, s, &params()).is_err());
        assert!(series_point_solution(Point2::new(2.0, 1.0), 0.0, s, &params()).is_err());
        assert!(series_point_solution(Point2::new(2.0, 1.0), 1.0, Point2::new(0.0, 1.0), &params()).is_err());
    }
}
