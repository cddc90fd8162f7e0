use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::quadrature::gauss_legendre;

use super::expint::{freespace_gradient, freespace_solution};

/// Angular resolution of the polar quadrature.
pub const ANGULAR_NODES: usize = 512;

/// Radial panels per unit of log(ρ_out/ρ_in).
const PANELS_PER_LOG: f64 = 8.0;
const RADIAL_ORDER: usize = 8;

/// Smallest resolvable ratio of inner to outer radius.
const MIN_RATIO: f64 = 1e-10;

/// Least-squares line y ≈ intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::param("a line fit needs at least two (x, y) pairs of equal count"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::param("a line fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// ∫ f over the annulus r_in < |x − center| < r_out on a polar grid: uniform in
/// angle, Gauss–Legendre on log-spaced radial panels.
pub fn annular_integral(f: impl Fn(Point2) -> f64, center: Point2, r_in: f64, r_out: f64, angular: usize) -> Result<f64> {
    if !(r_in > 0.0 && r_out > r_in && r_in >= MIN_RATIO * r_out) || angular < 4 {
        return Err(Error::param(format!(
            "annulus ({r_in}, {r_out}) with {angular} angular nodes is not resolvable"
        )));
    }
    let span = (r_out / r_in).ln();
    let panels = (span * PANELS_PER_LOG).ceil().max(1.0) as usize;
    let rule = gauss_legendre(RADIAL_ORDER);
    let dtheta = 2.0 * PI / angular as f64;
    let dirs: Vec<Point2> = (0..angular)
        .map(|k| {
            let th = (k as f64 + 0.5) * dtheta;
            Point2::new(th.cos(), th.sin())
        })
        .collect();
    let mut total = 0.0;
    for p in 0..panels {
        let a = r_in.ln() + span * p as f64 / panels as f64;
        let b = r_in.ln() + span * (p + 1) as f64 / panels as f64;
        for (u, w) in &rule {
            // ρ = e^s, dρ = ρ ds, area element ρ dρ dθ
            let rho = (0.5 * (a + b) + 0.5 * (b - a) * u).exp();
            let ring: f64 = dirs.iter().map(|d| f(center + rho * *d)).sum();
            total += 0.5 * (b - a) * w * rho * rho * ring * dtheta;
        }
    }
    Ok(total)
}

/// Annular norms of the free-space solution at one inner radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub radius: f64,
    /// ∫ |∇û|² over B_out ∖ B_r.
    pub seminorm_sq: f64,
    /// ∫ û² over B_out ∖ B_r.
    pub l2_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularityProfile {
    pub points: Vec<ProfilePoint>,
    /// Fit of seminorm² against log(1/r).
    pub fit: LinearFit,
}

/// H¹-seminorm and L² norm of the free-space solution on B_out ∖ B_r for each r in
/// `radii` (strictly decreasing), with the log-slope of the seminorm².
pub fn singularity_profile(t: f64, radii: &[f64], outer: f64) -> Result<SingularityProfile> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if radii.len() < 2 {
        return Err(Error::param("need at least two radii"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("radii must be strictly decreasing"));
    }
    if !(radii[0] < outer) || !(radii[radii.len() - 1] >= MIN_RATIO * outer) {
        return Err(Error::param(format!(
            "radii must lie in [{:e}, {outer}) to be resolved",
            MIN_RATIO * outer
        )));
    }
    let origin = Point2::new(0.0, 0.0);
    let grad2 = |p: Point2| freespace_gradient(p, t).map(|g| g.dot(g)).unwrap_or(0.0);
    let val2 = |p: Point2| freespace_solution(p, t).map(|v| v * v).unwrap_or(0.0);
    // accumulate ring by ring from the outside in
    let mut points = Vec::with_capacity(radii.len());
    let (mut semi, mut l2) = (0.0, 0.0);
    let mut upper = outer;
    for &r in radii {
        semi += annular_integral(grad2, origin, r, upper, ANGULAR_NODES)?;
        l2 += annular_integral(val2, origin, r, upper, ANGULAR_NODES)?;
        upper = r;
        points.push(ProfilePoint {
            radius: r,
            seminorm_sq: semi,
            l2_sq: l2,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.radius).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seminorm_sq).collect();
    Ok(SingularityProfile {
        fit: linear_fit(&xs, &ys)?,
        points,
    })
}

/// Partial sums behind the regularity argument for the square-domain solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Summability {
    pub n: usize,
    /// Σ_{m≤N} 1/m⁴.
    pub zeta4_partial: f64,
    /// Σ_{m,n≤N} m²/(m²+n²)².
    pub gradient_partial: f64,
    /// (N, partial sum) over N, 2N, 4N, 8N.
    pub window: Vec<(usize, f64)>,
    /// Fit of the gradient partial sums against log N.
    pub growth: LinearFit,
}

pub fn zeta4_partial(n: usize) -> f64 {
    // smallest terms first
    (1..=n).rev().map(|m| 1.0 / (m as f64).powi(4)).sum()
}

pub fn gradient_partial(n: usize) -> f64 {
    let mut total = 0.0;
    for m in 1..=n {
        let m2 = (m * m) as f64;
        total += (1..=n)
            .map(|k| {
                let d = m2 + (k * k) as f64;
                m2 / (d * d)
            })
            .sum::<f64>();
    }
    total
}

pub fn summability_diagnostics(n: usize) -> Result<Summability> {
    if n < 10 {
        return Err(Error::param(format!("N must be at least 10, got {n}")));
    }
    let window: Vec<(usize, f64)> = [1, 2, 4, 8].iter().map(|k| (k * n, gradient_partial(k * n))).collect();
    let xs: Vec<f64> = window.iter().map(|(k, _)| (*k as f64).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|(_, s)| *s).collect();
    Ok(Summability {
        n,
        zeta4_partial: zeta4_partial(n),
        gradient_partial: window[0].1,
        growth: linear_fit(&xs, &ys)?,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::expint::exp_integral_e1;

    #[test]
    fn fit_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-14);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn annulus_area_and_polynomial() {
        let c = Point2::new(1.0, -2.0);
        let area = annular_integral(|_| 1.0, c, 0.1, 2.0, 64).unwrap();
        assert!((area - PI * (4.0 - 0.01)).abs() < 1e-12);
        let x2 = annular_integral(|p| (p.x - c.x).powi(2), c, 0.5, 1.0, 64).unwrap();
        assert!((x2 - PI / 4.0 * (1.0 - 0.0625)).abs() < 1e-12);
        assert!(annular_integral(|_| 1.0, c, 0.0, 1.0, 64).is_err());
        assert!(annular_integral(|_| 1.0, c, 1.0, 0.5, 64).is_err());
    }

    #[test]
    fn profile_matches_closed_form_gradient_integral() {
        // ∫_{B_ρ∖B_r} |∇û|² = (E₁(r²/2t) − E₁(ρ²/2t))/4π
        let t = 1.0;
        let outer = 8.0;
        let radii = [1.0, 0.1, 0.01, 0.001];
        let prof = singularity_profile(t, &radii, outer).unwrap();
        for p in &prof.points {
            let exact = (exp_integral_e1(p.radius * p.radius / (2.0 * t)).unwrap()
                - exp_integral_e1(outer * outer / (2.0 * t)).unwrap())
                / (4.0 * PI);
            assert!((p.seminorm_sq - exact).abs() < 1e-10 * exact, "{} vs {exact}", p.seminorm_sq);
        }
        assert!((prof.fit.slope - 1.0 / (2.0 * PI)).abs() < 0.15 / (2.0 * PI));
    }

    #[test]
    fn profile_l2_converges_and_slope_is_scale_invariant() {
        let t = 1.0;
        let radii: Vec<f64> = (0..8).map(|k| 0.05 * 0.5f64.powi(k)).collect();
        let prof = singularity_profile(t, &radii, 6.0).unwrap();
        let l2: Vec<f64> = prof.points.iter().map(|p| p.l2_sq).collect();
        assert!(l2.windows(2).all(|w| w[1] >= w[0]));
        assert!(l2[7] - l2[6] < 1e-4 * l2[7]);
        let semi: Vec<f64> = prof.points.iter().map(|p| p.seminorm_sq).collect();
        assert!(semi.windows(2).all(|w| w[1] > w[0]));
        // doubling all radii shifts the seminorm² by slope·log 2
        let doubled: Vec<f64> = radii.iter().map(|r| 2.0 * r).collect();
        let prof2 = singularity_profile(t, &doubled, 6.0).unwrap();
        let shift = prof.points[7].seminorm_sq - prof2.points[7].seminorm_sq;
        assert!((shift - prof.fit.slope * 2f64.ln()).abs() < 1e-3 * shift);
        assert!((prof.fit.slope - prof2.fit.slope).abs() < 1e-3 * prof.fit.slope);
    }

    #[test]
    fn profile_rejects_bad_radii() {
        assert!(singularity_profile(1.0, &[0.1], 1.0).is_err());
        assert!(singularity_profile(1.0, &[0.1, 0.2], 1.0).is_err());
        assert!(singularity_profile(1.0, &[2.0, 0.2], 1.0).is_err());
        assert!(singularity_profile(1.0, &[0.1, 1e-12], 1.0).is_err());
        assert!(singularity_profile(0.0, &[0.1, 0.01], 1.0).is_err());
    }

    #[test]
    fn zeta4_tail() {
        let s = zeta4_partial(1000);
        let exact = PI.powi(4) / 90.0;
        assert!(exact - s > 0.0 && exact - s < 1.0 / (3.0 * 1000f64.powi(3)) + 1e-15);
    }

    #[test]
    fn partial_sums_grow() {
        let d = summability_diagnostics(10).unwrap();
        assert!(d.zeta4_partial > 0.0 && d.gradient_partial > 0.0);
        assert!(zeta4_partial(11) > d.zeta4_partial && gradient_partial(11) > d.gradient_partial);
        assert!(d.window.windows(2).all(|w| w[1].1 > w[0].1));
        assert!(summability_diagnostics(9).is_err());
    }

    #[test]
    fn gradient_sum_grows_like_quarter_pi_log() {
        // integral test: the N ↦ 2N increment approaches (π/4)·log 2
        let d = summability_diagnostics(100).unwrap();
        assert!(d.growth.r_squared > 0.99);
        let inc = d.window[3].1 - d.window[2].1;
        let expected = PI / 4.0 * 2f64.ln();
        assert!((inc - expected).abs() < 0.25 * expected, "{inc} vs {expected}");
    }
}
