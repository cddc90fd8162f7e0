//! Quadrature rules on triangles and intervals.

use crate::geometry::Point2;

/// Symmetric 7-point rule of polynomial degree 5 on a triangle:
/// (barycentric coordinates, weight as a fraction of the triangle area).
pub fn triangle7() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let (a1, b1) = ((9.0 - 2.0 * s15) / 21.0, (6.0 + s15) / 21.0);
    let (a2, b2) = ((9.0 + 2.0 * s15) / 21.0, (6.0 - s15) / 21.0);
    let (w1, w2) = ((155.0 + s15) / 1200.0, (155.0 - s15) / 1200.0);
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Point at barycentric coordinates `l` of triangle `t`.
pub fn map_point(t: &[Point2; 3], l: &[f64; 3]) -> Point2 {
    l[0] * t[0] + l[1] * t[1] + l[2] * t[2]
}

/// The four congruent children of `t` (midpoint subdivision), each counterclockwise
/// when `t` is.
pub fn subdivide4(t: &[Point2; 3]) -> [[Point2; 3]; 4] {
    let m01 = 0.5 * (t[0] + t[1]);
    let m12 = 0.5 * (t[1] + t[2]);
    let m20 = 0.5 * (t[2] + t[0]);
    [
        [t[0], m01, m20],
        [m01, t[1], m12],
        [m20, m12, t[2]],
        [m01, m12, m20],
    ]
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0, "need at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_monomial(i: i32, j: i32) -> f64 {
        let t = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        triangle7()
            .iter()
            .map(|(l, w)| {
                let p = map_point(&t, l);
                0.5 * w * p.x.powi(i) * p.y.powi(j)
            })
            .sum()
    }

    fn factorial(n: i32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_rule_exact_to_degree_five() {
        // ∫_T x^i y^j = i! j! / (i + j + 2)!
        for i in 0..=5 {
            for j in 0..=(5 - i) {
                let exact = factorial(i) * factorial(j) / factorial(i + j + 2);
                assert!((integrate_monomial(i, j) - exact).abs() < 1e-15, "x^{i} y^{j}");
            }
        }
        let w: f64 = triangle7().iter().map(|(_, w)| w).sum();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subdivision_preserves_area() {
        let t = [Point2::new(0.2, 0.1), Point2::new(1.5, 0.3), Point2::new(0.4, 1.1)];
        let parent = crate::geometry::triangle_area(t[0], t[1], t[2]);
        for child in subdivide4(&t) {
            let a = crate::geometry::triangle_area(child[0], child[1], child[2]);
            assert!((a - parent / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_legendre_polynomials() {
        for n in 1..12 {
            let rule = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_simpson_smooth_and_peaked() {
        let q = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((q - 2.0).abs() < 1e-11);
        let q = adaptive_simpson(&|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((q - exact).abs() < 1e-8 * exact);
    }
}
