use std::ops::{Add, Mul, Sub};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        Point2::new(self * p.x, self * p.y)
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when counterclockwise.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * orient(a, b, c)
}

/// Barycentric coordinates of `p` with respect to the triangle (a, b, c).
pub fn barycentric(p: Point2, a: Point2, b: Point2, c: Point2) -> [f64; 3] {
    let det = orient(a, b, c);
    let l0 = orient(p, b, c) / det;
    let l1 = orient(a, p, c) / det;
    [l0, l1, 1.0 - l0 - l1]
}

/// Interior angles in degrees.
pub fn triangle_angles(a: Point2, b: Point2, c: Point2) -> [f64; 3] {
    let angle = |p: Point2, q: Point2, r: Point2| {
        let u = q - p;
        let v = r - p;
        u.cross(v).abs().atan2(u.dot(v)).to_degrees()
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

/// Gradients of the three P1 hat functions on a triangle, and its signed area.
pub fn p1_gradients(a: Point2, b: Point2, c: Point2) -> ([Point2; 3], f64) {
    let det = orient(a, b, c);
    let g = |p: Point2, q: Point2| Point2::new((p.y - q.y) / det, (q.x - p.x) / det);
    ([g(b, c), g(c, a), g(a, b)], 0.5 * det)
}
