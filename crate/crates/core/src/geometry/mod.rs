//! Polygons, triangles, and the measures used throughout the crate.
//!
//! A [`Polygon`] is always simple and counterclockwise; every constructor
//! that accepts outside data validates this. Points are plain
//! `nalgebra::Vector2<f64>` values.

mod construct;
mod disc;

pub use construct::{graham_hexagon, random_polygon, regular_ngon, GrahamTemplate, Normalization, RandomMode};
pub use disc::{circular_segment_area, polygon_disc_intersection_area, CircularSegmentParams};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// z-component of `a × b`.
#[inline]
pub fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Rotation by +90°.
#[inline]
pub fn perp(v: &Point) -> Point {
    Point::new(-v.y, v.x)
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Distance between the closed segments `[a, b]` and `[c, d]`, assuming they
/// do not cross (true for distinct sides of a simple polygon).
pub fn segment_segment_distance(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// A positively oriented triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [Point; 3],
}

impl Triangle {
    pub fn new(a: Point, b: Point, c: Point) -> Result<Self> {
        let t = Triangle { vertices: [a, b, c] };
        let s = t.signed_area();
        let scale = (b - a).norm_squared().max((c - a).norm_squared());
        if !(s > 1e-14 * scale) {
            return Err(Error::DegenerateTriangle(s));
        }
        Ok(t)
    }

    pub(crate) fn new_unchecked(a: Point, b: Point, c: Point) -> Self {
        Triangle { vertices: [a, b, c] }
    }

    pub fn signed_area(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        0.5 * cross(&(b - a), &(c - a))
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Point with barycentric coordinates `l` (w.r.t. the vertex order).
    #[inline]
    pub fn at(&self, l: &[f64; 3]) -> Point {
        self.vertices[0] * l[0] + self.vertices[1] * l[1] + self.vertices[2] * l[2]
    }

    pub fn centroid(&self) -> Point {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) / 3.0
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        (a - b).norm().max((b - c).norm()).max((c - a).norm())
    }

    /// Midpoint refinement into four congruent children.
    pub fn subdivide(&self) -> [Triangle; 4] {
        let [a, b, c] = self.vertices;
        let ab = (a + b) / 2.0;
        let bc = (b + c) / 2.0;
        let ca = (c + a) / 2.0;
        [
            Triangle::new_unchecked(a, ab, ca),
            Triangle::new_unchecked(ab, b, bc),
            Triangle::new_unchecked(ca, bc, c),
            Triangle::new_unchecked(ab, bc, ca),
        ]
    }

    /// Uniform refinement: `4^level` children in a fixed order.
    pub fn refine(&self, level: u32) -> Vec<Triangle> {
        let mut out = vec![*self];
        for _ in 0..level {
            out = out.iter().flat_map(|t| t.subdivide()).collect();
        }
        out
    }
}

/// Second moments of a triangle with a vertex at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleMoments {
    pub xy: f64,
    pub xx: f64,
    pub yy: f64,
}

/// Closed-form `(∫x₁x₂, ∫x₁², ∫x₂²)` over `(O, A, B)`.
pub fn triangle_moments(t: &Triangle) -> Result<TriangleMoments> {
    let [o, a, b] = &t.vertices;
    let scale = a.norm() + b.norm();
    if o.norm() > 1e-14 * scale {
        return Err(Error::InvalidArgument("first triangle vertex must be the origin".into()));
    }
    Ok(origin_triangle_moments(a, b))
}

fn origin_triangle_moments(a: &Point, b: &Point) -> TriangleMoments {
    let (p0, q0, p1, q1) = (a.x, a.y, b.x, b.y);
    let det = p0 * q1 - p1 * q0;
    TriangleMoments {
        xy: det * (2.0 * p0 * q0 + 2.0 * p1 * q1 + p0 * q1 + p1 * q0) / 24.0,
        xx: det * (p0 * p0 + p0 * p1 + p1 * p1) / 12.0,
        yy: det * (q0 * q0 + q0 * q1 + q1 * q1) / 12.0,
    }
}

/// Area moments up to order two, about the coordinate origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub area: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

/// A simple polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolygonJson", into = "PolygonJson")]
pub struct Polygon {
    vertices: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct PolygonJson {
    vertices: Vec<[f64; 2]>,
}

impl TryFrom<PolygonJson> for Polygon {
    type Error = Error;
    fn try_from(p: PolygonJson) -> Result<Self> {
        Polygon::new(p.vertices.iter().map(|v| Point::new(v[0], v[1])).collect())
    }
}

impl From<Polygon> for PolygonJson {
    fn from(p: Polygon) -> Self {
        PolygonJson { vertices: p.vertices.iter().map(|v| [v.x, v.y]).collect() }
    }
}

const ORIENT_EPS: f64 = 1e-14;

impl Polygon {
    /// Validates and wraps a vertex list.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let p = Polygon { vertices };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn new_unchecked(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn from_xy(xy: &[[f64; 2]]) -> Result<Self> {
        Polygon::new(xy.iter().map(|v| Point::new(v[0], v[1])).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::TooFewVertices(n));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::NonFiniteVertex(i));
        }
        let scale = self.bbox_scale();
        let tiny = 1e-14 * scale;
        for i in 0..n {
            if (self.vertex(i + 1) - self.vertex(i)).norm() <= tiny {
                return Err(Error::ZeroLengthEdge(i));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if (self.vertices[i] - self.vertices[j]).norm() <= tiny {
                    return Err(Error::RepeatedVertex(i, j));
                }
            }
        }
        let s = self.signed_area();
        if !(s > 0.0) {
            return Err(Error::NotCounterclockwise(s));
        }
        if let Some((i, j)) = self.find_crossing() {
            return Err(Error::SelfIntersection(i, j));
        }
        Ok(())
    }

    fn bbox_scale(&self) -> f64 {
        let (mut lo, mut hi) = (self.vertices[0], self.vertices[0]);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).amax().max(f64::MIN_POSITIVE)
    }

    /// First pair of edges `(i, j)` that touch or cross illegally.
    /// Edge `i` joins vertex `i` to vertex `i + 1`.
    pub fn find_crossing(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        let scale = self.bbox_scale();
        let origin = self.vertices[0];
        let pts: Vec<Point> = self.vertices.iter().map(|v| (v - origin) / scale).collect();
        let at = |i: usize| pts[i % n];
        let orient = |a: &Point, b: &Point, c: &Point| {
            let o = cross(&(b - a), &(c - a));
            if o.abs() <= ORIENT_EPS {
                0
            } else if o > 0.0 {
                1
            } else {
                -1
            }
        };
        let on_segment = |a: &Point, b: &Point, p: &Point| {
            p.x >= a.x.min(b.x) - ORIENT_EPS
                && p.x <= a.x.max(b.x) + ORIENT_EPS
                && p.y >= a.y.min(b.y) - ORIENT_EPS
                && p.y <= a.y.max(b.y) + ORIENT_EPS
        };
        for i in 0..n {
            let (p1, p2) = (at(i), at(i + 1));
            for j in i + 1..n {
                let (q1, q2) = (at(j), at(j + 1));
                let adjacent_next = j == i + 1;
                let adjacent_wrap = i == 0 && j == n - 1;
                if adjacent_next || adjacent_wrap {
                    // Shared vertex v; the edges overlap iff they fold back onto each other.
                    let (v, a, b) = if adjacent_next { (p2, p1, q2) } else { (p1, p2, q1) };
                    if orient(&a, &v, &b) == 0 && (a - v).dot(&(b - v)) > 0.0 {
                        return Some((i, j));
                    }
                    continue;
                }
                let o1 = orient(&p1, &p2, &q1);
                let o2 = orient(&p1, &p2, &q2);
                let o3 = orient(&q1, &q2, &p1);
                let o4 = orient(&q1, &q2, &p2);
                let crosses = o1 * o2 < 0 && o3 * o4 < 0;
                let touches = (o1 == 0 && on_segment(&p1, &p2, &q1))
                    || (o2 == 0 && on_segment(&p1, &p2, &q2))
                    || (o3 == 0 && on_segment(&q1, &q2, &p1))
                    || (o4 == 0 && on_segment(&q1, &q2, &p2));
                if crosses || touches {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Cyclic vertex access.
    #[inline]
    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` as `(A_i, A_{i+1})`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertex(i), self.vertex(i + 1))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.len()).map(move |i| self.edge(i))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| cross(&a, &b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point {
        let m = self.moments();
        Point::new(m.x / m.area, m.y / m.area)
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d2 = d2.max((a - b).norm_squared());
            }
        }
        d2.sqrt()
    }

    pub fn moments(&self) -> Moments {
        let mut m = Moments { area: 0.0, x: 0.0, y: 0.0, xx: 0.0, yy: 0.0, xy: 0.0 };
        for (a, b) in self.edges() {
            let det = cross(&a, &b);
            m.area += det / 2.0;
            m.x += det * (a.x + b.x) / 6.0;
            m.y += det * (a.y + b.y) / 6.0;
            let t = origin_triangle_moments(&a, &b);
            m.xx += t.xx;
            m.yy += t.yy;
            m.xy += t.xy;
        }
        m
    }

    /// `∫_P |x|⁴ dx` about the origin, exact.
    pub fn polar_fourth_moment(&self) -> f64 {
        // On (O, a, b), x = s((1-t)a + tb) gives det·∫s⁵ds·∫|(1-t)a+tb|⁴dt; the
        // t-integrand is quartic, so 3-point Gauss–Legendre is exact.
        let r = 0.5 * 0.6f64.sqrt();
        let gauss = [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)];
        self.edges()
            .map(|(a, b)| {
                let (aa, ab, bb) = (a.dot(&a), a.dot(&b), b.dot(&b));
                let q = |t: f64| {
                    let v = aa * (1.0 - t) * (1.0 - t) + 2.0 * ab * t * (1.0 - t) + bb * t * t;
                    v * v
                };
                cross(&a, &b) * gauss.iter().map(|&(t, w)| w * q(t)).sum::<f64>() / 6.0
            })
            .sum()
    }

    pub fn translated(&self, v: &Point) -> Polygon {
        Polygon::new_unchecked(self.vertices.iter().map(|p| p + v).collect())
    }

    /// Scaling about the origin.
    pub fn scaled(&self, t: f64) -> Polygon {
        assert!(t > 0.0, "scale factor must be positive");
        Polygon::new_unchecked(self.vertices.iter().map(|p| p * t).collect())
    }

    /// Rotation by `angle` about `center`.
    pub fn rotated(&self, angle: f64, center: &Point) -> Polygon {
        let (s, c) = angle.sin_cos();
        Polygon::new_unchecked(
            self.vertices
                .iter()
                .map(|p| {
                    let d = p - center;
                    center + Point::new(c * d.x - s * d.y, s * d.x + c * d.y)
                })
                .collect(),
        )
    }

    /// Image under a linear map with positive determinant.
    pub fn linear_image(&self, m: &nalgebra::Matrix2<f64>) -> Result<Polygon> {
        if !(m.determinant() > 0.0) {
            return Err(Error::InvalidArgument("linear map must preserve orientation".into()));
        }
        Ok(Polygon::new_unchecked(self.vertices.iter().map(|p| m * p).collect()))
    }

    /// Mirror image across the x₁-axis, re-ordered to stay counterclockwise.
    pub fn reflected(&self) -> Polygon {
        Polygon::new_unchecked(self.vertices.iter().rev().map(|p| Point::new(p.x, -p.y)).collect())
    }

    /// Rescaled about the centroid to the given area.
    pub fn with_area(&self, target: f64) -> Polygon {
        let c = self.centroid();
        let t = (target / self.area()).sqrt();
        Polygon::new_unchecked(self.vertices.iter().map(|p| c + (p - c) * t).collect())
    }

    /// Translated so that its centroid sits at the origin.
    pub fn centered(&self) -> Polygon {
        self.translated(&-self.centroid())
    }

    /// Flattened `[x₀, y₀, x₁, y₁, …]`.
    pub fn coords(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// `θ`-displaced copy `A_i + eps·θ_i` (not validated).
    pub fn displaced(&self, theta: &[f64], eps: f64) -> Polygon {
        assert_eq!(theta.len(), 2 * self.len());
        Polygon::new_unchecked(
            self.vertices
                .iter()
                .enumerate()
                .map(|(i, p)| p + Point::new(theta[2 * i], theta[2 * i + 1]) * eps)
                .collect(),
        )
    }

    /// Whether every fan triangle `(node, A_i, A_{i+1})` is positively oriented.
    pub fn is_star_shaped_wrt(&self, node: &Point) -> bool {
        let scale = self.bbox_scale();
        self.edges().all(|(a, b)| cross(&(a - node), &(b - node)) > 1e-12 * scale * scale)
    }

    /// Centroid of the polygon's kernel (the set of points from which the
    /// whole polygon is visible), if it has nonempty interior.
    pub fn kernel_center(&self) -> Option<Point> {
        let scale = self.bbox_scale();
        let c = self.centroid();
        let big = 10.0 * scale;
        let mut region = vec![
            c + Point::new(-big, -big),
            c + Point::new(big, -big),
            c + Point::new(big, big),
            c + Point::new(-big, big),
        ];
        for (a, b) in self.edges() {
            region = clip_left_of(&region, &a, &b);
            if region.len() < 3 {
                return None;
            }
        }
        let k = Polygon::new_unchecked(region);
        if k.signed_area() <= 1e-12 * scale * scale {
            return None;
        }
        Some(k.centroid())
    }

    /// Preferred fan node: the centroid when the polygon is star-shaped
    /// w.r.t. it, otherwise the centroid of the kernel.
    pub fn fan_node(&self) -> Result<Point> {
        let c = self.centroid();
        if self.is_star_shaped_wrt(&c) {
            return Ok(c);
        }
        match self.kernel_center() {
            Some(k) if self.is_star_shaped_wrt(&k) => Ok(k),
            _ => Err(Error::NotStarShaped(c.x, c.y)),
        }
    }

    /// Triangles `(node, A_i, A_{i+1})`.
    pub fn fan_triangulation(&self, node: &Point) -> Result<Vec<Triangle>> {
        if !self.is_star_shaped_wrt(node) {
            return Err(Error::NotStarShaped(node.x, node.y));
        }
        Ok(self.edges().map(|(a, b)| Triangle::new_unchecked(*node, a, b)).collect())
    }

    /// Whether `p` lies in the closed polygon (winding number test).
    pub fn contains(&self, p: &Point) -> bool {
        let mut winding = 0i32;
        for (a, b) in self.edges() {
            if point_segment_distance(p, &a, &b) == 0.0 {
                return true;
            }
            if a.y <= p.y {
                if b.y > p.y && cross(&(b - a), &(p - a)) > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && cross(&(b - a), &(p - a)) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        self.edges().map(|(a, b)| point_segment_distance(p, &a, &b)).fold(f64::INFINITY, f64::min)
    }

    /// Cyclic relabelling so that vertex `k` comes first.
    pub fn relabeled(&self, k: usize) -> Polygon {
        let n = self.len();
        Polygon::new_unchecked((0..n).map(|i| self.vertex(i + k)).collect())
    }
}

/// Sutherland–Hodgman step: keep the part of `region` left of the directed line `a → b`.
fn clip_left_of(region: &[Point], a: &Point, b: &Point) -> Vec<Point> {
    let d = b - a;
    let side = |p: &Point| cross(&d, &(p - a));
    let mut out = Vec::with_capacity(region.len() + 1);
    for i in 0..region.len() {
        let p = region[i];
        let q = region[(i + 1) % region.len()];
        let (sp, sq) = (side(&p), side(&q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push(p + (q - p) * t);
        }
    }
    out
}
