//! Nonlocal energies of polygons.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::derivatives;
use crate::error::{invalid, Result};
use crate::geometry::{
    point_segment_distance, polygon_disc_intersection_area, regular_ngon, segment_segment_distance, Normalization,
    Point, Polygon, Triangle,
};
use crate::kernels::Kernel;
use crate::quadrature::{cached_rule, gauss_legendre, TriangleRule};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub quadrature_degree: u32,
    pub triangle_pairs: usize,
    pub kernel: Kernel,
}

/// `J_h(P) = ∫_P∫_P h(x − y)`.
///
/// Smooth kernels use the fan triangulation about [`Polygon::fan_node`] and
/// the product rule over all ordered triangle pairs. The characteristic
/// kernel goes through the exact overlap path `J_r = πr²|P| − P_r`.
pub fn j(p: &Polygon, kernel: &Kernel, degree: u32) -> Result<EnergyReport> {
    let n = p.len();
    let value = match *kernel {
        Kernel::Characteristic { r } => PI * r * r * p.area() - perimeter_r(p, r)?,
        _ => j_with_node(p, kernel, degree, &p.fan_node()?)?,
    };
    Ok(EnergyReport { value, quadrature_degree: degree, triangle_pairs: n * n, kernel: *kernel })
}

/// Product-rule evaluation of `J` over the fan about `node`. The kernel is
/// only sampled at quadrature points, also for the characteristic kernel.
pub fn j_with_node(p: &Polygon, kernel: &Kernel, degree: u32, node: &Point) -> Result<f64> {
    let tris = p.fan_triangulation(node)?;
    let rule = cached_rule(degree)?;
    Ok(pair_sum(&tris, kernel, &rule))
}

/// As [`j_with_node`] on the fan refined `level` times.
pub fn j_sampled(p: &Polygon, kernel: &Kernel, degree: u32, level: u32) -> Result<f64> {
    let tris: Vec<Triangle> = p.fan_triangulation(&p.fan_node()?)?.iter().flat_map(|t| t.refine(level)).collect();
    let rule = cached_rule(degree)?;
    Ok(pair_sum(&tris, kernel, &rule))
}

struct Mapped {
    points: Vec<Point>,
    area: f64,
}

fn map_all(tris: &[Triangle], rule: &TriangleRule) -> Vec<Mapped> {
    tris.iter().map(|t| Mapped { points: rule.points.iter().map(|l| t.at(l)).collect(), area: t.area() }).collect()
}

fn pair_sum(tris: &[Triangle], kernel: &Kernel, rule: &TriangleRule) -> f64 {
    let mapped = map_all(tris, rule);
    let n = tris.len();
    let w = &rule.weights;
    let parts: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&mapped[k / n], &mapped[k % n]);
            let mut s = 0.0;
            for (x, wx) in a.points.iter().zip(w) {
                let mut inner = 0.0;
                for (y, wy) in b.points.iter().zip(w) {
                    inner += wy * kernel.value_at(&(x - y));
                }
                s += wx * inner;
            }
            s * a.area * b.area
        })
        .collect();
    pairwise_sum(&parts)
}

/// `J` as diagonal pairs plus twice the pairs with `i < j`.
pub fn j_symmetric(p: &Polygon, kernel: &Kernel, degree: u32) -> Result<f64> {
    let tris = p.fan_triangulation(&p.fan_node()?)?;
    let rule = cached_rule(degree)?;
    let mapped = map_all(&tris, &rule);
    let n = tris.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for (x, wx) in mapped[i].points.iter().zip(&rule.weights) {
                for (y, wy) in mapped[j].points.iter().zip(&rule.weights) {
                    s += wx * wy * kernel.value_at(&(x - y));
                }
            }
            s *= mapped[i].area * mapped[j].area;
            total += if i == j { s } else { 2.0 * s };
        }
    }
    Ok(total)
}

/// `E_h(P) = ∫_P h(x) dx` with the kernel centred at the origin.
pub fn e(p: &Polygon, kernel: &Kernel, degree: u32) -> Result<f64> {
    if let Kernel::Characteristic { r } = *kernel {
        return Ok(polygon_disc_intersection_area(p, &Point::zeros(), r));
    }
    let tris = p.fan_triangulation(&p.fan_node()?)?;
    let rule = cached_rule(degree)?;
    Ok(single_integral(&tris, &rule, |x| kernel.value_at(x)))
}

fn single_integral<F: Fn(&Point) -> f64>(tris: &[Triangle], rule: &TriangleRule, f: F) -> f64 {
    let parts: Vec<f64> = tris
        .iter()
        .map(|t| t.area() * rule.points.iter().zip(&rule.weights).map(|(l, w)| w * f(&t.at(l))).sum::<f64>())
        .collect();
    pairwise_sum(&parts)
}

/// `v_P(x) = ∫_P h(x − y) dy`.
pub fn potential(p: &Polygon, kernel: &Kernel, degree: u32, x: &Point) -> Result<f64> {
    Potential::new(p, kernel, degree)?.at(x)
}

/// Reusable evaluator of `v_P`.
pub struct Potential<'a> {
    p: &'a Polygon,
    kernel: Kernel,
    tris: Vec<Triangle>,
    rule: std::sync::Arc<TriangleRule>,
}

impl<'a> Potential<'a> {
    pub fn new(p: &'a Polygon, kernel: &Kernel, degree: u32) -> Result<Self> {
        let tris = match kernel {
            Kernel::Characteristic { .. } => Vec::new(),
            _ => p.fan_triangulation(&p.fan_node()?)?,
        };
        Ok(Potential { p, kernel: *kernel, tris, rule: cached_rule(degree)? })
    }

    pub fn at(&self, x: &Point) -> Result<f64> {
        Ok(match self.kernel {
            Kernel::Characteristic { r } => polygon_disc_intersection_area(self.p, x, r),
            k => single_integral(&self.tris, &self.rule, |y| k.value_at(&(x - y))),
        })
    }
}

const PR_TOL: f64 = 1e-11;
const PR_MAX_DEPTH: u32 = 14;
const PR_RULE_DEGREE: u32 = 12;

/// Exact nonlocal `r`-perimeter `P_r(P) = ∫_P |B_r(x) \ P| dx = πr²|P| − J_r(P)`.
///
/// The integrand is evaluated exactly through disc clipping. It is
/// continuous but only piecewise smooth, so the fan triangles are refined
/// adaptively with the degree-12 rule, and sub-triangles on which the
/// integrand is provably constant (`B_r(x) ⊂ P`, or `P ⊂ B_r(x)`) are
/// integrated in closed form.
pub fn perimeter_r(p: &Polygon, r: f64) -> Result<f64> {
    perimeter_r_with_tolerance(p, r, PR_TOL)
}

/// [`perimeter_r`] with the adaptive error target `tol · |P| · max(πr², 1)`.
pub fn perimeter_r_with_tolerance(p: &Polygon, r: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    let rule = cached_rule(PR_RULE_DEGREE)?;
    let tris: Vec<Triangle> = p.fan_triangulation(&p.fan_node()?)?.iter().flat_map(|t| t.refine(2)).collect();
    let ctx = PrContext { p, r, disc: PI * r * r, area: p.area(), diam: p.diameter(), rule: &rule };
    let tol = tol * ctx.area * ctx.disc.max(1.0);
    let parts: Vec<f64> = tris.par_iter().map(|t| ctx.adapt(t, None, 0, tol)).collect();
    Ok(pairwise_sum(&parts).max(0.0))
}

struct PrContext<'a> {
    p: &'a Polygon,
    r: f64,
    disc: f64,
    area: f64,
    diam: f64,
    rule: &'a TriangleRule,
}

enum Certified {
    Value(f64),
    Unknown,
}

impl PrContext<'_> {
    fn integrand(&self, x: &Point) -> f64 {
        (self.disc - polygon_disc_intersection_area(self.p, x, self.r)).max(0.0)
    }

    fn certify(&self, t: &Triangle) -> Certified {
        let covers = t.vertices.iter().all(|c| self.p.vertices().iter().all(|v| (v - c).norm() <= self.r));
        if covers {
            return Certified::Value((self.disc - self.area) * t.area());
        }
        let c = t.centroid();
        let reach = t.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
        if self.p.boundary_distance(&c) - reach >= self.r {
            return Certified::Value(0.0);
        }
        Certified::Unknown
    }

    fn quad(&self, t: &Triangle) -> f64 {
        t.area() * self.rule.points.iter().zip(&self.rule.weights).map(|(l, w)| w * self.integrand(&t.at(l))).sum::<f64>()
    }

    fn adapt(&self, t: &Triangle, coarse: Option<f64>, depth: u32, tol: f64) -> f64 {
        if let Certified::Value(v) = self.certify(t) {
            return v;
        }
        let coarse = coarse.unwrap_or_else(|| self.quad(t));
        let children = t.subdivide();
        let mut fine = [0.0; 4];
        let mut exact = [false; 4];
        for (k, c) in children.iter().enumerate() {
            match self.certify(c) {
                Certified::Value(v) => {
                    fine[k] = v;
                    exact[k] = true;
                }
                Certified::Unknown => fine[k] = self.quad(c),
            }
        }
        let total: f64 = fine.iter().sum();
        let allowed = tol * t.diameter() / self.diam;
        if (total - coarse).abs() <= allowed || depth >= PR_MAX_DEPTH {
            return total;
        }
        children
            .iter()
            .enumerate()
            .map(|(k, c)| if exact[k] { fine[k] } else { self.adapt(c, Some(fine[k]), depth + 1, tol) })
            .sum()
    }
}

const LARGE_K_DEGREE: u32 = 20;
const LARGE_K_CHECK_DEGREE: u32 = 12;
const LARGE_K_TOL: f64 = 1e-13;
const LARGE_K_MAX_DEPTH: u32 = 24;

/// `ln J(P, |x − y|^k)` for any real `k ≥ 0`.
///
/// Evaluated on the unit-diameter copy of `P`, so that no term overflows,
/// with adaptive refinement of triangle pairs: a pair is split while the
/// degree-20 and degree-12 product rules disagree, unless its upper bound
/// `|A||B| d^k` (`d` the largest distance between the pair) is negligible.
pub fn ln_j_power(p: &Polygon, k: f64) -> Result<f64> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(invalid(format!("exponent must be finite and non-negative, got {k}")));
    }
    let diam = p.diameter();
    let q = p.scaled(1.0 / diam);
    let hi = cached_rule(LARGE_K_DEGREE)?;
    let lo = cached_rule(LARGE_K_CHECK_DEGREE)?;
    let tris: Vec<Triangle> = q.fan_triangulation(&q.fan_node()?)?.iter().flat_map(|t| t.refine(1)).collect();
    let n = tris.len();
    let exact = k.fract() == 0.0 && (k as u32) % 2 == 0 && k <= LARGE_K_DEGREE as f64;
    let coarse: Vec<f64> = (0..n * n).into_par_iter().map(|i| power_pair(&tris[i / n], &tris[i % n], k, &hi)).collect();
    let floor = LARGE_K_TOL * pairwise_sum(&coarse);
    let ctx = LargeK { k, hi: &hi, lo: &lo, floor, exact };
    let parts: Vec<f64> = (0..n * n).into_par_iter().map(|i| ctx.adapt(&tris[i / n], &tris[i % n], coarse[i], 0)).collect();
    Ok(pairwise_sum(&parts).ln() + (k + 4.0) * diam.ln())
}

struct LargeK<'a> {
    k: f64,
    hi: &'a TriangleRule,
    lo: &'a TriangleRule,
    floor: f64,
    exact: bool,
}

impl LargeK<'_> {
    fn adapt(&self, a: &Triangle, b: &Triangle, value: f64, depth: u32) -> f64 {
        if self.exact || depth >= LARGE_K_MAX_DEPTH {
            return value;
        }
        let dmax = a.vertices.iter().flat_map(|x| b.vertices.iter().map(move |y| (x - y).norm())).fold(0.0, f64::max);
        if a.area() * b.area() * dmax.powf(self.k) <= self.floor {
            return value;
        }
        if (value - power_pair(a, b, self.k, self.lo)).abs() <= self.floor {
            return value;
        }
        let (ca, cb) = (a.subdivide(), b.subdivide());
        let parts: Vec<f64> = ca
            .iter()
            .flat_map(|x| cb.iter().map(move |y| (x, y)))
            .map(|(x, y)| self.adapt(x, y, power_pair(x, y, self.k, self.hi), depth + 1))
            .collect();
        pairwise_sum(&parts)
    }
}

fn power_pair(a: &Triangle, b: &Triangle, k: f64, rule: &TriangleRule) -> f64 {
    let half = 0.5 * k;
    let ys: Vec<Point> = rule.points.iter().map(|l| b.at(l)).collect();
    let mut s = 0.0;
    for (la, wa) in rule.points.iter().zip(&rule.weights) {
        let x = a.at(la);
        let mut inner = 0.0;
        for (y, wb) in ys.iter().zip(&rule.weights) {
            inner += wb * (x - y).norm_squared().powf(half);
        }
        s += wa * inner;
    }
    s * a.area() * b.area()
}

/// `|P|^{−(k+4)/2} J(P, |x − y|^k)`.
pub fn scale_invariant_j(p: &Polygon, k: u32, degree: u32) -> Result<f64> {
    if k < 2 || k % 2 == 1 {
        return Err(invalid(format!("scale-invariant energy needs even k >= 2, got {k}")));
    }
    let jv = j(p, &Kernel::power(k as f64)?, degree)?.value;
    Ok(p.area().powf(-(k as f64 + 4.0) / 2.0) * jv)
}

/// Regular `N`-gon with the same area as `p`, centred at the origin.
pub fn regular_reference(p: &Polygon) -> Result<Polygon> {
    regular_ngon(p.len(), Normalization::Area(p.area()), 0.0)
}

/// `ℓ` such that `∇J = ℓ ∇area` on the tangent-free part at `reference`:
/// the ratio of gradient norms, signed by their alignment.
pub fn lagrange_multiplier(reference: &Polygon, kernel: &Kernel, degree: u32) -> Result<f64> {
    let gj = derivatives::grad_j(reference, kernel, degree)?;
    let ga = derivatives::grad_area(reference);
    let na = ga.norm();
    if na == 0.0 {
        return Err(invalid("area gradient vanishes"));
    }
    Ok(gj.norm() / na * gj.dot(&ga).signum())
}

/// `J_{h_Q}(P) − ℓ_Q |P|` with `ℓ_Q` fixed at the regular polygon of equal area.
pub fn lagrangian_hq(p: &Polygon, q: u32, t: f64, degree: u32) -> Result<(f64, f64)> {
    let kernel = Kernel::truncated_heat(q, t)?;
    let ell = lagrange_multiplier(&regular_reference(p)?, &kernel, degree)?;
    let jv = j(p, &kernel, degree)?.value;
    Ok((jv - ell * p.area(), ell))
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalityReport {
    /// Rotation residual per side.
    pub rotation: Vec<f64>,
    /// Deviation of each side average of `v_P` from the mean side average.
    pub parallel: Vec<f64>,
    pub mean_side_value: f64,
    /// Natural magnitudes: `v̄ ℓ̄²` for rotation and `v̄` for parallel residuals.
    pub scale_rotation: f64,
    pub scale_parallel: f64,
}

impl CriticalityReport {
    /// Largest residual relative to its scale.
    pub fn max_relative(&self) -> f64 {
        let r = self.rotation.iter().fold(0.0f64, |m, v| m.max(v.abs())) / self.scale_rotation;
        let s = self.parallel.iter().fold(0.0f64, |m, v| m.max(v.abs())) / self.scale_parallel;
        r.max(s)
    }
}

pub(crate) const LINE_POINTS: usize = 16;

/// `(∫_{A}^{M} v |xM| − ∫_{M}^{B} v |xM|, ∫_{A}^{B} v)` on side `i = [A, B]`.
pub(crate) fn side_integrals(p: &Polygon, v: &Potential, i: usize) -> Result<(f64, f64)> {
    let gl = gauss_legendre(LINE_POINTS)?;
    let (a, b) = p.edge(i);
    let half = (b - a).norm() / 2.0;
    let dir = (b - a) / (2.0 * half);
    let mut rot = 0.0;
    let mut par = 0.0;
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        // s ∈ [0, half] measured from the vertex towards the midpoint
        let s = 0.5 * half * (1.0 + x);
        let wl = 0.5 * half * w;
        let lower = v.at(&(a + dir * s))?;
        let upper = v.at(&(b - dir * s))?;
        rot += wl * (half - s) * (lower - upper);
        par += wl * (lower + upper);
    }
    Ok((rot, par))
}

/// Residuals of the side-rotation and side-parallel stationarity equations.
pub fn criticality_residuals(p: &Polygon, kernel: &Kernel, degree: u32) -> Result<CriticalityReport> {
    let v = Potential::new(p, kernel, degree)?;
    let n = p.len();
    let mut rotation = Vec::with_capacity(n);
    let mut averages = Vec::with_capacity(n);
    for i in 0..n {
        let (rot, par) = side_integrals(p, &v, i)?;
        rotation.push(rot);
        let (a, b) = p.edge(i);
        averages.push(par / (b - a).norm());
    }
    let mean = averages.iter().sum::<f64>() / n as f64;
    let mean_len = p.perimeter() / n as f64;
    Ok(CriticalityReport {
        rotation,
        parallel: averages.iter().map(|a| a - mean).collect(),
        mean_side_value: mean,
        scale_rotation: mean.abs() * mean_len * mean_len,
        scale_parallel: mean.abs(),
    })
}

/// Whether `∂P ∩ B_r(x)` lies in two consecutive sides for every `x ∈ ∂P`.
/// Always true for triangles.
pub fn card_condition(p: &Polygon, r: f64) -> bool {
    let n = p.len();
    if n == 3 {
        return true;
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = p.edge(i);
            let (c, d) = p.edge(j);
            if segment_segment_distance(&a, &b, &c, &d) < r {
                return false;
            }
        }
    }
    // On side c the points near S_{c−1} form [A_c, α) and those near S_{c+1}
    // form (β, A_{c+1}]; the two must not overlap.
    for c in 0..n {
        let (a, b) = p.edge(c);
        let (pa, pb) = p.edge((c + n - 1) % n);
        let (na, nb) = p.edge((c + 1) % n);
        let reach = |from: Point, to: Point, s0: Point, s1: Point| -> f64 {
            // largest τ ∈ [0,1] with dist(from + τ(to − from), S) < r; the
            // distance is convex and vanishes at τ = 0
            let dist = |tau: f64| point_segment_distance(&(from + (to - from) * tau), &s0, &s1);
            if dist(1.0) < r {
                return 1.0;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if dist(mid) < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let alpha = reach(a, b, pa, pb);
        let beta = 1.0 - reach(b, a, na, nb);
        if alpha > beta {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_j_power_matches_polynomial_quadrature() {
        let p = random_polygon(6, 4, RandomMode::StarShaped).unwrap();
        let exact = j(&p, &Kernel::power(6.0).unwrap(), 8).unwrap().value;
        assert!((ln_j_power(&p, 6.0).unwrap() - exact.ln()).abs() < 1e-12);
        let odd = j_sampled(&p, &Kernel::power(7.0).unwrap(), 30, 2).unwrap();
        assert!((ln_j_power(&p, 7.0).unwrap() - odd.ln()).abs() < 1e-9);
    }

    #[test]
    fn ln_j_power_large_k_tends_to_diameter_rate() {
        // vertex-to-vertex diameters: ln J_k = k ln diam − 4 ln k + O(1)
        let p = regular_ngon(6, Normalization::Area(PI), 0.0).unwrap();
        let d = p.diameter().ln();
        let a = ln_j_power(&p, 200.0).unwrap();
        let b = ln_j_power(&p, 400.0).unwrap();
        assert!(((b - a + 4.0 * 2f64.ln()) / 200.0 - d).abs() < 1e-3);
    }

    use crate::geometry::{graham_hexagon, random_polygon, RandomMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> Polygon {
        Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn unit_square_power_two() {
        let v = j(&square(), &Kernel::power(2.0).unwrap(), 4).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(v.triangle_pairs, 16);
    }

    #[test]
    fn unit_square_power_two_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let d = Point::new(rng.gen::<f64>() - rng.gen::<f64>(), rng.gen::<f64>() - rng.gen::<f64>()).norm_squared();
            s += d;
            s2 += d * d;
        }
        let mean = s / n as f64;
        let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() < 3.0 * sd);
    }

    #[test]
    fn regular_power_two_from_moments() {
        for n in 3..=12 {
            let p = regular_ngon(n, Normalization::Area(PI), 0.3).unwrap();
            let m = p.moments();
            let expected = 2.0 * m.area * (m.xx + m.yy) - 2.0 * m.x * m.x - 2.0 * m.y * m.y;
            let got = j(&p, &Kernel::power(2.0).unwrap(), 4).unwrap().value;
            assert!((got - expected).abs() < 1e-10 * expected, "n={n}");
        }
    }

    #[test]
    fn characteristic_small_polygon() {
        let p = regular_ngon(5, Normalization::Area(PI), 0.0).unwrap();
        let r = p.diameter() * 1.01;
        let v = j(&p, &Kernel::characteristic(r).unwrap(), 12).unwrap().value;
        assert!((v - PI * PI).abs() < 1e-9);
        assert!((perimeter_r(&p, r).unwrap() - PI * PI * (r * r - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn symmetric_pair_sum_matches_ordered() {
        let p = random_polygon(6, 3, RandomMode::StarShaped).unwrap();
        for k in [Kernel::power(4.0).unwrap(), Kernel::gaussian(0.5).unwrap()] {
            let a = j(&p, &k, 8).unwrap().value;
            let b = j_symmetric(&p, &k, 8).unwrap();
            assert!((a - b).abs() < 1e-13 * a.abs());
        }
    }

    #[test]
    fn single_integral_cases() {
        let p = regular_ngon(6, Normalization::Area(PI), 0.0).unwrap();
        assert!((e(&p, &Kernel::characteristic(0.5).unwrap(), 12).unwrap() - PI * 0.25).abs() < 1e-14);
        for n in 3..=9 {
            let reg = regular_ngon(n, Normalization::Circumradius(1.0), 0.2).unwrap();
            // fan of the regular N-gon of circumradius 1: each triangle contributes
            // (p_i² + p_i p_{i+1} + p_{i+1}²)/12 · sin(2π/N) per coordinate, with
            // p the x- and q the y-coordinates.
            let mut closed = 0.0;
            for i in 0..n {
                let (a, b) = (reg.vertex(i), reg.vertex(i + 1));
                let det = a.x * b.y - a.y * b.x;
                closed += det / 12.0 * (a.x * a.x + a.x * b.x + b.x * b.x + a.y * a.y + a.y * b.y + b.y * b.y);
            }
            let nf = n as f64;
            let phi = 2.0 * PI / nf;
            assert!((closed - nf * phi.sin() * (2.0 + phi.cos()) / 12.0).abs() < 1e-14);
            let q = e(&reg, &Kernel::power(2.0).unwrap(), 4).unwrap();
            assert!((q - closed).abs() < 1e-13);
            let rot = reg.rotated(0.7, &Point::zeros());
            let q6 = e(&reg, &Kernel::power(6.0).unwrap(), 8).unwrap();
            assert!((e(&rot, &Kernel::power(6.0).unwrap(), 8).unwrap() - q6).abs() < 1e-12 * q6);
        }
    }

    #[test]
    fn perimeter_limits() {
        let p = random_polygon(5, 2, RandomMode::Convex).unwrap();
        let a = p.area();
        for r in [10.0, 40.0, 160.0] {
            let v = perimeter_r(&p, r).unwrap();
            assert!((v - (PI * r * r * a - a * a)).abs() < 1e-9 * v);
            assert!((v / (PI * r * r) - a).abs() <= a * a / (PI * r * r) * (1.0 + 1e-9));
        }
        assert!(perimeter_r(&p, 0.0).is_err());
    }

    #[test]
    fn perimeter_of_square_vs_monte_carlo() {
        let sq = square();
        let r = 0.1;
        let exact = perimeter_r(&sq, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = Point::new(rng.gen(), rng.gen());
            let v = PI * r * r - polygon_disc_intersection_area(&sq, &x, r);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let sd = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * sd, "{mean} vs {exact} (σ {sd})");
        // Edge strips give 8r³/3; each corner removes less than r⁴.
        let side_term = 4.0 * 2.0 * r * r * r / 3.0;
        assert!(exact < side_term && exact > side_term - 4.0 * r.powi(4));
    }

    #[test]
    fn perimeter_is_rigid_invariant() {
        let p = random_polygon(6, 9, RandomMode::StarShaped).unwrap();
        let q = p.rotated(1.1, &Point::new(0.2, 0.3)).translated(&Point::new(3.0, -1.0));
        for r in [0.3, 1.0, 2.0] {
            let (a, b) = (perimeter_r(&p, r).unwrap(), perimeter_r(&q, r).unwrap());
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn scale_invariance() {
        let p = random_polygon(5, 4, RandomMode::Convex).unwrap();
        let a = scale_invariant_j(&p, 6, 8).unwrap();
        let b = scale_invariant_j(&p.scaled(2.0), 6, 8).unwrap();
        let c = scale_invariant_j(&p.rotated(0.4, &Point::new(1.0, 2.0)).translated(&Point::new(-3.0, 0.5)), 6, 8).unwrap();
        assert!((a - b).abs() < 1e-11 * a);
        assert!((a - c).abs() < 1e-11 * a);
        assert!(scale_invariant_j(&p, 3, 8).is_err());
    }

    #[test]
    fn regular_hexagon_beats_graham_at_k_two() {
        let reg = regular_ngon(6, Normalization::Area(PI), 0.0).unwrap();
        let g = graham_hexagon(Normalization::Area(PI)).unwrap();
        assert!(scale_invariant_j(&reg, 2, 4).unwrap() < scale_invariant_j(&g, 2, 4).unwrap());
    }

    #[test]
    fn lagrangian_q_zero() {
        let p = regular_ngon(6, Normalization::Area(PI), 0.0).unwrap();
        let (value, ell) = lagrangian_hq(&p, 0, 1.0, 4).unwrap();
        assert!((ell - 2.0 * PI).abs() < 1e-12);
        assert!((value - (PI * PI - 2.0 * PI * PI)).abs() < 1e-11);
        let (_, ell12) = lagrangian_hq(&p, 12, 1.0, 26).unwrap();
        assert!(ell12.is_finite() && ell12 > 0.0);
    }

    #[test]
    fn criticality_of_regular_polygons() {
        for n in 3..=8 {
            let p = regular_ngon(n, Normalization::Area(PI), 0.1).unwrap();
            for k in [Kernel::power(2.0).unwrap(), Kernel::truncated_heat(12, 1.0).unwrap()] {
                let rep = criticality_residuals(&p, &k, k.default_degree()).unwrap();
                assert!(rep.max_relative() < 1e-8, "n={n} {k}: {}", rep.max_relative());
            }
        }
    }

    #[test]
    fn criticality_is_translation_invariant() {
        let p = graham_hexagon(Normalization::Area(PI)).unwrap();
        let k = Kernel::power(2.0).unwrap();
        let a = criticality_residuals(&p, &k, 4).unwrap();
        let b = criticality_residuals(&p.translated(&Point::new(0.7, -0.3)), &k, 4).unwrap();
        for (x, y) in a.rotation.iter().zip(&b.rotation) {
            assert!((x - y).abs() < 1e-12 * a.scale_rotation);
        }
        for (x, y) in a.parallel.iter().zip(&b.parallel) {
            assert!((x - y).abs() < 1e-12 * a.scale_parallel);
        }
        assert!(a.max_relative() > 1e-3);
    }

    #[test]
    fn card_condition_cases() {
        // at area π the side of the regular N-gon exceeds 2r = 1 exactly for N ≤ 6
        for n in 3..=6 {
            let p = regular_ngon(n, Normalization::Area(PI), 0.0).unwrap();
            assert!(card_condition(&p, 0.5), "n={n}");
        }
        for n in [7, 10] {
            let p = regular_ngon(n, Normalization::Area(PI), 0.0).unwrap();
            assert!(!card_condition(&p, 0.5), "n={n}");
        }
        let sq = square();
        assert!(card_condition(&sq, 0.49));
        assert!(!card_condition(&sq, 0.51));
    }
}
