//! Vertex-displacement derivatives of `J`, of the area, and of side movements.
//!
//! Coordinates are flattened as `[x₀, y₀, x₁, y₁, …]`. A vertex velocity
//! `θ` is extended to the polygon through the hat functions of the fan about
//! a fixed inner node, `Θ(x) = Σ θ_i φ_i(x)`, and the derivatives of
//! `J(Ω + εΘ)` are assembled from triangle-pair quadrature.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{self, Potential};
use crate::error::{invalid, Error, Result};
use crate::geometry::{cross, Point, Polygon, Triangle};
use crate::kernels::Kernel;
use crate::quadrature::cached_rule;

/// Per-vertex velocity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField(pub Vec<Point>);

impl VertexField {
    pub fn from_flat(v: &[f64]) -> Self {
        VertexField(v.chunks(2).map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn to_flat(&self) -> DVector<f64> {
        DVector::from_iterator(2 * self.0.len(), self.0.iter().flat_map(|p| [p.x, p.y]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn translation(n: usize, dir: Point) -> Self {
        VertexField(vec![dir; n])
    }

    /// `θ_i = rot90(A_i − c)`.
    pub fn rotation(p: &Polygon, center: &Point) -> Self {
        VertexField(p.vertices().iter().map(|a| crate::geometry::perp(&(a - center))).collect())
    }

    /// `θ_i = A_i − c`.
    pub fn scaling(p: &Polygon, center: &Point) -> Self {
        VertexField(p.vertices().iter().map(|a| a - center).collect())
    }
}

/// Hat functions of the fan about `node`. On triangle `k = (node, A_k, A_{k+1})`
/// the only nonzero vertex hats are `φ_k = λ₁` and `φ_{k+1} = λ₂`.
#[derive(Debug, Clone)]
pub struct HatBasis {
    pub node: Point,
    pub triangles: Vec<Triangle>,
    /// `(∇φ_k, ∇φ_{k+1})` on triangle `k`.
    pub gradients: Vec<(Point, Point)>,
}

fn barycentric_gradients(t: &Triangle) -> (Point, Point) {
    let [p0, p1, p2] = t.vertices;
    let (e1, e2) = (p1 - p0, p2 - p0);
    let det = cross(&e1, &e2);
    (Point::new(e2.y, -e2.x) / det, Point::new(-e1.y, e1.x) / det)
}

pub fn hat_basis(p: &Polygon, node: &Point) -> Result<HatBasis> {
    let triangles = p.fan_triangulation(node)?;
    let gradients = triangles.iter().map(barycentric_gradients).collect();
    Ok(HatBasis { node: *node, triangles, gradients })
}

impl HatBasis {
    /// Barycentric coordinates of `x` in triangle `k`.
    pub fn barycentric(&self, k: usize, x: &Point) -> [f64; 3] {
        let (g1, g2) = self.gradients[k];
        let d = x - self.triangles[k].vertices[0];
        let (l1, l2) = (g1.dot(&d), g2.dot(&d));
        [1.0 - l1 - l2, l1, l2]
    }

    /// Index of a fan triangle containing `x`.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        (0..self.triangles.len()).find(|&k| self.barycentric(k, x).iter().all(|&l| l >= -1e-12))
    }

    /// `φ_i(x)` for a vertex hat, or the node hat when `i` is `None`.
    pub fn eval(&self, i: Option<usize>, x: &Point) -> Option<f64> {
        let n = self.triangles.len();
        let k = self.locate(x)?;
        let l = self.barycentric(k, x);
        Some(match i {
            None => l[0],
            Some(i) if i % n == k => l[1],
            Some(i) if i % n == (k + 1) % n => l[2],
            Some(_) => 0.0,
        })
    }
}

struct LocalVertex {
    id: usize,
    /// which barycentric coordinate (1 or 2) on the first triangle, 0 if none
    on_a: usize,
    on_b: usize,
    alpha: Point,
    beta: Point,
}

fn local_vertices(a: usize, b: usize, n: usize, basis: &HatBasis) -> Vec<LocalVertex> {
    let mut ids: Vec<usize> = Vec::with_capacity(4);
    for id in [a, (a + 1) % n, b, (b + 1) % n] {
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let slot = |t: usize, id: usize| -> usize {
        if id == t {
            1
        } else if id == (t + 1) % n {
            2
        } else {
            0
        }
    };
    let grad = |t: usize, s: usize| -> Point {
        match s {
            1 => basis.gradients[t].0,
            2 => basis.gradients[t].1,
            _ => Point::zeros(),
        }
    };
    ids.into_iter()
        .map(|id| {
            let (on_a, on_b) = (slot(a, id), slot(b, id));
            LocalVertex { id, on_a, on_b, alpha: grad(a, on_a), beta: grad(b, on_b) }
        })
        .collect()
}

struct PairContribution {
    ids: Vec<usize>,
    grad: Vec<Point>,
    /// `hess[i][j]`, 2×2 blocks, filled when requested
    hess: Vec<Vec<nalgebra::Matrix2<f64>>>,
}

fn assemble(
    p: &Polygon,
    kernel: &Kernel,
    degree: u32,
    node: &Point,
    with_hessian: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let caps = kernel.capabilities();
    if !caps.has_gradient || (with_hessian && !caps.has_hessian) {
        return Err(Error::NotDifferentiable(kernel.to_string()));
    }
    let basis = hat_basis(p, node)?;
    let rule = cached_rule(degree)?;
    let n = p.len();
    let mapped: Vec<Vec<Point>> =
        basis.triangles.iter().map(|t| rule.points.iter().map(|l| t.at(l)).collect()).collect();
    let areas: Vec<f64> = basis.triangles.iter().map(|t| t.area()).collect();
    let w = &rule.weights;
    let bary = &rule.points;

    let contributions: Vec<PairContribution> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (k / n, k % n);
            let locals = local_vertices(a, b, n, &basis);
            let m = locals.len();
            let mut sh = 0.0;
            let mut gc = [Point::zeros(); 4];
            let mut hcc = [[nalgebra::Matrix2::<f64>::zeros(); 4]; 4];
            let mut c = [0.0; 4];
            for (ip, x) in mapped[a].iter().enumerate() {
                let (wx, lx) = (w[ip], &bary[ip]);
                for (iq, y) in mapped[b].iter().enumerate() {
                    let wt = wx * w[iq];
                    let ly = &bary[iq];
                    let (h, g, hh) = kernel.jet(&(x - y));
                    sh += wt * h;
                    for (i, lv) in locals.iter().enumerate() {
                        let u = if lv.on_a == 0 { 0.0 } else { lx[lv.on_a] };
                        let v = if lv.on_b == 0 { 0.0 } else { ly[lv.on_b] };
                        c[i] = u - v;
                        gc[i] += g * (wt * c[i]);
                    }
                    if with_hessian {
                        for i in 0..m {
                            for j in i..m {
                                hcc[i][j] += hh * (wt * c[i] * c[j]);
                            }
                        }
                    }
                }
            }
            let scale = areas[a] * areas[b];
            sh *= scale;
            for g in gc.iter_mut().take(m) {
                *g *= scale;
            }
            let s: Vec<Point> = locals.iter().map(|l| l.alpha + l.beta).collect();
            let grad: Vec<Point> = (0..m).map(|i| gc[i] + s[i] * sh).collect();
            let mut hess = Vec::new();
            if with_hessian {
                hess = vec![vec![nalgebra::Matrix2::zeros(); m]; m];
                for i in 0..m {
                    for j in 0..m {
                        let hc = if i <= j { hcc[i][j] } else { hcc[j][i] } * scale;
                        let (li, lj) = (&locals[i], &locals[j]);
                        let geo = s[i] * s[j].transpose() - lj.alpha * li.alpha.transpose() - lj.beta * li.beta.transpose();
                        hess[i][j] = geo * sh + gc[i] * s[j].transpose() + s[i] * gc[j].transpose() + hc;
                    }
                }
            }
            PairContribution { ids: locals.iter().map(|l| l.id).collect(), grad, hess }
        })
        .collect();

    let mut grad = DVector::zeros(2 * n);
    let mut hess = if with_hessian { Some(DMatrix::zeros(2 * n, 2 * n)) } else { None };
    for pc in &contributions {
        for (i, &id) in pc.ids.iter().enumerate() {
            grad[2 * id] += pc.grad[i].x;
            grad[2 * id + 1] += pc.grad[i].y;
            if let Some(h) = hess.as_mut() {
                for (j, &jd) in pc.ids.iter().enumerate() {
                    let blk = &pc.hess[i][j];
                    for r in 0..2 {
                        for s in 0..2 {
                            h[(2 * id + r, 2 * jd + s)] += blk[(r, s)];
                        }
                    }
                }
            }
        }
    }
    Ok((grad, hess))
}

/// Gradient of `J` with respect to the vertex coordinates.
pub fn grad_j(p: &Polygon, kernel: &Kernel, degree: u32) -> Result<DVector<f64>> {
    grad_j_with_node(p, kernel, degree, &p.fan_node()?)
}

pub fn grad_j_with_node(p: &Polygon, kernel: &Kernel, degree: u32, node: &Point) -> Result<DVector<f64>> {
    Ok(assemble(p, kernel, degree, node, false)?.0)
}

/// Symmetrized Hessian of `J` and the relative asymmetry of the raw assembly.
#[derive(Debug, Clone)]
pub struct HessianReport {
    pub gradient: DVector<f64>,
    pub matrix: DMatrix<f64>,
    pub asymmetry: f64,
}

pub fn hess_j(p: &Polygon, kernel: &Kernel, degree: u32) -> Result<HessianReport> {
    hess_j_with_node(p, kernel, degree, &p.fan_node()?)
}

pub fn hess_j_with_node(p: &Polygon, kernel: &Kernel, degree: u32, node: &Point) -> Result<HessianReport> {
    let (gradient, raw) = assemble(p, kernel, degree, node, true)?;
    let raw = raw.expect("hessian requested");
    let norm = raw.norm();
    let asymmetry = if norm > 0.0 { (&raw - raw.transpose()).norm() / norm } else { 0.0 };
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(HessianReport { gradient, matrix, asymmetry })
}

pub fn grad_area(p: &Polygon) -> DVector<f64> {
    let n = p.len();
    let mut g = DVector::zeros(2 * n);
    for i in 0..n {
        let (prev, next) = (p.vertex(i + n - 1), p.vertex(i + 1));
        g[2 * i] = 0.5 * (next.y - prev.y);
        g[2 * i + 1] = 0.5 * (prev.x - next.x);
    }
    g
}

pub fn hess_area(p: &Polygon) -> DMatrix<f64> {
    let n = p.len();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        // ∂²/∂x_i∂y_j = 1/2, ∂²/∂y_i∂x_j = −1/2
        h[(2 * i, 2 * j + 1)] += 0.5;
        h[(2 * j + 1, 2 * i)] += 0.5;
        h[(2 * i + 1, 2 * j)] -= 0.5;
        h[(2 * j, 2 * i + 1)] -= 0.5;
    }
    h
}

fn outward_normal(p: &Polygon, i: usize) -> (Point, f64) {
    let (a, b) = p.edge(i);
    let e = b - a;
    let len = e.norm();
    (Point::new(e.y, -e.x) / len, len)
}

/// Moves `A_i` along side `i − 1` (and `A_{i+1}` along side `i + 1`) so that
/// the normal velocities of side `i` at its endpoints are `na` and `nb`.
fn side_field(p: &Polygon, i: usize, na: f64, nb: f64) -> Result<VertexField> {
    let n = p.len();
    let (nu, _) = outward_normal(p, i);
    let before = p.vertex(i) - p.vertex(i + n - 1);
    let after = p.vertex(i + 2) - p.vertex(i + 1);
    let (db, da) = (before.dot(&nu), after.dot(&nu));
    if db.abs() < 1e-14 * before.norm() || da.abs() < 1e-14 * after.norm() {
        return Err(invalid(format!("side {i} is collinear with a neighbouring side")));
    }
    let mut field = vec![Point::zeros(); n];
    field[i % n] = before * (na / db);
    field[(i + 1) % n] = after * (nb / da);
    Ok(VertexField(field))
}

/// Vertex field realizing the rotation of side `i` about its midpoint.
pub fn side_rotation_field(p: &Polygon, i: usize) -> Result<VertexField> {
    let (_, len) = outward_normal(p, i);
    side_field(p, i, 0.5 * len, -0.5 * len)
}

/// Vertex field realizing the unit outward parallel movement of side `i`.
pub fn side_parallel_field(p: &Polygon, i: usize) -> Result<VertexField> {
    side_field(p, i, 1.0, 1.0)
}

/// `d/dε J` under rotation of side `i` about its midpoint.
pub fn side_rotation_derivative(p: &Polygon, i: usize, kernel: &Kernel, degree: u32) -> Result<f64> {
    let v = Potential::new(p, kernel, degree)?;
    Ok(2.0 * energy::side_integrals(p, &v, i % p.len())?.0)
}

/// `d/dε J` under unit outward parallel movement of side `i`.
pub fn side_parallel_derivative(p: &Polygon, i: usize, kernel: &Kernel, degree: u32) -> Result<f64> {
    let v = Potential::new(p, kernel, degree)?;
    Ok(2.0 * energy::side_integrals(p, &v, i % p.len())?.1)
}

/// Area derivatives `(rotation, parallel)` of side `i`: `0` and `ℓ_i`.
pub fn side_area_derivatives(p: &Polygon, i: usize) -> (f64, f64) {
    (0.0, outward_normal(p, i).1)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianCheck {
    pub relative_error: f64,
    pub asymmetry: f64,
}

/// Central-difference check of `B·θ` with the fan node held fixed.
pub fn fd_gradient_check(p: &Polygon, kernel: &Kernel, degree: u32, theta: &[f64], eps: f64) -> Result<GradientCheck> {
    if theta.len() != 2 * p.len() {
        return Err(Error::VertexCountMismatch(theta.len() / 2, p.len()));
    }
    let node = p.fan_node()?;
    let b = grad_j_with_node(p, kernel, degree, &node)?;
    let analytic = b.dot(&DVector::from_column_slice(theta));
    let plus = energy::j_with_node(&p.displaced(theta, eps), kernel, degree, &node)?;
    let minus = energy::j_with_node(&p.displaced(theta, -eps), kernel, degree, &node)?;
    let finite_difference = (plus - minus) / (2.0 * eps);
    let relative_error = (analytic - finite_difference).abs() / analytic.abs().max(f64::MIN_POSITIVE);
    Ok(GradientCheck { analytic, finite_difference, relative_error })
}

/// Central-difference check of `Mθ` against gradient differences.
pub fn fd_hessian_check(p: &Polygon, kernel: &Kernel, degree: u32, theta: &[f64], eps: f64) -> Result<HessianCheck> {
    if theta.len() != 2 * p.len() {
        return Err(Error::VertexCountMismatch(theta.len() / 2, p.len()));
    }
    let node = p.fan_node()?;
    let h = hess_j_with_node(p, kernel, degree, &node)?;
    let th = DVector::from_column_slice(theta);
    let action = &h.matrix * &th;
    let plus = grad_j_with_node(&p.displaced(theta, eps), kernel, degree, &node)?;
    let minus = grad_j_with_node(&p.displaced(theta, -eps), kernel, degree, &node)?;
    let fd = (plus - minus) / (2.0 * eps);
    Ok(HessianCheck { relative_error: (&action - fd).norm() / action.norm().max(f64::MIN_POSITIVE), asymmetry: h.asymmetry })
}

/// Row-major dump of a gradient and Hessian.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeDump {
    pub vertices: usize,
    pub kernel: Kernel,
    pub degree: u32,
    pub gradient: Vec<f64>,
    pub hessian: Option<Vec<Vec<f64>>>,
}

impl DerivativeDump {
    pub fn new(p: &Polygon, kernel: &Kernel, degree: u32, with_hessian: bool) -> Result<Self> {
        let node = p.fan_node()?;
        let (gradient, hessian) = if with_hessian {
            let h = hess_j_with_node(p, kernel, degree, &node)?;
            let rows = (0..h.matrix.nrows()).map(|r| h.matrix.row(r).iter().copied().collect()).collect();
            (h.gradient, Some(rows))
        } else {
            (grad_j_with_node(p, kernel, degree, &node)?, None)
        };
        Ok(DerivativeDump { vertices: p.len(), kernel: *kernel, degree, gradient: gradient.iter().copied().collect(), hessian })
    }
}

/// Deterministic unit-norm vertex velocity for `n` vertices.
pub fn random_direction(n: usize, seed: u64) -> Vec<f64> {
    random_unit(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_polygon, regular_ngon, Normalization, RandomMode};
    use std::f64::consts::PI;

    #[test]
    fn hat_basis_properties() {
        let p = random_polygon(6, 5, RandomMode::StarShaped).unwrap();
        let node = p.fan_node().unwrap();
        let basis = hat_basis(&p, &node).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let v = basis.eval(Some(i), &p.vertex(j)).unwrap();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
            assert!(basis.eval(Some(i), &node).unwrap().abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut checked = 0;
        while checked < 100 {
            let k = rng.gen_range(0..6);
            let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let x = basis.triangles[k].at(&[1.0 - a - b, a, b]);
            let total: f64 = (0..6).map(|i| basis.eval(Some(i), &x).unwrap()).sum::<f64>() + basis.eval(None, &x).unwrap();
            assert!((total - 1.0).abs() < 1e-13);
            // gradient of the hats by finite differences inside triangle k
            let eps = 1e-6;
            for (g, idx) in [(basis.gradients[k].0, k), (basis.gradients[k].1, (k + 1) % 6)] {
                for e in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)] {
                    let f = |y: Point| {
                        let l = basis.barycentric(k, &y);
                        if idx == k { l[1] } else { l[2] }
                    };
                    let fd = (f(x + e * eps) - f(x - e * eps)) / (2.0 * eps);
                    assert!((fd - g.dot(&e)).abs() < 1e-8 * g.norm().max(1.0));
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn gradient_fd_power_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..3 {
            let p = random_polygon(5, seed, RandomMode::StarShaped).unwrap();
            let theta = random_unit(5, &mut rng);
            let chk = fd_gradient_check(&p, &Kernel::power(2.0).unwrap(), 4, &theta, 1e-5).unwrap();
            assert!(chk.relative_error < 1e-6, "{chk:?}");
        }
    }

    #[test]
    fn hessian_fd_power_two_and_heat() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_polygon(5, 7, RandomMode::StarShaped).unwrap();
        for k in [Kernel::power(2.0).unwrap(), Kernel::truncated_heat(4, 1.0).unwrap(), Kernel::gaussian(2.0).unwrap()] {
            let theta = random_unit(5, &mut rng);
            let chk = fd_hessian_check(&p, &k, k.default_degree(), &theta, 1e-5).unwrap();
            assert!(chk.relative_error < 1e-5, "{k}: {chk:?}");
            assert!(chk.asymmetry < 1e-10, "{k}: {chk:?}");
        }
    }

    #[test]
    fn rigid_motions_are_null() {
        let p = random_polygon(6, 11, RandomMode::StarShaped).unwrap();
        let k = Kernel::power(4.0).unwrap();
        let h = hess_j(&p, &k, 6).unwrap();
        let b = &h.gradient;
        let c = p.centroid();
        for f in [
            VertexField::translation(6, Point::new(1.0, 0.0)),
            VertexField::translation(6, Point::new(0.0, 1.0)),
            VertexField::rotation(&p, &c),
        ] {
            let t = f.to_flat();
            assert!(b.dot(&t).abs() < 1e-9 * b.norm() * t.norm());
        }
        for f in [VertexField::translation(6, Point::new(1.0, 0.0)), VertexField::translation(6, Point::new(0.3, -0.8))] {
            let t = f.to_flat();
            assert!((&h.matrix * &t).norm() < 1e-9 * h.matrix.norm() * t.norm());
        }
    }

    #[test]
    fn homogeneity_and_scaling_direction() {
        let p = random_polygon(5, 4, RandomMode::Convex).unwrap();
        let k = Kernel::power(6.0).unwrap();
        let b1 = grad_j(&p, &k, 8).unwrap();
        let b2 = grad_j(&p.scaled(2.0), &k, 8).unwrap();
        assert!((b2 - &b1 * 2f64.powi(9)).norm() < 1e-10 * b1.norm() * 512.0);
        // scaling about the origin: θ_i = A_i, second derivative (k+4)(k+3)J
        let h = hess_j(&p, &k, 8).unwrap();
        let t = VertexField::scaling(&p, &Point::zeros()).to_flat();
        let second = t.dot(&(&h.matrix * &t));
        let jv = energy::j(&p, &k, 8).unwrap().value;
        assert!((second - 90.0 * jv).abs() < 1e-8 * 90.0 * jv);
    }

    #[test]
    fn regular_gradient_is_collinear_with_area_gradient() {
        for n in 4..=8 {
            let p = regular_ngon(n, Normalization::Area(PI), 0.3).unwrap();
            for k in [Kernel::power(6.0).unwrap(), Kernel::truncated_heat(12, 1.0).unwrap()] {
                let b = grad_j(&p, &k, k.default_degree()).unwrap();
                let g = grad_area(&p);
                let tangential = &b - &g * (b.dot(&g) / g.dot(&g));
                assert!(tangential.norm() < 1e-9 * b.norm());
            }
        }
    }

    #[test]
    fn area_derivatives() {
        let sq = Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let g = grad_area(&sq);
        for i in 0..4 {
            let e = Point::new(g[2 * i], g[2 * i + 1]);
            assert!((e.norm() - 0.5f64.sqrt()).abs() < 1e-15);
        }
        let eps = 1e-6;
        let c = sq.coords();
        for v in 0..8 {
            let mut th = vec![0.0; 8];
            th[v] = 1.0;
            let fd = (sq.displaced(&th, eps).signed_area() - sq.displaced(&th, -eps).signed_area()) / (2.0 * eps);
            assert!((fd - g[v]).abs() < 1e-10);
        }
        assert!(g.dot(&VertexField::translation(4, Point::new(0.3, 0.9)).to_flat()).abs() < 1e-15);
        let p = random_polygon(7, 2, RandomMode::StarShaped).unwrap();
        let h = hess_area(&p);
        let ga = grad_area(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let th = DVector::from_vec(random_unit(7, &mut rng));
        // area is quadratic in the coordinates: Taylor is exact up to rounding
        for eps in [1e-2, 1e-1] {
            let lhs = p.displaced(th.as_slice(), eps).signed_area();
            let rhs = p.area() + eps * ga.dot(&th) + 0.5 * eps * eps * th.dot(&(&h * &th));
            assert!((lhs - rhs).abs() < 1e-13);
        }
        assert_eq!(c.len(), 8);
    }

    #[test]
    fn side_derivatives() {
        let reg = regular_ngon(7, Normalization::Area(PI), 0.0).unwrap();
        for k in [Kernel::power(2.0).unwrap(), Kernel::characteristic(0.5).unwrap()] {
            for i in 0..7 {
                assert!(side_rotation_derivative(&reg, i, &k, 4).unwrap().abs() < 1e-9);
            }
        }
        let p = random_polygon(6, 3, RandomMode::Convex).unwrap();
        let k = Kernel::power(2.0).unwrap();
        let b = grad_j(&p, &k, 4).unwrap();
        for i in 0..6 {
            let rot = side_rotation_field(&p, i).unwrap().to_flat();
            let par = side_parallel_field(&p, i).unwrap().to_flat();
            let dr = side_rotation_derivative(&p, i, &k, 4).unwrap();
            let dp = side_parallel_derivative(&p, i, &k, 4).unwrap();
            assert!((b.dot(&rot) - dr).abs() < 1e-6 * dr.abs().max(dp.abs()));
            assert!((b.dot(&par) - dp).abs() < 1e-6 * dp.abs());
            let ga = grad_area(&p);
            let (ar, ap) = side_area_derivatives(&p, i);
            assert!((ga.dot(&rot) - ar).abs() < 1e-12);
            assert!((ga.dot(&par) - ap).abs() < 1e-12);
        }
    }

    #[test]
    fn characteristic_kernel_is_rejected() {
        let p = regular_ngon(5, Normalization::Area(PI), 0.0).unwrap();
        assert!(matches!(grad_j(&p, &Kernel::characteristic(0.5).unwrap(), 4), Err(Error::NotDifferentiable(_))));
        assert!(fd_gradient_check(&p, &Kernel::power(2.0).unwrap(), 4, &[1.0; 4], 1e-5).is_err());
    }
}
