//! Area-constrained optimization of polygon energies.

use std::f64::consts::PI;

use nalgebra::{Complex, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derivatives::{grad_area, grad_j};
use crate::energy::{self, perimeter_r_with_tolerance};
use crate::error::{invalid, Error, Result};
use crate::geometry::{cross, random_polygon, regular_ngon, Normalization, Point, Polygon, RandomMode};
use crate::kernels::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Objective {
    Energy { kernel: Kernel, direction: Direction },
    PerimeterR { r: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationConfig {
    pub objective: Objective,
    pub area_target: f64,
    pub max_iters: usize,
    /// Tangential gradient norm relative to the full gradient norm.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Quadrature degree; the kernel default when `None`.
    pub degree: Option<u32>,
    pub seed: u64,
    /// Relative accuracy of the `P_r` evaluations in the derivative-free path.
    pub pr_tolerance: f64,
}

impl OptimizationConfig {
    pub fn new(objective: Objective) -> Self {
        OptimizationConfig {
            objective,
            area_target: PI,
            max_iters: 20_000,
            gradient_tolerance: 1e-7,
            initial_step: 1e-3,
            degree: None,
            seed: 0,
            pr_tolerance: 1e-9,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.area_target > 0.0) || !(self.gradient_tolerance > 0.0) || !(self.initial_step > 0.0) || !(self.pr_tolerance > 0.0) {
            return Err(invalid("area target, tolerances and step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub violation: f64,
    /// Tangential gradient norm (gradient path) or pattern step (derivative-free path).
    pub gradient_norm: f64,
    /// Row produced by a vertex relocation rather than a line-search step.
    pub remesh: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationTrace {
    pub rows: Vec<TraceRow>,
    pub final_polygon: Polygon,
    pub final_objective: f64,
    pub final_violation: f64,
    pub converged: bool,
    pub shape_distance_to_regular: f64,
    /// Vertex relocations forced by blocked steps.
    pub remeshes: usize,
}

impl OptimizationTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,objective,violation,gradient_norm,remesh\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.17e},{:.6e},{:.6e},{}\n", r.iteration, r.objective, r.violation, r.gradient_norm, r.remesh));
        }
        s
    }
}

const MAX_REJECTIONS: usize = 20;
/// Remeshing budget per vertex.
const MAX_REMESHES: usize = 4;

enum Step {
    Accepted(Polygon, Eval),
    Stalled,
    Blocked,
}
const ARMIJO: f64 = 1e-4;
const FEASIBILITY: f64 = 1e-9;

struct Problem<'a> {
    kernel: Kernel,
    sign: f64,
    degree: u32,
    target: f64,
    cfg: &'a OptimizationConfig,
}

struct Eval {
    f: f64,
    grad_f: DVector<f64>,
    c: f64,
    grad_c: DVector<f64>,
}

impl Problem<'_> {
    fn eval(&self, p: &Polygon) -> Result<Eval> {
        let j = energy::j(p, &self.kernel, self.degree)?.value;
        let g = grad_j(p, &self.kernel, self.degree)?;
        Ok(Eval { f: self.sign * j, grad_f: g * self.sign, c: p.area() - self.target, grad_c: grad_area(p) })
    }

    fn tangential_ratio(e: &Eval) -> f64 {
        let gc2 = e.grad_c.dot(&e.grad_c);
        let t = &e.grad_f - &e.grad_c * (e.grad_f.dot(&e.grad_c) / gc2);
        t.norm() / e.grad_f.norm().max(f64::MIN_POSITIVE)
    }
}

fn merit(e: &Eval, lambda: f64, mu: f64) -> f64 {
    e.f - lambda * e.c + 0.5 * mu * e.c * e.c
}

fn merit_grad(e: &Eval, lambda: f64, mu: f64) -> DVector<f64> {
    &e.grad_f + &e.grad_c * (mu * e.c - lambda)
}

/// Newton iteration on the area along the area gradient.
fn restore_area(p: &Polygon, target: f64) -> Option<Polygon> {
    let mut q = p.clone();
    for _ in 0..8 {
        let c = q.area() - target;
        if c.abs() <= 1e-13 * target {
            return Some(q);
        }
        let gc = grad_area(&q);
        q = q.displaced(gc.as_slice(), -c / gc.dot(&gc));
    }
    ((q.area() - target).abs() <= FEASIBILITY).then_some(q)
}

/// Drops the vertex spanning the smallest triangle with its neighbours and
/// reinserts it at the midpoint of the longest remaining edge. Used when
/// simplicity blocks every step, typically at a spike or a collapsed edge.
fn remesh(p: &Polygon, target: f64) -> Option<Polygon> {
    let n = p.len();
    let tri_area = |i: usize| cross(&(p.vertex(i) - p.vertex(i + n - 1)), &(p.vertex(i + 1) - p.vertex(i))).abs();
    let drop = (0..n).min_by(|&a, &b| tri_area(a).total_cmp(&tri_area(b)))?;
    let mut v: Vec<Point> = (1..n).map(|k| p.vertex(drop + k)).collect();
    let m = v.len();
    let longest = (0..m).max_by(|&a, &b| (v[(a + 1) % m] - v[a]).norm().total_cmp(&(v[(b + 1) % m] - v[b]).norm()))?;
    let mid = (v[longest] + v[(longest + 1) % m]) * 0.5;
    v.insert(longest + 1, mid);
    let q = restore_area(&Polygon::new_unchecked(v), target)?;
    admissible(&q).then_some(q)
}

fn admissible(p: &Polygon) -> bool {
    p.validate().is_ok() && p.fan_node().is_ok()
}

/// Augmented-Lagrangian minimization (or maximization) of `J` at fixed area.
///
/// Inner iterations step along the component of the merit gradient tangent
/// to the area level set, with a Barzilai–Borwein trial length and Armijo
/// backtracking, and then return to the target area by Newton steps along
/// the area gradient. Steps producing a non-simple polygon are halved; when
/// 20 halvings in a row fail, the vertex spanning the smallest corner
/// triangle is moved to the midpoint of the longest edge. The final iterate
/// is rescaled about its centroid to the exact target area.
pub fn optimize(p0: &Polygon, cfg: &OptimizationConfig) -> Result<OptimizationTrace> {
    cfg.validate()?;
    let (kernel, direction) = match cfg.objective {
        Objective::Energy { kernel, direction } => (kernel, direction),
        Objective::PerimeterR { r } => return optimize_pr_derivative_free(p0, r, cfg),
    };
    if !kernel.capabilities().has_gradient {
        return Err(Error::NotDifferentiable(kernel.to_string()));
    }
    p0.validate()?;
    let problem = Problem {
        kernel,
        sign: if direction == Direction::Min { 1.0 } else { -1.0 },
        degree: cfg.degree.unwrap_or_else(|| kernel.default_degree()),
        target: cfg.area_target,
        cfg,
    };
    let mut p = p0.clone();
    let mut e = problem.eval(&p)?;
    let mut rows = Vec::new();
    let mut lambda = e.grad_f.dot(&e.grad_c) / e.grad_c.dot(&e.grad_c);
    let mut mu = 10.0;
    let mut iteration = 0;
    let mut converged = false;
    let mut remeshes = 0;
    let push = |rows: &mut Vec<TraceRow>, it: usize, e: &Eval, remesh: bool| {
        rows.push(TraceRow {
            iteration: it,
            objective: problem.sign * e.f,
            violation: e.c.abs(),
            gradient_norm: Problem::tangential_ratio(e) * e.grad_f.norm(),
            remesh,
        })
    };
    push(&mut rows, 0, &e, false);
    let mut step = cfg.initial_step;
    'outer: for _ in 0..60 {
        if Problem::tangential_ratio(&e) <= cfg.gradient_tolerance && e.c.abs() <= FEASIBILITY {
            converged = true;
            break;
        }
        let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
        let mut stalled = 0;
        loop {
            if iteration >= problem.cfg.max_iters {
                break 'outer;
            }
            let g = merit_grad(&e, lambda, mu);
            let gc2 = e.grad_c.dot(&e.grad_c);
            let tangential = &g - &e.grad_c * (g.dot(&e.grad_c) / gc2);
            let x = DVector::from_vec(p.coords());
            if let Some((px, pt)) = &prev {
                let s = &x - px;
                let y = &tangential - pt;
                let sy = s.dot(&y);
                if sy > 0.0 {
                    step = s.dot(&s) / sy;
                }
            }
            let m0 = merit(&e, lambda, mu);
            let tt = tangential.dot(&tangential);
            let mut rejections = 0;
            let max_move = (0..tangential.len() / 2)
                .map(|i| tangential[2 * i].hypot(tangential[2 * i + 1]))
                .fold(0.0, f64::max);
            let min_edge = p.edges().map(|(a, b)| (b - a).norm()).fold(f64::INFINITY, f64::min);
            let mut trial = step.min(0.25 * min_edge / max_move.max(f64::MIN_POSITIVE));
            let first_trial = trial;
            let accepted = loop {
                let cand = restore_area(&p.displaced(tangential.as_slice(), -trial), problem.target);
                if !cand.as_ref().is_some_and(admissible) {
                    rejections += 1;
                    if rejections >= MAX_REJECTIONS {
                        break Step::Blocked;
                    }
                    trial *= 0.5;
                    continue;
                }
                let cand = cand.expect("checked above");
                let ce = problem.eval(&cand)?;
                let m = merit(&ce, lambda, mu);
                if m < m0 && m <= m0 - ARMIJO * trial * tt {
                    break Step::Accepted(cand, ce);
                }
                trial *= 0.5;
                if trial < 1e-12 * first_trial {
                    break Step::Stalled;
                }
            };
            iteration += 1;
            match accepted {
                Step::Blocked => {
                    let q = (remeshes < MAX_REMESHES * p.len())
                        .then(|| remesh(&p, problem.target))
                        .flatten()
                        .ok_or(Error::DegeneratingIterate(rejections, iteration))?;
                    remeshes += 1;
                    e = problem.eval(&q)?;
                    p = q;
                    prev = None;
                    step = cfg.initial_step;
                    push(&mut rows, iteration, &e, true);
                }
                Step::Accepted(cand, ce) => {
                    prev = Some((x, tangential));
                    p = cand;
                    e = ce;
                    step = trial;
                    stalled = 0;
                    push(&mut rows, iteration, &e, false);
                }
                Step::Stalled => {
                    stalled += 1;
                    prev = None;
                    step = cfg.initial_step;
                    if stalled >= 2 {
                        break;
                    }
                }
            }
            if Problem::tangential_ratio(&e) <= cfg.gradient_tolerance {
                break;
            }
        }
        lambda -= mu * e.c;
        mu = (mu * 10.0).min(1e6);
    }
    let rescaled = p.with_area(cfg.area_target);
    let final_eval = problem.eval(&rescaled)?;
    if !converged {
        converged = Problem::tangential_ratio(&final_eval) <= cfg.gradient_tolerance;
    }
    let regular = regular_ngon(rescaled.len(), Normalization::Area(cfg.area_target), 0.0)?;
    Ok(OptimizationTrace {
        rows,
        final_objective: problem.sign * final_eval.f,
        final_violation: final_eval.c.abs(),
        converged,
        shape_distance_to_regular: shape_distance(&rescaled, &regular)?,
        final_polygon: rescaled,
        remeshes,
    })
}

/// Coordinate pattern search on `P_r` with exact evaluations; every trial is
/// rescaled about its centroid to the target area.
pub fn optimize_pr_derivative_free(p0: &Polygon, r: f64, cfg: &OptimizationConfig) -> Result<OptimizationTrace> {
    cfg.validate()?;
    p0.validate()?;
    let eval = |p: &Polygon| perimeter_r_with_tolerance(p, r, cfg.pr_tolerance);
    let mut p = p0.with_area(cfg.area_target);
    let mut f = eval(&p)?;
    let noise = cfg.pr_tolerance * cfg.area_target * (PI * r * r).max(1.0);
    let mut h = 0.1;
    let mut rows = vec![TraceRow { iteration: 0, objective: f, violation: 0.0, gradient_norm: h, remesh: false }];
    let mut evaluations = 0;
    let dims = 2 * p.len();
    while h >= 1e-6 && evaluations < cfg.max_iters {
        let mut improved = false;
        for i in 0..dims {
            for sign in [1.0, -1.0] {
                let mut theta = vec![0.0; dims];
                theta[i] = sign;
                let cand = p.displaced(&theta, h).with_area(cfg.area_target);
                if !admissible(&cand) {
                    continue;
                }
                evaluations += 1;
                let fc = eval(&cand)?;
                if fc < f - 2.0 * noise {
                    p = cand;
                    f = fc;
                    improved = true;
                    rows.push(TraceRow { iteration: evaluations, objective: f, violation: (p.area() - cfg.area_target).abs(), gradient_norm: h, remesh: false });
                    break;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    let regular = regular_ngon(p.len(), Normalization::Area(cfg.area_target), 0.0)?;
    Ok(OptimizationTrace {
        rows,
        final_objective: f,
        final_violation: (p.area() - cfg.area_target).abs(),
        converged: h < 1e-6,
        shape_distance_to_regular: shape_distance(&p, &regular)?,
        final_polygon: p,
        remeshes: 0,
    })
}

/// Independent restarts from deterministic random polygons.
pub fn optimize_restarts(n: usize, cfg: &OptimizationConfig, seeds: &[u64], mode: RandomMode) -> Result<Vec<OptimizationTrace>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let p0 = random_polygon(n, seed, mode)?;
            optimize(&p0, &OptimizationConfig { seed, ..cfg.clone() })
        })
        .collect()
}

fn normalized_complex(p: &Polygon) -> Vec<Complex<f64>> {
    let q = p.with_area(PI).centered();
    q.vertices().iter().map(|v| Complex::new(v.x, v.y)).collect()
}

/// RMS vertex distance after area-π normalization and centring, minimized
/// over cyclic relabelings, reflection and rotation.
pub fn shape_distance(p: &Polygon, q: &Polygon) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::VertexCountMismatch(p.len(), q.len()));
    }
    let n = p.len();
    let z = normalized_complex(p);
    let w = normalized_complex(q);
    // reflection across the real axis, order reversed to stay counterclockwise
    let w_ref: Vec<Complex<f64>> = w.iter().rev().map(|c| c.conj()).collect();
    let mut best = f64::INFINITY;
    for cand in [&w, &w_ref] {
        for shift in 0..n {
            let shifted = |i: usize| cand[(i + shift) % n];
            let corr: Complex<f64> = (0..n).map(|i| z[i] * shifted(i).conj()).sum();
            let phase = if corr.norm() > 0.0 { corr / corr.norm() } else { Complex::new(1.0, 0.0) };
            let d2 = (0..n).map(|i| (z[i] - phase * shifted(i)).norm_sqr()).sum::<f64>() / n as f64;
            best = best.min(d2);
        }
    }
    Ok(best.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::graham_hexagon;

    #[test]
    fn shape_distance_invariances() {
        let p = random_polygon(6, 3, RandomMode::StarShaped).unwrap();
        let rot = p.rotated(37f64.to_radians(), &Point::new(0.4, -0.2)).translated(&Point::new(2.0, 1.0)).scaled(1.7);
        assert!(shape_distance(&p, &rot).unwrap() < 1e-12);
        assert!(shape_distance(&p, &p.relabeled(4)).unwrap() < 1e-12);
        let tri = Polygon::from_xy(&[[0.0, 0.0], [3.0, 0.2], [1.0, 2.0]]).unwrap();
        assert!(shape_distance(&tri, &tri.reflected()).unwrap() < 1e-12);
        let reg = regular_ngon(6, Normalization::Area(PI), 0.0).unwrap();
        let g = graham_hexagon(Normalization::Area(PI)).unwrap();
        assert!(shape_distance(&reg, &g).unwrap() > 0.05);
        assert!(matches!(shape_distance(&reg, &tri), Err(Error::VertexCountMismatch(6, 3))));
    }

    #[test]
    fn regular_start_is_stationary() {
        let reg = regular_ngon(6, Normalization::Area(PI), 0.2).unwrap();
        let cfg = OptimizationConfig::new(Objective::Energy { kernel: Kernel::power(6.0).unwrap(), direction: Direction::Min });
        let t = optimize(&reg, &cfg).unwrap();
        assert!(t.converged);
        assert_eq!(t.rows.len(), 1);
        assert!(t.shape_distance_to_regular < 1e-12);
    }

    #[test]
    fn converges_to_regular_pentagon() {
        let cfg = OptimizationConfig::new(Objective::Energy { kernel: Kernel::power(6.0).unwrap(), direction: Direction::Min });
        let p0 = random_polygon(5, 1, RandomMode::StarShaped).unwrap();
        let t = optimize(&p0, &cfg).unwrap();
        assert!(t.final_violation <= 1e-9);
        assert!(t.shape_distance_to_regular < 1e-4, "{}", t.shape_distance_to_regular);
        // same configuration, same trace
        let again = optimize(&p0, &cfg).unwrap();
        assert_eq!(t.rows.len(), again.rows.len());
        assert_eq!(t.final_objective, again.final_objective);
    }

    #[test]
    fn remesh_moves_spike_tip_to_longest_edge() {
        // vertex 3 is the tip of a thin spike on the right side
        let p = Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.49], [2.0, 0.5], [1.0, 0.51], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let q = remesh(&p, p.area()).unwrap();
        assert_eq!(q.len(), 7);
        assert!((q.area() - p.area()).abs() < 1e-12);
        assert!(!q.vertices().iter().any(|v| (v.x - 2.0).abs() < 1e-6));
    }

    #[test]
    fn rejects_characteristic_in_gradient_mode() {
        let p = regular_ngon(5, Normalization::Area(PI), 0.0).unwrap();
        let cfg = OptimizationConfig::new(Objective::Energy { kernel: Kernel::characteristic(0.5).unwrap(), direction: Direction::Min });
        assert!(matches!(optimize(&p, &cfg), Err(Error::NotDifferentiable(_))));
    }

    #[test]
    fn pattern_search_at_global_minimum_stays() {
        let p = regular_ngon(5, Normalization::Area(PI), 0.0).unwrap();
        let r = p.diameter() + 0.1;
        let cfg = OptimizationConfig::new(Objective::PerimeterR { r });
        let t = optimize(&p, &cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!((t.final_objective - PI * PI * (r * r - 1.0)).abs() < 1e-9);
    }
}
