use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ExperimentResult, Figure, Provenance};
use crate::energy::j;
use crate::error::{invalid, Error, Result};
use crate::geometry::{cross, polygon_disc_intersection_area, random_polygon, regular_ngon, Normalization, Point, Polygon, RandomMode};
use crate::io::Disc;
use crate::kernels::Kernel;
use crate::quadrature::gauss_legendre;

const HARDY_SLACK: f64 = 1e-10;
const RIESZ_SLACK: f64 = 1e-9;
const GRID: usize = 8;
const SEARCH_FLOOR: f64 = 1e-10;
const PANEL_POINTS: usize = 16;
const MAX_OCTAGON_DRAWS: usize = 100_000;

/// Radial nonincreasing kernels for the single-integral inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HardyKernel {
    /// Indicator of `B_r`.
    Characteristic(f64),
    /// `max(1 − |x|², 0)`.
    Surrogate,
}

impl HardyKernel {
    /// `∫_P h(x − c) dx`.
    pub fn energy(&self, p: &Polygon, c: &Point) -> f64 {
        match *self {
            HardyKernel::Characteristic(r) => polygon_disc_intersection_area(p, c, r),
            HardyKernel::Surrogate => surrogate_energy(p, c),
        }
    }

    fn label(&self) -> String {
        match self {
            HardyKernel::Characteristic(r) => format!("char:r={r}"),
            HardyKernel::Surrogate => "surrogate".into(),
        }
    }
}

/// `∫_P max(1 − |x − c|², 0) dx = ∫₀¹ 2ρ |P ∩ B_ρ(c)| dρ`, with panel breaks
/// at the radii where the disc meets a vertex or touches an edge line.
pub fn surrogate_energy(p: &Polygon, c: &Point) -> f64 {
    let mut breaks = vec![0.0, 1.0];
    for (a, b) in p.edges() {
        breaks.push((a - c).norm());
        let e = b - a;
        let s = (c - a).dot(&e) / e.norm_squared();
        if (0.0..=1.0).contains(&s) {
            breaks.push((a + e * s - c).norm());
        }
    }
    breaks.retain(|x| (0.0..=1.0).contains(x));
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let gl = gauss_legendre(PANEL_POINTS).expect("fixed rule");
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (lo, len) = (w[0], w[1] - w[0]);
        // smoothstep substitution removes the square-root behaviour at both breaks
        for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
            let s = 0.5 * (1.0 + x);
            let rho = lo + len * s * s * (3.0 - 2.0 * s);
            let jac = 0.5 * len * 6.0 * s * (1.0 - s);
            total += wt * jac * 2.0 * rho * polygon_disc_intersection_area(p, c, rho);
        }
    }
    total
}

/// Kernel centre maximizing `∫_P h(x − c) dx`: best of an 8×8 grid over the
/// bounding box, then compass search.
fn best_center(p: &Polygon, kernel: &HardyKernel) -> (Point, f64) {
    let (mut lo, mut hi) = (p.vertex(0), p.vertex(0));
    for v in p.vertices() {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let cell = (hi - lo) / GRID as f64;
    let mut best = (p.centroid(), kernel.energy(p, &p.centroid()));
    for i in 0..GRID {
        for k in 0..GRID {
            let c = lo + Point::new((i as f64 + 0.5) * cell.x, (k as f64 + 0.5) * cell.y);
            let v = kernel.energy(p, &c);
            if v > best.1 {
                best = (c, v);
            }
        }
    }
    let mut step = cell.max();
    let floor = SEARCH_FLOOR * (hi - lo).max();
    let dirs = [Point::new(1.0, 0.0), Point::new(-1.0, 0.0), Point::new(0.0, 1.0), Point::new(0.0, -1.0)];
    while step > floor {
        let mut moved = false;
        for d in &dirs {
            let c = best.0 + d * step;
            let v = kernel.energy(p, &c);
            if v > best.1 {
                best = (c, v);
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

/// Outcome of an inequality over a polygon corpus.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusCheck {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `reference − value` (Hardy) or `value − reference` (Riesz).
    pub worst_margin: f64,
    pub worst_index: usize,
}

fn summarize(margins: &[f64], slack: f64) -> CorpusCheck {
    let (worst_index, worst_margin) =
        margins.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((0, f64::INFINITY));
    CorpusCheck { samples: margins.len(), violations: margins.iter().filter(|m| **m < -slack).count(), worst_margin, worst_index }
}

fn reference_ngon(n: usize) -> Result<Polygon> {
    regular_ngon(n, Normalization::Area(PI), 0.0)
}

/// `max_c E(P, c) ≤ E(Ω*_N, 0) + 1e−10` for every polygon.
pub fn hardy_corpus_check(polys: &[Polygon], kernel: HardyKernel) -> Result<CorpusCheck> {
    let n = polys.first().map(Polygon::len).ok_or_else(|| invalid("empty corpus"))?;
    if polys.iter().any(|p| p.len() != n) {
        return Err(invalid("corpus mixes vertex counts"));
    }
    let star = kernel.energy(&reference_ngon(n)?, &Point::zeros());
    let margins: Vec<f64> = polys.par_iter().map(|p| star - best_center(p, &kernel).1).collect();
    Ok(summarize(&margins, HARDY_SLACK))
}

/// `J_k(P) ≥ J_k(Ω*_N) − 1e−9` for every polygon.
pub fn riesz_corpus_check(polys: &[Polygon], k: u32) -> Result<CorpusCheck> {
    let n = polys.first().map(Polygon::len).ok_or_else(|| invalid("empty corpus"))?;
    let kernel = Kernel::power(k as f64)?;
    let degree = kernel.default_degree();
    let star = j(&reference_ngon(n)?, &kernel, degree)?.value;
    let margins: Vec<f64> = polys.par_iter().map(|p| Ok(j(p, &kernel, degree)?.value - star)).collect::<Result<_>>()?;
    Ok(summarize(&margins, RIESZ_SLACK))
}

/// Star-shaped random area-π `n`-gons, deterministic in `seed`.
pub fn corpus(n: usize, samples: usize, seed: u64) -> Result<Vec<Polygon>> {
    (0..samples as u64)
        .map(|i| random_polygon(n, seed.wrapping_mul(1_000_003).wrapping_add((n as u64) << 24).wrapping_add(i), RandomMode::StarShaped))
        .collect()
}

fn check_row(name: &str, c: &CorpusCheck, provenance: Provenance) -> ExperimentResult {
    ExperimentResult::property(name, "violations", c.violations as f64, c.violations == 0, provenance)
        .with("samples", c.samples)
        .with("worst_margin", c.worst_margin)
        .with("worst_index", c.worst_index)
}

pub fn exp_hardy(ns: &[usize], radii: &[f64], samples: usize, seed: u64) -> Result<(Vec<ExperimentResult>, Vec<Figure>)> {
    let mut out = Vec::new();
    let mut figures = Vec::new();
    for &n in ns {
        let polys = corpus(n, samples, seed)?;
        let mut kernels: Vec<HardyKernel> = radii.iter().map(|&r| HardyKernel::Characteristic(r)).collect();
        kernels.push(HardyKernel::Surrogate);
        for kernel in kernels {
            let c = hardy_corpus_check(&polys, kernel)?;
            out.push(check_row("hardy", &c, Provenance::Published).with("n", n).with("kernel", kernel.label()));
            if n == 5 && kernel == HardyKernel::Characteristic(0.6) {
                let worst = &polys[c.worst_index];
                let (center, _) = best_center(worst, &kernel);
                figures.push(Figure {
                    name: "hardy_n5_r0.6_tightest".into(),
                    polygons: vec![worst.translated(&-center), reference_ngon(5)?],
                    disc: Some(Disc { center: Point::zeros(), radius: 0.6 }),
                });
            }
        }
    }

    for kernel in [HardyKernel::Characteristic(0.6), HardyKernel::Surrogate] {
        let star = reference_ngon(5)?;
        let a = kernel.energy(&star, &Point::zeros());
        let b = kernel.energy(&star.rotated(0.7, &Point::zeros()), &Point::zeros());
        out.push(ExperimentResult::compare("hardy", "rotation_invariance", b - a, 0.0, 1e-12, Provenance::Analytic).with("kernel", kernel.label()));
    }

    let w = (100.0 * PI).sqrt();
    let h = w / 100.0;
    let thin = Polygon::from_xy(&[[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])?;
    let kernel = HardyKernel::Characteristic(1.0);
    let star = kernel.energy(&reference_ngon(4)?, &Point::zeros());
    let margin = star - best_center(&thin, &kernel).1;
    out.push(
        ExperimentResult::property("hardy", "thin_rectangle_margin", margin, margin > 0.5 * star, Provenance::Derived)
            .with("aspect", 100.0)
            .with("kernel", kernel.label()),
    );
    Ok((out, figures))
}

pub fn exp_riesz_power(ns: &[usize], ks: &[u32], samples: usize, seed: u64) -> Result<Vec<ExperimentResult>> {
    let mut out = Vec::new();
    for &n in ns {
        let polys = corpus(n, samples, seed)?;
        for &k in ks {
            let c = riesz_corpus_check(&polys, k)?;
            out.push(check_row("riesz", &c, Provenance::Published).with("n", n).with("k", k));
        }
    }
    for &k in ks {
        let kernel = Kernel::power(k as f64)?;
        let star = reference_ngon(7)?;
        let a = j(&star, &kernel, kernel.default_degree())?.value;
        let moved = star.rotated(0.3, &Point::zeros()).translated(&Point::new(0.7, -0.2));
        let b = j(&moved, &kernel, kernel.default_degree())?.value;
        out.push(ExperimentResult::compare("riesz", "rigid_motion_equality", b - a, 0.0, 1e-9, Provenance::Analytic).with("n", 7).with("k", k));
    }
    Ok(out)
}

/// `g(t) = J_k(diag(σ^t, σ^{−t}) Ω*_N)`.
fn g(star: &Polygon, kernel: &Kernel, sigma: f64, t: f64) -> Result<f64> {
    let s = sigma.powf(t);
    let m = Matrix2::new(s, 0.0, 0.0, 1.0 / s);
    Ok(j(&star.linear_image(&m)?, kernel, kernel.default_degree())?.value)
}

pub fn exp_linear_image_monotonicity(ns: &[usize], ks: &[u32], sigma: f64, points: usize) -> Result<Vec<ExperimentResult>> {
    if !(sigma > 0.0) || sigma == 1.0 || points < 3 {
        return Err(invalid("need sigma > 0, sigma != 1 and at least 3 grid points"));
    }
    const NAME: &str = "linear-image";
    const FD_STEP: f64 = 1e-4;
    let mut out = Vec::new();
    for &n in ns {
        let star = reference_ngon(n)?;
        for &k in ks {
            if k < 2 {
                return Err(invalid(format!("k must be at least 2, got {k}")));
            }
            let kernel = Kernel::power(k as f64)?;
            let ts: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
            let vals: Vec<f64> = ts.iter().map(|&t| g(&star, &kernel, sigma, t)).collect::<Result<_>>()?;
            let worst_step = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            out.push(
                ExperimentResult::property(NAME, "nondecreasing", worst_step, worst_step >= 0.0, Provenance::Published)
                    .with("n", n)
                    .with("k", k)
                    .with("sigma", sigma)
                    .with("points", points),
            );
            let mid = g(&star, &kernel, sigma, 0.5)?;
            let strict = vals[points - 1] > mid && mid > vals[0];
            out.push(
                ExperimentResult::property(NAME, "strict_increase", vals[points - 1] - vals[0], strict, Provenance::Derived)
                    .with("n", n)
                    .with("k", k),
            );
            let d = (g(&star, &kernel, sigma, FD_STEP)? - g(&star, &kernel, sigma, -FD_STEP)?) / (2.0 * FD_STEP);
            let rel = d.abs() / vals[0];
            out.push(
                ExperimentResult::property(NAME, "fd_derivative_at_0", rel, rel < 1e-6, Provenance::Published)
                    .with("n", n)
                    .with("k", k)
                    .with("step", FD_STEP),
            );
            let flat: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&t| g(&star, &kernel, 1.0, t)).collect::<Result<_>>()?;
            let spread = flat.iter().map(|v| (v - flat[0]).abs()).fold(0.0, f64::max) / flat[0];
            out.push(ExperimentResult::compare(NAME, "sigma_one_constant", spread, 0.0, 1e-13, Provenance::Analytic).with("n", n).with("k", k));
        }
    }
    Ok(out)
}

fn is_convex(p: &Polygon) -> bool {
    let n = p.len();
    (0..n).all(|i| {
        let (a, b) = (p.vertex(i), p.vertex((i + 1) % n));
        let c = p.vertex((i + 2) % n);
        cross(&(b - a), &(c - b)) > 0.0
    })
}

/// Octagon symmetric about the x₁-axis from its four upper vertices, scaled
/// to area π about its centroid. Fails unless the result is convex.
pub fn axisymmetric_octagon(upper: &[Point; 4]) -> Result<Polygon> {
    let mut up = upper.to_vec();
    if up.iter().any(|v| !(v.y > 0.0)) {
        return Err(invalid("upper vertices need positive x2"));
    }
    up.sort_by(|a, b| a.y.atan2(a.x).total_cmp(&b.y.atan2(b.x)));
    let mut vs = up.clone();
    vs.extend(up.iter().rev().map(|v| Point::new(v.x, -v.y)));
    let p = Polygon::new(vs)?;
    if !is_convex(&p) {
        return Err(invalid("octagon is not convex"));
    }
    Ok(p.with_area(PI))
}

fn random_octagon(rng: &mut ChaCha8Rng) -> Result<Polygon> {
    for _ in 0..MAX_OCTAGON_DRAWS {
        let mut upper = [Point::zeros(); 4];
        for v in &mut upper {
            let t = rng.gen_range(0.0..PI);
            let r = rng.gen_range(0.5..1.5);
            *v = Point::new(r * t.cos(), r * t.sin());
        }
        if let Ok(p) = axisymmetric_octagon(&upper) {
            return Ok(p);
        }
    }
    Err(Error::NoConvergence("convex axisymmetric octagon sampling".into()))
}

pub fn exp_axisym_octagon(samples: usize, seed: u64) -> Result<(Vec<ExperimentResult>, Vec<Figure>)> {
    const NAME: &str = "axisym-octagon";
    let kernel = Kernel::power(6.0)?;
    let degree = kernel.default_degree();
    let star = regular_ngon(8, Normalization::Area(PI), PI / 8.0)?;
    let j_star = j(&star, &kernel, degree)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<Polygon> = (0..samples).map(|_| random_octagon(&mut rng)).collect::<Result<_>>()?;
    let margins: Vec<f64> = polys.par_iter().map(|p| Ok(j(p, &kernel, degree)?.value - j_star)).collect::<Result<_>>()?;
    let c = summarize(&margins, RIESZ_SLACK);
    let mut out = vec![check_row(NAME, &c, Provenance::Published).with("k", 6)];

    let upper: Vec<Point> = star.vertices().iter().filter(|v| v.y > 0.0).copied().collect();
    let rebuilt = axisymmetric_octagon(&[upper[0], upper[1], upper[2], upper[3]])?;
    let eq = j(&rebuilt, &kernel, degree)?.value - j_star;
    out.push(ExperimentResult::compare(NAME, "regular_equality", eq, 0.0, 1e-9, Provenance::Analytic));

    let stretched = star.linear_image(&Matrix2::new(1.5, 0.0, 0.0, 1.0 / 1.5))?;
    let margin = j(&stretched, &kernel, degree)?.value - j_star;
    out.push(ExperimentResult::property(NAME, "stretched_margin", margin, margin > 1e-3, Provenance::Derived).with("stretch", 1.5));

    let figures = vec![Figure { name: "tightest_octagon".into(), polygons: vec![polys[c.worst_index].clone(), star], disc: None }];
    Ok((out, figures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_matches_closed_form_on_large_square() {
        // the unit disc lies inside the square, so E = ∫_B (1 − |x|²) = π/2
        let sq = Polygon::from_xy(&[[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]]).unwrap();
        assert!((surrogate_energy(&sq, &Point::zeros()) - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn surrogate_of_small_square() {
        // ∫_{[-a,a]²} 1 − x² − y² = 4a² − 8a⁴/3 when the square fits in the disc
        let a = 0.5;
        let sq = Polygon::from_xy(&[[-a, -a], [a, -a], [a, a], [-a, a]]).unwrap();
        let exact = 4.0 * a * a - 8.0 * a.powi(4) / 3.0;
        assert!((surrogate_energy(&sq, &Point::zeros()) - exact).abs() < 1e-13);
    }

    #[test]
    fn search_recenters_shifted_polygon() {
        let star = reference_ngon(6).unwrap();
        let kernel = HardyKernel::Characteristic(0.6);
        let e0 = kernel.energy(&star, &Point::zeros());
        let (_, best) = best_center(&star.translated(&Point::new(3.0, -1.0)), &kernel);
        assert!((best - e0).abs() < 1e-9, "{best} {e0}");
    }

    #[test]
    fn octagon_rejects_nonconvex() {
        let upper = [Point::new(1.0, 0.2), Point::new(0.1, 0.1), Point::new(-0.2, 1.0), Point::new(-1.0, 0.3)];
        assert!(axisymmetric_octagon(&upper).is_err());
    }

    #[test]
    fn small_corpus_has_no_riesz_violation() {
        let polys = corpus(5, 10, 3).unwrap();
        assert_eq!(riesz_corpus_check(&polys, 2).unwrap().violations, 0);
    }
}
