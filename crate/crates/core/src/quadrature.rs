//! Triangle quadrature of prescribed total degree.
//!
//! Rules are collapsed tensor products: Gauss–Legendre in the collapsed
//! direction times Gauss–Jacobi with weight `(1 − s)` in the other, mapped
//! onto the reference triangle by `(r, s) ↦ (r(1 − s), s)`. With
//! `n = ⌈(d + 1)/2⌉` points per axis the rule is exact for every monomial
//! of total degree `≤ d`. Every rule checks this against
//! `∫_T x^a y^b = a! b! / (a + b + 2)!` before it is handed out.

use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, Triangle};

pub const MAX_DEGREE: u32 = 30;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` for the Jacobi polynomial `P_n^{(α,β)}`.
fn jacobi_eval(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (alpha - beta + (alpha + beta + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let ab = alpha + beta;
        let a1 = 2.0 * k * (k + ab) * (2.0 * k + ab - 2.0);
        let a2 = (2.0 * k + ab - 1.0) * (alpha * alpha - beta * beta);
        let a3 = (2.0 * k + ab - 2.0) * (2.0 * k + ab - 1.0) * (2.0 * k + ab);
        let a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * (2.0 * k + ab);
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    // d/dx P_n^{(α,β)} = (n + α + β + 1)/2 · P_{n-1}^{(α+1,β+1)}
    let dp = if n >= 1 {
        let nf = n as f64;
        0.5 * (nf + alpha + beta + 1.0) * jacobi_eval(n - 1, alpha + 1.0, beta + 1.0, x).0
    } else {
        0.0
    };
    (p1, dp)
}

/// Gauss–Jacobi rule for the weight `(1 − x)^α (1 + x)^β`, `α, β` nonnegative
/// integers. Nodes by Newton iteration with deflation against the roots
/// already found.
pub fn gauss_jacobi(n: usize, alpha: u32, beta: u32) -> Result<GaussRule> {
    if n == 0 {
        return Err(invalid("Gauss rule needs at least one node"));
    }
    let (a, b) = (alpha as f64, beta as f64);
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        if k > 0 {
            x = 0.5 * (x + nodes[k - 1]);
        }
        let mut converged = false;
        for _ in 0..200 {
            let s: f64 = nodes.iter().map(|z| 1.0 / (x - z)).sum();
            let (p, dp) = jacobi_eval(n, a, b, x);
            let delta = -p / (dp - s * p);
            x += delta;
            if delta.abs() < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence(format!("Gauss–Jacobi node {k} of {n}")));
        }
        nodes.push(x);
    }
    nodes.sort_by(|p, q| p.total_cmp(q));
    // Γ(n+α+1)Γ(n+β+1) / (Γ(n+α+β+1) n!) for integer α, β.
    let mut c = 1.0;
    for j in 1..=alpha {
        c *= (n + j as usize) as f64;
    }
    for j in 1..=beta {
        c *= (n + j as usize) as f64;
    }
    for j in 1..=(alpha + beta) {
        c /= (n + j as usize) as f64;
    }
    let c = c * 2f64.powi((alpha + beta + 1) as i32);
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, dp) = jacobi_eval(n, a, b, x);
            c / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    Ok(GaussRule { nodes, weights })
}

pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    gauss_jacobi(n, 0, 0)
}

/// Barycentric points and weights normalized to total weight 1.
#[derive(Debug, Clone, Serialize)]
pub struct TriangleRule {
    pub degree: u32,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∫_T x^a y^b` over the reference triangle `(0,0), (1,0), (0,1)`.
pub fn reference_monomial_integral(a: u32, b: u32) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Worst relative error over all monomials of total degree `≤ degree`.
    pub fn exactness_error(&self, degree: u32) -> f64 {
        let mut worst: f64 = 0.0;
        for total in 0..=degree {
            for a in 0..=total {
                let b = total - a;
                let q: f64 = self
                    .points
                    .iter()
                    .zip(&self.weights)
                    .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum::<f64>()
                    * 0.5;
                let exact = reference_monomial_integral(a, b);
                worst = worst.max((q - exact).abs() / exact);
            }
        }
        worst
    }
}

/// Rule exact to total degree `degree ∈ [1, 30]`.
pub fn triangle_rule(degree: u32) -> Result<TriangleRule> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(invalid(format!("quadrature degree must lie in [1, {MAX_DEGREE}], got {degree}")));
    }
    let n = (degree as usize + 2) / 2;
    let legendre = gauss_legendre(n)?;
    let jacobi = gauss_jacobi(n, 1, 0)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (xj, wj) in jacobi.nodes.iter().zip(&jacobi.weights) {
        let s = 0.5 * (1.0 + xj);
        for (xi, wi) in legendre.nodes.iter().zip(&legendre.weights) {
            let r = 0.5 * (1.0 + xi);
            let x = r * (1.0 - s);
            let y = s;
            points.push([1.0 - x - y, x, y]);
            weights.push(wi * wj / 4.0);
        }
    }
    let rule = TriangleRule { degree, points, weights };
    let sum: f64 = rule.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-13 {
        return Err(Error::QuadratureDefect(format!("degree {degree}: weights sum to {sum}")));
    }
    if rule.points.iter().any(|l| l.iter().any(|&c| c < 0.0)) {
        return Err(Error::QuadratureDefect(format!("degree {degree}: point outside the triangle")));
    }
    let err = rule.exactness_error(degree);
    if err > 1e-12 {
        return Err(Error::QuadratureDefect(format!("degree {degree}: monomial error {err:.2e}")));
    }
    Ok(rule)
}

/// Shared, lazily built rule of the given degree.
pub fn cached_rule(degree: u32) -> Result<Arc<TriangleRule>> {
    static CACHE: OnceLock<Mutex<Vec<Option<Arc<TriangleRule>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![None; MAX_DEGREE as usize + 1]));
    if !(1..=MAX_DEGREE).contains(&degree) {
        return triangle_rule(degree).map(Arc::new);
    }
    if let Some(r) = &cache.lock().expect("rule cache poisoned")[degree as usize] {
        return Ok(r.clone());
    }
    let rule = Arc::new(triangle_rule(degree)?);
    cache.lock().expect("rule cache poisoned")[degree as usize] = Some(rule.clone());
    Ok(rule)
}

/// `∫_T f ≈ |T| Σ w_i f(P_i)`.
pub fn integrate_triangle<F: Fn(&Point) -> f64>(f: F, t: &Triangle, rule: &TriangleRule) -> f64 {
    let s: f64 = rule.points.iter().zip(&rule.weights).map(|(l, w)| w * f(&t.at(l))).sum();
    s * t.area()
}

/// `∫_{T₁}∫_{T₂} h ≈ |T₁||T₂| Σ_{i,j} w_i w_j h(P_i, Q_j)`.
pub fn integrate_pair<H: Fn(&Point, &Point) -> f64>(
    h: H,
    t1: &Triangle,
    t2: &Triangle,
    rule: &TriangleRule,
) -> f64 {
    let qs: Vec<Point> = rule.points.iter().map(|l| t2.at(l)).collect();
    let mut total = 0.0;
    for (l, wi) in rule.points.iter().zip(&rule.weights) {
        let p = t1.at(l);
        let inner: f64 = qs.iter().zip(&rule.weights).map(|(q, wj)| wj * h(&p, q)).sum();
        total += wi * inner;
    }
    total * t1.area() * t2.area()
}
