//! Symmetric eigenproblems and constrained second-order analysis.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::derivatives::{self, VertexField};
use crate::energy;
use crate::error::{invalid, Error, Result};
use crate::geometry::{regular_ngon, Normalization, Point, Polygon};
use crate::kernels::Kernel;

pub const DEFAULT_ZERO_TOL: f64 = 1e-7;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. The input is
/// symmetrized first; it is rejected if it is far from symmetric.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<Eigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(invalid("eigensolver needs a square matrix"));
    }
    let scale = m.norm();
    if !scale.is_finite() {
        return Err(Error::NoConvergence("Jacobi eigensolver (non-finite input)".into()));
    }
    if (m - m.transpose()).norm() > 1e-8 * scale {
        return Err(invalid("matrix is not symmetric"));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok(Eigen { values: Vec::new(), vectors: v });
    }
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum();
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi eigensolver after {MAX_SWEEPS} sweeps")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Orthonormal basis (as columns) of the complement of `g`, from the
/// Householder reflector that maps `g` to a multiple of `e₀`.
pub fn orthogonal_complement(g: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = g.len();
    let norm = g.norm();
    if !(norm > 0.0) {
        return Err(invalid("constraint gradient vanishes"));
    }
    let mut v = g / norm;
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv = v.dot(&v);
    let h = DMatrix::<f64>::identity(n, n) - &v * v.transpose() * (2.0 / vv);
    Ok(h.columns(1, n - 1).into_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenClass {
    Zero,
    Positive,
    Negative,
}

/// Squared projections of a zero mode on the generator fields.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroModeOverlap {
    pub eigenvalue: f64,
    pub translation_x: f64,
    pub translation_y: f64,
    pub rotation: f64,
    pub scaling: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub classes: Vec<EigenClass>,
    pub zero_count: usize,
    pub positive_count: usize,
    pub negative_count: usize,
    pub zero_mode_overlaps: Vec<ZeroModeOverlap>,
    pub zero_tolerance: f64,
    pub dimension: usize,
    pub constrained: bool,
}

impl SpectrumReport {
    /// Smallest nonzero `|λ|`.
    pub fn smallest_nonzero(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.classes)
            .filter(|(_, c)| **c != EigenClass::Zero)
            .map(|(v, _)| v.abs())
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn largest_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// One row per eigenvalue: `index,eigenvalue,class`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,class\n");
        for (i, (v, c)) in self.eigenvalues.iter().zip(&self.classes).enumerate() {
            let tag = match c {
                EigenClass::Zero => "zero",
                EigenClass::Positive => "positive",
                EigenClass::Negative => "negative",
            };
            s.push_str(&format!("{i},{v:.17e},{tag}\n"));
        }
        s
    }
}

fn generator_fields(p: &Polygon) -> [DVector<f64>; 4] {
    let n = p.len();
    let c = p.centroid();
    [
        VertexField::translation(n, Point::new(1.0, 0.0)).to_flat(),
        VertexField::translation(n, Point::new(0.0, 1.0)).to_flat(),
        VertexField::rotation(p, &c).to_flat(),
        VertexField::scaling(p, &c).to_flat(),
    ]
}

fn report(
    eig: &Eigen,
    basis: Option<&DMatrix<f64>>,
    p: &Polygon,
    zero_tol_factor: f64,
) -> SpectrumReport {
    let maxabs = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = zero_tol_factor * maxabs;
    let classes: Vec<EigenClass> = eig
        .values
        .iter()
        .map(|&v| {
            if v.abs() <= tol {
                EigenClass::Zero
            } else if v > 0.0 {
                EigenClass::Positive
            } else {
                EigenClass::Negative
            }
        })
        .collect();

    // Generators mapped into the working coordinates, kept in order
    // (translations, rotation, scaling) and orthonormalized.
    let fields = generator_fields(p);
    let mut ortho: Vec<(usize, DVector<f64>)> = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        let mut w = match basis {
            Some(u) => u.transpose() * f,
            None => f.clone(),
        };
        let original = w.norm();
        for (_, q) in &ortho {
            let d = q.dot(&w);
            w -= q * d;
        }
        let len = w.norm();
        if len > 1e-8 * original.max(f.norm()) {
            ortho.push((k, w / len));
        }
    }
    let mut overlaps = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        if *c != EigenClass::Zero {
            continue;
        }
        let v = eig.vectors.column(i);
        let mut parts = [0.0; 4];
        for (k, q) in &ortho {
            parts[*k] = q.dot(&v).powi(2);
        }
        overlaps.push(ZeroModeOverlap {
            eigenvalue: eig.values[i],
            translation_x: parts[0],
            translation_y: parts[1],
            rotation: parts[2],
            scaling: parts[3],
            total: parts.iter().sum(),
        });
    }
    let count = |cl: EigenClass| classes.iter().filter(|c| **c == cl).count();
    SpectrumReport {
        zero_count: count(EigenClass::Zero),
        positive_count: count(EigenClass::Positive),
        negative_count: count(EigenClass::Negative),
        eigenvalues: eig.values.clone(),
        classes,
        zero_mode_overlaps: overlaps,
        zero_tolerance: tol,
        dimension: eig.values.len(),
        constrained: basis.is_some(),
    }
}

/// Spectrum of `M` restricted to the orthogonal complement of `g`.
pub fn constrained_spectrum(m: &DMatrix<f64>, g: &DVector<f64>, p: &Polygon, zero_tol_factor: f64) -> Result<SpectrumReport> {
    let u = orthogonal_complement(g)?;
    constrained_spectrum_with_basis(m, &u, p, zero_tol_factor)
}

/// As [`constrained_spectrum`] with a caller-supplied orthonormal basis.
pub fn constrained_spectrum_with_basis(m: &DMatrix<f64>, u: &DMatrix<f64>, p: &Polygon, zero_tol_factor: f64) -> Result<SpectrumReport> {
    if m.nrows() != 2 * p.len() || u.nrows() != m.nrows() {
        return Err(Error::VertexCountMismatch(m.nrows() / 2, p.len()));
    }
    let restricted = u.transpose() * m * u;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let eig = sym_eigen(&restricted)?;
    Ok(report(&eig, Some(u), p, zero_tol_factor))
}

/// Spectrum of `M` on the full coordinate space.
pub fn full_spectrum(m: &DMatrix<f64>, p: &Polygon, zero_tol_factor: f64) -> Result<SpectrumReport> {
    if m.nrows() != 2 * p.len() {
        return Err(Error::VertexCountMismatch(m.nrows() / 2, p.len()));
    }
    let eig = sym_eigen(m)?;
    Ok(report(&eig, None, p, zero_tol_factor))
}

/// Hessian of `F = |P|^{−m} J_k(P)`, `m = (k + 4)/2`, over all `2N` coordinates.
pub fn hess_scale_invariant(p: &Polygon, k: u32, degree: u32) -> Result<DMatrix<f64>> {
    if k < 2 || k % 2 == 1 {
        return Err(invalid(format!("scale-invariant Hessian needs even k >= 2, got {k}")));
    }
    let kernel = Kernel::power(k as f64)?;
    let h = derivatives::hess_j(p, &kernel, degree)?;
    let jv = energy::j(p, &kernel, degree)?.value;
    let a = p.area();
    let ga = derivatives::grad_area(p);
    let ha = derivatives::hess_area(p);
    let m = (k as f64 + 4.0) / 2.0;
    let gj = &h.gradient;
    let outer = gj * ga.transpose() + &ga * gj.transpose();
    let hess = &h.matrix * a.powf(-m) - outer * (m * a.powf(-m - 1.0)) + &ga * ga.transpose() * (m * (m + 1.0) * a.powf(-m - 2.0) * jv)
        - ha * (m * a.powf(-m - 1.0) * jv);
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Spectrum of the scale-invariant Hessian at `p`, full space.
pub fn scale_invariant_spectrum(p: &Polygon, k: u32, degree: u32, zero_tol_factor: f64) -> Result<SpectrumReport> {
    full_spectrum(&hess_scale_invariant(p, k, degree)?, p, zero_tol_factor)
}

/// Hessian of the Lagrangian `J_{h_Q} − ℓ|P|` with `ℓ` from `reference`,
/// restricted to the area-tangent space at `p`.
pub fn lagrangian_spectrum(p: &Polygon, q: u32, t: f64, degree: u32, zero_tol_factor: f64) -> Result<SpectrumReport> {
    let kernel = Kernel::truncated_heat(q, t)?;
    let h = derivatives::hess_j(p, &kernel, degree)?;
    let ga = derivatives::grad_area(p);
    let gj = &h.gradient;
    let ell = gj.norm() / ga.norm() * gj.dot(&ga).signum();
    let m = &h.matrix - derivatives::hess_area(p) * ell;
    constrained_spectrum(&m, &ga, p, zero_tol_factor)
}

/// Regular `N`-gon of unit diameter used for the heat-kernel spectra.
pub fn unit_diameter_ngon(n: usize) -> Result<Polygon> {
    regular_ngon(n, Normalization::Diameter(1.0), 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TScan {
    pub t: Vec<f64>,
    pub reports: Vec<SpectrumReport>,
    /// Set when some ordered nonzero eigenvalue fails to decrease in modulus as `t` grows.
    pub monotonicity_violated: bool,
}

/// Lagrangian spectra of the unit-diameter regular `N`-gon along a `t` grid.
pub fn monotonicity_scan_t(n: usize, q: u32, t_grid: &[f64], degree: u32) -> Result<TScan> {
    if t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t grid must be positive and increasing"));
    }
    let p = unit_diameter_ngon(n)?;
    let reports: Vec<SpectrumReport> =
        t_grid.iter().map(|&t| lagrangian_spectrum(&p, q, t, degree, DEFAULT_ZERO_TOL)).collect::<Result<_>>()?;
    let nonzero = |r: &SpectrumReport| -> Vec<f64> {
        let mut v: Vec<f64> =
            r.eigenvalues.iter().zip(&r.classes).filter(|(_, c)| **c != EigenClass::Zero).map(|(v, _)| v.abs()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    };
    let mut violated = false;
    for w in reports.windows(2) {
        let (a, b) = (nonzero(&w[0]), nonzero(&w[1]));
        if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| y > x) {
            violated = true;
        }
    }
    Ok(TScan { t: t_grid.to_vec(), reports, monotonicity_violated: violated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a + a.transpose()
    }

    #[test]
    fn diagonal() {
        let e = sym_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]))).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0]);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 5, 12, 30] {
            let m = random_symmetric(n, &mut rng);
            let e = sym_eigen(&m).unwrap();
            let lam = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
            let back = &e.vectors * lam * e.vectors.transpose();
            assert!((back - &m).norm() < 1e-10 * m.norm());
            let id = e.vectors.transpose() * &e.vectors;
            assert!((id - DMatrix::identity(n, n)).norm() < 1e-12);
            assert!((&m * &e.vectors - &e.vectors * DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()))).norm() < 1e-10 * m.norm());
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 5.0, 1.0]);
        assert!(sym_eigen(&m).is_err());
        m[(1, 0)] = f64::NAN;
        assert!(sym_eigen(&m).is_err());
    }

    #[test]
    fn area_hessian_of_square_matches_fd() {
        let sq = Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let h = derivatives::hess_area(&sq);
        let eps = 1e-5;
        let fd = DMatrix::from_fn(8, 8, |i, j| {
            let mut e = vec![0.0; 8];
            e[j] = 1.0;
            let (gp, gm) = (derivatives::grad_area(&sq.displaced(&e, eps)), derivatives::grad_area(&sq.displaced(&e, -eps)));
            (gp[i] - gm[i]) / (2.0 * eps)
        });
        assert!((&fd - &h).norm() < 1e-9);
        let e = sym_eigen(&h).unwrap();
        for (a, b) in e.values.iter().zip(e.values.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_is_basis_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = crate::geometry::random_polygon(5, 1, crate::geometry::RandomMode::Convex).unwrap();
        let m = random_symmetric(10, &mut rng);
        let g = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0));
        let a = constrained_spectrum(&m, &g, &p, DEFAULT_ZERO_TOL).unwrap();
        // a second orthonormal basis: rotate the first one by a random orthogonal matrix
        let u = orthogonal_complement(&g).unwrap();
        let q = DMatrix::from_fn(9, 9, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
        let b = constrained_spectrum_with_basis(&m, &(u * q), &p, DEFAULT_ZERO_TOL).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        assert_eq!(a.dimension, 9);
        assert!(orthogonal_complement(&DVector::zeros(4)).is_err());
    }

    #[test]
    fn scale_invariant_signature_small_case() {
        let p = regular_ngon(5, Normalization::Area(PI), 0.0).unwrap();
        let r = scale_invariant_spectrum(&p, 6, 8, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((r.zero_count, r.positive_count, r.negative_count), (4, 6, 0));
        for o in &r.zero_mode_overlaps {
            assert!(o.total >= 0.99, "{o:?}");
        }
    }

    #[test]
    fn lagrangian_signature_small_case() {
        let p = unit_diameter_ngon(6).unwrap();
        let r = lagrangian_spectrum(&p, 12, 1.0, 26, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((r.zero_count, r.negative_count, r.positive_count), (3, 8, 0));
        for o in &r.zero_mode_overlaps {
            assert!(o.total >= 0.99, "{o:?}");
        }
    }

    #[test]
    fn q_zero_is_degenerate() {
        let p = unit_diameter_ngon(6).unwrap();
        let r = lagrangian_spectrum(&p, 0, 1.0, 4, DEFAULT_ZERO_TOL).unwrap();
        // J = |P|² and the Lagrangian restricted to the tangent space reduce to
        // the area Hessian term, which cancels: ℓ = 2|P|.
        assert!(r.largest_abs() < 1e-12);
    }

    #[test]
    fn csv_rows() {
        let p = regular_ngon(5, Normalization::Area(PI), 0.0).unwrap();
        let r = scale_invariant_spectrum(&p, 2, 4, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(r.to_csv().lines().count(), 11);
    }
}
