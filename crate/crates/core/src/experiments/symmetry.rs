use std::f64::consts::PI;

use serde::Serialize;

use super::{ExperimentResult, Figure, Provenance};
use crate::energy::perimeter_r_with_tolerance;
use crate::error::{invalid, Result};
use crate::geometry::{graham_hexagon, regular_ngon, Normalization, Polygon};
use crate::io::Disc;

const NAME: &str = "symmetry-breaking";
const TOL: f64 = 1e-11;

/// `P_r` of both hexagons at area π.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetryPoint {
    pub r: f64,
    pub graham: f64,
    pub regular: f64,
    /// `π²(r² − 1)`, the value for any area-π polygon of diameter at most `r`.
    pub floor: f64,
}

impl SymmetryPoint {
    /// `P_r(Graham) − P_r(regular)`.
    pub fn gap(&self) -> f64 {
        self.graham - self.regular
    }
}

fn hexagons() -> Result<(Polygon, Polygon)> {
    Ok((graham_hexagon(Normalization::Area(PI))?, regular_ngon(6, Normalization::Area(PI), 0.0)?))
}

pub fn symmetry_point(r: f64) -> Result<SymmetryPoint> {
    let (g, h) = hexagons()?;
    Ok(SymmetryPoint {
        r,
        graham: perimeter_r_with_tolerance(&g, r, TOL)?,
        regular: perimeter_r_with_tolerance(&h, r, TOL)?,
        floor: PI * PI * (r * r - 1.0),
    })
}

/// Scan over `r`; the default grid brackets `r''` and the regular diameter.
pub fn exp_symmetry_breaking_scan(r_grid: Option<&[f64]>) -> Result<(Vec<ExperimentResult>, Vec<Figure>)> {
    let (g, h) = hexagons()?;
    let r2 = g.diameter();
    let d = h.diameter();
    let grid: Vec<f64> = match r_grid {
        Some(v) => v.to_vec(),
        None => {
            let mut v = vec![0.2, 0.5, 1.0, r2, 2.18, 0.5 * (r2 + d), d, d + 0.1];
            v.sort_by(|a, b| a.total_cmp(b));
            v
        }
    };
    if grid.iter().any(|r| !(*r > 0.0 && *r <= d + 1.0)) {
        return Err(invalid("r grid must lie in (0, diam + 1]"));
    }
    let mut out = vec![
        ExperimentResult::record(NAME, "r_double_prime", r2).with("measure", "diam(graham), area pi"),
        ExperimentResult::record(NAME, "regular_diameter", d),
    ];
    for &r in &grid {
        let s = symmetry_point(r)?;
        let row = |res: ExperimentResult| res.with("r", r).with("graham", s.graham).with("regular", s.regular);
        if r >= r2 {
            out.push(row(ExperimentResult::compare(NAME, "graham_at_floor", s.graham, s.floor, 1e-6, Provenance::Derived)));
        }
        if r >= r2 && r < d {
            out.push(row(ExperimentResult::property(NAME, "graham_below_regular", s.gap(), s.gap() < 0.0, Provenance::Derived)));
        } else if r >= d {
            out.push(row(ExperimentResult::compare(NAME, "both_at_floor", s.gap(), 0.0, 1e-9, Provenance::Analytic)));
        } else {
            out.push(row(ExperimentResult::record(NAME, "gap", s.gap())));
        }
        if (r - 2.18).abs() < 1e-12 {
            out.push(row(ExperimentResult::property(
                NAME,
                "graham_below_regular_by_1e-3",
                s.gap(),
                s.gap() < -1e-3,
                Provenance::Derived,
            )));
        }
        if (r - 0.2).abs() < 1e-12 {
            out.push(row(ExperimentResult::property(NAME, "regular_below_graham", s.gap(), s.gap() > 0.0, Provenance::Derived)));
        }
    }
    let disc = Disc { center: g.vertex(0), radius: r2 };
    let figures = vec![Figure { name: "graham_disc_r_double_prime".into(), polygons: vec![g], disc: Some(disc) }];
    Ok((out, figures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn above_both_diameters_values_coincide() {
        let s = symmetry_point(2.4).unwrap();
        assert!((s.graham - s.floor).abs() < 1e-9);
        assert!(s.gap().abs() < 1e-9);
    }

    #[test]
    fn small_radius_favours_regular() {
        assert!(symmetry_point(0.2).unwrap().gap() > 0.0);
    }
}
