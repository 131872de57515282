use std::f64::consts::PI;

use super::{ExperimentResult, Figure, Provenance};
use crate::error::Result;
use crate::geometry::{graham_hexagon, regular_ngon, Normalization};

const NAME: &str = "graham";

/// Areas at unit diameter, their ratio, and the diameter ratio at equal area.
pub fn exp_graham() -> Result<(Vec<ExperimentResult>, Vec<Figure>)> {
    let g = graham_hexagon(Normalization::Diameter(1.0))?;
    let r = regular_ngon(6, Normalization::Diameter(1.0), 0.0)?;
    let area_ratio = g.area() / r.area();
    let ga = graham_hexagon(Normalization::Area(PI))?;
    let ra = regular_ngon(6, Normalization::Area(PI), 0.0)?;
    let diameter_ratio = ga.diameter() / ra.diameter();
    let results = vec![
        ExperimentResult::compare(NAME, "graham_area_unit_diameter", g.area(), 0.674981, 1e-6, Provenance::Published),
        ExperimentResult::compare(NAME, "regular_area_unit_diameter", r.area(), 0.649519, 1e-6, Provenance::Published),
        ExperimentResult::compare(NAME, "area_ratio", area_ratio, 1.039201, 1e-5, Provenance::Published),
        ExperimentResult::compare(NAME, "diameter_ratio_equal_area", diameter_ratio, 0.980957, 1e-5, Provenance::Published),
        ExperimentResult::compare(NAME, "scaling_identity", area_ratio, diameter_ratio.powi(-2), 1e-9, Provenance::Analytic),
    ];
    let figures = vec![Figure { name: "hexagons_area_pi".into(), polygons: vec![ra, ga], disc: None }];
    Ok((results, figures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pass() {
        let (rs, figs) = exp_graham().unwrap();
        assert!(rs.iter().all(|r| r.passed()), "{rs:#?}");
        assert_eq!(figs[0].polygons.len(), 2);
    }
}
