//! Scripted reproductions with pass/fail results.

mod graham;
mod inequalities;
mod spectral_tables;
mod symmetry;
mod threshold;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::geometry::Polygon;
use crate::io::{self, Disc};

pub use graham::exp_graham;
pub use inequalities::{
    axisymmetric_octagon, corpus, exp_axisym_octagon, exp_hardy, exp_linear_image_monotonicity, exp_riesz_power, hardy_corpus_check,
    riesz_corpus_check, surrogate_energy, CorpusCheck, HardyKernel,
};
pub use spectral_tables::{exp_spectral_tables, SpectralGrid};
pub use symmetry::{exp_symmetry_breaking_scan, symmetry_point, SymmetryPoint};
pub use threshold::{bound_route_crossing, exp_power_threshold_hexagon, BoundChain};

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Number printed in the source publication.
    Published,
    /// Consequence of a stated result, evaluated here.
    Derived,
    /// Closed-form identity.
    Analytic,
    /// Measured and stored without a pass/fail judgement.
    Recorded,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub measured: f64,
    pub reference: Option<f64>,
    pub provenance: Provenance,
    pub tolerance: Option<f64>,
    /// `None` for recorded-only values.
    pub pass: Option<bool>,
    pub runtime_s: f64,
}

impl ExperimentResult {
    fn base(experiment: &str, name: &str, measured: f64, provenance: Provenance) -> Self {
        ExperimentResult {
            experiment: experiment.to_string(),
            name: name.to_string(),
            parameters: BTreeMap::new(),
            measured,
            reference: None,
            provenance,
            tolerance: None,
            pass: None,
            runtime_s: 0.0,
        }
    }

    /// Passes iff `|measured − reference| ≤ tolerance`.
    pub fn compare(experiment: &str, name: &str, measured: f64, reference: f64, tolerance: f64, provenance: Provenance) -> Self {
        ExperimentResult {
            reference: Some(reference),
            tolerance: Some(tolerance),
            pass: Some((measured - reference).abs() <= tolerance),
            ..Self::base(experiment, name, measured, provenance)
        }
    }

    /// A property check; `measured` carries the relevant statistic.
    pub fn property(experiment: &str, name: &str, measured: f64, holds: bool, provenance: Provenance) -> Self {
        ExperimentResult { pass: Some(holds), ..Self::base(experiment, name, measured, provenance) }
    }

    pub fn record(experiment: &str, name: &str, measured: f64) -> Self {
        Self::base(experiment, name, measured, Provenance::Recorded)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.pass != Some(false)
    }
}

/// Polygons (and an optional disc) worth drawing.
#[derive(Debug, Clone)]
pub struct Figure {
    pub name: String,
    pub polygons: Vec<Polygon>,
    pub disc: Option<Disc>,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub experiment: Experiment,
    pub results: Vec<ExperimentResult>,
    pub figures: Vec<Figure>,
    pub runtime_s: f64,
}

impl ExperimentRun {
    pub fn passed(&self) -> bool {
        self.results.iter().all(ExperimentResult::passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Graham,
    PowerThreshold,
    SymmetryBreaking,
    Hardy,
    Riesz,
    LinearImage,
    AxisymOctagon,
    SpectralTables,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Graham,
        Experiment::PowerThreshold,
        Experiment::SymmetryBreaking,
        Experiment::Hardy,
        Experiment::Riesz,
        Experiment::LinearImage,
        Experiment::AxisymOctagon,
        Experiment::SpectralTables,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Graham => "graham",
            Experiment::PowerThreshold => "power-threshold",
            Experiment::SymmetryBreaking => "symmetry-breaking",
            Experiment::Hardy => "hardy",
            Experiment::Riesz => "riesz",
            Experiment::LinearImage => "linear-image",
            Experiment::AxisymOctagon => "axisym-octagon",
            Experiment::SpectralTables => "spectral-tables",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| invalid(format!("unknown experiment {s:?}")))
    }
}

/// Knobs shared by the sampled experiments.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    /// Random polygons per vertex count.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions { samples: 200, seed: 0 }
    }
}

/// Runs one experiment on its default grid.
pub fn run(experiment: Experiment, opts: &ExperimentOptions) -> Result<ExperimentRun> {
    let start = Instant::now();
    let (mut results, figures) = match experiment {
        Experiment::Graham => exp_graham()?,
        Experiment::PowerThreshold => (exp_power_threshold_hexagon()?, Vec::new()),
        Experiment::SymmetryBreaking => exp_symmetry_breaking_scan(None)?,
        Experiment::Hardy => exp_hardy(&[3, 4, 5, 6, 7, 8], &[0.3, 0.6, 1.0], opts.samples, opts.seed)?,
        Experiment::Riesz => (exp_riesz_power(&[3, 4, 5, 6, 7, 8], &[2, 4], opts.samples, opts.seed)?, Vec::new()),
        Experiment::LinearImage => (exp_linear_image_monotonicity(&[5, 6], &[2, 4, 6], 1.3, 21)?, Vec::new()),
        Experiment::AxisymOctagon => exp_axisym_octagon(opts.samples.clamp(1, 100), opts.seed)?,
        Experiment::SpectralTables => (exp_spectral_tables(&SpectralGrid::default())?, Vec::new()),
    };
    let runtime_s = start.elapsed().as_secs_f64();
    for r in &mut results {
        r.runtime_s = runtime_s;
    }
    Ok(ExperimentRun { experiment, results, figures, runtime_s })
}

pub fn summary_csv(results: &[ExperimentResult]) -> String {
    let mut s = String::from("experiment,name,measured,reference,tolerance,provenance,pass,runtime_s\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    for r in results {
        let provenance = serde_json::to_value(r.provenance).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let pass = match r.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "recorded",
        };
        s.push_str(&format!(
            "{},{},{:.12e},{},{},{},{},{:.3}\n",
            r.experiment,
            r.name,
            r.measured,
            opt(r.reference),
            opt(r.tolerance),
            provenance,
            pass,
            r.runtime_s
        ));
    }
    s
}

/// Writes `<out>/<experiment>/<stamp>.json` and `<out>/<experiment>/summary.csv`,
/// plus one SVG per figure when `svg` is set. Returns the written paths.
pub fn write_run(out: &Path, run: &ExperimentRun, stamp: &str, svg: bool) -> Result<Vec<PathBuf>> {
    let dir = out.join(run.experiment.name());
    let json = dir.join(format!("{stamp}.json"));
    io::write_atomic(&json, serde_json::to_string_pretty(&run.results)?.as_bytes())?;
    let csv = dir.join("summary.csv");
    io::write_atomic(&csv, summary_csv(&run.results).as_bytes())?;
    let mut written = vec![json, csv];
    if svg {
        for f in &run.figures {
            let path = dir.join(format!("{}.svg", f.name));
            let refs: Vec<&Polygon> = f.polygons.iter().collect();
            io::write_atomic(&path, io::svg(&refs, f.disc).as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn compare_uses_tolerance() {
        assert!(ExperimentResult::compare("x", "a", 1.0, 1.0 + 1e-7, 1e-6, Provenance::Published).passed());
        assert!(!ExperimentResult::compare("x", "a", 1.0, 1.1, 1e-6, Provenance::Published).passed());
        assert!(ExperimentResult::record("x", "a", 3.0).passed());
    }

    #[test]
    fn summary_has_row_per_result() {
        let rs = vec![
            ExperimentResult::compare("g", "ratio", 1.0392, 1.039201, 1e-5, Provenance::Published),
            ExperimentResult::record("g", "extra", 2.0),
        ];
        let csv = summary_csv(&rs);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("g,ratio,1.039200000000e0,1.039201000000e0"));
        assert!(csv.contains("recorded"));
    }
}
