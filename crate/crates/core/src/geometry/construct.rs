use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Point, Polygon};
use crate::error::{invalid, Error, Result};

/// Which measure a constructed polygon is scaled to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    Area(f64),
    Diameter(f64),
    Circumradius(f64),
}

impl Normalization {
    fn value(&self) -> f64 {
        match *self {
            Normalization::Area(v) | Normalization::Diameter(v) | Normalization::Circumradius(v) => v,
        }
    }
}

/// Regular `n`-gon centred at the origin, first vertex at angle `phase`.
pub fn regular_ngon(n: usize, norm: Normalization, phase: f64) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    let v = norm.value();
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("normalization must be positive, got {v}")));
    }
    let nf = n as f64;
    let radius = match norm {
        Normalization::Circumradius(r) => r,
        Normalization::Area(a) => (2.0 * a / (nf * (2.0 * PI / nf).sin())).sqrt(),
        Normalization::Diameter(d) => {
            if n % 2 == 0 {
                d / 2.0
            } else {
                d / (2.0 * (PI / (2.0 * nf)).cos())
            }
        }
    };
    let vertices = (0..n)
        .map(|i| {
            let t = phase + 2.0 * PI * i as f64 / nf;
            Point::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    Ok(Polygon::new_unchecked(vertices))
}

/// Parameters of the unit-diameter biggest little hexagon.
///
/// The template has vertices `A(0,0)`, `B(-1/2, c)`, `C(-x, -b)`, `D(0,-1)`,
/// `E(x, -b)`, `F(1/2, c)` with `c = d - b`, subject to `|AC| = |AE| = 1`
/// (`x² + b² = 1`) and `|BE| = |CF| = 1` (`(x + 1/2)² + d² = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrahamTemplate {
    pub x: f64,
    pub b: f64,
    pub d: f64,
}

impl GrahamTemplate {
    /// Published nine-digit values.
    pub const PRINTED_X: f64 = 0.343771453;
    pub const PRINTED_B: f64 = 0.939053346;
    pub const PRINTED_D: f64 = 0.536702650;

    /// Solves the two distance constraints for `(b, d)` at the printed `x`,
    /// by Newton iteration started from the printed `(b, d)`.
    pub fn solve() -> Result<Self> {
        let x = Self::PRINTED_X;
        let (mut b, mut d) = (Self::PRINTED_B, Self::PRINTED_D);
        for _ in 0..50 {
            let f1 = x * x + b * b - 1.0;
            let f2 = (x + 0.5) * (x + 0.5) + d * d - 1.0;
            // Jacobian is diag(2b, 2d)
            let (db, dd) = (f1 / (2.0 * b), f2 / (2.0 * d));
            b -= db;
            d -= dd;
            if db.abs().max(dd.abs()) < 1e-16 {
                break;
            }
        }
        let residual = (x * x + b * b - 1.0).abs().max(((x + 0.5).powi(2) + d * d - 1.0).abs());
        let drift = (b - Self::PRINTED_B).abs().max((d - Self::PRINTED_D).abs());
        if residual > 1e-12 || drift > 1e-8 {
            return Err(Error::NoConvergence(format!(
                "hexagon constraint solve (residual {residual:.2e}, drift from printed values {drift:.2e})"
            )));
        }
        Ok(GrahamTemplate { x, b, d })
    }

    pub fn vertices(&self) -> [Point; 6] {
        let GrahamTemplate { x, b, d } = *self;
        let c = d - b;
        [
            Point::new(0.0, 0.0),
            Point::new(-0.5, c),
            Point::new(-x, -b),
            Point::new(0.0, -1.0),
            Point::new(x, -b),
            Point::new(0.5, c),
        ]
    }
}

/// The biggest little hexagon, scaled to the requested diameter or area and
/// translated so that its centroid is at the origin.
pub fn graham_hexagon(norm: Normalization) -> Result<Polygon> {
    let v = norm.value();
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("normalization must be positive, got {v}")));
    }
    let template = Polygon::new(GrahamTemplate::solve()?.vertices().to_vec())?;
    let template = template.centered();
    let scale = match norm {
        Normalization::Diameter(d) => d / template.diameter(),
        Normalization::Area(a) => (a / template.area()).sqrt(),
        Normalization::Circumradius(_) => {
            return Err(invalid("the hexagon can be normalized by diameter or area only"))
        }
    };
    Ok(template.scaled(scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMode {
    Convex,
    StarShaped,
}

const MAX_ATTEMPTS: usize = 1000;

/// Deterministic random `n`-gon of area π.
///
/// Star-shaped: sorted random angles with radii in `[0.3, 1.7]` around the
/// origin, then scaled about the origin. Convex: sorted random points on the
/// unit circle, then scaled about the centroid.
pub fn random_polygon(n: usize, seed: u64, mode: RandomMode) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(|a, b| a.total_cmp(b));
        let max_gap = (0..n)
            .map(|i| if i + 1 < n { angles[i + 1] - angles[i] } else { angles[0] + 2.0 * PI - angles[i] })
            .fold(0.0, f64::max);
        let min_gap = (0..n)
            .map(|i| if i + 1 < n { angles[i + 1] - angles[i] } else { angles[0] + 2.0 * PI - angles[i] })
            .fold(f64::INFINITY, f64::min);
        if min_gap < 1e-3 {
            continue;
        }
        let candidate = match mode {
            RandomMode::StarShaped => {
                if max_gap >= 0.95 * PI {
                    continue;
                }
                let pts: Vec<Point> = angles
                    .iter()
                    .map(|&t| {
                        let r = rng.gen_range(0.3..1.7);
                        Point::new(r * t.cos(), r * t.sin())
                    })
                    .collect();
                let p = Polygon::new_unchecked(pts);
                let s = (PI / p.area()).sqrt();
                p.scaled(s)
            }
            RandomMode::Convex => {
                let pts: Vec<Point> = angles.iter().map(|&t| Point::new(t.cos(), t.sin())).collect();
                Polygon::new_unchecked(pts).with_area(PI)
            }
        };
        if candidate.validate().is_ok() {
            return Ok(candidate);
        }
    }
    Err(Error::NoConvergence(format!("random {mode:?} polygon sampling after {MAX_ATTEMPTS} attempts")))
}
