//! Exact areas involving discs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{cross, Point, Polygon};
use crate::error::{invalid, Result};

/// Circular segment of radius `r` cut by a chord at distance `s` from the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularSegmentParams {
    pub r: f64,
    pub s: f64,
}

impl CircularSegmentParams {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        if !(r > 0.0) || !(0.0..=r).contains(&s) {
            return Err(invalid(format!("circular segment needs 0 <= s <= r, r > 0 (r = {r}, s = {s})")));
        }
        Ok(CircularSegmentParams { r, s })
    }
}

/// `r² arccos(s/r) − s √(r² − s²)`.
pub fn circular_segment_area(p: CircularSegmentParams) -> f64 {
    let CircularSegmentParams { r, s } = p;
    let ratio = (s / r).clamp(-1.0, 1.0);
    r * r * ratio.acos() - s * (r * r - s * s).max(0.0).sqrt()
}

/// `|P ∩ B_r(center)|`, exact up to rounding.
///
/// Sums, over the edges, the signed area of the intersection of the disc
/// with the triangle spanned by the centre and the edge: straight pieces
/// inside the disc contribute triangles, pieces outside contribute sectors.
pub fn polygon_disc_intersection_area(p: &Polygon, center: &Point, r: f64) -> f64 {
    assert!(r > 0.0, "disc radius must be positive");
    let mut total = 0.0;
    for (a, b) in p.edges() {
        total += edge_disc_signed_area(&(a - center), &(b - center), r);
    }
    total.clamp(0.0, p.area().min(PI * r * r))
}

fn edge_disc_signed_area(a: &Point, b: &Point, r: f64) -> f64 {
    let d = b - a;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return 0.0;
    }
    let r2 = r * r;
    let mut breaks = [0.0, 1.0, 1.0, 1.0];
    let mut nb = 1;
    // Crossing parameters of |a + t d| = r.
    let half_b = a.dot(&d);
    let dist_line = cross(a, &d).abs() / dd.sqrt();
    if (dist_line - r).abs() >= 1e-12 * r && dist_line < r {
        let c = a.norm_squared() - r2;
        let disc = (half_b * half_b - dd * c).max(0.0).sqrt();
        for t in [(-half_b - disc) / dd, (-half_b + disc) / dd] {
            if t > 0.0 && t < 1.0 {
                breaks[nb] = t;
                nb += 1;
            }
        }
    }
    breaks[nb] = 1.0;
    let mut area = 0.0;
    for k in 0..nb {
        let (t0, t1) = (breaks[k], breaks[k + 1]);
        if t1 <= t0 {
            continue;
        }
        let p0 = a + d * t0;
        let p1 = a + d * t1;
        let mid = a + d * (0.5 * (t0 + t1));
        if mid.norm_squared() <= r2 {
            area += 0.5 * cross(&p0, &p1);
        } else {
            let angle = cross(&p0, &p1).atan2(p0.dot(&p1));
            area += 0.5 * r2 * angle;
        }
    }
    area
}
