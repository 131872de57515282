//! Polygon files, SVG snapshots and atomic result writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolygon {
    vertices: Vec<[f64; 2]>,
}

/// Reads `{"vertices": [[x, y], ...]}` and validates it.
pub fn read_polygon(path: &Path) -> Result<Polygon> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::PolygonFile { path: name.clone(), reason: e.to_string() })?;
    parse_polygon(&text, &name)
}

/// Parses polygon JSON; errors name the offending line.
pub fn parse_polygon(text: &str, name: &str) -> Result<Polygon> {
    let raw: RawPolygon = serde_json::from_str(text).map_err(|e| Error::PolygonFile {
        path: name.to_string(),
        reason: format!("line {}: {}", e.line(), e.to_string().split(" at line").next().unwrap_or_default()),
    })?;
    let vertices: Vec<Point> = raw.vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
    Polygon::new(vertices).map_err(|err| {
        let line = blamed_vertex(&err).and_then(|i| vertex_line(text, i));
        let reason = match line {
            Some(l) => format!("line {l}: {err}"),
            None => err.to_string(),
        };
        Error::PolygonFile { path: name.to_string(), reason }
    })
}

fn blamed_vertex(err: &Error) -> Option<usize> {
    match *err {
        Error::NonFiniteVertex(i) | Error::ZeroLengthEdge(i) | Error::SelfIntersection(i, _) => Some(i),
        Error::RepeatedVertex(_, j) => Some(j),
        _ => None,
    }
}

/// 1-based line of the `i`-th inner `[` after the `"vertices"` key.
fn vertex_line(text: &str, i: usize) -> Option<usize> {
    let start = text.find("\"vertices\"")?;
    let mut depth = 0usize;
    let mut seen = 0usize;
    for (offset, c) in text[start..].char_indices() {
        match c {
            '[' => {
                depth += 1;
                if depth == 2 {
                    if seen == i {
                        return Some(text[..start + offset].matches('\n').count() + 1);
                    }
                    seen += 1;
                }
            }
            ']' => {
                if depth <= 1 {
                    return None;
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    None
}

pub fn polygon_json(p: &Polygon) -> String {
    serde_json::to_string_pretty(p).expect("polygon serializes")
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

const SVG_SIZE: f64 = 800.0;
const SVG_MARGIN: f64 = 0.05;

/// Disc overlay for [`svg`].
#[derive(Debug, Clone, Copy)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

/// 800×800 drawing of the polygons, fitted with a 5% margin.
pub fn svg(polygons: &[&Polygon], disc: Option<Disc>) -> String {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point| {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    };
    for p in polygons {
        p.vertices().iter().for_each(|v| grow(*v));
    }
    if let Some(d) = disc {
        grow(d.center - Point::new(d.radius, d.radius));
        grow(d.center + Point::new(d.radius, d.radius));
    }
    let span = (hi - lo).max().max(f64::MIN_POSITIVE);
    let usable = SVG_SIZE * (1.0 - 2.0 * SVG_MARGIN);
    let scale = usable / span;
    let offset = Point::new(
        SVG_SIZE * SVG_MARGIN + 0.5 * (usable - scale * (hi.x - lo.x)),
        SVG_SIZE * SVG_MARGIN + 0.5 * (usable - scale * (hi.y - lo.y)),
    );
    // y axis points up in the drawing
    let map = |p: &Point| (offset.x + scale * (p.x - lo.x), SVG_SIZE - offset.y - scale * (p.y - lo.y));
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        s = SVG_SIZE
    );
    if let Some(d) = disc {
        let (cx, cy) = map(&d.center);
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{:.3}\" fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>",
            scale * d.radius
        );
    }
    for p in polygons {
        let pts: Vec<String> = p.vertices().iter().map(|v| map(v)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        let _ = writeln!(out, "<polygon points=\"{}\" fill=\"#d6e4f0\" stroke=\"#1f3b57\" stroke-width=\"2\"/>", pts.join(" "));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_square() {
        let p = parse_polygon(r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]]}"#, "sq").unwrap();
        assert_eq!(p.len(), 4);
        assert!((p.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_names_line_and_edges() {
        let text = "{\n  \"vertices\": [\n    [0, 0],\n    [3, 0],\n    [3, 2],\n    [1, -1]\n  ]\n}\n";
        let err = parse_polygon(text, "bow.json").unwrap_err().to_string();
        assert!(err.starts_with("bow.json: line "), "{err}");
        assert!(err.contains("edges"), "{err}");
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_polygon("{\n \"vertices\": [[0,0],\n [1,0]\n", "x").unwrap_err().to_string();
        assert!(err.contains("line "), "{err}");
        let err = parse_polygon(r#"{"verts": []}"#, "x").unwrap_err().to_string();
        assert!(err.contains("verts"), "{err}");
    }

    #[test]
    fn svg_fits_viewport() {
        let p = Polygon::from_xy(&[[0.0, 0.0], [4.0, 0.0], [4.0, 1.0]]).unwrap();
        let s = svg(&[&p], Some(Disc { center: Point::new(2.0, 0.5), radius: 0.5 }));
        assert!(s.contains("width=\"800\""));
        assert!(s.contains("<circle"));
        // longest span is mapped to 90% of the width
        assert!(s.contains("40.000,") && s.contains("760.000,"), "{s}");
    }

    #[test]
    fn atomic_write_round_trip() {
        let dir = std::env::temp_dir().join(format!("polyriesz-io-{}", std::process::id()));
        let path = dir.join("a/b.json");
        let p = Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        write_atomic(&path, polygon_json(&p).as_bytes()).unwrap();
        assert_eq!(read_polygon(&path).unwrap(), p);
        fs::remove_dir_all(&dir).unwrap();
    }
}
