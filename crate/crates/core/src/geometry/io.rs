//! Array layout files and boundary exports (CSV, SVG).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{AntennaArray, Boundary, Point2};

/// Parses 16 rows of `x_mm, y_mm, nx, ny`. Blank lines and `#` comments are
/// skipped; normals are taken as given and must already be unit length.
pub fn parse_array_layout<T: Scalar>(text: &str, array_id: &str) -> Result<AntennaArray<T>> {
    let mut apertures = Vec::new();
    let mut normals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields, got {}", lineno + 1, fields.len())));
        }
        let mut v = [T::zero(); 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            let x: f64 = f.parse().map_err(|_| Error::Parse(format!("line {}: bad number {f:?}", lineno + 1)))?;
            *slot = T::lit(x);
        }
        apertures.push(Point2::new(v[0], v[1]));
        normals.push(Point2::new(v[2], v[3]));
    }
    AntennaArray::new(apertures, normals, array_id)
}

pub fn write_array_layout<T: Scalar>(array: &AntennaArray<T>) -> String {
    let mut s = format!("# array {}\n# x_mm, y_mm, nx, ny\n", array.array_id());
    for (p, n) in array.apertures().iter().zip(array.inward_normals()) {
        let _ = writeln!(s, "{}, {}, {}, {}", p.x, p.y, n.x, n.y);
    }
    s
}

/// `x_mm,y_mm,source` rows, one per boundary point.
pub fn boundary_to_csv<T: Scalar>(boundary: &Boundary<T>) -> String {
    let mut s = String::from("x_mm,y_mm,source\n");
    let tag = boundary.source().as_str();
    for p in boundary.points() {
        let _ = writeln!(s, "{:.6},{:.6},{}", p.x.as_f64(), p.y.as_f64(), tag);
    }
    s
}

/// One polyline (closed) or marker set in an SVG overlay.
#[derive(Debug, Clone)]
pub struct SvgLayer<'a, T> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [Point2<T>],
    /// Draw as dots instead of a closed polyline.
    pub markers: bool,
}

/// Renders the layers in a millimetre-scaled SVG with y pointing up.
pub fn boundary_to_svg<T: Scalar>(layers: &[SvgLayer<'_, T>], title: &str) -> String {
    let all = layers.iter().flat_map(|l| l.points.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all {
        let (x, y) = (p.x.as_f64(), p.y.as_f64());
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (-1.0, -1.0, 1.0, 1.0);
    }
    let pad = 10.0;
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}" width="{:.0}mm" height="{:.0}mm">"#,
        x0 - pad,
        -(y1 + pad),
        w,
        h,
        w,
        h
    );
    let _ = writeln!(s, "<title>{}</title>", xml_escape(title));
    for layer in layers {
        let _ = writeln!(s, r#"<g id="{}">"#, xml_escape(layer.label));
        if layer.markers {
            for p in layer.points {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.3}" cy="{:.3}" r="1.5" fill="{}"/>"#,
                    p.x.as_f64(),
                    -p.y.as_f64(),
                    layer.color
                );
            }
        } else {
            let pts: Vec<String> =
                layer.points.iter().map(|p| format!("{:.3},{:.3}", p.x.as_f64(), -p.y.as_f64())).collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="0.5"/>"#,
                pts.join(" "),
                layer.color
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
