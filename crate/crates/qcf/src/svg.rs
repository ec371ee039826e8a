//! Deterministic SVG drawings of spaces with arcs and circles on them.

use std::fmt::Write;

use qcf_core::space::{MetricSpace, PointId};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("space has no coordinates to draw")]
    NoCoords,
    #[error("point {0} outside the space")]
    OutOfRange(usize),
}

pub struct Curve<'a> {
    pub points: &'a [PointId],
    pub cyclic: bool,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Dots for every point, one polyline per curve (closed for circles) and
/// labelled marks. Numbers are printed with four decimals and the y axis
/// points up, so the same input always gives the same bytes.
pub fn render(space: &MetricSpace, curves: &[Curve<'_>], marks: &[PointId]) -> Result<String, RenderError> {
    let coords = space.coords().ok_or(RenderError::NoCoords)?;
    for p in curves.iter().flat_map(|c| c.points).chain(marks) {
        if p.0 >= coords.len() {
            return Err(RenderError::OutOfRange(p.0));
        }
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in coords {
        x0 = x0.min(c[0]);
        y0 = y0.min(c[1]);
        x1 = x1.max(c[0]);
        y1 = y1.max(c[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let pad = 0.05 * span;
    let size = 800.0;
    let k = size / (span + 2.0 * pad);
    let px = |p: PointId| {
        let c = coords[p.0];
        ((c[0] - x0 + pad) * k, (y1 - c[1] + pad) * k)
    };
    let (w, h) = ((x1 - x0 + 2.0 * pad) * k, (y1 - y0 + 2.0 * pad) * k);
    let dot = (0.002 * size).max(0.5);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.4}" height="{h:.4}" viewBox="0 0 {w:.4} {h:.4}">"#);
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{w:.4}" height="{h:.4}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r##"<g fill="#b0b0b0">"##);
    for p in space.points() {
        let (x, y) = px(p);
        let _ = writeln!(s, r#"<circle cx="{x:.4}" cy="{y:.4}" r="{dot:.4}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    for (i, c) in curves.iter().enumerate() {
        let tag = if c.cyclic { "polygon" } else { "polyline" };
        let mut pts = String::new();
        for (j, &p) in c.points.iter().enumerate() {
            let (x, y) = px(p);
            if j > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{x:.4},{y:.4}");
        }
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{:.4}" stroke-linejoin="round"/>"#,
            2.0 * dot
        );
    }
    for &m in marks {
        let (x, y) = px(m);
        let _ = writeln!(s, r##"<circle cx="{x:.4}" cy="{y:.4}" r="{:.4}" fill="#000000"/>"##, 3.0 * dot);
        let _ = writeln!(
            s,
            r#"<text x="{:.4}" y="{:.4}" font-family="monospace" font-size="{:.4}">{}</text>"#,
            x + 4.0 * dot,
            y - 4.0 * dot,
            12.0,
            m.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcf_core::space::{grid_index, grid_square, MetricSpace};

    #[test]
    fn same_input_same_bytes() {
        let s = grid_square(4).unwrap();
        let a: Vec<PointId> = (0..=4).map(|i| grid_index(4, i, 0)).collect();
        let b: Vec<PointId> = (0..=4).map(|i| grid_index(4, i, i)).collect();
        let curves = [Curve { points: &a, cyclic: false }, Curve { points: &b, cyclic: false }];
        let one = render(&s, &curves, &[a[0]]).unwrap();
        let two = render(&s, &curves, &[a[0]]).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.matches("<polyline").count(), 2);
        assert!(one.contains(">0</text>"));
    }

    #[test]
    fn coordinates_are_required() {
        let s = MetricSpace::from_table(2, 1.0, None, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(render(&s, &[], &[]), Err(RenderError::NoCoords)));
    }
}
