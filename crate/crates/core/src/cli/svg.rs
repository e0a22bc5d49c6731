//! SVG rendering of planar solutions.

use std::fmt::Write;

use super::files::{SolutionFile, VertexKind};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;
const CAPTION: f64 = 30.0;
const MIN_STROKE: f64 = 0.5;
const MAX_STROKE: f64 = 6.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SvgError {
    #[error("only planar solutions can be drawn, got dimension {0}")]
    NotPlanar(usize),
    #[error("edge references unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("solution has no vertices")]
    Empty,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Terminals as labelled circles, Steiner vertices as squares, edge stroke
/// width scaled linearly in `w(flow)` onto `[0.5, 6]` px, cost in a caption.
pub fn render(sol: &SolutionFile) -> Result<String, SvgError> {
    if sol.vertices.is_empty() {
        return Err(SvgError::Empty);
    }
    if let Some(v) = sol.vertices.iter().find(|v| v.point.len() != 2) {
        return Err(SvgError::NotPlanar(v.point.len()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &sol.vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(v.point[k]);
            hi[k] = hi[k].max(v.point[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if span > 0.0 { (SIZE - 2.0 * MARGIN) / span } else { 1.0 };
    let map = |p: &[f64]| {
        (
            MARGIN + (p[0] - lo[0]) * scale,
            // y grows downwards in SVG
            MARGIN + (hi[1] - p[1]) * scale,
        )
    };
    let lookup = |id: &str| {
        sol.vertices
            .iter()
            .find(|v| v.id == id)
            .map(|v| map(&v.point))
            .ok_or_else(|| SvgError::UnknownVertex(id.to_string()))
    };
    let (wmin, wmax) = sol
        .edges
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.weight), b.max(e.weight)));
    let stroke = |w: f64| {
        if wmax > wmin {
            MIN_STROKE + (w - wmin) / (wmax - wmin) * (MAX_STROKE - MIN_STROKE)
        } else {
            MAX_STROKE
        }
    };

    let mut out = String::new();
    let height = SIZE + CAPTION;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{height}" viewBox="0 0 {SIZE} {height}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for e in &sol.edges {
        let (a, b) = (lookup(&e.from)?, lookup(&e.to)?);
        writeln!(
            out,
            r#"<line class="edge" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black" stroke-width="{:.3}"><title>{} → {}: flow {}</title></line>"#,
            a.0,
            a.1,
            b.0,
            b.1,
            stroke(e.weight),
            escape(&e.from),
            escape(&e.to),
            e.flow
        )
        .unwrap();
    }
    for v in &sol.vertices {
        let (x, y) = map(&v.point);
        match v.kind {
            VertexKind::Steiner => writeln!(
                out,
                r#"<rect class="steiner" x="{:.3}" y="{:.3}" width="8" height="8" fill="white" stroke="black"/>"#,
                x - 4.0,
                y - 4.0
            ),
            VertexKind::Source | VertexKind::Sink => writeln!(
                out,
                r#"<circle class="terminal" cx="{x:.3}" cy="{y:.3}" r="5" fill="{}" stroke="black"/>"#,
                if v.kind == VertexKind::Sink { "black" } else { "white" }
            ),
        }
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 7.0,
            y - 7.0,
            escape(&v.id)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text class="caption" x="{MARGIN}" y="{:.3}" font-family="sans-serif" font-size="14">cost = {}</text>"#,
        SIZE + CAPTION / 2.0,
        sol.cost
    )
    .unwrap();
    out.push_str("</svg>\n");
    Ok(out)
}
