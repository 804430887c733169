//! SVG rendering of an instance plus its layout. The drawing uses y-up
//! coordinates with the origin at the bottom-left; SVG is y-down, so every
//! y coordinate is flipped at the drawing height.

use std::fmt::Write;

use thiserror::Error;

use crate::env::Instance;
use crate::layout::Layout;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("layout covers {layout} anchors but the instance has {instance}")]
    LengthMismatch { layout: usize, instance: usize },
}

const ANCHOR_RADIUS_PX: f64 = 2.0;
const PLACED_FILL: &str = "#d9d9d9";
const PLACED_STROKE: &str = "#8c8c8c";
const ANCHOR_FILL: &str = "#2e7d32";
const MISSING_COLOR: &str = "#d32f2f";
const LEADER_STROKE: &str = "#595959";
const FONT_SIZE_PX: f64 = 12.0;

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the scene as a standalone SVG document. Anchors are green dots;
/// placed labels are gray boxes carrying their text; an unplaced anchor
/// shows a red dot plus a red outline box at its preferred position;
/// distant labels get their leader segment drawn underneath.
pub fn render_svg<S: Scalar>(
    instance: &Instance<S>,
    layout: &Layout<S>,
) -> Result<String, RenderError> {
    if layout.len() != instance.len() {
        return Err(RenderError::LengthMismatch {
            layout: layout.len(),
            instance: instance.len(),
        });
    }
    let w = instance.drawing.0.to_f64_lossy();
    let h = instance.drawing.1.to_f64_lossy();
    let flip = |y: f64| h - y;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        svg,
        r##"  <rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="#333333"/>"##
    );

    // Leaders first so labels and dots draw over them.
    for leader in layout.leaders.iter().flatten() {
        let _ = writeln!(
            svg,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{LEADER_STROKE}" stroke-width="1"/>"#,
            leader.from.x.to_f64_lossy(),
            flip(leader.from.y.to_f64_lossy()),
            leader.to.x.to_f64_lossy(),
            flip(leader.to.y.to_f64_lossy()),
        );
    }

    for (i, anchor) in instance.anchors.iter().enumerate() {
        let lw = anchor.label_w.to_f64_lossy();
        let lh = anchor.label_h.to_f64_lossy();
        let ox = layout.origins[i].x.to_f64_lossy();
        let oy = layout.origins[i].y.to_f64_lossy();
        let top = flip(oy + lh);
        if layout.placed[i] {
            let _ = writeln!(
                svg,
                r#"  <rect x="{ox}" y="{top}" width="{lw}" height="{lh}" fill="{PLACED_FILL}" stroke="{PLACED_STROKE}"/>"#
            );
            if let Some(text) = &anchor.text {
                let _ = writeln!(
                    svg,
                    r#"  <text x="{}" y="{}" font-family="sans-serif" font-size="{FONT_SIZE_PX}" text-anchor="middle" dominant-baseline="central">{}</text>"#,
                    ox + lw / 2.0,
                    flip(oy + lh / 2.0),
                    escape_xml(text),
                );
            }
        } else {
            let _ = writeln!(
                svg,
                r#"  <rect x="{ox}" y="{top}" width="{lw}" height="{lh}" fill="none" stroke="{MISSING_COLOR}" stroke-dasharray="4 2"/>"#
            );
        }
    }

    // Anchor dots on top: green when the label was placed, red otherwise.
    for (i, anchor) in instance.anchors.iter().enumerate() {
        let color = if layout.placed[i] { ANCHOR_FILL } else { MISSING_COLOR };
        let _ = writeln!(
            svg,
            r#"  <circle cx="{}" cy="{}" r="{ANCHOR_RADIUS_PX}" fill="{color}"/>"#,
            anchor.pos.x.to_f64_lossy(),
            flip(anchor.pos.y.to_f64_lossy()),
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
