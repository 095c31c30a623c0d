//! SVG rendering of the unit-ball boundary rho(theta) = 1/t(theta) on a
//! fixed 800x800 viewport: circular arcs per sector for piecewise-constant
//! bodies, straight edges between vertices for hull bodies. The body is
//! scaled so its largest radius reaches 80% of the half-width, which keeps
//! figures comparable across runs. Output bytes depend only on the bundle's
//! geometry, never on wall time.

use crate::bundle::ResultBundle;
use starreg_core::geometry::BodyKind;
use std::io::Write;
use std::path::Path;

const SIZE: f64 = 800.0;
const CENTER: f64 = SIZE / 2.0;
const FILL: f64 = 0.8;

fn place(r: f64, angle: f64, scale: f64) -> (f64, f64) {
    // SVG y runs downward; flip so mathematical angles read counterclockwise
    (CENTER + scale * r * angle.cos(), CENTER - scale * r * angle.sin())
}

fn path_pc(bundle: &ResultBundle, scale: f64) -> String {
    let n = bundle.angles.len();
    let mut d = String::new();
    for i in 0..n {
        let r = bundle.rho[i] * scale;
        let from = bundle.angles[i] - bundle.widths[i] / 2.0;
        let to = bundle.angles[i] + bundle.widths[i] / 2.0;
        let (x0, y0) = place(bundle.rho[i], from, scale);
        let (x1, y1) = place(bundle.rho[i], to, scale);
        if i == 0 {
            d.push_str(&format!("M {x0:.6} {y0:.6} "));
        } else {
            // radial jump between neighboring sector radii
            d.push_str(&format!("L {x0:.6} {y0:.6} "));
        }
        let large = if bundle.widths[i] > std::f64::consts::PI { 1 } else { 0 };
        // sweep 0 keeps increasing mathematical angle (counterclockwise on
        // screen) under the flipped y-axis
        d.push_str(&format!("A {r:.6} {r:.6} 0 {large} 0 {x1:.6} {y1:.6} "));
    }
    d.push('Z');
    d
}

fn path_hull(bundle: &ResultBundle, scale: f64) -> String {
    let mut d = String::new();
    for (i, (&rho, &angle)) in bundle.rho.iter().zip(&bundle.angles).enumerate() {
        let (x, y) = place(rho, angle, scale);
        let op = if i == 0 { 'M' } else { 'L' };
        d.push_str(&format!("{op} {x:.6} {y:.6} "));
    }
    d.push('Z');
    d
}

pub fn render_svg(bundle: &ResultBundle, path: &Path) -> std::io::Result<()> {
    let r_max = bundle.rho.iter().cloned().fold(f64::MIN, f64::max);
    let scale = FILL * CENTER / r_max;
    let outline = match bundle.kind {
        BodyKind::PiecewiseConstant => path_pc(bundle, scale),
        BodyKind::HullPolytope => path_hull(bundle, scale),
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n  <line x1=\"0\" \
         y1=\"{CENTER}\" x2=\"{SIZE}\" y2=\"{CENTER}\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n  \
         <line x1=\"{CENTER}\" y1=\"0\" x2=\"{CENTER}\" y2=\"{SIZE}\" stroke=\"#cccccc\" \
         stroke-width=\"1\"/>\n"
    ));
    svg.push_str(&format!(
        "  <path d=\"{outline}\" fill=\"#4477aa33\" stroke=\"#224488\" stroke-width=\"2\"/>\n"
    ));
    if let Some(eps) = bundle.eps {
        svg.push_str(&format!(
            "  <text x=\"16\" y=\"32\" font-family=\"monospace\" font-size=\"20\">eps = \
             {eps:.6}</text>\n"
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"14\">max radius = \
         {r_max:.6}</text>\n</svg>\n",
        SIZE - 16.0
    ));
    std::fs::File::create(path)?.write_all(svg.as_bytes())
}
