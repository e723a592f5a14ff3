//! Static SVG quick-look: h, f1, f2 against t on a shared normalized axis,
//! plus the collapse monitor z1 over the tail.

use ricciwarp_core::solution::ScalingSolution;

const W: f64 = 760.0;
const H: f64 = 420.0;
const MARGIN: f64 = 45.0;

fn polyline(points: &[(f64, f64)], x_rng: (f64, f64), y_rng: (f64, f64), color: &str) -> String {
    let sx = (W - 2.0 * MARGIN) / (x_rng.1 - x_rng.0);
    let sy = (H - 2.0 * MARGIN) / (y_rng.1 - y_rng.0);
    let mut d = String::new();
    for &(x, y) in points {
        let px = MARGIN + (x - x_rng.0) * sx;
        let py = H - MARGIN - (y - y_rng.0) * sy;
        d.push_str(&format!("{px:.2},{py:.2} "));
    }
    format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.4\" points=\"{d}\"/>\n")
}

pub fn solution_svg(sol: &ScalingSolution) -> String {
    let p = &sol.profile;
    let mut y_max = 0.0f64;
    for i in 0..p.len() {
        y_max = y_max.max(p.h[i]).max(p.f1[i]).max(p.f2[i]);
    }
    let x_rng = (0.0, 1.0);
    let y_rng = (0.0, 1.08 * y_max);
    let series = |col: &Vec<f64>| -> Vec<(f64, f64)> {
        p.ts.iter().cloned().zip(col.iter().cloned()).collect()
    };
    let z1: Vec<(f64, f64)> = sol
        .regularity
        .endpoint
        .z1_tail
        .iter()
        .map(|&(t, z)| (t, z * y_max)) // z1 ~ 1 plotted against the same axis
        .collect();

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    ));
    svg.push_str(&polyline(&series(&p.h), x_rng, y_rng, "#1f77b4"));
    svg.push_str(&polyline(&series(&p.f1), x_rng, y_rng, "#d62728"));
    svg.push_str(&polyline(&series(&p.f2), x_rng, y_rng, "#2ca02c"));
    if z1.len() > 1 {
        svg.push_str(&polyline(&z1, x_rng, y_rng, "#9467bd"));
    }
    svg.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"24\" font-family=\"monospace\" font-size=\"13\">h (blue)  f1 (red)  f2 (green)  z1*scale (purple)   c1={:.6} c2={:.6}</text>\n",
        sol.c1, sol.c2
    ));
    svg.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">t in [0,1]</text>\n",
        H - 12.0
    ));
    svg.push_str("</svg>\n");
    svg
}
