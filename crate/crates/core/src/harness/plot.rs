//! Plot-data emission: CSV series and self-contained SVG heat maps.

use std::fmt::Write as _;

use super::metrics::LevelError;
use crate::angular::AngularQuadrature;
use crate::error::{Error, Result};
use crate::spatial::SpatialMesh;

pub const ERROR_SERIES_HEADER: &str = "level,time,rel_rho,rel_vf,rel_f";
pub const NODES_HEADER: &str = "index,x,y,z,weight,origin";
pub const HEATMAP_HEADER: &str = "i,j,x,y,value";

pub fn error_series_csv(series: &[LevelError]) -> String {
    let mut s = String::from(ERROR_SERIES_HEADER);
    s.push('\n');
    for e in series {
        let _ = writeln!(
            s,
            "{},{:.10e},{:e},{:e},{:e}",
            e.level, e.time, e.rel_rho, e.rel_vf, e.rel_f
        );
    }
    s
}

/// Reduced rule nodes; the first `initial` belong to the starting Lebedev
/// rule, the rest were added by the greedy loop.
pub fn sampled_nodes_csv(quad: &AngularQuadrature, initial: usize) -> String {
    let mut s = String::from(NODES_HEADER);
    s.push('\n');
    for (k, (v, w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        let origin = if k < initial { "initial" } else { "greedy" };
        let _ = writeln!(
            s,
            "{k},{:.17e},{:.17e},{:.17e},{:.17e},{origin}",
            v[0], v[1], v[2], w
        );
    }
    s
}

fn check_field(mesh: &SpatialMesh, values: &[f64]) -> Result<()> {
    if values.len() != mesh.n_dof() {
        return Err(Error::Argument(format!(
            "field has {} values, mesh has {} cells",
            values.len(),
            mesh.n_dof()
        )));
    }
    Ok(())
}

pub fn heatmap_csv(mesh: &SpatialMesh, values: &[f64]) -> Result<String> {
    check_field(mesh, values)?;
    let mut s = String::from(HEATMAP_HEADER);
    s.push('\n');
    for (k, v) in values.iter().enumerate() {
        let (i, j) = mesh.cell_ij(k);
        let (x, y) = mesh.cell_center(k);
        let _ = writeln!(s, "{i},{j},{x:.10e},{y:.10e},{v:e}");
    }
    Ok(s)
}

const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Viridis-like colour for `t` in `[0, 1]` (clamped).
pub fn ramp_color(t: f64) -> [u8; 3] {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    std::array::from_fn(|c| (RAMP[i][c] + f * (RAMP[i + 1][c] - RAMP[i][c])).round() as u8)
}

/// Heat map with one rectangle per cell; `y` grows upward.
pub fn heatmap_svg(mesh: &SpatialMesh, values: &[f64], title: &str) -> Result<String> {
    check_field(mesh, values)?;
    let px = 8.0;
    let (w, h) = (mesh.nx as f64 * px, mesh.ny as f64 * px);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{}\" viewBox=\"0 0 {w} {}\">",
        h + 20.0,
        h + 20.0
    );
    let title = title
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;");
    let _ = writeln!(s, "<title>{title} (min {lo:.4e}, max {hi:.4e})</title>");
    for (k, v) in values.iter().enumerate() {
        let (i, j) = mesh.cell_ij(k);
        let [r, g, b] = ramp_color((v - lo) / span);
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{px}\" height=\"{px}\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>",
            i as f64 * px,
            h - (j + 1) as f64 * px
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"2\" y=\"{}\" font-size=\"12\" font-family=\"monospace\">{title}</text>",
        h + 15.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}
