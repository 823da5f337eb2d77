//! CSV matrices and SVG heatmaps. Output depends only on the input values,
//! so identical results render to identical bytes.

use std::fmt::Write;

use ndarray::ArrayView2;

use super::{ErspResult, ScalpGrid, TopographyFrame, GRID_EXTENT};
use crate::io::format_sig;

/// Colour-scale limit for dB maps.
pub const DB_CLIP: f64 = 6.0;
pub const RAMP_STEPS: usize = 256;

fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format_sig(v, 6)
    }
}

fn matrix_csv(m: ArrayView2<'_, f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `n_freqs` lines of `n_times` comma-separated dB values; axes go in a
/// separate sidecar.
pub fn ersp_csv(r: &ErspResult) -> String {
    matrix_csv(r.values_db.view())
}

/// Grid rows from front to back; masked cells are `NaN`.
pub fn grid_csv(g: &ScalpGrid) -> String {
    matrix_csv(g.values.view())
}

/// `channel,x,y,value` per montage channel.
pub fn frame_csv(f: &TopographyFrame) -> String {
    let mut out = String::from("channel,x,y,value\n");
    for (c, v) in f.montage.channels().iter().zip(&f.values) {
        let _ = writeln!(out, "{},{},{},{}", c.label, num(c.position[0]), num(c.position[1]), num(*v));
    }
    out
}

/// Blue-white-red ramp with [`RAMP_STEPS`] levels; values are clipped to
/// `range` first.
pub fn ramp_color(v: f64, range: (f64, f64)) -> (u8, u8, u8) {
    let (lo, hi) = range;
    let x = if hi > lo { ((v.clamp(lo, hi) - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let k = (x * (RAMP_STEPS - 1) as f64).round() / (RAMP_STEPS - 1) as f64;
    let ch = |t: f64| (t * 255.0).round() as u8;
    if k < 0.5 {
        (ch(2.0 * k), ch(2.0 * k), 255)
    } else {
        (255, ch(2.0 - 2.0 * k), ch(2.0 - 2.0 * k))
    }
}

fn svg_open(out: &mut String, w: usize, h: usize) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
}

fn cells(out: &mut String, m: ArrayView2<'_, f64>, range: (f64, f64), cw: usize, ch: usize) {
    for ((r, c), &v) in m.indexed_iter() {
        if v.is_nan() {
            continue;
        }
        let (red, green, blue) = ramp_color(v, range);
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{cw}" height="{ch}" fill="#{red:02x}{green:02x}{blue:02x}"/>"##,
            c * cw,
            r * ch
        );
    }
}

/// One rectangle per matrix cell, row 0 at the top. NaN cells are left
/// blank.
pub fn heatmap_svg(m: ArrayView2<'_, f64>, range: (f64, f64), cell_w: usize, cell_h: usize) -> String {
    let mut out = String::new();
    svg_open(&mut out, m.ncols() * cell_w, m.nrows() * cell_h);
    cells(&mut out, m, range, cell_w, cell_h);
    out.push_str("</svg>\n");
    out
}

/// Interpolated map with the head outline and electrode sites.
pub fn scalp_svg(g: &ScalpGrid, frame: &TopographyFrame, range: (f64, f64)) -> String {
    const CELL: usize = 6;
    let n = g.n();
    let size = n * CELL;
    let scale = size as f64 / (2.0 * GRID_EXTENT);
    let to_px = |x: f64, y: f64| ((x + GRID_EXTENT) * scale, (GRID_EXTENT - y) * scale);
    let mut out = String::new();
    svg_open(&mut out, size, size);
    cells(&mut out, g.values.view(), range, CELL, CELL);
    let (cx, cy) = to_px(0.0, 0.0);
    let _ = writeln!(out, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{:.1}" fill="none" stroke="black"/>"#, scale);
    for c in frame.montage.channels() {
        let (x, y) = to_px(c.position[0], c.position[1]);
        let _ =
            writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2" fill="black"><title>{}</title></circle>"#, c.label);
    }
    out.push_str("</svg>\n");
    out
}
