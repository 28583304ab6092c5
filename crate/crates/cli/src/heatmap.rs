//! SVG heatmaps with a marching-squares iso-contour.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::output::{format_g, write_file};
use crate::sweep::Table;

/// Metric values on a rectangular grid; `values[i][j]` sits at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Grid {
    pub fn from_table(table: &Table) -> Result<Self> {
        let mut xs: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
        let mut ys: Vec<f64> = table.rows.iter().map(|r| r.y).collect();
        for v in [&mut xs, &mut ys] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        if xs.len() * ys.len() != table.rows.len() {
            return Err(CliError::RaggedGrid(format!(
                "{} rows for {} x values and {} y values",
                table.rows.len(),
                xs.len(),
                ys.len()
            )));
        }
        let mut values = vec![vec![None; ys.len()]; xs.len()];
        let mut seen = vec![vec![false; ys.len()]; xs.len()];
        for r in &table.rows {
            let i = xs.binary_search_by(|v| v.total_cmp(&r.x)).expect("x present");
            let j = ys.binary_search_by(|v| v.total_cmp(&r.y)).expect("y present");
            if seen[i][j] {
                return Err(CliError::RaggedGrid(format!("duplicate point ({}, {})", r.x, r.y)));
            }
            seen[i][j] = true;
            values[i][j] = r.value;
        }
        Ok(Self { xs, ys, values })
    }
}

pub type Segment = [(f64, f64); 2];

/// Iso-contour segments at `level`. Cells with a missing corner are skipped;
/// saddle cells are resolved with the cell-centre average.
pub fn contour(grid: &Grid, level: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    for i in 0..grid.xs.len().saturating_sub(1) {
        for j in 0..grid.ys.len().saturating_sub(1) {
            let corner = |di: usize, dj: usize| grid.values[i + di][j + dj];
            let (Some(v00), Some(v10), Some(v11), Some(v01)) = (corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1))
            else {
                continue;
            };
            let p = |di: usize, dj: usize| (grid.xs[i + di], grid.ys[j + dj]);
            let crossing = |a: (f64, f64), va: f64, b: (f64, f64), vb: f64| -> Option<(f64, f64)> {
                if (va >= level) == (vb >= level) {
                    return None;
                }
                let t = (level - va) / (vb - va);
                Some((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)))
            };
            let bottom = crossing(p(0, 0), v00, p(1, 0), v10);
            let right = crossing(p(1, 0), v10, p(1, 1), v11);
            let top = crossing(p(0, 1), v01, p(1, 1), v11);
            let left = crossing(p(0, 0), v00, p(0, 1), v01);
            match (bottom, right, top, left) {
                (Some(b), Some(r), Some(t), Some(l)) => {
                    let centre_high = (v00 + v10 + v11 + v01) / 4.0 >= level;
                    if centre_high == (v00 >= level) {
                        out.push([b, r]);
                        out.push([t, l]);
                    } else {
                        out.push([b, l]);
                        out.push([t, r]);
                    }
                }
                _ => {
                    let pts: Vec<_> = [bottom, right, top, left].into_iter().flatten().collect();
                    if pts.len() == 2 {
                        out.push([pts[0], pts[1]]);
                    }
                }
            }
        }
    }
    out
}

/// Contour as CSV with columns `x,y`; each consecutive pair of rows is one
/// segment.
pub fn contour_csv(segments: &[Segment]) -> String {
    let mut s = String::from("x,y\n");
    for seg in segments {
        for (x, y) in seg {
            let _ = writeln!(s, "{},{}", format_g(*x), format_g(*y));
        }
    }
    s
}

fn colour(t: f64) -> String {
    // dark blue -> teal -> yellow
    const STOPS: [(f64, f64, f64); 3] = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 2.0;
    let k = (t.floor() as usize).min(1);
    let f = t - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub fn heatmap_svg(grid: &Grid, title: &str, x_name: &str, y_name: &str, segments: &[Segment]) -> String {
    let (w, h, margin) = (480.0, 400.0, 60.0);
    let finite: Vec<f64> = grid.values.iter().flatten().flatten().copied().collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (nx, ny) = (grid.xs.len() as f64, grid.ys.len() as f64);
    let (cw, ch) = (w / nx, h / ny);
    let x_range = (grid.xs[0], *grid.xs.last().unwrap());
    let y_range = (grid.ys[0], *grid.ys.last().unwrap());
    // data coordinates -> pixel centres of the cells
    let to_px = |x: f64, y: f64| {
        let fx = if x_range.1 > x_range.0 {
            (x - x_range.0) / (x_range.1 - x_range.0)
        } else {
            0.0
        };
        let fy = if y_range.1 > y_range.0 {
            (y - y_range.0) / (y_range.1 - y_range.0)
        } else {
            0.0
        };
        (margin + cw / 2.0 + fx * (w - cw), margin + h - ch / 2.0 - fy * (h - ch))
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        w + 2.0 * margin,
        h + 2.0 * margin
    );
    let _ = writeln!(s, r#"<text x="{margin}" y="{}">{title}</text>"#, margin / 2.0);
    for (i, col) in grid.values.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            let fill = v.map(|v| colour((v - lo) / span)).unwrap_or_else(|| "#cccccc".into());
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                margin + i as f64 * cw,
                margin + h - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    for [a, b] in segments {
        let (p, q) = (to_px(a.0, a.1), to_px(b.0, b.1));
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="white" stroke-width="2"/>"#,
            p.0, p.1, q.0, q.1
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_name} [{} .. {}]</text>"#,
        margin + w / 2.0,
        h + 1.6 * margin,
        format_g(x_range.0),
        format_g(x_range.1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{y_name} [{} .. {}]</text>"#,
        margin / 2.0,
        margin + h / 2.0,
        margin / 2.0,
        margin + h / 2.0,
        format_g(y_range.0),
        format_g(y_range.1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">min {} max {}</text>"#,
        margin + w,
        margin / 2.0,
        format_g(lo),
        format_g(hi)
    );
    s.push_str("</svg>\n");
    s
}

/// Writes `<path>` (SVG) and `<contour_path>` (contour CSV).
pub fn render_heatmap(table: &Table, contour_level: Option<f64>, path: &Path, contour_path: &Path) -> Result<()> {
    let grid = Grid::from_table(table)?;
    let metric = table.rows.first().map(|r| r.metric).unwrap_or("");
    let segments = contour_level.map(|l| contour(&grid, l)).unwrap_or_default();
    write_file(
        path,
        heatmap_svg(&grid, metric, table.x_name, table.y_name, &segments).as_bytes(),
    )?;
    write_file(contour_path, contour_csv(&segments).as_bytes())
}
