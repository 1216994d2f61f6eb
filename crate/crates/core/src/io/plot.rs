//! SVG output: bifurcation diagrams and flat-shaded solution maps.

use std::fmt::Write as _;

use super::branchfile::BranchTable;
use crate::cont::PointKind;
use crate::error::{Error, Result};
use crate::fem::Mesh;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
        let _ = writeln!(
            s,
            r#"<g class="axes" stroke="black" fill="none"><rect x="{x0}" y="{y1}" width="{}" height="{}"/></g>"#,
            x1 - x0,
            y0 - y1
        );
        let _ = writeln!(s, r#"<g class="ticks" font-size="11" font-family="sans-serif">"#);
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.px(xv),
                y0 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 4.0,
                self.py(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            W / 2.0,
            H - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(s: &mut String) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Bifurcation diagram of `column` over `λ`: thick where stable (no unstable
/// eigenvalues), thin otherwise, circles at bifurcation rows.
pub fn plot_branches(tables: &[BranchTable], column: &str) -> Result<String> {
    let series: Vec<(Vec<f64>, Vec<f64>, &BranchTable)> = tables
        .iter()
        .map(|t| Ok((t.column("lam")?, t.column(column)?, t)))
        .collect::<Result<_>>()?;
    let frame = Frame {
        x: range(series.iter().flat_map(|(x, _, _)| x.iter().copied())),
        y: range(series.iter().flat_map(|(_, y, _)| y.iter().copied())),
    };
    let mut s = String::new();
    header(&mut s);
    frame.axes(&mut s, "lambda", column);
    for (k, (xs, ys, table)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<g class="branch" stroke="{color}" fill="none">"#);
        // consecutive regular rows with the same stability form one polyline
        let regular: Vec<usize> = (0..xs.len()).filter(|&i| table.rows[i].kind == PointKind::Regular).collect();
        let stable = |i: usize| table.rows[i].n_unstable == Some(0);
        let mut start = 0;
        while start + 1 < regular.len() {
            let st = stable(regular[start + 1]) && stable(regular[start]);
            let mut end = start + 1;
            while end + 1 < regular.len() && (stable(regular[end + 1]) && stable(regular[end])) == st {
                end += 1;
            }
            let pts: Vec<String> = regular[start..=end]
                .iter()
                .map(|&i| format!("{:.2},{:.2}", frame.px(xs[i]), frame.py(ys[i])))
                .collect();
            let (class, width) = if st { ("stable", 3.0) } else { ("unstable", 1.0) };
            let _ = writeln!(s, r#"<polyline class="{class}" stroke-width="{width}" points="{}"/>"#, pts.join(" "));
            start = end;
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="bifpoints" stroke="{color}" fill="white">"#);
        for i in (0..xs.len()).filter(|&i| table.rows[i].kind == PointKind::Bifurcation) {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="5"/>"#, frame.px(xs[i]), frame.py(ys[i]));
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Piecewise-linear blue–white–red map on `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let stops = [(0.0, [49.0, 54.0, 149.0]), (0.5, [247.0, 247.0, 247.0]), (1.0, [165.0, 0.0, 38.0])];
    let k = if t <= 0.5 { 0 } else { 1 };
    let (t0, c0) = stops[k];
    let (t1, c1) = stops[k + 1];
    let w = (t - t0) / (t1 - t0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + w * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Flat-shaded map of one component (1-based) with a min/max colour bar.
pub fn plot_solution(mesh: &Mesh, u: &[f64], component: usize) -> Result<String> {
    let np = mesh.n_points();
    let ncomp = if np == 0 { 0 } else { u.len() / np };
    if component == 0 || component > ncomp || u.len() != ncomp * np {
        return Err(Error::InvalidInput(format!(
            "component {component} out of range (field has {ncomp} components)"
        )));
    }
    let v = &u[(component - 1) * np..component * np];
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let degenerate = hi - lo <= 1e-14 * lo.abs().max(1.0);
    let scale = |x: f64| if degenerate { 0.5 } else { (x - lo) / (hi - lo) };
    let (pmin, pmax) = mesh.bounding_box();
    let (wx, wy) = (pmax[0] - pmin[0], pmax[1] - pmin[1]);
    let avail = (W - 2.0 * MARGIN - 80.0, H - 2.0 * MARGIN);
    let f = (avail.0 / wx).min(avail.1 / wy);
    let px = |p: [f64; 2]| (MARGIN + (p[0] - pmin[0]) * f, H - MARGIN - (p[1] - pmin[1]) * f);
    let mut s = String::new();
    header(&mut s);
    let _ = writeln!(s, r#"<g class="solution" stroke="none">"#);
    for tri in mesh.triangles() {
        let mean = tri.iter().map(|&i| v[i]).sum::<f64>() / 3.0;
        let pts: Vec<String> = tri
            .iter()
            .map(|&i| {
                let (x, y) = px(mesh.points()[i]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let c = color(scale(mean));
        let _ = writeln!(s, r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.3"/>"#, pts.join(" "));
    }
    let _ = writeln!(s, "</g>");
    // colour bar
    let (bx, by, bh) = (W - MARGIN - 40.0, MARGIN, H - 2.0 * MARGIN);
    let _ = writeln!(s, r#"<g class="colorbar" font-size="11" font-family="sans-serif">"#);
    let n = 32;
    for k in 0..n {
        let t = (k as f64 + 0.5) / n as f64;
        let y = by + bh * (1.0 - (k + 1) as f64 / n as f64);
        let c = color(if degenerate { 0.5 } else { t });
        let _ = writeln!(s, r#"<rect x="{bx:.1}" y="{y:.2}" width="16" height="{:.2}" fill="{c}"/>"#, bh / n as f64 + 0.5);
    }
    let _ = writeln!(s, r#"<text class="max" x="{:.1}" y="{:.1}">{}</text>"#, bx, by - 6.0, tick(hi));
    let _ = writeln!(s, r#"<text class="min" x="{:.1}" y="{:.1}">{}</text>"#, bx, by + bh + 14.0, tick(lo));
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cont::BranchRecord;
    use crate::fem::make_rect_mesh;

    fn table(rows: Vec<(PointKind, f64, f64, Option<usize>)>) -> BranchTable {
        BranchTable {
            problem: "x".into(),
            columns: ["kind", "step", "lam", "ds", "n_unstable", "err", "max|u1|"].map(String::from).to_vec(),
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (kind, lam, y, n))| BranchRecord {
                    kind,
                    step: i,
                    lam,
                    ds: 0.1,
                    n_unstable: n,
                    err: 0.0,
                    outputs: vec![y],
                })
                .collect(),
        }
    }

    #[test]
    fn empty_branch_gives_axes_only() {
        let s = plot_branches(&[table(vec![])], "max|u1|").unwrap();
        assert!(s.contains("<rect x="));
        assert!(!s.contains("<polyline"));
        assert!(!s.contains("<circle"));
    }

    #[test]
    fn stability_styles_and_bifpoints() {
        use PointKind::*;
        let t = table(vec![
            (Regular, 0.1, 0.1, Some(0)),
            (Regular, 0.2, 0.2, Some(0)),
            (Regular, 0.3, 0.4, Some(0)),
            (Bifurcation, 0.32, 0.5, Some(0)),
            (Regular, 0.35, 0.6, Some(1)),
            (Regular, 0.3, 0.8, Some(1)),
        ]);
        let s = plot_branches(&[t.clone(), t], "max|u1|").unwrap();
        assert_eq!(s.matches(r#"class="stable""#).count(), 2);
        assert_eq!(s.matches(r#"class="unstable""#).count(), 2);
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(matches!(plot_branches(&[table(vec![])], "L9"), Err(Error::NotFound(_))));
    }

    #[test]
    fn solution_maps() {
        let m = make_rect_mesh(1.0, 1.0, 5, 5).unwrap();
        let c = vec![2.0; m.n_points()];
        let s = plot_solution(&m, &c, 1).unwrap();
        assert_eq!(s.matches("<polygon").count(), m.n_triangles());
        let fills: std::collections::BTreeSet<&str> = s
            .split("<polygon")
            .skip(1)
            .map(|p| p.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect();
        assert_eq!(fills.len(), 1);
        // linear field: fill brightness ordering follows x along the bottom row
        let lin: Vec<f64> = m.points().iter().map(|p| p[0]).collect();
        let s = plot_solution(&m, &lin, 1).unwrap();
        assert!(s.contains(r#"class="max""#) && s.contains("1.000") && s.contains("-1.000"));
        assert!(plot_solution(&m, &lin, 2).is_err());
        assert!(color(0.0) != color(1.0));
    }
}
