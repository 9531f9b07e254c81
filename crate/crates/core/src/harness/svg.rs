//! Three-panel figures (prediction, truth, pointwise error) as standalone SVG.
//! Heatmaps use the viridis colormap.

use std::fmt::Write;

use super::metrics::GridEvaluation;

const PANEL: f64 = 300.0;
const MARGIN: f64 = 50.0;
const BAR: f64 = 14.0;
const MAX_CELLS: usize = 128;

fn fmt_num(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn range(values: &[f64]) -> (f64, f64) {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn colour(t: f64) -> String {
    let c = colorous::VIRIDIS.eval_continuous(t.clamp(0.0, 1.0));
    format!("#{:02x}{:02x}{:02x}", c.r, c.g, c.b)
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn frame(out: &mut String, x0: f64, y0: f64, title: &str, axis: [&str; 2], xr: (f64, f64), yr: (f64, f64)) {
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{title}</text>"#,
        x0 + PANEL / 2.0,
        y0 - 10.0
    );
    let below = y0 + PANEL + 14.0;
    let _ = writeln!(out, r#"<text x="{x0}" y="{below}">{}</text>"#, fmt_num(xr.0));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{below}" text-anchor="end">{}</text>"#,
        x0 + PANEL,
        fmt_num(xr.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        x0 + PANEL / 2.0,
        below + 14.0,
        axis[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        y0 + PANEL,
        fmt_num(yr.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        y0 + 10.0,
        fmt_num(yr.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        y0 + PANEL / 2.0,
        axis[1]
    );
}

fn line_panel(out: &mut String, x0: f64, y0: f64, title: &str, xs: &[f64], ys: &[f64]) {
    let xr = (xs[0], xs[xs.len() - 1]);
    let yr = range(ys);
    frame(out, x0, y0, title, ["x", "u"], xr, yr);
    let mut path = String::new();
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let px = x0 + (x - xr.0) / (xr.1 - xr.0) * PANEL;
        let py = y0 + PANEL - (y - yr.0) / (yr.1 - yr.0) * PANEL;
        let _ = write!(path, "{}{px:.2},{py:.2}", if i == 0 { "M" } else { " L" });
    }
    let _ = writeln!(
        out,
        r##"<path d="{path}" fill="none" stroke="#1f4e9c" stroke-width="1.2"/>"##
    );
}

#[allow(clippy::too_many_arguments)]
fn heat_panel(
    out: &mut String,
    x0: f64,
    y0: f64,
    title: &str,
    axes: &[Vec<f64>],
    labels: [&str; 2],
    values: &[f64],
    scale: (f64, f64),
) {
    let (nx, ny) = (axes[0].len(), axes[1].len());
    let (cx, cy) = (nx.min(MAX_CELLS), ny.min(MAX_CELLS));
    let (w, h) = (PANEL / cx as f64, PANEL / cy as f64);
    for j in 0..cy {
        let jy = j * (ny - 1) / (cy - 1).max(1);
        for i in 0..cx {
            let ix = i * (nx - 1) / (cx - 1).max(1);
            let v = values[jy * nx + ix];
            let t = (v - scale.0) / (scale.1 - scale.0);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x0 + i as f64 * w,
                y0 + PANEL - (j + 1) as f64 * h,
                w + 0.05,
                h + 0.05,
                colour(t)
            );
        }
    }
    let xr = (axes[0][0], axes[0][nx - 1]);
    let yr = (axes[1][0], axes[1][ny - 1]);
    frame(out, x0, y0, title, labels, xr, yr);
    let bx = x0 + PANEL + 8.0;
    let steps = 32;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="{BAR}" height="{:.2}" fill="{}"/>"#,
            y0 + PANEL - (k + 1) as f64 * PANEL / steps as f64,
            PANEL / steps as f64 + 0.05,
            colour(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx, y0 - 2.0, fmt_num(scale.1));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">{}</text>"#,
        bx,
        y0 + PANEL + 12.0,
        fmt_num(scale.0)
    );
}

/// `axis_labels` names the two grid axes of 2D problems.
pub fn figure(eval: &GridEvaluation, axis_labels: [&str; 2]) -> String {
    let mut out = String::new();
    let axes = &eval.grid.axes;
    let width = 3.0 * (PANEL + 2.0 * MARGIN) + if axes.len() == 2 { 3.0 * 40.0 } else { 0.0 };
    let height = PANEL + 2.0 * MARGIN + 20.0;
    header(&mut out, width, height);
    let stride = PANEL + 2.0 * MARGIN + if axes.len() == 2 { 40.0 } else { 0.0 };
    let titles = ["Prediction", "Truth", "Pointwise error"];
    if axes.len() == 1 {
        for (k, vals) in [&eval.pred, &eval.truth, &eval.abs_error].into_iter().enumerate() {
            line_panel(&mut out, MARGIN + k as f64 * stride, MARGIN, titles[k], &axes[0], vals);
        }
    } else {
        let (plo, phi) = range(&eval.pred);
        let (tlo, thi) = range(&eval.truth);
        let shared = (plo.min(tlo), phi.max(thi));
        let err = range(&eval.abs_error);
        for (k, (vals, scale)) in [(&eval.pred, shared), (&eval.truth, shared), (&eval.abs_error, err)]
            .into_iter()
            .enumerate()
        {
            heat_panel(
                &mut out,
                MARGIN + k as f64 * stride,
                MARGIN,
                titles[k],
                axes,
                axis_labels,
                vals,
                scale,
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
