//! Report files: JSON, CSV and SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{Branch, EstimateReport, Series};
use crate::error::{Error, Result};

/// Output kinds written by [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Svg];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            "svg" => Some(Self::Svg),
            _ => None,
        }
    }
}

/// File-system safe stem.
pub fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write(path: PathBuf, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, body).map_err(io(&path))?;
    out.push(path);
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// One row per member record.
pub fn branch_csv(b: &Branch) -> String {
    let mut s = String::from("member,seed,resolution,h,data_seminorm,solution_seminorm,ratio,control,iterations,residual,flags\n");
    for m in &b.members {
        let flags = m.flags.join(";").replace([',', '\n'], " ");
        let _ = writeln!(
            s,
            "{},{},{},{:e},{:e},{:e},{},{},{},{:e},{}",
            m.member,
            m.seed,
            m.resolution,
            m.h,
            m.data_seminorm,
            m.solution_seminorm,
            fmt_opt(m.ratio),
            fmt_opt(m.control),
            m.iterations,
            m.residual,
            flags
        );
    }
    s
}

pub fn series_csv(s: &Series) -> String {
    let mut out = format!("{},{}\n", s.x_label.replace(',', " "), s.y_label.replace(',', " "));
    for p in &s.points {
        let _ = writeln!(out, "{:e},{:e}", p[0], p[1]);
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Scatter-and-line plot of one or more curves. Axes are logarithmic when
/// every coordinate on them is positive.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, curves: &[(String, Vec<[f64; 2]>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 80.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 60.0;
    const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let pts: Vec<[f64; 2]> = curves.iter().flat_map(|c| c.1.iter().copied()).filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
    let logx = !pts.is_empty() && pts.iter().all(|p| p[0] > 0.0);
    let logy = !pts.is_empty() && pts.iter().all(|p| p[1] > 0.0);
    let tx = |v: f64| if logx { v.log10() } else { v };
    let ty = |v: f64| if logy { v.log10() } else { v };
    let range = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 * hi.abs().max(1.0) {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| tx(p[0])));
    let (y0, y1) = range(&mut pts.iter().map(|p| ty(p[1])));
    let px = |v: f64| L + (tx(v) - x0) / (x1 - x0) * (W - L - R);
    let py = |v: f64| H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let vx = x0 + f * (x1 - x0);
        let vy = y0 + f * (y1 - y0);
        let lx = if logx { 10f64.powf(vx) } else { vx };
        let ly = if logy { 10f64.powf(vy) } else { vy };
        let gx = L + f * (W - L - R);
        let gy = H - B - f * (H - T - B);
        let _ = writeln!(s, r#"<text x="{gx:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{lx:.3e}</text>"#, H - B + 16.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{ly:.3e}</text>"#, L - 6.0, gy + 4.0);
    }
    let xl = format!("{}{}", escape(x_label), if logx { " (log)" } else { "" });
    let yl = format!("{}{}", escape(y_label), if logy { " (log)" } else { "" });
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{xl}</text>"#, (W + L - R) / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {0})">{yl}</text>"#,
        (H - B + T) / 2.0
    );
    for (i, (name, c)) in curves.iter().enumerate() {
        let col = COLOURS[i % COLOURS.len()];
        let good: Vec<&[f64; 2]> = c.iter().filter(|p| p[0].is_finite() && p[1].is_finite() && (!logx || p[0] > 0.0) && (!logy || p[1] > 0.0)).collect();
        if good.len() > 1 {
            let path: Vec<String> = good.iter().map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1]))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="1.5"/>"#, path.join(" "));
        }
        for p in &good {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{col}"/>"#, px(p[0]), py(p[1]));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{col}">{}</text>"#,
            L + 8.0,
            T + 14.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit(report: &EstimateReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut out = Vec::new();
    if formats.contains(&Format::Json) {
        let mut body = serde_json::to_string_pretty(report)?;
        body.push('\n');
        write(dir.join("report.json"), &body, &mut out)?;
    }
    if formats.contains(&Format::Csv) {
        for b in &report.branches {
            write(dir.join(format!("{}.csv", file_stem(&b.name))), &branch_csv(b), &mut out)?;
        }
        for (name, s) in &report.series {
            write(dir.join(format!("series-{}.csv", file_stem(name))), &series_csv(s), &mut out)?;
        }
    }
    if formats.contains(&Format::Svg) {
        for b in &report.branches {
            let pick = |f: fn(&super::report::Aggregate) -> Option<f64>| -> Vec<[f64; 2]> {
                b.aggregates.iter().filter_map(|a| f(a).map(|v| [a.h, v])).collect()
            };
            let mut curves = vec![("max ratio".to_string(), pick(|a| a.max_ratio)), ("median ratio".to_string(), pick(|a| a.median_ratio))];
            let ctl = pick(|a| a.max_control);
            if !ctl.is_empty() {
                curves.push(("max control".to_string(), ctl));
            }
            let svg = svg_plot(&b.name, "h", "ratio", &curves);
            write(dir.join(format!("{}.svg", file_stem(&b.name))), &svg, &mut out)?;
        }
        for (name, s) in &report.series {
            let svg = svg_plot(name, &s.x_label, &s.y_label, &[(name.clone(), s.points.clone())]);
            write(dir.join(format!("series-{}.svg", file_stem(name))), &svg, &mut out)?;
        }
    }
    Ok(out)
}
