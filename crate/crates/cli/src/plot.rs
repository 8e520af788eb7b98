//! Plot data extracted from report files, and a small deterministic SVG
//! renderer for it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Failure, Result};
use crate::setup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    /// Interval drawn as an error bar.
    pub low: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    /// Tick labels when x is categorical (x values are indices).
    pub categories: Option<Vec<String>>,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub kind: String,
    pub source: String,
    pub panels: Vec<Panel>,
}

fn schema(path: &Path, what: impl std::fmt::Display) -> Failure {
    Failure::data(format!("{}: not a variance or evaluation report ({what})", path.display()))
}

fn num(v: &Value) -> Option<f64> {
    v.as_f64().filter(|x| x.is_finite())
}

fn field<'a>(v: &'a Value, key: &str, path: &Path) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| schema(path, format!("missing field {key}")))
}

fn string(v: &Value, key: &str, path: &Path) -> Result<String> {
    field(v, key, path)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, format!("{key} is not a string")))
}

fn array<'a>(v: &'a Value, key: &str, path: &Path) -> Result<&'a Vec<Value>> {
    field(v, key, path)?
        .as_array()
        .ok_or_else(|| schema(path, format!("{key} is not an array")))
}

fn point(x: f64, y: Option<f64>, low: Option<f64>, high: Option<f64>) -> Option<Point> {
    Some(Point { x, y: y?, low, high })
}

/// Three panels: coefficient of variation, resample correlation and runtime,
/// each against the sample size.
pub fn variance_plot(report: &Value, path: &Path) -> Result<PlotData> {
    let mut cv: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    let mut rc: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for r in array(report, "reports", path)? {
        let measure = string(r, "measure", path)?;
        let n = field(r, "n", path)?
            .as_f64()
            .ok_or_else(|| schema(path, "n is not a number"))?;
        let cv_points = cv.entry(measure.clone()).or_default();
        cv_points.extend(point(
            n,
            num(field(r, "mean_cv", path)?),
            r.get("cv_ci_low").and_then(num),
            r.get("cv_ci_high").and_then(num),
        ));
        let rc_points = rc.entry(measure).or_default();
        if let Some(c) = r.get("resample_correlation").filter(|c| !c.is_null()) {
            rc_points.extend(point(n, c.get("mean").and_then(num), c.get("ci_low").and_then(num), c.get("ci_high").and_then(num)));
        }
    }
    let mut runtime: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    let grid: Vec<f64> = {
        let mut ns: Vec<f64> = cv.values().flatten().map(|p| p.x).collect();
        ns.sort_by(f64::total_cmp);
        ns.dedup();
        ns
    };
    for cell in report.get("runtime").and_then(Value::as_array).into_iter().flatten() {
        let measure = string(cell, "measure", path)?;
        let secs = cell.get("seconds_per_stimulus").and_then(num);
        match (cell.get("n").and_then(Value::as_f64), cell.get("l").and_then(Value::as_u64)) {
            (Some(n), Some(l)) => runtime
                .entry(format!("{measure} L={l}"))
                .or_default()
                .extend(point(n, secs, None, None)),
            _ => {
                // closed forms do not depend on N: a flat line across the grid
                let line = runtime.entry(format!("{measure} exact")).or_default();
                for &n in &grid {
                    line.extend(point(n, secs, None, None));
                }
            }
        }
    }
    let series = |m: BTreeMap<String, Vec<Point>>| -> Vec<Series> {
        m.into_iter()
            .map(|(name, mut points)| {
                points.sort_by(|a, b| a.x.total_cmp(&b.x));
                Series { name, points }
            })
            .collect()
    };
    let panel = |title: &str, y_label: &str, s| Panel {
        title: title.into(),
        x_label: "N (samples)".into(),
        y_label: y_label.into(),
        log_x: true,
        categories: None,
        series: s,
    };
    Ok(PlotData {
        kind: "variance".into(),
        source: path.display().to_string(),
        panels: vec![
            panel("Coefficient of variation", "mean CV", series(cv)),
            panel("Resample correlation", "mean pairwise r", series(rc)),
            panel("Runtime", "seconds per stimulus", series(runtime)),
        ],
    })
}

type Cells = Vec<(String, Option<Point>)>;

/// One panel per response: mean ΔR² with its interval for every target.
pub fn evaluation_plot(report: &Value, path: &Path) -> Result<PlotData> {
    let mut by_response: BTreeMap<String, BTreeMap<String, Cells>> = BTreeMap::new();
    for c in array(report, "comparisons", path)? {
        let response = string(c, "response", path)?;
        let comparison = string(c, "comparison", path)?;
        let target = string(c, "target", path)?;
        let p = point(0.0, field(c, "mean", path).map(num)?, c.get("ci_low").and_then(num), c.get("ci_high").and_then(num));
        by_response
            .entry(response)
            .or_default()
            .entry(comparison)
            .or_default()
            .push((target, p));
    }
    let mut panels = Vec::new();
    for (response, comparisons) in by_response {
        let mut categories: Vec<String> = comparisons.values().flatten().map(|(t, _)| t.clone()).collect();
        categories.sort();
        categories.dedup();
        let series = comparisons
            .into_iter()
            .map(|(name, rows)| Series {
                name,
                points: rows
                    .into_iter()
                    .filter_map(|(t, p)| {
                        let x = categories.iter().position(|c| *c == t)? as f64;
                        p.map(|p| Point { x, ..p })
                    })
                    .collect(),
            })
            .collect();
        panels.push(Panel {
            title: format!("ΔR² for {response}"),
            x_label: "target".into(),
            y_label: "ΔR²".into(),
            log_x: false,
            categories: Some(categories),
            series,
        });
    }
    Ok(PlotData {
        kind: "evaluation".into(),
        source: path.display().to_string(),
        panels,
    })
}

pub fn plot_data(report: &Value, path: &Path) -> Result<PlotData> {
    match report.get("kind").and_then(Value::as_str) {
        Some("variance") => variance_plot(report, path),
        Some("evaluation") => evaluation_plot(report, path),
        Some(other) => Err(schema(path, format!("unknown kind {other}"))),
        None => Err(schema(path, "missing field kind")),
    }
}

/// Writes `<stem>.plot.json` and then `<stem>.svg` into `out_dir`.
pub fn write_plot(data: &PlotData, out_dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let json = out_dir.join(format!("{stem}.plot.json"));
    let svg = out_dir.join(format!("{stem}.svg"));
    setup::write_json(&json, data)?;
    setup::write_text(&svg, &render_svg(data))?;
    Ok((json, svg))
}

pub fn run(files: &[PathBuf], out_dir: Option<&Path>) -> Result<()> {
    if files.is_empty() {
        return Err(Failure::config("plot needs at least one report file"));
    }
    for path in files {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::data(format!("reading {}: {e}", path.display())))?;
        let report: Value = serde_json::from_str(&text).map_err(|e| schema(path, e))?;
        let data = plot_data(&report, path)?;
        let dir = match out_dir {
            Some(d) => d.to_path_buf(),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        std::fs::create_dir_all(&dir).map_err(|e| Failure::data(format!("creating {}: {e}", dir.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
        let (json, svg) = write_plot(&data, &dir, stem)?;
        println!("{} -> {}, {}", path.display(), json.display(), svg.display());
    }
    Ok(())
}

const PANEL_W: f64 = 380.0;
const PLOT_H: f64 = 210.0;
const LEGEND_H: f64 = 16.0;
const TOP: f64 = 30.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt(x: f64) -> String {
    format!("{x:.2}")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a < 1e-12 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Space below the axes for tick labels and the axis title.
fn bottom(panel: &Panel) -> f64 {
    match &panel.categories {
        Some(c) => 44.0 + 4.2 * c.iter().map(|s| s.chars().count()).max().unwrap_or(0) as f64,
        None => 46.0,
    }
}

fn panel_height(panel: &Panel) -> f64 {
    TOP + PLOT_H + bottom(panel) + LEGEND_H * panel.series.len() as f64 + 8.0
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    step: f64,
}

/// 1, 2 or 5 times a power of ten, at least `raw`.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

impl Axis {
    /// Linear axes snap outward to whole tick steps; log axes span whole decades
    /// only when the data does.
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let (mut lo, mut hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if vals.is_empty() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let half = if lo.abs() > 1e-12 { 0.1 * lo.abs() } else { 0.5 };
            lo -= half;
            hi += half;
        }
        if log {
            let pad = 0.06 * (hi - lo);
            return Axis {
                lo: lo - pad,
                hi: hi + pad,
                log,
                step: 1.0,
            };
        }
        let step = nice_step((hi - lo) / 4.0);
        Axis {
            lo: (lo / step).floor() * step,
            hi: (hi / step).ceil() * step,
            log,
            step,
        }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo.ceil() as i32..=self.hi.floor() as i32).map(|e| 10f64.powi(e)).collect();
        }
        let n = ((self.hi - self.lo) / self.step).round() as i64;
        (0..=n).map(|i| self.lo + self.step * i as f64).collect()
    }
}

fn render_panel(svg: &mut String, panel: &Panel, ox: f64) {
    let plot_w = PANEL_W - LEFT - RIGHT;
    let (x0, y0) = (ox + LEFT, TOP);
    let y1 = y0 + PLOT_H;
    let n_series = panel.series.len().max(1) as f64;
    let points = || panel.series.iter().flat_map(|s| s.points.iter());
    let x_axis = match &panel.categories {
        Some(c) => Axis {
            lo: -0.5,
            hi: c.len().max(1) as f64 - 0.5,
            log: false,
            step: 1.0,
        },
        None => Axis::fit(points().map(|p| p.x), panel.log_x),
    };
    let y_axis = Axis::fit(points().flat_map(|p| [Some(p.y), p.low, p.high]).flatten(), false);
    let px = |x: f64| x0 + x_axis.unit(x) * plot_w;
    let py = |y: f64| y0 + (1.0 - y_axis.unit(y)) * PLOT_H;

    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13" font-weight="bold">{}</text>"#,
        fmt(x0 + plot_w / 2.0),
        fmt(TOP - 12.0),
        escape(&panel.title)
    );
    for t in y_axis.ticks() {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"##,
            fmt(x0),
            fmt(x0 + plot_w),
            fmt(x0 - 4.0),
            fmt(py(t) + 3.0),
            tick_label(t),
            y = fmt(y)
        );
    }
    if panel.categories.is_some() && y_axis.lo < 0.0 && y_axis.hi > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#444" stroke-dasharray="4 3"/>"##,
            fmt(x0),
            fmt(x0 + plot_w),
            y = fmt(py(0.0))
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        fmt(x0),
        fmt(y0),
        fmt(plot_w),
        fmt(PLOT_H)
    );
    let x_ticks: Vec<(f64, String)> = match &panel.categories {
        Some(c) => c.iter().enumerate().map(|(i, name)| (i as f64, name.clone())).collect(),
        None => x_axis.ticks().into_iter().map(|t| (t, tick_label(t))).collect(),
    };
    let rotate = panel.categories.is_some();
    for (t, label) in x_ticks {
        let x = px(t);
        let ly = y1 + 14.0;
        let (anchor, transform) = if rotate {
            ("end", format!(r#" transform="rotate(-40 {} {})""#, fmt(x), fmt(ly)))
        } else {
            ("middle", String::new())
        };
        let _ = writeln!(
            svg,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#444"/><text x="{x}" y="{}" text-anchor="{anchor}" font-size="10"{transform}>{}</text>"##,
            fmt(y1),
            fmt(y1 + 4.0),
            fmt(ly),
            escape(&label),
            x = fmt(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
        fmt(x0 + plot_w / 2.0),
        fmt(y1 + bottom(panel) - 8.0),
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="11" transform="rotate(-90 {x} {y})">{}</text>"#,
        escape(&panel.y_label),
        x = fmt(ox + 14.0),
        y = fmt(y0 + PLOT_H / 2.0)
    );

    if points().next().is_none() {
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="middle" font-size="14" fill="#888">no data</text>"##,
            fmt(x0 + plot_w / 2.0),
            fmt(y0 + PLOT_H / 2.0)
        );
    }
    let dodge = |k: usize| match &panel.categories {
        Some(_) => (k as f64 - (n_series - 1.0) / 2.0) * 0.15,
        None => 0.0,
    };
    let legend_top = y1 + bottom(panel);
    for (k, s) in panel.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<(f64, f64)> = s.points.iter().map(|p| (px(p.x + dodge(k)), py(p.y))).collect();
        if panel.categories.is_none() && coords.len() > 1 {
            let path: Vec<String> = coords.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for (p, (x, y)) in s.points.iter().zip(&coords) {
            if let (Some(lo), Some(hi)) = (p.low, p.high) {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{color}"/>"#,
                    fmt(py(lo)),
                    fmt(py(hi)),
                    x = fmt(*x)
                );
            }
            let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, fmt(*x), fmt(*y));
        }
        let ly = legend_top + LEGEND_H * (k as f64 + 1.0);
        let label = if s.points.is_empty() {
            format!("{} (no data)", s.name)
        } else {
            s.name.clone()
        };
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}" font-size="10">{}</text>"#,
            fmt(x0),
            fmt(ly - 9.0),
            fmt(x0 + 14.0),
            fmt(ly),
            escape(&label)
        );
    }
}

/// Panels side by side. Output depends only on the plot data.
pub fn render_svg(data: &PlotData) -> String {
    let width = PANEL_W * data.panels.len().max(1) as f64;
    let height = data.panels.iter().map(panel_height).fold(TOP + PLOT_H + 46.0, f64::max);
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
        w = fmt(width),
        h = fmt(height)
    );
    svg.push_str("\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if data.panels.is_empty() {
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="middle" font-size="14" fill="#888">no data</text>"##,
            fmt(width / 2.0),
            fmt(height / 2.0)
        );
    }
    for (i, panel) in data.panels.iter().enumerate() {
        svg.push_str("<g>\n");
        render_panel(&mut svg, panel, PANEL_W * i as f64);
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}
