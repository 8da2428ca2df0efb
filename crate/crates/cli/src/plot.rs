//! Static SVG rendering of aggregate regret curves.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::CliError;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Deserialize)]
struct Row {
    policy: String,
    t: u64,
    mean: f64,
    sd: f64,
    ci95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub policy: String,
    /// `(t, mean, ci95)`
    pub points: Vec<(f64, f64, f64)>,
}

/// Parses an aggregate CSV (`policy,t,mean,sd,ci95`) into one series per
/// policy, in order of first appearance.
pub fn read_aggregate(text: &str) -> Result<Vec<Series>, CliError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = rd
        .headers()
        .map_err(|e| CliError::Config(format!("aggregate CSV header: {e}")))?
        .clone();
    let expected = ["policy", "t", "mean", "sd", "ci95"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Config(format!(
            "aggregate CSV row 1: expected header `{}`, found `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut series: Vec<Series> = Vec::new();
    for (k, rec) in rd.deserialize::<Row>().enumerate() {
        let row_no = k + 2;
        let row = rec.map_err(|e| CliError::Config(format!("aggregate CSV row {row_no}: {e}")))?;
        if ![row.mean, row.sd, row.ci95].iter().all(|v| v.is_finite()) || row.sd < 0.0 || row.ci95 < 0.0 {
            return Err(CliError::Config(format!(
                "aggregate CSV row {row_no}: values must be finite with non-negative sd and ci95"
            )));
        }
        let point = (row.t as f64, row.mean, row.ci95);
        match series.iter_mut().find(|s| s.policy == row.policy) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                policy: row.policy,
                points: vec![point],
            }),
        }
    }
    if series.is_empty() {
        return Err(CliError::Config("aggregate CSV has no data rows".into()));
    }
    Ok(series)
}

/// Round step for about `n` ticks over `[0, max]`.
fn tick_step(max: f64, n: f64) -> f64 {
    let raw = max / n;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_svg(series: &[Series]) -> String {
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(1.0, f64::max);
    let y_top = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1 + p.2))
        .fold(0.0, f64::max);
    let y_max = if y_top > 0.0 { y_top * 1.05 } else { 1.0 };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + ph - y.max(0.0) / y_max * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    let xs = tick_step(x_max, 5.0);
    let ys = tick_step(y_max, 5.0);
    let mut k = 0.0;
    while k * xs <= x_max + 1e-9 * x_max {
        let x = sx(k * xs);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 18.0,
            label(k * xs)
        );
        k += 1.0;
    }
    let mut k = 0.0;
    while k * ys <= y_max {
        let y = sy(k * ys);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            label(k * ys)
        );
        k += 1.0;
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">mean regret</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1 + p.2)))
            .collect();
        let lower: Vec<String> = s
            .points
            .iter()
            .rev()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1 - p.2)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 20.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            LEFT + 15.0,
            LEFT + 40.0,
            LEFT + 46.0,
            ly + 4.0,
            escape(&s.policy)
        );
    }
    out.push_str("</svg>\n");
    out
}
