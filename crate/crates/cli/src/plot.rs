//! Minimal SVG line charts for the CSV files written by `analyze`, `train`
//! and `eval`.

use std::fmt::Write as _;
use std::fs;

use crate::commands::{require_file, write_text, CliError};
use crate::PlotArgs;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or("empty CSV")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| format!("row {}: non-numeric value", i + 2))?;
            if row.len() != header.len() {
                return Err(format!(
                    "row {}: {} values for {} columns",
                    i + 2,
                    row.len(),
                    header.len()
                ));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err("CSV has no data rows".into());
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize, String> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("no column '{name}' (have {})", self.header.join(", ")))
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders the `ys` columns of `table` against `x` as polylines.
pub fn render_svg(table: &Table, x: usize, ys: &[usize], title: &str) -> String {
    let (x0, x1) = span(table.rows.iter().map(|r| r[x]));
    let (y0, y1) = span(
        table
            .rows
            .iter()
            .flat_map(|r| ys.iter().map(move |&c| r[c])),
    );
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} V{bottom} H{right}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="{}">{}</text>"#,
        bottom + 16.0,
        fmt_num(x0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{right}" y="{}" text-anchor="end">{}</text>"#,
        bottom + 16.0,
        fmt_num(x1)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        bottom + 32.0,
        escape(&table.header[x])
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{bottom}" text-anchor="end">{}</text>"#,
        left - 4.0,
        fmt_num(y0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        left - 4.0,
        top + 4.0,
        fmt_num(y1)
    );

    for (i, &c) in ys.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = table
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r[x]), py(r[c])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            right,
            top + 14.0 * (i as f64 + 1.0),
            escape(&table.header[c])
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_num(v: f64) -> String {
    format!("{v:.3}")
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn run(a: PlotArgs) -> Result<(), CliError> {
    require_file(&a.csv)?;
    let text = fs::read_to_string(&a.csv)
        .map_err(|e| CliError::io(format!("reading {}: {e}", a.csv.display())))?;
    let bad = |e: String| CliError::usage(format!("{}: {e}", a.csv.display()));
    let table = Table::parse(&text).map_err(bad)?;
    let x = match &a.x {
        Some(name) => table.column(name).map_err(bad)?,
        None => 0,
    };
    let ys: Vec<usize> = if a.y.is_empty() {
        (0..table.header.len()).filter(|&c| c != x).collect()
    } else {
        a.y.iter()
            .map(|n| table.column(n))
            .collect::<Result<_, _>>()
            .map_err(bad)?
    };
    if ys.is_empty() {
        return Err(CliError::usage(
            "nothing to plot: the CSV has a single column",
        ));
    }
    let title = a.title.unwrap_or_else(|| {
        a.csv
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    write_text(&a.out, &render_svg(&table, x, &ys, &title))?;
    println!("series={} points={}", ys.len(), table.rows.len());
    Ok(())
}
