//! Deterministic SVG learning-curve plots from metrics CSVs, plus a merged
//! comparison table. Byte output depends only on the input files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    /// (policy_updates, eval_success_rate) per epoch row.
    pub points: Vec<(f64, f64)>,
}

pub fn read_metrics_csv(path: &Path) -> Result<Curve> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty metrics file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column '{name}'", path.display())))
    };
    let updates_idx = col("policy_updates")?;
    let success_idx = col("eval_success_rate")?;
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64> {
            fields
                .get(idx)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("{}: malformed row {}", path.display(), i + 2)))
        };
        points.push((parse(updates_idx)?, parse(success_idx)?));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Curve { label, points })
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 60.0;

/// Success-rate-vs-policy-updates curves, one per input CSV, with the file
/// stems as legend entries.
pub fn render_svg(curves: &[Curve]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::Config("plot requires at least one metrics CSV".into()));
    }
    let x_max = curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .fold(1.0_f64, f64::max);
    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let x_of = |u: f64| MARGIN_L + u / x_max * plot_w;
    let y_of = |s: f64| MARGIN_T + (1.0 - s) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L,
        H - MARGIN_B,
        W - MARGIN_R,
        H - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L, MARGIN_T, MARGIN_L, H - MARGIN_B
    ));
    // y ticks at 0, 0.25, 0.5, 0.75, 1.0
    for i in 0..=4 {
        let s = i as f64 * 0.25;
        let y = y_of(s);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\"/>\n",
            MARGIN_L,
            W - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{s:.2}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        ));
    }
    // x ticks: 5 evenly spaced
    for i in 0..=5 {
        let u = x_max * i as f64 / 5.0;
        let x = x_of(u);
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{u:.0}</text>\n",
            H - MARGIN_B + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">policy updates</text>\n",
        MARGIN_L + plot_w / 2.0,
        H - 15.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">eval success rate</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));
    for (ci, curve) in curves.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let path: Vec<String> = curve
            .points
            .iter()
            .map(|(u, s)| format!("{:.2},{:.2}", x_of(*u), y_of(*s)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        // legend
        let ly = MARGIN_T + 10.0 + 18.0 * ci as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            MARGIN_L + 10.0,
            MARGIN_L + 40.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>\n",
            MARGIN_L + 46.0,
            ly + 4.0,
            xml_escape(&curve.label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Side-by-side summary of the plotted runs.
pub fn render_comparison_table(curves: &[Curve]) -> String {
    let mut out = String::from("run,epochs,final_success_rate,best_success_rate,updates_to_0.8\n");
    for c in curves {
        let final_s = c.points.last().map(|p| p.1).unwrap_or(0.0);
        let best = c.points.iter().map(|p| p.1).fold(0.0_f64, f64::max);
        let to80 = c
            .points
            .iter()
            .find(|p| p.1 >= 0.8)
            .map(|p| format!("{:.0}", p.0))
            .unwrap_or_else(|| "never".to_string());
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{}\n",
            c.label,
            c.points.len(),
            final_s,
            best,
            to80
        ));
    }
    out
}

/// Render curves from CSVs to `out` (SVG) and `<out>.table.csv`.
pub fn plot(csv_paths: &[PathBuf], out: &Path) -> Result<()> {
    let curves: Vec<Curve> = csv_paths
        .iter()
        .map(|p| read_metrics_csv(p))
        .collect::<Result<_>>()?;
    let svg = render_svg(&curves)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, svg)?;
    let table_path = out.with_extension("table.csv");
    std::fs::write(table_path, render_comparison_table(&curves))?;
    Ok(())
}
