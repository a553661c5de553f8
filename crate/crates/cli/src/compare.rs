//! The `compare` subcommand: per-optimizer summary across seeds and a
//! static log-log SVG convergence plot.

use std::collections::BTreeMap;
use std::path::Path;

use crate::artifacts::{load_traces, read_manifest, StoredTrace};

/// Aggregated values of one optimizer at one checkpoint.
#[derive(Debug, Clone, Copy)]
pub struct Aggregate {
    pub t: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub seeds: usize,
}

pub struct Comparison {
    /// Stable (sorted) optimizer order.
    pub optimizers: Vec<String>,
    /// Per-optimizer aggregates; `None` marks a gap at that checkpoint.
    pub table: BTreeMap<String, Vec<Option<Aggregate>>>,
    pub checkpoints: Vec<usize>,
    /// True when suboptimality was available; otherwise raw objectives.
    pub uses_suboptimality: bool,
}

pub fn build_comparison(dir: &Path) -> anyhow::Result<Comparison> {
    let manifest = read_manifest(dir)?;
    let traces = load_traces(dir)?;
    anyhow::ensure!(!traces.is_empty(), "no trace CSVs in {}", dir.display());
    let checkpoints = manifest
        .config
        .run
        .checkpoints
        .resolve(manifest.config.run.horizon)?;
    let uses_suboptimality = manifest.meta.f_star.is_some();

    let mut grouped: BTreeMap<String, Vec<&StoredTrace>> = BTreeMap::new();
    for trace in &traces {
        grouped.entry(trace.optimizer.clone()).or_default().push(trace);
    }

    let mut table = BTreeMap::new();
    for (optimizer, runs) in &grouped {
        // all runs of one optimizer must expose the same checkpoints
        let grids: Vec<Vec<usize>> = runs
            .iter()
            .map(|r| {
                checkpoints
                    .iter()
                    .copied()
                    .filter(|t| *t <= r.rows.len())
                    .collect()
            })
            .collect();
        if grids.windows(2).any(|w| w[0] != w[1]) {
            anyhow::bail!("mismatched checkpoint grids across seeds of `{optimizer}`");
        }
        let mut per_checkpoint = Vec::with_capacity(checkpoints.len());
        for &t in &checkpoints {
            let mut values = Vec::new();
            for run in runs {
                if t <= run.rows.len() {
                    let row = run.rows[t - 1];
                    debug_assert_eq!(row.iter, t);
                    let v = if uses_suboptimality {
                        row.suboptimality
                    } else {
                        row.objective
                    };
                    values.push(v);
                }
            }
            if values.is_empty() {
                per_checkpoint.push(None);
            } else {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                per_checkpoint.push(Some(Aggregate {
                    t,
                    mean,
                    min,
                    max,
                    seeds: values.len(),
                }));
            }
        }
        table.insert(optimizer.clone(), per_checkpoint);
    }

    Ok(Comparison {
        optimizers: grouped.keys().cloned().collect(),
        table,
        checkpoints,
        uses_suboptimality,
    })
}

pub fn print_table(cmp: &Comparison) {
    let metric = if cmp.uses_suboptimality {
        "suboptimality"
    } else {
        "objective (no reference)"
    };
    println!("metric: {metric}; mean [min, max] over seeds");
    println!("{:<14} {:>8} {:>14} {:>14} {:>14} {:>6}", "optimizer", "t", "mean", "min", "max", "seeds");
    for optimizer in &cmp.optimizers {
        for agg in cmp.table[optimizer].iter() {
            match agg {
                Some(a) => println!(
                    "{:<14} {:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>6}",
                    optimizer, a.t, a.mean, a.min, a.max, a.seeds
                ),
                None => println!("{:<14} {:>8} {:>14} {:>14} {:>14} {:>6}", optimizer, "-", "-", "-", "-", 0),
            }
        }
    }
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Renders a log-log line plot with min-max bands to SVG markup.
pub fn render_svg(cmp: &Comparison, title: &str) -> String {
    let width = 820.0;
    let height = 560.0;
    let margin_l = 80.0;
    let margin_r = 170.0;
    let margin_t = 50.0;
    let margin_b = 60.0;
    let plot_w = width - margin_l - margin_r;
    let plot_h = height - margin_t - margin_b;

    // positive floor keeps exact zeros plottable on the log axis
    let floor = 1e-17;
    let mut x_min = f64::INFINITY;
    let mut x_max: f64 = 0.0;
    let mut y_min = f64::INFINITY;
    let mut y_max: f64 = 0.0;
    for aggs in cmp.table.values() {
        for agg in aggs.iter().flatten() {
            x_min = x_min.min(agg.t as f64);
            x_max = x_max.max(agg.t as f64);
            for v in [agg.mean, agg.min, agg.max] {
                let v = v.max(floor);
                y_min = y_min.min(v);
                y_max = y_max.max(v);
            }
        }
    }
    if !x_min.is_finite() || y_max <= 0.0 {
        x_min = 1.0;
        x_max = 10.0;
        y_min = 0.1;
        y_max = 1.0;
    }
    if y_min == y_max {
        y_min /= 10.0;
    }
    let (lx0, lx1) = (x_min.log10(), x_max.log10().max(x_min.log10() + 1e-9));
    let (ly0, ly1) = (y_min.log10(), y_max.log10().max(y_min.log10() + 1e-9));
    let sx = move |t: f64| margin_l + (t.log10() - lx0) / (lx1 - lx0) * plot_w;
    let sy = move |v: f64| {
        let v = v.max(floor);
        margin_t + plot_h - (v.log10() - ly0) / (ly1 - ly0) * plot_h
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        margin_l + plot_w / 2.0
    ));

    // frame
    svg.push_str(&format!(
        "<rect x=\"{margin_l}\" y=\"{margin_t}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\"/>\n"
    ));

    // decade ticks
    for exp in (lx0.floor() as i64)..=(lx1.ceil() as i64) {
        let t = 10f64.powi(exp as i32);
        if t < x_min * 0.999 || t > x_max * 1.001 {
            continue;
        }
        let x = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{margin_t}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>\n",
            margin_t + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{exp}</text>\n",
            margin_t + plot_h + 18.0
        ));
    }
    for exp in (ly0.floor() as i64)..=(ly1.ceil() as i64) {
        let v = 10f64.powi(exp as i32);
        if v < y_min * 0.999 || v > y_max * 1.001 {
            continue;
        }
        let y = sy(v);
        svg.push_str(&format!(
            "<line x1=\"{margin_l}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n",
            margin_l + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{exp}</text>\n",
            margin_l - 8.0
        ));
    }

    // axis labels
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">iteration</text>\n",
        margin_l + plot_w / 2.0,
        height - 14.0
    ));
    let metric = if cmp.uses_suboptimality { "suboptimality" } else { "objective" };
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{metric}</text>\n",
        margin_t + plot_h / 2.0,
        margin_t + plot_h / 2.0
    ));

    // series
    for (i, optimizer) in cmp.optimizers.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<&Aggregate> = cmp.table[optimizer].iter().flatten().collect();
        if points.is_empty() {
            continue;
        }
        // min-max band
        if points.iter().any(|a| a.seeds > 1) {
            let mut band = String::from("<polygon points=\"");
            for a in &points {
                band.push_str(&format!("{:.2},{:.2} ", sx(a.t as f64), sy(a.max)));
            }
            for a in points.iter().rev() {
                band.push_str(&format!("{:.2},{:.2} ", sx(a.t as f64), sy(a.min)));
            }
            band.push_str(&format!("\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"));
            svg.push_str(&band);
        }
        let mut line = String::from("<polyline points=\"");
        for a in &points {
            line.push_str(&format!("{:.2},{:.2} ", sx(a.t as f64), sy(a.mean)));
        }
        line.push_str(&format!(
            "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n"
        ));
        svg.push_str(&line);
        // legend entry
        let ly = margin_t + 16.0 + 20.0 * i as f64;
        let lx = margin_l + plot_w + 14.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{optimizer}</text>\n",
            lx + 28.0,
            ly + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

pub fn cmd_compare(dir: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let cmp = build_comparison(dir)?;
    print_table(&cmp);
    let svg = render_svg(&cmp, &format!("convergence: {}", dir.display()));
    let out_path = out
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| dir.join("compare.svg"));
    std::fs::write(&out_path, svg)?;
    println!("wrote {}", out_path.display());
    Ok(())
}
