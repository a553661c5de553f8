//! The `verify` subcommand: replays theorem-bound and conversion checks
//! against the artifacts of a completed run.

use std::collections::BTreeMap;
use std::path::Path;

use unixgrad::diagnostics::{check_curve, TheoremBound};
use unixgrad::solver::OptimizerKind;

use crate::artifacts::{format_g17, load_traces, read_manifest, StoredTrace};

const MIN_EXPECTATION_SEEDS: usize = 20;

#[derive(Debug, Default)]
pub struct VerifySummary {
    pub checks: Vec<CheckLine>,
    pub skipped: Vec<String>,
    /// Strict-mode violations (insufficient seeds, missing constants).
    pub strict_issues: Vec<String>,
}

#[derive(Debug)]
pub struct CheckLine {
    pub optimizer: String,
    pub name: String,
    pub t: usize,
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
}

impl VerifySummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn is_solver(kind: OptimizerKind) -> bool {
    matches!(
        kind,
        OptimizerKind::UniXGrad | OptimizerKind::MirrorProx | OptimizerKind::OptimisticMd
    )
}

/// Recomputes the lag-one step size from the recorded weights and gradient
/// differences and compares against the stored eta column.
fn eta_consistency(trace: &StoredTrace, diameter: f64) -> Result<(), String> {
    let mut acc = 0.0f64;
    for row in &trace.rows {
        let expected = 2.0 * diameter / (1.0 + acc).sqrt();
        let rel = (row.eta - expected).abs() / expected.max(1e-300);
        if rel > 1e-9 {
            return Err(format!(
                "eta inconsistent at iter {}: stored {} vs recomputed {}",
                row.iter, row.eta, expected
            ));
        }
        acc += row.alpha * row.alpha * row.grad_diff_norm * row.grad_diff_norm;
    }
    Ok(())
}

pub fn verify_dir(dir: &Path, strict: bool) -> anyhow::Result<(VerifySummary, bool)> {
    let manifest = read_manifest(dir)?;
    let traces = load_traces(dir)?;
    anyhow::ensure!(!traces.is_empty(), "no trace CSVs in {}", dir.display());
    let checkpoints = manifest
        .config
        .run
        .checkpoints
        .resolve(manifest.config.run.horizon)?;
    let stochastic = manifest.config.oracle.is_stochastic();
    let meta = &manifest.meta;

    let mut summary = VerifySummary::default();

    if meta.f_star.is_none() {
        summary
            .skipped
            .push("no reference objective: theorem and conversion checks skipped".into());
        if strict {
            summary
                .strict_issues
                .push("missing reference objective".into());
        }
    }

    let mut grouped: BTreeMap<String, Vec<&StoredTrace>> = BTreeMap::new();
    for trace in &traces {
        grouped.entry(trace.optimizer.clone()).or_default().push(trace);
    }

    for (name, runs) in &grouped {
        let Some(kind) = OptimizerKind::from_name(name) else {
            summary.skipped.push(format!("unknown optimizer `{name}`"));
            continue;
        };
        if !is_solver(kind) {
            summary
                .skipped
                .push(format!("{name}: no convergence guarantee to check"));
            continue;
        }

        // CSV-level integrity of the adaptive step size
        for run in runs {
            if let Err(msg) = eta_consistency(run, meta.diameter) {
                summary.checks.push(CheckLine {
                    optimizer: name.clone(),
                    name: "eta-consistency".into(),
                    t: 0,
                    observed: f64::NAN,
                    bound: f64::NAN,
                    passed: false,
                });
                summary.skipped.push(format!("{name} seed {}: {msg}", run.seed));
            }
        }

        let Some(f_star) = meta.f_star else { continue };
        let _ = f_star;

        if kind != OptimizerKind::UniXGrad {
            summary.skipped.push(format!(
                "{name}: bounds are stated for the weighted-average scheme only"
            ));
            continue;
        }

        if !stochastic {
            for run in runs {
                // regret-to-rate conversion at the final iterate
                let last = run.rows.last().expect("nonempty trace");
                let t = last.iter as f64;
                let lhs = last.suboptimality;
                let rhs = 2.0 * last.regret_cum / (t * t) + 1e-9;
                summary.checks.push(CheckLine {
                    optimizer: name.clone(),
                    name: "regret-conversion".into(),
                    t: last.iter,
                    observed: lhs,
                    bound: rhs,
                    passed: lhs <= rhs,
                });

                let curve: Vec<(usize, f64)> = checkpoints
                    .iter()
                    .filter(|&&t| t <= run.rows.len())
                    .map(|&t| (t, run.rows[t - 1].suboptimality))
                    .collect();
                push_bound_checks(&mut summary, name, meta, &curve, false);
            }
        } else {
            if runs.len() < MIN_EXPECTATION_SEEDS {
                let msg = format!(
                    "{name}: expectation checks need >= {MIN_EXPECTATION_SEEDS} seeds, found {}",
                    runs.len()
                );
                summary.skipped.push(msg.clone());
                if strict {
                    summary.strict_issues.push(msg);
                }
                continue;
            }
            // mean suboptimality curve across seeds
            let mut curve = Vec::new();
            for &t in checkpoints.iter().filter(|&&t| t <= runs[0].rows.len()) {
                let mean = runs
                    .iter()
                    .map(|r| r.rows[t - 1].suboptimality)
                    .sum::<f64>()
                    / runs.len() as f64;
                curve.push((t, mean));
            }
            push_bound_checks(&mut summary, name, meta, &curve, true);
        }
    }

    let report = render_report_csv(&summary);
    std::fs::write(dir.join("verify_report.csv"), report)?;

    let exit_ok = summary.all_passed();
    Ok((summary, exit_ok))
}

fn push_bound_checks(
    summary: &mut VerifySummary,
    name: &str,
    meta: &crate::artifacts::ManifestMeta,
    curve: &[(usize, f64)],
    stochastic: bool,
) {
    let mut apply = |theorem: TheoremBound| {
        let report = check_curve(
            theorem,
            curve,
            meta.diameter,
            meta.smoothness,
            Some(meta.grad_bound),
            meta.noise,
        );
        match report {
            Ok(report) => {
                for point in &report.points {
                    summary.checks.push(CheckLine {
                        optimizer: name.to_string(),
                        name: theorem.name().to_string(),
                        t: point.t,
                        observed: point.observed,
                        bound: point.bound,
                        passed: point.margin >= 0.0,
                    });
                }
            }
            Err(e) => summary
                .skipped
                .push(format!("{name} {}: {e}", theorem.name())),
        }
    };
    if stochastic {
        apply(TheoremBound::NonsmoothStoch);
        if meta.smoothness.is_some() && meta.noise.is_some() {
            apply(TheoremBound::SmoothStoch);
        }
    } else {
        apply(TheoremBound::NonsmoothDet);
        if meta.smoothness.is_some() {
            apply(TheoremBound::SmoothDet);
        }
    }
}

fn render_report_csv(summary: &VerifySummary) -> String {
    let mut out = String::from("optimizer,check,t,observed,bound,margin,passed\n");
    for line in &summary.checks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            line.optimizer,
            line.name,
            line.t,
            format_g17(line.observed),
            format_g17(line.bound),
            format_g17(line.bound - line.observed),
            line.passed
        ));
    }
    out
}

pub fn print_summary(summary: &VerifySummary) {
    println!(
        "{:<14} {:<24} {:>8} {:>14} {:>14} {:>14} {:>6}",
        "optimizer", "check", "t", "observed", "bound", "margin", "pass"
    );
    for line in &summary.checks {
        println!(
            "{:<14} {:<24} {:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>6}",
            line.optimizer,
            line.name,
            line.t,
            line.observed,
            line.bound,
            line.bound - line.observed,
            if line.passed { "ok" } else { "FAIL" }
        );
    }
    for note in &summary.skipped {
        println!("note: {note}");
    }
}

/// Exit codes: 0 all checks pass, 1 a check failed, 4 strict-mode issues.
pub fn cmd_verify(dir: &Path, strict: bool) -> anyhow::Result<u8> {
    let (summary, ok) = verify_dir(dir, strict)?;
    print_summary(&summary);
    if strict && !summary.strict_issues.is_empty() {
        for issue in &summary.strict_issues {
            eprintln!("strict: {issue}");
        }
        return Ok(4);
    }
    Ok(if ok { 0 } else { 1 })
}
