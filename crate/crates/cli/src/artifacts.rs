//! On-disk run artifacts: per-run CSV traces and the run manifest.
//!
//! CSV schema (fixed order): `iter,alpha,eta,objective,suboptimality,
//! regret_cum,grad_diff_norm`. Floats carry 17 significant digits so double
//! precision round-trips exactly and reruns diff byte-for-byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use unixgrad::solver::RunTrace;

use crate::config::ExperimentConfig;

pub const CSV_HEADER: &str = "iter,alpha,eta,objective,suboptimality,regret_cum,grad_diff_norm";
pub const MANIFEST_NAME: &str = "manifest.toml";

/// 17-significant-digit scientific notation; the shortest form that is
/// guaranteed lossless for f64.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_file_name(optimizer: &str, seed: u64) -> String {
    format!("{optimizer}_seed{seed}.csv")
}

/// Renders a trace to CSV text.
pub fn trace_to_csv(trace: &RunTrace, f_star: Option<f64>) -> String {
    let mut out = String::with_capacity(96 * (trace.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut regret_cum = 0.0f64;
    let mut have_regret = true;
    for r in &trace.records {
        match r.regret_increment {
            Some(inc) => regret_cum += inc,
            None => have_regret = false,
        }
        let suboptimality = match f_star {
            Some(fs) => r.objective - fs,
            None => f64::NAN,
        };
        let regret = if have_regret { regret_cum } else { f64::NAN };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t,
            format_g17(r.alpha),
            format_g17(r.eta),
            format_g17(r.objective),
            format_g17(suboptimality),
            format_g17(regret),
            format_g17(r.grad_diff_norm),
        ));
    }
    out
}

/// One parsed CSV row.
#[derive(Debug, Clone, Copy)]
pub struct CsvRow {
    pub iter: usize,
    pub alpha: f64,
    pub eta: f64,
    pub objective: f64,
    pub suboptimality: f64,
    pub regret_cum: f64,
    pub grad_diff_norm: f64,
}

/// A trace file read back from disk.
#[derive(Debug, Clone)]
pub struct StoredTrace {
    pub optimizer: String,
    pub seed: u64,
    pub rows: Vec<CsvRow>,
}

pub fn parse_csv(text: &str, optimizer: String, seed: u64) -> anyhow::Result<StoredTrace> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow::anyhow!("empty CSV"))?;
    anyhow::ensure!(header == CSV_HEADER, "unexpected CSV header `{header}`");
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(fields.len() == 7, "line {} has {} fields", i + 2, fields.len());
        let num = |s: &str| -> anyhow::Result<f64> {
            if s == "NaN" {
                Ok(f64::NAN)
            } else {
                Ok(s.parse::<f64>()?)
            }
        };
        rows.push(CsvRow {
            iter: fields[0].parse()?,
            alpha: num(fields[1])?,
            eta: num(fields[2])?,
            objective: num(fields[3])?,
            suboptimality: num(fields[4])?,
            regret_cum: num(fields[5])?,
            grad_diff_norm: num(fields[6])?,
        });
    }
    Ok(StoredTrace {
        optimizer,
        seed,
        rows,
    })
}

/// Loads every `{optimizer}_seed{N}.csv` in a run directory.
pub fn load_traces(dir: &Path) -> anyhow::Result<Vec<StoredTrace>> {
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    for path in entries {
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s,
            None => continue,
        };
        let Some((optimizer, seed_part)) = stem.rsplit_once("_seed") else {
            continue;
        };
        let Ok(seed) = seed_part.parse::<u64>() else {
            continue;
        };
        let text = std::fs::read_to_string(&path)?;
        out.push(parse_csv(&text, optimizer.to_string(), seed)?);
    }
    Ok(out)
}

/// Everything needed to replay and audit a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub meta: ManifestMeta,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestMeta {
    /// SHA-256 of the canonical TOML serialization of `[config]`.
    pub config_hash: String,
    /// Name of the pinned random number generator.
    pub rng: String,
    /// Bregman diameter the run used.
    pub diameter: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    pub grad_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    /// Reference objective; absent when the reference solve failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_error: Option<String>,
    /// Whether dataset columns were rescaled to the unit interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column_scaling: Option<bool>,
}

pub fn config_hash(config: &ExperimentConfig) -> anyhow::Result<String> {
    use sha2::{Digest, Sha256};
    let canonical = toml::to_string(config)?;
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> anyhow::Result<()> {
    let text = toml::to_string(manifest)?;
    std::fs::write(dir.join(MANIFEST_NAME), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> anyhow::Result<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(toml::from_str(&text)?)
}
