//! Dataset ingestion (LIBSVM text format), train/test splitting and
//! synthetic problem generators.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

mod synthetic;
pub use synthetic::{
    generate_l1_planted, generate_ls, generate_two_class, PlantedL1Params, SyntheticLs,
    SyntheticLsParams, TwoClassParams,
};

/// One labeled sparse example; feature indices are 1-based, strictly
/// increasing and unique within a row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub label: f64,
    pub features: Vec<(u32, f64)>,
}

impl SparseRow {
    /// Dot product with a dense vector (`x` is 0-indexed, features 1-based).
    pub fn dot(&self, x: &Array1<f64>) -> f64 {
        self.features
            .iter()
            .map(|(idx, val)| val * x[(*idx - 1) as usize])
            .sum()
    }

    /// `out += scale * row` as a dense update.
    pub fn add_scaled_into(&self, out: &mut Array1<f64>, scale: f64) {
        for (idx, val) in &self.features {
            out[(*idx - 1) as usize] += scale * val;
        }
    }

    pub fn norm(&self) -> f64 {
        self.features
            .iter()
            .map(|(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// A labeled sparse dataset in LIBSVM layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<SparseRow>,
    /// Largest feature index seen (the feature-space dimension).
    pub dim: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Serializes back to LIBSVM text. Parsing the output reproduces the
    /// dataset exactly (floats are written with round-trip precision).
    pub fn to_libsvm_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&format_float(row.label));
            for (idx, val) in &row.features {
                out.push(' ');
                out.push_str(&idx.to_string());
                out.push(':');
                out.push_str(&format_float(*val));
            }
            out.push('\n');
        }
        out
    }

    /// Rescales each feature column to `[0, 1]` over its observed values.
    /// Constant columns map to zero. Returns the per-column (min, max)
    /// ranges that were applied.
    pub fn scale_columns(&mut self) -> Vec<(f64, f64)> {
        let mut min = vec![f64::INFINITY; self.dim];
        let mut max = vec![f64::NEG_INFINITY; self.dim];
        for row in &self.rows {
            for (idx, val) in &row.features {
                let j = (*idx - 1) as usize;
                min[j] = min[j].min(*val);
                max[j] = max[j].max(*val);
            }
        }
        for row in &mut self.rows {
            for (idx, val) in &mut row.features {
                let j = (*idx - 1) as usize;
                let range = max[j] - min[j];
                *val = if range > 0.0 { (*val - min[j]) / range } else { 0.0 };
            }
        }
        min.into_iter().zip(max).collect()
    }
}

fn format_float(v: f64) -> String {
    // Shortest representation that round-trips; integers stay compact.
    let mut s = format!("{v}");
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Parses LIBSVM text: `label idx:val idx:val ...` per line, 1-based strictly
/// increasing indices, `#` starting a comment. Two-class raw labels are
/// remapped to -1/+1 in ascending order (e.g. `{2, 4}` becomes `{-1, +1}`).
pub fn parse_libsvm<R: Read>(reader: R) -> Result<SparseDataset> {
    let reader = BufReader::new(reader);
    let mut rows = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let label_tok = match tokens.next() {
            Some(t) => t,
            None => continue, // blank or comment-only line
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("label `{label_tok}` is not a number"),
        })?;
        let mut features: Vec<(u32, f64)> = Vec::new();
        let mut last_idx = 0u32;
        for tok in tokens {
            let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("feature `{tok}` is missing an index:value colon"),
            })?;
            let idx: i64 = idx_str.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("feature index `{idx_str}` is not an integer"),
            })?;
            if idx <= 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("feature index must be >= 1, got {idx}"),
                });
            }
            let idx = idx as u32;
            if idx <= last_idx {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!(
                        "feature indices must be strictly increasing ({last_idx} then {idx})"
                    ),
                });
            }
            let val: f64 = val_str.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("feature value `{val_str}` is not a number"),
            })?;
            features.push((idx, val));
            last_idx = idx;
        }
        dim = dim.max(last_idx as usize);
        rows.push(SparseRow { label, features });
    }
    let mut dataset = SparseDataset { rows, dim };
    remap_two_class_labels(&mut dataset);
    Ok(dataset)
}

fn remap_two_class_labels(dataset: &mut SparseDataset) {
    let mut distinct: Vec<f64> = Vec::new();
    for row in &dataset.rows {
        if !distinct.iter().any(|l| *l == row.label) {
            distinct.push(row.label);
        }
        if distinct.len() > 2 {
            return;
        }
    }
    if distinct.len() != 2 {
        return;
    }
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if distinct == [-1.0, 1.0] {
        return;
    }
    for row in &mut dataset.rows {
        row.label = if row.label == distinct[0] { -1.0 } else { 1.0 };
    }
}

/// Reads a LIBSVM file from disk; `.gz` paths are decompressed transparently.
pub fn read_libsvm_path(path: &Path) -> Result<SparseDataset> {
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        parse_libsvm(flate2::read::GzDecoder::new(file))
    } else {
        parse_libsvm(file)
    }
}

/// Seeded uniform shuffle split into disjoint, exhaustive train/test parts
/// with `|train| = round(train_fraction * n)`.
pub fn split(
    dataset: &SparseDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(SparseDataset, SparseDataset)> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 rows to split, got {n}")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let train_size = (train_fraction * n as f64).round() as usize;
    if train_size == 0 || train_size == n {
        return Err(Error::Config(format!(
            "fraction {train_fraction} leaves an empty side for n = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let pick = |ids: &[usize]| SparseDataset {
        rows: ids.iter().map(|&i| dataset.rows[i].clone()).collect(),
        dim: dataset.dim,
    };
    Ok((pick(&order[..train_size]), pick(&order[train_size..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_row() {
        let ds = parse_libsvm("+1 1:0.5 3:-2\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dim, 3);
        assert_eq!(ds.rows[0].label, 1.0);
        assert_eq!(ds.rows[0].features, vec![(1, 0.5), (3, -2.0)]);
    }

    #[test]
    fn parses_label_only_row() {
        let ds = parse_libsvm("1\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.rows[0].label, 1.0);
        assert!(ds.rows[0].features.is_empty());
    }

    #[test]
    fn rejects_nonpositive_index() {
        let err = parse_libsvm("1 0:3\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_increasing_indices() {
        assert!(parse_libsvm("1 2:1 2:2\n".as_bytes()).is_err());
        assert!(parse_libsvm("1 3:1 2:2\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_bad_tokens_with_line_numbers() {
        let err = parse_libsvm("1 1:1\nx 1:1\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_libsvm("1 1:abc\n".as_bytes()).is_err());
        assert!(parse_libsvm("1 1\n".as_bytes()).is_err());
    }

    #[test]
    fn strips_comments() {
        let ds = parse_libsvm("# header\n1 1:2 # trailing\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.rows[0].features, vec![(1, 2.0)]);
    }

    #[test]
    fn maps_two_class_labels_ascending() {
        let ds = parse_libsvm("2 1:1\n4 1:2\n2 1:3\n".as_bytes()).unwrap();
        let labels: Vec<f64> = ds.rows.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![-1.0, 1.0, -1.0]);
    }

    #[test]
    fn keeps_pm1_and_multiclass_labels() {
        let ds = parse_libsvm("-1 1:1\n1 1:2\n".as_bytes()).unwrap();
        assert_eq!(ds.rows[0].label, -1.0);
        let ds = parse_libsvm("1 1:1\n2 1:2\n3 1:3\n".as_bytes()).unwrap();
        assert_eq!(ds.rows[2].label, 3.0);
    }

    #[test]
    fn split_sizes_and_partition() {
        let text: String = (0..10).map(|i| format!("{} 1:{}\n", if i % 2 == 0 { 1 } else { -1 }, i)).collect();
        let ds = parse_libsvm(text.as_bytes()).unwrap();
        let (train, test) = split(&ds, 0.8, 7).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let mut seen: Vec<f64> = train
            .rows
            .iter()
            .chain(test.rows.iter())
            .map(|r| r.features[0].1)
            .collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_deterministic() {
        let text: String = (0..20).map(|i| format!("1 1:{i}\n")).collect();
        let ds = parse_libsvm(text.as_bytes()).unwrap();
        let (a1, b1) = split(&ds, 0.75, 42).unwrap();
        let (a2, b2) = split(&ds, 0.75, 42).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn split_rejects_degenerate_inputs() {
        let ds = parse_libsvm("1 1:1\n".as_bytes()).unwrap();
        assert!(split(&ds, 0.8, 0).is_err());
        let ds = parse_libsvm("1 1:1\n-1 1:2\n".as_bytes()).unwrap();
        assert!(split(&ds, 0.0, 0).is_err());
        assert!(split(&ds, 1.0, 0).is_err());
    }

    #[test]
    fn roundtrip_serialization() {
        let ds = parse_libsvm("2 1:0.5 7:-1e-3\n4\n2 2:1024\n".as_bytes()).unwrap();
        let reparsed = parse_libsvm(ds.to_libsvm_text().as_bytes()).unwrap();
        assert_eq!(ds, reparsed);
    }

    #[test]
    fn gzip_roundtrip() {
        use std::io::Write;
        let text = "1 1:0.25 2:-3\n-1 2:7\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.txt.gz");
        let mut enc = flate2::write::GzEncoder::new(
            std::fs::File::create(&path).unwrap(),
            flate2::Compression::default(),
        );
        enc.write_all(text.as_bytes()).unwrap();
        enc.finish().unwrap();
        let ds = read_libsvm_path(&path).unwrap();
        assert_eq!(ds, parse_libsvm(text.as_bytes()).unwrap());
    }

    #[test]
    fn column_scaling_maps_to_unit_interval() {
        let mut ds = parse_libsvm("1 1:2 2:10\n-1 1:4 2:10\n1 1:6\n".as_bytes()).unwrap();
        ds.scale_columns();
        assert_eq!(ds.rows[0].features[0].1, 0.0);
        assert_eq!(ds.rows[1].features[0].1, 0.5);
        assert_eq!(ds.rows[2].features[0].1, 1.0);
        // constant column collapses to zero
        assert_eq!(ds.rows[0].features[1].1, 0.0);
    }
}
