use std::fs;
use std::io::Write;
use std::path::Path;

use super::{class_labels, document_vectors, EvalStats};
use crate::corpus::EvalCorpus;
use crate::error::{Result, TesaError};
use crate::reinforcement::{LambdaSchedule, ReinforcedSpace};
use crate::vectors::SparseVector;

/// `<label> <dim+1>:<weight> ...` per document; labels are 1-based.
pub fn write_sparse_features(path: &Path, rows: &[(usize, SparseVector)]) -> Result<()> {
    let mut out = Vec::new();
    for (label, v) in rows {
        if v.is_zero() {
            writeln!(out, "{label}").expect("in-memory write");
        } else {
            writeln!(out, "{label} {}", v.to_text(true)).expect("in-memory write");
        }
    }
    fs::write(path, out).map_err(|e| TesaError::io(format!("writing {}", path.display()), e))
}

/// Inverse of [`write_sparse_features`]: labels stay 1-based, dims 0-based.
pub fn read_sparse_features(path: &Path) -> Result<Vec<(usize, SparseVector)>> {
    let content = fs::read_to_string(path).map_err(|e| TesaError::io(format!("reading {}", path.display()), e))?;
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let parse_err = |message: String| TesaError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut fields = line.split_whitespace();
        let Some(label) = fields.next() else { continue };
        let label: usize = label.parse().map_err(|_| parse_err(format!("bad label {label:?}")))?;
        let mut pairs = Vec::new();
        for field in fields {
            let (dim, weight) = field
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected dim:weight, got {field:?}")))?;
            let dim: u32 = dim.parse().map_err(|_| parse_err(format!("bad dimension {dim:?}")))?;
            if dim == 0 {
                return Err(parse_err("dimensions are 1-based".into()));
            }
            let weight: f64 = weight
                .parse()
                .map_err(|_| parse_err(format!("bad weight {weight:?}")))?;
            pairs.push((dim - 1, weight));
        }
        rows.push((label, SparseVector::from_pairs(pairs)));
    }
    Ok(rows)
}

/// Document vectors under `lambda` written in the sparse-feature format, with
/// labels numbered by `corpus.classes` order.
pub fn export_sparse_features(
    rs: &ReinforcedSpace<'_>,
    corpus: &EvalCorpus,
    stats: &EvalStats,
    lambda: &LambdaSchedule,
    path: &Path,
) -> Result<()> {
    let labels = class_labels(corpus);
    let vectors = document_vectors(rs, stats, lambda);
    let rows: Vec<(usize, SparseVector)> = labels.into_iter().map(|l| l + 1).zip(vectors).collect();
    write_sparse_features(path, &rows)
}
