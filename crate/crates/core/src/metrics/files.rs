//! CSV readers for externally computed embeddings and scores.

use std::path::Path;

use super::{Embedding, LabeledScores, MetricsError, ScoreSet};
use crate::scalar::Real;

fn parse_err(path: &Path, message: impl Into<String>) -> MetricsError {
    MetricsError::Parse { path: path.display().to_string(), message: message.into() }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, MetricsError> {
    let file = std::fs::File::open(path)?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn number<T: Real>(path: &Path, line: usize, field: &str) -> Result<T, MetricsError> {
    let v: f64 = field.parse().map_err(|_| parse_err(path, format!("line {line}: bad number {field:?}")))?;
    if !v.is_finite() {
        return Err(MetricsError::NonFinite);
    }
    Ok(T::lit(v))
}

/// `utterance_id, v0, v1, ...`; every row must have the same dimension.
pub fn read_embeddings<T: Real>(path: impl AsRef<Path>) -> Result<Vec<Embedding<T>>, MetricsError> {
    let path = path.as_ref();
    let mut out: Vec<Embedding<T>> = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = i + 2;
        let id = record.get(0).ok_or_else(|| parse_err(path, format!("line {line}: empty row")))?;
        let vector = record.iter().skip(1).map(|f| number(path, line, f)).collect::<Result<Vec<T>, _>>()?;
        if let Some(first) = out.first() {
            if first.dim() != vector.len() {
                return Err(MetricsError::DimensionMismatch(first.dim(), vector.len()));
            }
        }
        out.push(Embedding::new(id, vector)?);
    }
    Ok(out)
}

/// `trial_id, kind, score` with `kind` one of `genuine` or `impostor`.
pub fn read_scores<T: Real>(path: impl AsRef<Path>) -> Result<ScoreSet<T>, MetricsError> {
    let path = path.as_ref();
    let mut set = ScoreSet { genuine: Vec::new(), impostor: Vec::new() };
    for (i, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = i + 2;
        if record.len() != 3 {
            return Err(parse_err(path, format!("line {line}: expected 3 fields")));
        }
        let score = number(path, line, &record[2])?;
        match &record[1] {
            "genuine" => set.genuine.push(score),
            "impostor" => set.impostor.push(score),
            other => return Err(parse_err(path, format!("line {line}: unknown trial kind {other:?}"))),
        }
    }
    Ok(set)
}

/// `utterance_id, score, label` with `label` 0 or 1 (1 = pathological).
pub fn read_labeled_scores<T: Real>(path: impl AsRef<Path>) -> Result<LabeledScores<T>, MetricsError> {
    let path = path.as_ref();
    let mut data = LabeledScores { scores: Vec::new(), labels: Vec::new() };
    for (i, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = i + 2;
        if record.len() != 3 {
            return Err(parse_err(path, format!("line {line}: expected 3 fields")));
        }
        data.scores.push(number(path, line, &record[1])?);
        data.labels.push(match &record[2] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(path, format!("line {line}: label {other:?} is not 0 or 1"))),
        });
    }
    Ok(data)
}
