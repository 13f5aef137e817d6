//! Privacy and utility metrics: cosine scoring, equal error rate, ROC AUC and
//! a deterministic reference embedder for pipeline tests.

mod embed;
mod files;
mod roc;

pub use embed::{reference_embed, EMBEDDING_DIM, MEL_BANDS};
pub use files::{read_embeddings, read_labeled_scores, read_scores};
pub use roc::{compute_auc, compute_eer, Eer};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding has zero norm")]
    ZeroNormEmbedding,
    #[error("genuine and impostor score lists must both be non-empty")]
    EmptyScores,
    #[error("need at least one positive and one negative label")]
    DegenerateLabels,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score or embedding component")]
    NonFinite,
    #[error("audio yields {frames} frames, at least 3 needed")]
    AudioTooShort { frames: usize },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    pub source_id: String,
    pub vector: Vec<T>,
}

impl<T: Real> Embedding<T> {
    pub fn new(source_id: impl Into<String>, vector: Vec<T>) -> Result<Self, MetricsError> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        Ok(Self { source_id: source_id.into(), vector })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> T {
        self.vector.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

/// Verification trial scores: same-speaker (`genuine`) and different-speaker (`impostor`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet<T> {
    pub genuine: Vec<T>,
    pub impostor: Vec<T>,
}

/// Classifier scores with binary labels; `true` marks the positive (pathological) class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledScores<T> {
    pub scores: Vec<T>,
    pub labels: Vec<bool>,
}

pub fn cosine_similarity<T: Real>(a: &Embedding<T>, b: &Embedding<T>) -> Result<T, MetricsError> {
    if a.dim() != b.dim() {
        return Err(MetricsError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(MetricsError::ZeroNormEmbedding);
    }
    let dot: T = a.vector.iter().zip(&b.vector).map(|(&x, &y)| x * y).sum();
    Ok((dot / (na * nb)).max(-T::one()).min(T::one()))
}
