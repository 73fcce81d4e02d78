//! Cosine similarity and Euclidean-distance KNN scoring with deterministic top-k.
//!
//! All sums run left to right over the slots in a single pass, so identical
//! inputs always give bit-identical scores and rankings.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{FeatureVector, SchemaId};

/// Candidate pool size handed to the rating rerank.
pub const DEFAULT_K: usize = 5;

/// Grid (2⁻⁴⁰ ≈ 9.1e-13) on which scores are compared for ranking.
///
/// Encoded vectors hold thirds, which are inexact in binary, so two plans
/// with mathematically equal scores can come out an ulp apart depending on
/// which slots are set. Snapping to this grid lets such ties reach the
/// documented tie-breakers instead of being decided by rounding noise.
pub const SCORE_RESOLUTION: f64 = 1.0 / (1u64 << 40) as f64;

/// The value a score is ranked by: the nearest multiple of [`SCORE_RESOLUTION`].
pub fn rank_key(score: f64) -> f64 {
    (score / SCORE_RESOLUTION).round()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("cosine similarity is undefined for a zero-norm vector")]
    ZeroVector,
    #[error("vectors come from different encoding schemas ({left} vs {right})")]
    SchemaMismatch { left: SchemaId, right: SchemaId },
    #[error("vector dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Metric {
    #[default]
    #[serde(rename = "cosine")]
    Cosine,
    #[serde(rename = "knn")]
    EuclideanKnn,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::EuclideanKnn => "knn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" => Some(Metric::Cosine),
            "knn" | "euclidean" | "euclidean_knn" => Some(Metric::EuclideanKnn),
            _ => None,
        }
    }

    /// Orders two scores so that the better one comes first.
    ///
    /// Scores are compared at [`SCORE_RESOLUTION`]: values that agree to
    /// that grid are equal here and fall through to the tie-breakers.
    pub fn compare(self, a: f64, b: f64) -> Ordering {
        let (a, b) = (rank_key(a), rank_key(b));
        match self {
            Metric::Cosine => b.total_cmp(&a),
            Metric::EuclideanKnn => a.total_cmp(&b),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub plan_id: String,
    /// Similarity for cosine, distance for KNN.
    pub score: f64,
    pub metric: Metric,
}

fn check_compatible(a: &FeatureVector, b: &FeatureVector) -> Result<(), SimError> {
    if a.schema_id() != b.schema_id() {
        return Err(SimError::SchemaMismatch {
            left: a.schema_id().clone(),
            right: b.schema_id().clone(),
        });
    }
    if a.len() != b.len() {
        return Err(SimError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Cosine of the angle between two equal-length slices.
///
/// Returns `None` when either slice has zero norm. The result is clamped to
/// `[-1, 1]` to absorb rounding on (near-)parallel inputs.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return None;
    }
    // sqrt of the product keeps self-similarity exactly 1.0
    Some((dot / (norm_a * norm_b).sqrt()).clamp(-1.0, 1.0))
}

/// Straight-line distance between two equal-length slices.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64, SimError> {
    check_compatible(a, b)?;
    cosine(a.values(), b.values()).ok_or(SimError::ZeroVector)
}

pub fn euclidean_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64, SimError> {
    check_compatible(a, b)?;
    Ok(euclidean(a.values(), b.values()))
}

pub fn score(metric: Metric, query: &FeatureVector, candidate: &FeatureVector) -> Result<f64, SimError> {
    match metric {
        Metric::Cosine => cosine_similarity(query, candidate),
        Metric::EuclideanKnn => euclidean_distance(query, candidate),
    }
}

/// Top-`k` candidates by score with ties broken by plan id.
pub fn rank_candidates<S, V>(
    query: &FeatureVector,
    candidates: &[(S, V)],
    metric: Metric,
    k: usize,
) -> Result<Vec<ScoredCandidate>, SimError>
where
    S: AsRef<str>,
    V: AsRef<FeatureVector>,
{
    rank_candidates_by(query, candidates, metric, k, |_| None)
}

/// Top-`k` candidates under the total order: score (per metric direction),
/// then higher tie-break rating, then lexicographic plan id.
///
/// `tie_rating` returns the rating used between equal scores; `None` for
/// every candidate reduces the order to (score, plan id).
pub fn rank_candidates_by<S, V, F>(
    query: &FeatureVector,
    candidates: &[(S, V)],
    metric: Metric,
    k: usize,
    tie_rating: F,
) -> Result<Vec<ScoredCandidate>, SimError>
where
    S: AsRef<str>,
    V: AsRef<FeatureVector>,
    F: Fn(&str) -> Option<f64>,
{
    if k == 0 {
        return Err(SimError::InvalidK);
    }
    if metric == Metric::Cosine && query.is_zero() {
        return Err(SimError::ZeroVector);
    }
    let mut scored = candidates
        .iter()
        .map(|(id, vector)| {
            let id = id.as_ref();
            let s = score(metric, query, vector.as_ref())?;
            Ok((s, tie_rating(id).unwrap_or(0.0), id))
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    scored.sort_by(|a, b| {
        metric
            .compare(a.0, b.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| a.2.cmp(b.2))
    });
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(score, _, id)| ScoredCandidate {
            plan_id: id.to_string(),
            score,
            metric,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec(), SchemaId::new("test")).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&fv(&[1.0, 0.0]), &fv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(
            cosine_similarity(&fv(&[1.0, 1.0, 0.0]), &fv(&[1.0, 1.0, 0.0])).unwrap(),
            1.0
        );
        let half = cosine_similarity(&fv(&[1.0, 1.0, 0.0]), &fv(&[1.0, 0.0, 0.0])).unwrap();
        assert!((half - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn rounding_noise_is_a_tie() {
        // sqrt(3/7) reached through two different slot patterns.
        let (a, b) = (0.6546536707079772, 0.6546536707079771);
        assert_eq!(Metric::Cosine.compare(a, b), Ordering::Equal);
        assert_eq!(Metric::EuclideanKnn.compare(a, b), Ordering::Equal);
        assert_eq!(Metric::Cosine.compare(0.66, 0.65), Ordering::Less);
        assert_eq!(Metric::EuclideanKnn.compare(0.66, 0.65), Ordering::Greater);
    }

    #[test]
    fn cosine_zero_vector_errors() {
        assert_eq!(
            cosine_similarity(&fv(&[0.0, 0.0]), &fv(&[1.0, 0.0])),
            Err(SimError::ZeroVector)
        );
        assert_eq!(
            cosine_similarity(&fv(&[1.0, 0.0]), &fv(&[0.0, 0.0])),
            Err(SimError::ZeroVector)
        );
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(&fv(&[0.0, 0.0]), &fv(&[0.0, 0.0])).unwrap(), 0.0);
        let d = euclidean_distance(&fv(&[0.0, 0.0]), &fv(&[1.0, 1.0])).unwrap();
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn mismatches_rejected() {
        let other = FeatureVector::new(vec![1.0, 0.0], SchemaId::new("other")).unwrap();
        assert!(matches!(
            euclidean_distance(&fv(&[1.0, 0.0]), &other),
            Err(SimError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            cosine_similarity(&fv(&[1.0, 0.0]), &fv(&[1.0, 0.0, 0.0])),
            Err(SimError::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    fn pool() -> Vec<(String, FeatureVector)> {
        vec![
            ("c".to_string(), fv(&[1.0, 0.0, 0.0])),
            ("a".to_string(), fv(&[0.0, 1.0, 1.0])),
            ("b".to_string(), fv(&[1.0, 1.0, 0.0])),
            ("d".to_string(), fv(&[0.0, 1.0, 1.0])),
        ]
    }

    #[test]
    fn self_match_ranks_first() {
        let q = fv(&[1.0, 1.0, 0.0]);
        let cos = rank_candidates(&q, &pool(), Metric::Cosine, 5).unwrap();
        assert_eq!(cos[0].plan_id, "b");
        assert_eq!(cos[0].score, 1.0);
        assert_eq!(cos.len(), 4);
        let knn = rank_candidates(&q, &pool(), Metric::EuclideanKnn, 2).unwrap();
        assert_eq!(knn[0].plan_id, "b");
        assert_eq!(knn[0].score, 0.0);
        assert_eq!(knn.len(), 2);
    }

    #[test]
    fn ties_break_by_rating_then_plan_id() {
        let q = fv(&[0.0, 1.0, 1.0]);
        let by_id = rank_candidates(&q, &pool(), Metric::Cosine, 2).unwrap();
        assert_eq!([by_id[0].plan_id.as_str(), by_id[1].plan_id.as_str()], ["a", "d"]);

        let by_rating = rank_candidates_by(&q, &pool(), Metric::Cosine, 2, |id| (id == "d").then_some(4.0)).unwrap();
        assert_eq!(
            [by_rating[0].plan_id.as_str(), by_rating[1].plan_id.as_str()],
            ["d", "a"]
        );
    }

    #[test]
    fn zero_query_under_cosine() {
        let q = fv(&[0.0, 0.0, 0.0]);
        assert_eq!(
            rank_candidates(&q, &pool(), Metric::Cosine, 3),
            Err(SimError::ZeroVector)
        );
        let knn = rank_candidates(&q, &pool(), Metric::EuclideanKnn, 1).unwrap();
        assert_eq!(knn[0].plan_id, "c");
    }

    #[test]
    fn k_zero_rejected() {
        assert_eq!(
            rank_candidates(&fv(&[1.0, 0.0, 0.0]), &pool(), Metric::Cosine, 0),
            Err(SimError::InvalidK)
        );
    }

    #[test]
    fn metric_names() {
        assert_eq!(Metric::parse("KNN"), Some(Metric::EuclideanKnn));
        assert_eq!(Metric::parse("cosine"), Some(Metric::Cosine));
        assert_eq!(Metric::parse("manhattan"), None);
        assert_eq!(serde_json::to_string(&Metric::EuclideanKnn).unwrap(), "\"knn\"");
    }
}
