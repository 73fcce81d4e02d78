//! Cosine-vs-KNN agreement harness over seeded random preferences.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{Location, ServiceFeature, UserPreference, MAX_TIER, MIN_TIER};
use crate::pipeline::{recommend, similarity_pool, RecommendError, RecommendationRequest, Snapshot};
use crate::simeng::Metric;

/// Draws one preference. Draw order: location (fair coin, heads = Lagos),
/// tier uniform in 1..=4, then each feature of [`ServiceFeature::ALL`] in
/// order with probability 0.5. Ward and eye-care preferences stay unset.
pub fn random_preference<R: Rng + ?Sized>(rng: &mut R) -> UserPreference {
    let location = if rng.random_bool(0.5) {
        Location::Lagos
    } else {
        Location::Nationwide
    };
    let max_tier = rng.random_range(MIN_TIER..=MAX_TIER);
    let mut pref = UserPreference::new(location, max_tier);
    for f in ServiceFeature::ALL {
        pref.desired.insert(f, rng.random_bool(0.5));
    }
    pref
}

/// `n` preferences from a ChaCha8 stream seeded with `seed`.
pub fn seeded_preferences(n: usize, seed: u64) -> Vec<UserPreference> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_preference(&mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Compared,
    EmptyPreference,
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub preference: UserPreference,
    pub status: TrialStatus,
    /// Best plan by similarity alone, before the rating rerank.
    pub cosine_top1: Option<String>,
    pub knn_top1: Option<String>,
    /// Final recommended plan ids.
    pub cosine_top3: Vec<String>,
    pub knn_top3: Vec<String>,
    pub top1_agree: Option<bool>,
    pub top3_jaccard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub trials: usize,
    pub compared: usize,
    pub skipped_empty_preference: usize,
    pub skipped_no_candidates: usize,
    /// `None` when no trial could be compared.
    pub top1_agreement_rate: Option<f64>,
    pub mean_top3_jaccard: Option<f64>,
    pub per_trial: Vec<TrialOutcome>,
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}%", v * 100.0));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "trials: {} ({} compared, {} empty preference, {} no candidates)",
            self.trials, self.compared, self.skipped_empty_preference, self.skipped_no_candidates
        );
        let _ = writeln!(s, "top-1 agreement: {}", pct(self.top1_agreement_rate));
        let _ = writeln!(
            s,
            "mean top-3 Jaccard: {}",
            self.mean_top3_jaccard
                .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
        );
        let disagreements = self.per_trial.iter().filter(|t| t.top1_agree == Some(false)).count();
        let _ = writeln!(s, "top-1 disagreements: {disagreements}");
        s
    }
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<&String> = a.iter().collect();
    let b: BTreeSet<&String> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

fn run_metric(
    snapshot: &Snapshot,
    pref: &UserPreference,
    metric: Metric,
) -> Result<(Option<String>, Vec<String>), RecommendError> {
    let request = RecommendationRequest::new(pref.clone()).with_metric(metric);
    let top1 = similarity_pool(&request, snapshot)?
        .into_iter()
        .next()
        .map(|c| c.plan_id);
    let top3 = recommend(&request, snapshot)?.into_iter().map(|r| r.plan_id).collect();
    Ok((top1, top3))
}

/// Runs both metrics over each preference in order.
pub fn compare_preferences(snapshot: &Snapshot, prefs: &[UserPreference]) -> CompareReport {
    let mut per_trial = Vec::with_capacity(prefs.len());
    for (trial, pref) in prefs.iter().enumerate() {
        let cosine = run_metric(snapshot, pref, Metric::Cosine);
        let knn = run_metric(snapshot, pref, Metric::EuclideanKnn);
        let outcome = match (cosine, knn) {
            (Ok((c1, c3)), Ok((k1, k3))) => TrialOutcome {
                trial,
                preference: pref.clone(),
                status: TrialStatus::Compared,
                top1_agree: Some(c1 == k1),
                top3_jaccard: Some(jaccard(&c3, &k3)),
                cosine_top1: c1,
                knn_top1: k1,
                cosine_top3: c3,
                knn_top3: k3,
            },
            (c, k) => {
                let status = match (&c, &k) {
                    (Err(RecommendError::NoCandidates), _) | (_, Err(RecommendError::NoCandidates)) => {
                        TrialStatus::NoCandidates
                    }
                    _ => TrialStatus::EmptyPreference,
                };
                let (cosine_top1, cosine_top3) = c.unwrap_or_default();
                let (knn_top1, knn_top3) = k.unwrap_or_default();
                TrialOutcome {
                    trial,
                    preference: pref.clone(),
                    status,
                    cosine_top1,
                    knn_top1,
                    cosine_top3,
                    knn_top3,
                    top1_agree: None,
                    top3_jaccard: None,
                }
            }
        };
        per_trial.push(outcome);
    }

    let compared: Vec<&TrialOutcome> = per_trial.iter().filter(|t| t.status == TrialStatus::Compared).collect();
    let n = compared.len();
    let (top1_agreement_rate, mean_top3_jaccard) = if n == 0 {
        (None, None)
    } else {
        let agree = compared.iter().filter(|t| t.top1_agree == Some(true)).count();
        let jac: f64 = compared.iter().filter_map(|t| t.top3_jaccard).sum();
        (Some(agree as f64 / n as f64), Some(jac / n as f64))
    };
    let count = |s| per_trial.iter().filter(|t| t.status == s).count();

    CompareReport {
        schema_id: snapshot.schema_id().to_string(),
        seed: None,
        trials: prefs.len(),
        compared: n,
        skipped_empty_preference: count(TrialStatus::EmptyPreference),
        skipped_no_candidates: count(TrialStatus::NoCandidates),
        top1_agreement_rate,
        mean_top3_jaccard,
        per_trial,
    }
}

/// `trials` seeded random preferences, compared under both metrics.
pub fn compare_seeded(snapshot: &Snapshot, trials: usize, seed: u64) -> CompareReport {
    let prefs = seeded_preferences(trials, seed);
    CompareReport {
        seed: Some(seed),
        ..compare_preferences(snapshot, &prefs)
    }
}
