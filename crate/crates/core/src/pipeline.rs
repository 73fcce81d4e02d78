//! Filter → score → top-K → rating rerank → top 3.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{
    encode_plan, encode_preference, load_catalog, load_ratings, Catalog, CatalogError, EncodingSchema, FeatureVector,
    FieldError, PlanRecord, PreferenceInput, Ratings, ServiceFeature, UserPreference,
};
use crate::simeng::{rank_candidates_by, Metric, ScoredCandidate, SimError, DEFAULT_K};

/// Number of plans returned to the user.
pub const FINAL_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecommendError {
    #[error("no plan matches the requested location and budget")]
    NoCandidates,
    #[error("select at least one feature: an empty preference has no direction under cosine similarity")]
    EmptyPreference,
    #[error(transparent)]
    Similarity(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationRequest {
    pub preference: UserPreference,
    pub metric: Metric,
    pool_size: usize,
}

const REQUEST_KEYS: [&str; 3] = ["preference", "metric", "pool_size"];

impl RecommendationRequest {
    pub fn new(preference: UserPreference) -> Self {
        RecommendationRequest {
            preference,
            metric: Metric::Cosine,
            pool_size: DEFAULT_K,
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    /// Values below the final count are raised to it.
    pub fn with_pool_size(mut self, pool_size: usize) -> Self {
        self.pool_size = pool_size.max(FINAL_COUNT);
        self
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    /// Validates request JSON of the form
    /// `{"preference": {...}, "metric": "cosine"|"knn", "pool_size": n}`.
    pub fn from_json(value: &Value, default_metric: Metric) -> Result<Self, Vec<FieldError>> {
        let Value::Object(obj) = value else {
            return Err(vec![FieldError::new("body", "must be a JSON object")]);
        };
        let mut errors: Vec<FieldError> = obj
            .keys()
            .filter(|k| !REQUEST_KEYS.contains(&k.as_str()))
            .map(|k| FieldError::new(k.clone(), "unknown field"))
            .collect();

        let preference = match obj.get("preference") {
            None | Some(Value::Null) => {
                errors.push(FieldError::new("preference", "is required"));
                None
            }
            Some(v) => match PreferenceInput::new(v, "preference.").and_then(|p| p.validate()) {
                Ok(p) => Some(p),
                Err(e) => {
                    errors.extend(e);
                    None
                }
            },
        };

        let metric = match obj.get("metric") {
            None | Some(Value::Null) => default_metric,
            Some(v) => v.as_str().and_then(Metric::parse).unwrap_or_else(|| {
                errors.push(FieldError::new(
                    "metric",
                    format!("must be \"cosine\" or \"knn\", got {v}"),
                ));
                default_metric
            }),
        };

        let pool_size = match obj.get("pool_size") {
            None | Some(Value::Null) => DEFAULT_K,
            Some(v) => match v.as_u64() {
                Some(n) if n >= 1 => n.min(u32::MAX as u64) as usize,
                _ => {
                    errors.push(FieldError::new(
                        "pool_size",
                        format!("must be a positive integer, got {v}"),
                    ));
                    DEFAULT_K
                }
            },
        };

        match preference {
            Some(preference) if errors.is_empty() => Ok(RecommendationRequest::new(preference)
                .with_metric(metric)
                .with_pool_size(pool_size)),
            _ => Err(errors),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub rank: u32,
    pub plan_id: String,
    pub hmo_id: String,
    pub hmo_name: String,
    pub plan_name: String,
    pub premium_tier: u8,
    pub similarity_score: f64,
    pub mean_rating: f64,
    pub matched_features: Vec<&'static str>,
}

/// Wire payload shared by the HTTP service, the CLI, and the C ABI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendResponse {
    pub code: &'static str,
    pub metric: Metric,
    pub schema_id: String,
    pub recommendations: Vec<Recommendation>,
}

impl RecommendResponse {
    pub fn is_empty(&self) -> bool {
        self.recommendations.is_empty()
    }

    /// Compact JSON plus a trailing newline; byte-stable for equal inputs.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("response serializes");
        s.push('\n');
        s
    }
}

/// Immutable catalog + ratings + precomputed plan vectors.
#[derive(Debug, Clone)]
pub struct Snapshot {
    catalog: Catalog,
    ratings: Ratings,
    schema: EncodingSchema,
    encoded: Vec<FeatureVector>,
    schema_id: String,
}

impl Snapshot {
    pub fn new(catalog: Catalog, ratings: Ratings) -> Self {
        let schema = EncodingSchema::v1();
        let encoded = catalog.plans().iter().map(|p| encode_plan(p, &schema)).collect();
        let schema_id = format!("{}-{}", schema.id(), content_digest(&catalog, &ratings));
        Snapshot {
            catalog,
            ratings,
            schema,
            encoded,
            schema_id,
        }
    }

    pub fn load(catalog_path: impl AsRef<Path>, ratings_path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let catalog = load_catalog(catalog_path)?;
        let ratings = load_ratings(ratings_path)?;
        Ok(Snapshot::new(catalog, ratings))
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn ratings(&self) -> &Ratings {
        &self.ratings
    }

    pub fn schema(&self) -> &EncodingSchema {
        &self.schema
    }

    /// Encoding schema id qualified by a digest of the loaded content.
    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn plan_vector(&self, index: usize) -> &FeatureVector {
        &self.encoded[index]
    }

    pub fn recommend(&self, request: &RecommendationRequest) -> Result<Vec<Recommendation>, RecommendError> {
        recommend(request, self)
    }

    /// Like [`Snapshot::recommend`] but folds `NoCandidates` into an empty
    /// `"no_candidates"` payload.
    pub fn respond(&self, request: &RecommendationRequest) -> Result<RecommendResponse, RecommendError> {
        let (code, recommendations) = match self.recommend(request) {
            Ok(recs) => ("ok", recs),
            Err(RecommendError::NoCandidates) => ("no_candidates", Vec::new()),
            Err(e) => return Err(e),
        };
        Ok(RecommendResponse {
            code,
            metric: request.metric,
            schema_id: self.schema_id.clone(),
            recommendations,
        })
    }
}

fn content_digest(catalog: &Catalog, ratings: &Ratings) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(catalog.plans()).expect("plans serialize"));
    for r in ratings.iter() {
        hasher.update(serde_json::to_vec(r).expect("ratings serialize"));
    }
    hasher.finalize()[..6].iter().map(|b| format!("{b:02x}")).collect()
}

/// Plans within the user's budget whose coverage reaches the user.
pub fn prefilter<'a>(plans: &'a [PlanRecord], pref: &UserPreference) -> Vec<&'a PlanRecord> {
    plans.iter().filter(|p| is_eligible(p, pref)).collect()
}

pub fn is_eligible(plan: &PlanRecord, pref: &UserPreference) -> bool {
    plan.premium_tier <= pref.max_tier && pref.location.is_covered_by(plan.coverage_region)
}

/// Picks the final plans from a similarity-ordered pool: highest HMO rating
/// first (unrated = 0.0), then earlier pool position, then plan id.
pub fn rerank_by_rating(pool: &[ScoredCandidate], ratings: &Ratings, catalog: &Catalog) -> Vec<ScoredCandidate> {
    let rating_of = |c: &ScoredCandidate| catalog.get(&c.plan_id).map_or(0.0, |p| ratings.mean_rating(&p.hmo_id));
    let mut order: Vec<(usize, f64, &ScoredCandidate)> =
        pool.iter().enumerate().map(|(i, c)| (i, rating_of(c), c)).collect();
    order.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0.cmp(&b.0))
            .then_with(|| a.2.plan_id.cmp(&b.2.plan_id))
    });
    order.into_iter().take(FINAL_COUNT).map(|(_, _, c)| c.clone()).collect()
}

pub fn matched_features(plan: &PlanRecord, pref: &UserPreference) -> Vec<&'static str> {
    ServiceFeature::ALL
        .into_iter()
        .filter(|&f| plan.has(f) && pref.wants(f))
        .map(ServiceFeature::name)
        .collect()
}

/// The similarity-ordered top-`pool_size` eligible plans, before the rating rerank.
pub fn similarity_pool(
    request: &RecommendationRequest,
    snapshot: &Snapshot,
) -> Result<Vec<ScoredCandidate>, RecommendError> {
    let pref = &request.preference;
    let query = encode_preference(pref, snapshot.schema());
    if request.metric == Metric::Cosine && query.is_zero() {
        return Err(RecommendError::EmptyPreference);
    }

    let plans = snapshot.catalog.plans();
    let eligible: Vec<(&str, &FeatureVector)> = plans
        .iter()
        .zip(&snapshot.encoded)
        .filter(|(p, _)| is_eligible(p, pref))
        .map(|(p, v)| (p.plan_id.as_str(), v))
        .collect();
    if eligible.is_empty() {
        return Err(RecommendError::NoCandidates);
    }

    let ratings = &snapshot.ratings;
    let catalog = &snapshot.catalog;
    Ok(rank_candidates_by(
        &query,
        &eligible,
        request.metric,
        request.pool_size,
        |id| catalog.get(id).map(|p| ratings.mean_rating(&p.hmo_id)),
    )?)
}

pub fn recommend(request: &RecommendationRequest, snapshot: &Snapshot) -> Result<Vec<Recommendation>, RecommendError> {
    let pool = similarity_pool(request, snapshot)?;
    let pref = &request.preference;
    let ratings = &snapshot.ratings;
    let catalog = &snapshot.catalog;
    Ok(rerank_by_rating(&pool, ratings, catalog)
        .into_iter()
        .zip(1..)
        .map(|(c, rank)| {
            let plan = catalog.get(&c.plan_id).expect("pool ids come from the catalog");
            Recommendation {
                rank,
                plan_id: plan.plan_id.clone(),
                hmo_id: plan.hmo_id.clone(),
                hmo_name: plan.hmo_name.clone(),
                plan_name: plan.plan_name.clone(),
                premium_tier: plan.premium_tier,
                similarity_score: c.score,
                mean_rating: ratings.mean_rating(&plan.hmo_id),
                matched_features: matched_features(plan, pref),
            }
        })
        .collect())
}
