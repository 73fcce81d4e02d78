//! Plan and rating data model, file ingestion, and feature encoding.
//!
//! A catalog row describes one purchasable plan. Two of its fields (premium
//! tier and coverage region) are hard filters and never enter a similarity
//! vector; the remaining ten are encoded into a dense vector in `[0, 1]`.

mod encode;
mod load;
mod preference;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encode::{encode_plan, encode_preference, EncodingSchema, FeatureVector, SchemaId};
pub use load::{
    load_catalog, load_ratings, parse_catalog, parse_ratings, scan_catalog, scan_catalog_file, write_catalog,
    CatalogScan, FileFormat, LoadReport, RowWarning, Violation, CATALOG_COLUMNS, RATINGS_COLUMNS,
};
pub use preference::{FieldError, PreferenceInput};

pub const MIN_TIER: u8 = 1;
pub const MAX_TIER: u8 = 4;
pub const MAX_EYE_CARE_LEVEL: u8 = 3;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file at line {line}: {message}")]
    MalformedFile { line: u64, message: String },
    #[error("{} schema violation(s); first: {}", .violations.len(), .violations.first().map(ToString::to_string).unwrap_or_default())]
    SchemaViolation { violations: Vec<Violation> },
    #[error("empty catalog: the file contains no plans")]
    EmptyCatalog,
}

/// Geographic reach of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CoverageRegion {
    #[serde(rename = "lagos")]
    LagosOnly,
    #[serde(rename = "nationwide")]
    Nationwide,
}

impl CoverageRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverageRegion::LagosOnly => "lagos",
            CoverageRegion::Nationwide => "nationwide",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lagos" => Some(CoverageRegion::LagosOnly),
            "nationwide" => Some(CoverageRegion::Nationwide),
            _ => None,
        }
    }
}

/// Where the user needs to be covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Lagos,
    Nationwide,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Lagos => "lagos",
            Location::Nationwide => "nationwide",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lagos" => Some(Location::Lagos),
            "nationwide" => Some(Location::Nationwide),
            _ => None,
        }
    }

    /// A plan is reachable when its coverage includes the user's location.
    pub fn is_covered_by(self, region: CoverageRegion) -> bool {
        match self {
            Location::Lagos => true,
            Location::Nationwide => region == CoverageRegion::Nationwide,
        }
    }
}

/// Admission ward comfort, ordinal ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WardType {
    General,
    SemiPrivate,
    Private,
}

impl WardType {
    pub const ALL: [WardType; 3] = [WardType::General, WardType::SemiPrivate, WardType::Private];

    pub fn as_str(self) -> &'static str {
        match self {
            WardType::General => "general",
            WardType::SemiPrivate => "semi_private",
            WardType::Private => "private",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general" => Some(WardType::General),
            "semi_private" => Some(WardType::SemiPrivate),
            "private" => Some(WardType::Private),
            _ => None,
        }
    }

    /// 1-based position in the comfort ordering.
    pub fn ordinal(self) -> u8 {
        match self {
            WardType::General => 1,
            WardType::SemiPrivate => 2,
            WardType::Private => 3,
        }
    }
}

/// The yes/no service benefits a plan may carry and a user may ask for.
///
/// Declaration order is the slot order of the encoded vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceFeature {
    FamilyPlanning,
    MentalHealth,
    DentalCare,
    Telemedicine,
    CashbackBenefit,
    AncDelivery,
    GymMembership,
    AnnualScreening,
}

impl ServiceFeature {
    pub const ALL: [ServiceFeature; 8] = [
        ServiceFeature::FamilyPlanning,
        ServiceFeature::MentalHealth,
        ServiceFeature::DentalCare,
        ServiceFeature::Telemedicine,
        ServiceFeature::CashbackBenefit,
        ServiceFeature::AncDelivery,
        ServiceFeature::GymMembership,
        ServiceFeature::AnnualScreening,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ServiceFeature::FamilyPlanning => "family_planning",
            ServiceFeature::MentalHealth => "mental_health",
            ServiceFeature::DentalCare => "dental_care",
            ServiceFeature::Telemedicine => "telemedicine",
            ServiceFeature::CashbackBenefit => "cashback_benefit",
            ServiceFeature::AncDelivery => "anc_delivery",
            ServiceFeature::GymMembership => "gym_membership",
            ServiceFeature::AnnualScreening => "annual_screening",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for ServiceFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One insurance plan as listed in the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub plan_id: String,
    pub hmo_id: String,
    pub hmo_name: String,
    pub plan_name: String,
    pub premium_tier: u8,
    pub coverage_region: CoverageRegion,
    pub family_planning: bool,
    pub mental_health: bool,
    pub dental_care: bool,
    pub telemedicine: bool,
    pub cashback_benefit: bool,
    pub anc_delivery: bool,
    pub gym_membership: bool,
    pub annual_screening: bool,
    pub ward_type: WardType,
    pub eye_care_limit_level: u8,
}

impl PlanRecord {
    pub fn has(&self, feature: ServiceFeature) -> bool {
        match feature {
            ServiceFeature::FamilyPlanning => self.family_planning,
            ServiceFeature::MentalHealth => self.mental_health,
            ServiceFeature::DentalCare => self.dental_care,
            ServiceFeature::Telemedicine => self.telemedicine,
            ServiceFeature::CashbackBenefit => self.cashback_benefit,
            ServiceFeature::AncDelivery => self.anc_delivery,
            ServiceFeature::GymMembership => self.gym_membership,
            ServiceFeature::AnnualScreening => self.annual_screening,
        }
    }

    pub fn set(&mut self, feature: ServiceFeature, value: bool) {
        let slot = match feature {
            ServiceFeature::FamilyPlanning => &mut self.family_planning,
            ServiceFeature::MentalHealth => &mut self.mental_health,
            ServiceFeature::DentalCare => &mut self.dental_care,
            ServiceFeature::Telemedicine => &mut self.telemedicine,
            ServiceFeature::CashbackBenefit => &mut self.cashback_benefit,
            ServiceFeature::AncDelivery => &mut self.anc_delivery,
            ServiceFeature::GymMembership => &mut self.gym_membership,
            ServiceFeature::AnnualScreening => &mut self.annual_screening,
        };
        *slot = value;
    }
}

/// A user's query: hard constraints plus desired benefits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserPreference {
    pub location: Location,
    pub max_tier: u8,
    /// Always holds every [`ServiceFeature`]; unanswered questions are `false`.
    pub desired: BTreeMap<ServiceFeature, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ward_preference: Option<WardType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eye_care_preference: Option<u8>,
}

impl UserPreference {
    /// A preference that asks for nothing beyond the hard constraints.
    pub fn new(location: Location, max_tier: u8) -> Self {
        UserPreference {
            location,
            max_tier,
            desired: ServiceFeature::ALL.into_iter().map(|f| (f, false)).collect(),
            ward_preference: None,
            eye_care_preference: None,
        }
    }

    pub fn with(mut self, features: &[ServiceFeature]) -> Self {
        for f in features {
            self.desired.insert(*f, true);
        }
        self
    }

    pub fn wants(&self, feature: ServiceFeature) -> bool {
        self.desired.get(&feature).copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub hmo_id: String,
    pub mean_rating: f64,
    pub rating_count: u64,
}

/// Aggregate HMO ratings keyed by `hmo_id`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ratings {
    by_hmo: BTreeMap<String, RatingRecord>,
}

impl Ratings {
    pub fn new(records: impl IntoIterator<Item = RatingRecord>) -> Self {
        Ratings {
            by_hmo: records.into_iter().map(|r| (r.hmo_id.clone(), r)).collect(),
        }
    }

    pub fn get(&self, hmo_id: &str) -> Option<&RatingRecord> {
        self.by_hmo.get(hmo_id)
    }

    /// Mean rating of an HMO; unrated HMOs score 0.0.
    pub fn mean_rating(&self, hmo_id: &str) -> f64 {
        self.get(hmo_id).map_or(0.0, |r| r.mean_rating)
    }

    pub fn len(&self) -> usize {
        self.by_hmo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hmo.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RatingRecord> {
        self.by_hmo.values()
    }
}

/// A validated, immutable list of plans with an id index.
#[derive(Debug, Clone)]
pub struct Catalog {
    plans: Vec<PlanRecord>,
    index: HashMap<String, usize>,
    report: LoadReport,
}

impl Catalog {
    /// Builds a catalog from already-valid records. Fails on duplicate ids,
    /// out-of-range values, or an empty list.
    pub fn from_plans(plans: Vec<PlanRecord>) -> Result<Self, CatalogError> {
        let mut violations = Vec::new();
        for (i, plan) in plans.iter().enumerate() {
            let issues = load::record_issues(plan);
            if !issues.is_empty() {
                violations.push(Violation {
                    line: i as u64 + 1,
                    plan_id: Some(plan.plan_id.clone()),
                    message: issues.join("; "),
                });
            }
        }
        if !violations.is_empty() {
            return Err(CatalogError::SchemaViolation { violations });
        }
        let report = LoadReport {
            rows: plans.len(),
            ..LoadReport::default()
        };
        Self::assemble(plans, report)
    }

    pub(crate) fn assemble(plans: Vec<PlanRecord>, report: LoadReport) -> Result<Self, CatalogError> {
        if plans.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        let mut index = HashMap::with_capacity(plans.len());
        let mut violations = Vec::new();
        for (i, plan) in plans.iter().enumerate() {
            if index.insert(plan.plan_id.clone(), i).is_some() {
                violations.push(Violation {
                    line: i as u64 + 1,
                    plan_id: Some(plan.plan_id.clone()),
                    message: format!("duplicate plan_id {:?}", plan.plan_id),
                });
            }
        }
        if !violations.is_empty() {
            return Err(CatalogError::SchemaViolation { violations });
        }
        Ok(Catalog { plans, index, report })
    }

    pub fn plans(&self) -> &[PlanRecord] {
        &self.plans
    }

    pub fn get(&self, plan_id: &str) -> Option<&PlanRecord> {
        self.index.get(plan_id).map(|&i| &self.plans[i])
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn into_plans(self) -> Vec<PlanRecord> {
        self.plans
    }
}
