use std::fmt;
use std::sync::Arc;

use super::{PlanRecord, ServiceFeature, UserPreference, WardType, MAX_EYE_CARE_LEVEL};

/// Identifies the slot layout a vector was produced under.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchemaId(Arc<str>);

impl SchemaId {
    pub fn new(id: &str) -> Self {
        SchemaId(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Slot layout: the eight service flags in [`ServiceFeature::ALL`] order,
/// then ward comfort, then eye-care limit level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingSchema {
    id: SchemaId,
}

impl EncodingSchema {
    pub const V1_ID: &'static str = "plansage-enc-v1";
    pub const DIMENSION: usize = 10;
    pub const WARD_SLOT: usize = 8;
    pub const EYE_CARE_SLOT: usize = 9;

    pub fn v1() -> Self {
        EncodingSchema {
            id: SchemaId::new(Self::V1_ID),
        }
    }

    pub fn id(&self) -> &SchemaId {
        &self.id
    }

    pub fn dimension(&self) -> usize {
        Self::DIMENSION
    }

    pub fn slot_names() -> [&'static str; Self::DIMENSION] {
        let mut names = [""; Self::DIMENSION];
        for (slot, f) in names.iter_mut().zip(ServiceFeature::ALL) {
            *slot = f.name();
        }
        names[Self::WARD_SLOT] = "ward_type";
        names[Self::EYE_CARE_SLOT] = "eye_care_limit_level";
        names
    }
}

impl Default for EncodingSchema {
    fn default() -> Self {
        Self::v1()
    }
}

/// Dense numeric encoding bound to the schema that produced it.
///
/// Encoders only emit components in `[0, 1]`; the constructor accepts any
/// finite values so scaled or synthetic vectors can be scored too.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    schema_id: SchemaId,
}

impl FeatureVector {
    /// Returns `None` if any component is NaN or infinite.
    pub fn new(values: Vec<f64>, schema_id: SchemaId) -> Option<Self> {
        values
            .iter()
            .all(|v| v.is_finite())
            .then_some(FeatureVector { values, schema_id })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema_id(&self) -> &SchemaId {
        &self.schema_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Component-wise multiple; `None` if the result overflows.
    pub fn scaled(&self, factor: f64) -> Option<Self> {
        FeatureVector::new(self.values.iter().map(|v| v * factor).collect(), self.schema_id.clone())
    }
}

impl AsRef<FeatureVector> for FeatureVector {
    fn as_ref(&self) -> &FeatureVector {
        self
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn ward_value(ward: WardType) -> f64 {
    f64::from(ward.ordinal()) / 3.0
}

fn eye_value(level: u8) -> f64 {
    f64::from(level) / f64::from(MAX_EYE_CARE_LEVEL)
}

/// Encodes a plan's service features. Tier and region are filter-only.
pub fn encode_plan(plan: &PlanRecord, schema: &EncodingSchema) -> FeatureVector {
    let mut values = Vec::with_capacity(EncodingSchema::DIMENSION);
    values.extend(ServiceFeature::ALL.iter().map(|&f| flag(plan.has(f))));
    values.push(ward_value(plan.ward_type));
    values.push(eye_value(plan.eye_care_limit_level));
    FeatureVector {
        values,
        schema_id: schema.id().clone(),
    }
}

/// Encodes a preference in the plan slot layout. Unset optional preferences
/// encode as 0.0; location and tier are filter-only.
pub fn encode_preference(pref: &UserPreference, schema: &EncodingSchema) -> FeatureVector {
    let mut values = Vec::with_capacity(EncodingSchema::DIMENSION);
    values.extend(ServiceFeature::ALL.iter().map(|&f| flag(pref.wants(f))));
    values.push(pref.ward_preference.map_or(0.0, ward_value));
    values.push(pref.eye_care_preference.map_or(0.0, eye_value));
    FeatureVector {
        values,
        schema_id: schema.id().clone(),
    }
}
