use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{Location, ServiceFeature, UserPreference, WardType, MAX_EYE_CARE_LEVEL, MAX_TIER, MIN_TIER};

/// A validation failure tied to a (dotted) input field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Untrusted preference JSON, validated into a [`UserPreference`].
///
/// Unanswered feature questions default to `false`; unknown feature names
/// and unknown keys are rejected.
pub struct PreferenceInput<'a> {
    obj: &'a Map<String, Value>,
    prefix: &'a str,
}

const KEYS: [&str; 5] = [
    "location",
    "max_tier",
    "desired",
    "ward_preference",
    "eye_care_preference",
];

impl<'a> PreferenceInput<'a> {
    /// `prefix` is prepended to field names in errors, e.g. `"preference."`.
    pub fn new(value: &'a Value, prefix: &'a str) -> Result<Self, Vec<FieldError>> {
        match value {
            Value::Object(obj) => Ok(PreferenceInput { obj, prefix }),
            _ => {
                let field = match prefix.trim_end_matches('.') {
                    "" => "preference",
                    p => p,
                };
                Err(vec![FieldError::new(field, "must be a JSON object")])
            }
        }
    }

    fn field(&self, name: &str) -> String {
        format!("{}{}", self.prefix, name)
    }

    pub fn validate(&self) -> Result<UserPreference, Vec<FieldError>> {
        let mut errors = Vec::new();

        for key in self.obj.keys() {
            if !KEYS.contains(&key.as_str()) {
                errors.push(FieldError::new(self.field(key), "unknown field"));
            }
        }

        let location = match self.obj.get("location") {
            None | Some(Value::Null) => {
                errors.push(FieldError::new(self.field("location"), "is required"));
                None
            }
            Some(v) => {
                let parsed = v.as_str().and_then(Location::parse);
                if parsed.is_none() {
                    errors.push(FieldError::new(
                        self.field("location"),
                        format!("must be \"lagos\" or \"nationwide\", got {v}"),
                    ));
                }
                parsed
            }
        };

        let max_tier = match self.obj.get("max_tier") {
            None | Some(Value::Null) => {
                errors.push(FieldError::new(self.field("max_tier"), "is required"));
                None
            }
            Some(v) => match v.as_i64() {
                Some(t) if (i64::from(MIN_TIER)..=i64::from(MAX_TIER)).contains(&t) => Some(t as u8),
                _ => {
                    errors.push(FieldError::new(
                        self.field("max_tier"),
                        format!("must be an integer in [{MIN_TIER}, {MAX_TIER}], got {v}"),
                    ));
                    None
                }
            },
        };

        let mut desired: std::collections::BTreeMap<ServiceFeature, bool> =
            ServiceFeature::ALL.into_iter().map(|f| (f, false)).collect();
        match self.obj.get("desired") {
            None | Some(Value::Null) => {}
            Some(Value::Object(map)) => {
                for (name, v) in map {
                    let field = self.field(&format!("desired.{name}"));
                    match (ServiceFeature::from_name(name), v.as_bool()) {
                        (None, _) => errors.push(FieldError::new(field, "unknown service feature")),
                        (Some(_), None) => {
                            errors.push(FieldError::new(field, format!("must be true or false, got {v}")))
                        }
                        (Some(f), Some(b)) => {
                            desired.insert(f, b);
                        }
                    }
                }
            }
            Some(v) => errors.push(FieldError::new(
                self.field("desired"),
                format!("must be an object of feature name to boolean, got {v}"),
            )),
        }

        let ward_preference = match self.obj.get("ward_preference") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let parsed = v.as_str().and_then(WardType::parse);
                if parsed.is_none() {
                    errors.push(FieldError::new(
                        self.field("ward_preference"),
                        format!("must be one of general, semi_private, private, got {v}"),
                    ));
                }
                parsed
            }
        };

        let eye_care_preference = match self.obj.get("eye_care_preference") {
            None | Some(Value::Null) => None,
            Some(v) => match v.as_i64() {
                Some(l) if (0..=i64::from(MAX_EYE_CARE_LEVEL)).contains(&l) => Some(l as u8),
                _ => {
                    errors.push(FieldError::new(
                        self.field("eye_care_preference"),
                        format!("must be an integer in [0, {MAX_EYE_CARE_LEVEL}], got {v}"),
                    ));
                    None
                }
            },
        };

        match (location, max_tier) {
            (Some(location), Some(max_tier)) if errors.is_empty() => Ok(UserPreference {
                location,
                max_tier,
                desired,
                ward_preference,
                eye_care_preference,
            }),
            _ => Err(errors),
        }
    }
}

impl UserPreference {
    /// Parses and validates preference JSON with unprefixed field names.
    pub fn from_json(value: &Value) -> Result<Self, Vec<FieldError>> {
        PreferenceInput::new(value, "")?.validate()
    }
}
