//! Content-based health insurance plan recommender.
//!
//! Plans are pre-filtered by the user's location and affordable premium tier,
//! scored against the user's encoded preference with cosine similarity or
//! Euclidean-distance KNN, and the top of that pool is reranked by aggregate
//! HMO rating to produce three recommendations.
//!
//! ```
//! use plansage::catalog::{Location, Ratings, ServiceFeature, UserPreference};
//! use plansage::pipeline::{RecommendationRequest, Snapshot};
//!
//! let catalog = plansage::catalog::parse_catalog(
//!     "plan_id,hmo_id,hmo_name,plan_name,premium_tier,coverage_region,family_planning,mental_health,dental_care,telemedicine,cashback_benefit,anc_delivery,gym_membership,annual_screening,ward_type,eye_care_limit_level\n\
//!      p1,h1,Acme,Basic,1,lagos,no,no,yes,yes,no,no,no,no,general,0\n",
//!     plansage::catalog::FileFormat::Csv,
//! )
//! .unwrap();
//! let snapshot = Snapshot::new(catalog, Ratings::default());
//! let pref = UserPreference::new(Location::Lagos, 1).with(&[ServiceFeature::DentalCare]);
//! let recs = snapshot.recommend(&RecommendationRequest::new(pref)).unwrap();
//! assert_eq!(recs[0].plan_id, "p1");
//! ```

pub mod catalog;
pub mod cli;
pub mod compare;
pub mod pipeline;
pub mod service;
pub mod simeng;
