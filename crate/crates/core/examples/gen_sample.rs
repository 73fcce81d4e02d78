//! Regenerates the synthetic sample catalog and ratings under `data/`.
//!
//! cargo run -p plansage --example gen_sample -- crates/core/data

use std::fmt::Write as _;
use std::path::PathBuf;

use plansage::catalog::{write_catalog, CoverageRegion, PlanRecord, ServiceFeature, WardType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HMOS: [&str; 37] = [
    "Aso Care",
    "Eko Shield",
    "Niger Delta Health",
    "Zuma Wellness",
    "Olumo Assurance",
    "Kainji Health",
    "Benue Life",
    "Yankari Care",
    "Idanre Health",
    "Obudu Mutual",
    "Ikogosi Health",
    "Erin Ijesha Care",
    "Jos Plateau HMO",
    "Lekki Health",
    "Ogun River Care",
    "Sahel Shield",
    "Atlantic Health",
    "Harmattan Care",
    "Savannah Mutual",
    "Coral Health",
    "Iroko Wellness",
    "Baobab Care",
    "Palmgrove HMO",
    "Lagoon Health",
    "Mangrove Assurance",
    "Cowrie Health",
    "Adire Care",
    "Gbedu Wellness",
    "Talking Drum HMO",
    "Kente Health",
    "Akara Mutual",
    "Ofada Care",
    "Suya Health",
    "Agege Wellness",
    "Ikeja Shield",
    "Badagry Health",
    "Epe Care",
];

const PLAN_NAMES: [&str; 5] = ["Basic", "Standard", "Plus", "Premium", "Elite"];

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/data".into()));
    let mut rng = ChaCha8Rng::seed_from_u64(20_220_504);
    let mut plans = Vec::new();
    let mut ratings = String::from("hmo_id,mean_rating,rating_count\n");

    for (h, name) in HMOS.iter().enumerate() {
        let hmo_id = format!("hmo{:02}", h + 1);
        // 148 plans: every HMO has four, one gets an extra Elite and one loses Basic
        let tiers: Vec<u8> = match h {
            0 => vec![1, 2, 3, 4, 4],
            36 => vec![2, 3, 4],
            _ => vec![1, 2, 3, 4],
        };
        let nationwide_bias: f64 = rng.random_range(0.2..0.9);
        for (i, &tier) in tiers.iter().enumerate() {
            let level = usize::from(tier) - 1 + usize::from(i == 4);
            let p_feature = 0.2 + 0.18 * f64::from(tier - 1);
            let mut plan = PlanRecord {
                plan_id: format!("{hmo_id}-{}", PLAN_NAMES[level].to_lowercase()),
                hmo_id: hmo_id.clone(),
                hmo_name: (*name).to_string(),
                plan_name: format!("{name} {}", PLAN_NAMES[level]),
                premium_tier: tier,
                coverage_region: if rng.random_bool((nationwide_bias + 0.1 * f64::from(tier - 1)).min(1.0)) {
                    CoverageRegion::Nationwide
                } else {
                    CoverageRegion::LagosOnly
                },
                family_planning: false,
                mental_health: false,
                dental_care: false,
                telemedicine: false,
                cashback_benefit: false,
                anc_delivery: false,
                gym_membership: false,
                annual_screening: false,
                ward_type: match (tier, rng.random_range(0..3)) {
                    (1, _) | (2, 0) => WardType::General,
                    (2, _) | (3, 0) => WardType::SemiPrivate,
                    _ => WardType::Private,
                },
                eye_care_limit_level: (i32::from(tier) - 1 + rng.random_range(-1..=1)).clamp(0, 3) as u8,
            };
            for f in ServiceFeature::ALL {
                plan.set(f, rng.random_bool(p_feature));
            }
            plans.push(plan);
        }
        // a few HMOs have no survey responses yet
        if h % 12 != 11 {
            let mean = (rng.random_range(2.0..5.0_f64) * 10.0).round() / 10.0;
            let _ = writeln!(ratings, "{hmo_id},{mean:.1},{}", rng.random_range(5..120));
        }
    }
    assert_eq!(plans.len(), 148);

    std::fs::create_dir_all(&out).expect("create output dir");
    write_catalog(out.join("sample_catalog.csv"), &plans).expect("write catalog");
    std::fs::write(out.join("sample_ratings.csv"), ratings).expect("write ratings");
    println!("wrote {} plans to {}", plans.len(), out.display());
}
