//! Shared fixtures and brute-force oracles for the integration tests.
//!
//! The oracle functions deliberately avoid the crate's encoding, scoring and
//! ranking code: they read raw `PlanRecord` fields and evaluate the formulas
//! directly, so agreement with the engine is evidence rather than tautology.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use plansage::catalog::{
    CoverageRegion, Location, PlanRecord, RatingRecord, Ratings, ServiceFeature, UserPreference, WardType,
};
use plansage::pipeline::{RecommendationRequest, Snapshot};
use plansage::simeng::Metric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATALOG_HEADER: &str = "plan_id,hmo_id,hmo_name,plan_name,premium_tier,coverage_region,family_planning,mental_health,dental_care,telemedicine,cashback_benefit,anc_delivery,gym_membership,annual_screening,ward_type,eye_care_limit_level";

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn sample_catalog() -> PathBuf {
    data_dir().join("sample_catalog.csv")
}

pub fn sample_ratings() -> PathBuf {
    data_dir().join("sample_ratings.csv")
}

pub fn figure1_preference() -> PathBuf {
    data_dir().join("examples/figure1_preference.json")
}

pub fn sample_snapshot() -> Snapshot {
    Snapshot::load(sample_catalog(), sample_ratings()).expect("sample data loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A plan with every benefit off; tweak fields afterwards.
pub fn plan(id: &str, hmo: &str, tier: u8, region: CoverageRegion) -> PlanRecord {
    PlanRecord {
        plan_id: id.into(),
        hmo_id: hmo.into(),
        hmo_name: format!("{hmo} Health"),
        plan_name: format!("{id} plan"),
        premium_tier: tier,
        coverage_region: region,
        family_planning: false,
        mental_health: false,
        dental_care: false,
        telemedicine: false,
        cashback_benefit: false,
        anc_delivery: false,
        gym_membership: false,
        annual_screening: false,
        ward_type: WardType::General,
        eye_care_limit_level: 0,
    }
}

pub fn ratings(entries: &[(&str, f64)]) -> Ratings {
    Ratings::new(entries.iter().map(|&(h, r)| RatingRecord {
        hmo_id: h.into(),
        mean_rating: r,
        rating_count: 10,
    }))
}

pub fn random_plan<R: Rng>(rng: &mut R, id: &str) -> PlanRecord {
    let mut p = plan(
        id,
        &format!("h{}", rng.random_range(0..6)),
        rng.random_range(1..=4),
        if rng.random_bool(0.5) {
            CoverageRegion::LagosOnly
        } else {
            CoverageRegion::Nationwide
        },
    );
    for f in ServiceFeature::ALL {
        p.set(f, rng.random_bool(0.5));
    }
    p.ward_type = WardType::ALL[rng.random_range(0..3)];
    p.eye_care_limit_level = rng.random_range(0..=3);
    p
}

/// A random preference that may also carry ward / eye-care wishes.
pub fn random_full_preference<R: Rng>(rng: &mut R) -> UserPreference {
    let mut pref = UserPreference::new(
        if rng.random_bool(0.5) {
            Location::Lagos
        } else {
            Location::Nationwide
        },
        rng.random_range(1..=4),
    );
    for f in ServiceFeature::ALL {
        pref.desired.insert(f, rng.random_bool(0.5));
    }
    if rng.random_bool(0.5) {
        pref.ward_preference = Some(WardType::ALL[rng.random_range(0..3)]);
    }
    if rng.random_bool(0.5) {
        pref.eye_care_preference = Some(rng.random_range(0..=3));
    }
    pref
}

/// Seeded request stream used by the pipeline oracle checks: metrics
/// alternate, preferences never ask for nothing.
pub fn seeded_requests(n: usize, seed: u64) -> Vec<RecommendationRequest> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pref = random_full_preference(&mut rng);
        if oracle_pref_vector(&pref).iter().all(|&x| x == 0.0) {
            continue;
        }
        let metric = if out.len() % 2 == 0 {
            Metric::Cosine
        } else {
            Metric::EuclideanKnn
        };
        out.push(RecommendationRequest::new(pref).with_metric(metric));
    }
    out
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

fn b(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

fn ward_value(w: WardType) -> f64 {
    match w {
        WardType::General => 1.0 / 3.0,
        WardType::SemiPrivate => 2.0 / 3.0,
        WardType::Private => 1.0,
    }
}

pub fn oracle_plan_vector(p: &PlanRecord) -> Vec<f64> {
    vec![
        b(p.family_planning),
        b(p.mental_health),
        b(p.dental_care),
        b(p.telemedicine),
        b(p.cashback_benefit),
        b(p.anc_delivery),
        b(p.gym_membership),
        b(p.annual_screening),
        ward_value(p.ward_type),
        f64::from(p.eye_care_limit_level) / 3.0,
    ]
}

pub fn oracle_pref_vector(p: &UserPreference) -> Vec<f64> {
    let want = |f| b(p.desired.get(&f).copied().unwrap_or(false));
    vec![
        want(ServiceFeature::FamilyPlanning),
        want(ServiceFeature::MentalHealth),
        want(ServiceFeature::DentalCare),
        want(ServiceFeature::Telemedicine),
        want(ServiceFeature::CashbackBenefit),
        want(ServiceFeature::AncDelivery),
        want(ServiceFeature::GymMembership),
        want(ServiceFeature::AnnualScreening),
        p.ward_preference.map_or(0.0, ward_value),
        p.eye_care_preference.map_or(0.0, |l| f64::from(l) / 3.0),
    ]
}

/// (Σ aᵢbᵢ) / (√Σaᵢ² · √Σbᵢ²), evaluated literally.
pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// √Σ(aᵢ − bᵢ)², evaluated literally.
pub fn oracle_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s.sqrt()
}

pub fn oracle_eligible(p: &PlanRecord, pref: &UserPreference) -> bool {
    let region_ok = match pref.location {
        Location::Lagos => true,
        Location::Nationwide => p.coverage_region == CoverageRegion::Nationwide,
    };
    p.premium_tier <= pref.max_tier && region_ok
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub plan_id: String,
    pub score: f64,
    pub rating: f64,
}

/// Scores within this distance are treated as ties. Different summation
/// orders can leave mathematically equal scores an ulp or two apart.
pub const TIE_EPS: f64 = 1e-12;

/// filter → score every eligible plan → full sort → first `pool` (≥ 3).
/// Returns `None` when nothing survives the filter.
pub fn oracle_pool(
    plans: &[PlanRecord],
    rating_of: &HashMap<String, f64>,
    pref: &UserPreference,
    metric: Metric,
    pool: usize,
) -> Option<Vec<OracleResult>> {
    let q = oracle_pref_vector(pref);
    let mut scored: Vec<OracleResult> = plans
        .iter()
        .filter(|p| oracle_eligible(p, pref))
        .map(|p| {
            let v = oracle_plan_vector(p);
            OracleResult {
                plan_id: p.plan_id.clone(),
                score: match metric {
                    Metric::Cosine => oracle_cosine(&q, &v),
                    Metric::EuclideanKnn => oracle_euclidean(&q, &v),
                },
                rating: rating_of.get(&p.hmo_id).copied().unwrap_or(0.0),
            }
        })
        .collect();
    if scored.is_empty() {
        return None;
    }
    scored.sort_by(|x, y| {
        let by_score = if (x.score - y.score).abs() <= TIE_EPS {
            Ordering::Equal
        } else {
            match metric {
                Metric::Cosine => y.score.partial_cmp(&x.score).unwrap(),
                Metric::EuclideanKnn => x.score.partial_cmp(&y.score).unwrap(),
            }
        };
        by_score
            .then(y.rating.partial_cmp(&x.rating).unwrap())
            .then(x.plan_id.cmp(&y.plan_id))
    });
    scored.truncate(pool.max(3));
    Some(scored)
}

/// [`oracle_pool`] followed by the rating top 3 (rating desc, pool position, plan_id).
pub fn oracle_recommend(
    plans: &[PlanRecord],
    rating_of: &HashMap<String, f64>,
    pref: &UserPreference,
    metric: Metric,
    pool: usize,
) -> Option<Vec<OracleResult>> {
    let scored = oracle_pool(plans, rating_of, pref, metric, pool)?;
    let mut pooled: Vec<(usize, OracleResult)> = scored.into_iter().enumerate().collect();
    pooled.sort_by(|(i, x), (j, y)| {
        y.rating
            .partial_cmp(&x.rating)
            .unwrap()
            .then(i.cmp(j))
            .then(x.plan_id.cmp(&y.plan_id))
    });
    Some(pooled.into_iter().take(3).map(|(_, r)| r).collect())
}

pub fn rating_map(ratings: &Ratings) -> HashMap<String, f64> {
    ratings.iter().map(|r| (r.hmo_id.clone(), r.mean_rating)).collect()
}

/// Compact single-row CSV rendering for hand-built fixtures.
pub fn csv_row(p: &PlanRecord) -> String {
    let yn = |x: bool| if x { "yes" } else { "no" };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        p.plan_id,
        p.hmo_id,
        p.hmo_name,
        p.plan_name,
        p.premium_tier,
        p.coverage_region.as_str(),
        yn(p.family_planning),
        yn(p.mental_health),
        yn(p.dental_care),
        yn(p.telemedicine),
        yn(p.cashback_benefit),
        yn(p.anc_delivery),
        yn(p.gym_membership),
        yn(p.annual_screening),
        p.ward_type.as_str(),
        p.eye_care_limit_level
    )
}

pub fn catalog_csv(plans: &[PlanRecord]) -> String {
    let mut s = String::from(CATALOG_HEADER);
    s.push('\n');
    for p in plans {
        s.push_str(&csv_row(p));
        s.push('\n');
    }
    s
}

pub fn ratings_csv(entries: &[(&str, f64)]) -> String {
    let mut s = String::from("hmo_id,mean_rating,rating_count\n");
    for (h, r) in entries {
        s.push_str(&format!("{h},{r},10\n"));
    }
    s
}

/// Five plans on which cosine and Euclidean KNN provably disagree about the
/// best match for [`disagreement_preference`]: `a-direction` points exactly
/// along the query but is three times longer; `b-magnitude` is at angle 45°
/// but only 1/3 away.
pub fn disagreement_fixture() -> (Vec<PlanRecord>, Ratings) {
    let mut a = plan("a-direction", "ha", 1, CoverageRegion::Nationwide);
    a.ward_type = WardType::Private;
    a.eye_care_limit_level = 3;
    let b = plan("b-magnitude", "hb", 1, CoverageRegion::Nationwide);
    let mut c = plan("c-gym", "hc", 1, CoverageRegion::Nationwide);
    c.gym_membership = true;
    let mut d = plan("d-far", "hd", 1, CoverageRegion::Nationwide);
    for f in ServiceFeature::ALL {
        d.set(f, true);
    }
    let mut e = plan("e-private", "he", 1, CoverageRegion::Nationwide);
    e.ward_type = WardType::Private;
    (
        vec![a, b, c, d, e],
        ratings(&[("ha", 3.0), ("hb", 3.0), ("hc", 3.0), ("hd", 3.0), ("he", 3.0)]),
    )
}

pub fn disagreement_preference() -> UserPreference {
    let mut pref = UserPreference::new(Location::Lagos, 4);
    pref.ward_preference = Some(WardType::General);
    pref.eye_care_preference = Some(1);
    pref
}

pub fn desired_map(features: &[ServiceFeature]) -> BTreeMap<ServiceFeature, bool> {
    ServiceFeature::ALL
        .into_iter()
        .map(|f| (f, features.contains(&f)))
        .collect()
}

// ---------------------------------------------------------------------------
// Running the real binary
// ---------------------------------------------------------------------------

pub const BIN: &str = env!("CARGO_BIN_EXE_plansage");

/// A `plansage serve` child process, killed on drop.
pub struct Server {
    pub child: std::process::Child,
    pub port: u16,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

/// Writes a config next to the data and starts the server; waits for /health.
pub fn spawn_server(dir: &std::path::Path, catalog: &std::path::Path, ratings: &std::path::Path) -> Server {
    let port = free_port();
    let config = dir.join("plansage.toml");
    std::fs::write(
        &config,
        format!(
            "listen_address = \"127.0.0.1:{port}\"\ncatalog_path = {:?}\nratings_path = {:?}\n",
            catalog.to_str().unwrap(),
            ratings.to_str().unwrap()
        ),
    )
    .unwrap();
    let child = std::process::Command::new(BIN)
        .args(["serve", "--config"])
        .arg(&config)
        .env("RUST_LOG", "warn")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let mut server = Server { child, port };
    for _ in 0..200 {
        if let Ok((200, _)) = http(port, "GET", "/api/v1/health", None) {
            return server;
        }
        if let Ok(Some(status)) = server.child.try_wait() {
            panic!("server exited early with {status}");
        }
        std::thread::sleep(std::time::Duration::from_millis(25));
    }
    panic!("server did not become healthy on port {}", server.port);
}

/// Minimal HTTP/1.1 client: one request per connection.
pub fn http(port: u16, method: &str, path: &str, json_body: Option<&str>) -> std::io::Result<(u16, String)> {
    use std::io::{Read, Write};
    let mut stream = std::net::TcpStream::connect(("127.0.0.1", port))?;
    let body = json_body.unwrap_or("");
    let mut req = format!("{method} {path} HTTP/1.1\r\nHost: 127.0.0.1\r\nConnection: close\r\n");
    if json_body.is_some() {
        req.push_str("Content-Type: application/json\r\n");
    }
    req.push_str(&format!("Content-Length: {}\r\n\r\n{body}", body.len()));
    stream.write_all(req.as_bytes())?;
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw)?;
    let raw = String::from_utf8(raw).expect("utf-8 response");
    let (head, rest) = raw.split_once("\r\n\r\n").expect("header terminator");
    let status: u16 = head
        .split(' ')
        .nth(1)
        .and_then(|s| s.parse().ok())
        .expect("status line");
    let chunked = head
        .lines()
        .any(|l| l.eq_ignore_ascii_case("transfer-encoding: chunked"));
    let body = if chunked { dechunk(rest) } else { rest.to_string() };
    Ok((status, body))
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n").expect("chunk size");
        let n = usize::from_str_radix(size.trim(), 16).expect("hex chunk size");
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}
