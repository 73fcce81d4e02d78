mod common;

use common::*;
use plansage::catalog::{encode_plan, EncodingSchema, FeatureVector, SchemaId};
use plansage::simeng::{cosine_similarity, euclidean_distance, rank_candidates, score, Metric, SimError};
use proptest::prelude::*;

fn fv(values: Vec<f64>) -> FeatureVector {
    FeatureVector::new(values, SchemaId::new("test")).unwrap()
}

fn nonneg(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, dim)
}

fn nonzero_nonneg(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    nonneg(dim).prop_filter("non-zero", |v| v.iter().any(|&x| x > 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn cosine_is_symmetric_and_bounded(a in nonzero_nonneg(10), b in nonzero_nonneg(10)) {
        let ab = cosine_similarity(&fv(a.clone()), &fv(b.clone())).unwrap();
        let ba = cosine_similarity(&fv(b.clone()), &fv(a.clone())).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - oracle_cosine(&a, &b)).abs() <= 1e-12);
    }

    #[test]
    fn euclidean_is_symmetric_and_matches_formula(a in nonneg(10), b in nonneg(10)) {
        let ab = euclidean_distance(&fv(a.clone()), &fv(b.clone())).unwrap();
        let ba = euclidean_distance(&fv(b.clone()), &fv(a.clone())).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((ab - oracle_euclidean(&a, &b)).abs() <= 1e-12);
    }

    #[test]
    fn euclidean_translation_invariant(a in nonneg(10), b in nonneg(10), t in prop::collection::vec(-5.0f64..5.0, 10)) {
        let shift = |v: &[f64]| v.iter().zip(&t).map(|(x, d)| x + d).collect::<Vec<_>>();
        let d0 = euclidean_distance(&fv(a.clone()), &fv(b.clone())).unwrap();
        let d1 = euclidean_distance(&fv(shift(&a)), &fv(shift(&b))).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-12);
    }

    #[test]
    fn euclidean_zero_iff_equal(a in nonneg(10), b in nonneg(10)) {
        prop_assert_eq!(euclidean_distance(&fv(a.clone()), &fv(a.clone())).unwrap(), 0.0);
        let d = euclidean_distance(&fv(a.clone()), &fv(b.clone())).unwrap();
        prop_assert_eq!(d == 0.0, a == b);
    }

    #[test]
    fn cosine_ranking_scale_invariant(
        q in nonzero_nonneg(10),
        cands in prop::collection::vec(nonzero_nonneg(10), 1..40),
        c in prop::sample::select(vec![0.1, 0.5, 2.0, 7.0, 1000.0]),
    ) {
        let named: Vec<(String, FeatureVector)> =
            cands.into_iter().enumerate().map(|(i, v)| (format!("c{i:02}"), fv(v))).collect();
        let ids = |query: &FeatureVector| -> Vec<String> {
            rank_candidates(query, &named, Metric::Cosine, named.len()).unwrap()
                .into_iter().map(|s| s.plan_id).collect()
        };
        let base = fv(q);
        prop_assert_eq!(ids(&base), ids(&base.scaled(c).unwrap()));
    }

    #[test]
    fn top_k_consistent_and_matches_full_sort(
        q in nonzero_nonneg(10),
        cands in prop::collection::vec(nonzero_nonneg(10), 1..40),
        k in 1usize..10,
        knn in any::<bool>(),
    ) {
        let metric = if knn { Metric::EuclideanKnn } else { Metric::Cosine };
        let query = fv(q);
        let named: Vec<(String, FeatureVector)> =
            cands.into_iter().enumerate().map(|(i, v)| (format!("c{i:02}"), fv(v))).collect();
        let top = rank_candidates(&query, &named, metric, k).unwrap();
        prop_assert_eq!(top.len(), k.min(named.len()));
        let kth = top.last().unwrap().score;
        let chosen: Vec<&str> = top.iter().map(|s| s.plan_id.as_str()).collect();
        for (id, v) in &named {
            if !chosen.contains(&id.as_str()) {
                let s = score(metric, &query, v).unwrap();
                prop_assert!(metric.compare(kth, s) != std::cmp::Ordering::Greater);
            }
        }
        let again = rank_candidates(&query, &named, metric, k).unwrap();
        prop_assert_eq!(top, again);
    }
}

#[test]
fn documented_examples() {
    assert_eq!(
        cosine_similarity(&fv(vec![1.0, 0.0]), &fv(vec![0.0, 1.0])).unwrap(),
        0.0
    );
    assert_eq!(
        cosine_similarity(&fv(vec![1.0, 1.0, 0.0]), &fv(vec![1.0, 1.0, 0.0])).unwrap(),
        1.0
    );
    let half = cosine_similarity(&fv(vec![1.0, 1.0, 0.0]), &fv(vec![1.0, 0.0, 0.0])).unwrap();
    assert!((half - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    assert_eq!(
        euclidean_distance(&fv(vec![0.0, 0.0]), &fv(vec![0.0, 0.0])).unwrap(),
        0.0
    );
    let root2 = euclidean_distance(&fv(vec![0.0, 0.0]), &fv(vec![1.0, 1.0])).unwrap();
    assert!((root2 - std::f64::consts::SQRT_2).abs() < 1e-8);
}

#[test]
fn incompatible_vectors_rejected() {
    let a = fv(vec![1.0, 0.0]);
    let b = FeatureVector::new(vec![1.0, 0.0], SchemaId::new("other")).unwrap();
    assert!(matches!(
        cosine_similarity(&a, &b),
        Err(SimError::SchemaMismatch { .. })
    ));
    let c = fv(vec![1.0, 0.0, 0.0]);
    assert!(matches!(
        euclidean_distance(&a, &c),
        Err(SimError::DimensionMismatch { .. })
    ));
    assert!(matches!(
        cosine_similarity(&a, &fv(vec![0.0, 0.0])),
        Err(SimError::ZeroVector)
    ));
}

/// Every candidate in the sample catalog, k = 5, against an exhaustive
/// oracle sort of all 148 pairwise scores.
#[test]
fn sample_catalog_top5_matches_exhaustive_sort() {
    let snapshot = sample_snapshot();
    let schema = EncodingSchema::v1();
    let plans = snapshot.catalog().plans();
    let named: Vec<(&str, FeatureVector)> = plans
        .iter()
        .map(|p| (p.plan_id.as_str(), encode_plan(p, &schema)))
        .collect();
    let mut rng = rng(21);
    for _ in 0..100 {
        let pref = random_full_preference(&mut rng);
        let qv = oracle_pref_vector(&pref);
        if qv.iter().all(|&x| x == 0.0) {
            continue;
        }
        let query = FeatureVector::new(qv.clone(), schema.id().clone()).unwrap();
        for metric in [Metric::Cosine, Metric::EuclideanKnn] {
            let mut all: Vec<(f64, &str)> = plans
                .iter()
                .map(|p| {
                    let v = oracle_plan_vector(p);
                    let s = match metric {
                        Metric::Cosine => oracle_cosine(&qv, &v),
                        Metric::EuclideanKnn => oracle_euclidean(&qv, &v),
                    };
                    (s, p.plan_id.as_str())
                })
                .collect();
            all.sort_by(|a, b| {
                let by = if (a.0 - b.0).abs() <= TIE_EPS {
                    std::cmp::Ordering::Equal
                } else if metric == Metric::Cosine {
                    b.0.partial_cmp(&a.0).unwrap()
                } else {
                    a.0.partial_cmp(&b.0).unwrap()
                };
                by.then(a.1.cmp(b.1))
            });
            let got = rank_candidates(&query, &named, metric, 5).unwrap();
            let got_ids: Vec<&str> = got.iter().map(|s| s.plan_id.as_str()).collect();
            let want_ids: Vec<&str> = all.iter().take(5).map(|s| s.1).collect();
            assert_eq!(got_ids, want_ids);
            for (g, w) in got.iter().zip(&all) {
                assert!((g.score - w.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn self_match_ranks_first_under_both_metrics() {
    let snapshot = sample_snapshot();
    let schema = EncodingSchema::v1();
    let named: Vec<(&str, FeatureVector)> = snapshot
        .catalog()
        .plans()
        .iter()
        .map(|p| (p.plan_id.as_str(), encode_plan(p, &schema)))
        .collect();
    for (id, v) in named.iter().step_by(7) {
        let cos = rank_candidates(v, &named, Metric::Cosine, 1).unwrap();
        assert_eq!(cos[0].score, 1.0);
        let knn = rank_candidates(v, &named, Metric::EuclideanKnn, 1).unwrap();
        assert_eq!(knn[0].score, 0.0);
        // Exact duplicates of the vector may tie; the winner must share it.
        for winner in [&cos[0].plan_id, &knn[0].plan_id] {
            let w = &named.iter().find(|(n, _)| n == winner).unwrap().1;
            assert_eq!(w.values(), v.values(), "{id} beaten by {winner}");
        }
    }
}
