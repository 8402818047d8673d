mod common;

use common::{collection_corpus, packing_lp_by_vertices, rng, CORPUS_SEED};
use infosum::collections::*;
use infosum::scalar::LpField;
use num_rational::Rational64;
use proptest::prelude::*;
use rand::Rng;

fn standard_kinds(n: usize) -> Vec<StandardKind> {
    let mut kinds = vec![StandardKind::Singletons];
    if n >= 2 {
        kinds.push(StandardKind::LeaveOneOut);
    }
    kinds.extend((1..=n).map(|m| StandardKind::AllMSubsets { m }));
    kinds.extend((1..=n).map(|k| StandardKind::SlidingWindow { k }));
    kinds
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn standard_collections_are_balanced_and_discriminating() {
    for n in 2..=8 {
        let mut kinds = vec![StandardKind::Singletons, StandardKind::LeaveOneOut];
        kinds.extend((1..n).map(|m| StandardKind::AllMSubsets { m }));
        for kind in kinds {
            let c = SubsetCollection::standard(kind, n).unwrap();
            let cls = c.classify();
            assert!(cls.balanced && cls.discriminating, "{kind:?} n={n}");
            // brute-force definition of discriminating over ordered pairs
            for i in 1..=n {
                for j in (1..=n).filter(|&j| j != i) {
                    assert!(c.sets().iter().any(|s| s.contains(&i) && !s.contains(&j)));
                }
            }
        }
        for m in 1..n {
            let c = SubsetCollection::standard(StandardKind::AllMSubsets { m }, n).unwrap();
            assert_eq!(c.r(), binom(n - 1, m - 1));
            assert_eq!(c.len(), binom(n, m));
        }
    }
}

#[test]
fn sliding_window_multiplicity() {
    for n in 1..=8 {
        for k in 1..=n {
            let c = SubsetCollection::standard(StandardKind::SlidingWindow { k }, n).unwrap();
            assert_eq!(c.r(), k.min(n + 1 - k), "n={n} k={k}");
        }
    }
}

#[test]
fn natural_and_uniform_packings_are_valid() {
    for n in 1..=6 {
        for kind in standard_kinds(n) {
            let c = SubsetCollection::standard(kind, n).unwrap();
            let nat = FractionalPacking::<Rational64>::natural(&c);
            for load in nat.loads(&c).unwrap() {
                assert!(load <= Rational64::from_integer(1), "{kind:?} n={n}");
            }
            assert!(validate_packing(&c, &nat).unwrap());
            assert!(validate_packing(&c, &FractionalPacking::<Rational64>::uniform(&c)).unwrap());
            assert!(validate_packing(&c, &FractionalPacking::<f64>::natural(&c)).unwrap());
        }
    }
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut r = rng(CORPUS_SEED ^ 1);
    for (k, c) in collection_corpus(CORPUS_SEED, 200).iter().enumerate() {
        let obj: Vec<Rational64> = (0..c.len()).map(|_| Rational64::new(r.gen_range(0..=8), 4)).collect();
        let oracle = packing_lp_by_vertices(c, &obj);

        let (beta, exact) = optimize_packing_lp(c, &obj).unwrap();
        assert_eq!(exact, oracle, "corpus item {k}: {:?}", c.sets());
        assert!(validate_packing(c, &beta).unwrap());

        let objf: Vec<f64> = obj.iter().map(|x| x.to_f64_lossy()).collect();
        let (betaf, float) = optimize_packing_lp(c, &objf).unwrap();
        assert!((float - oracle.to_f64_lossy()).abs() < 1e-9, "corpus item {k}");
        assert!(validate_packing(c, &betaf).unwrap());

        // dominates the uniform packing
        let uni = FractionalPacking::<Rational64>::uniform(c);
        let uni_obj = uni.beta.iter().zip(&obj).fold(Rational64::from_integer(0), |a, (b, o)| a + b * o);
        assert!(exact >= uni_obj);
    }
}

#[test]
fn lp_examples() {
    let one = Rational64::from_integer(1);
    let c = SubsetCollection::new(2, vec![vec![1], vec![2]]).unwrap();
    assert_eq!(optimize_packing_lp(&c, &[one, one]).unwrap().1, Rational64::from_integer(2));
    let c = SubsetCollection::new(2, vec![vec![1], vec![1, 2]]).unwrap();
    assert_eq!(optimize_packing_lp(&c, &[one, one]).unwrap().1, one);
    let c = SubsetCollection::standard(StandardKind::AllMSubsets { m: 2 }, 3).unwrap();
    assert_eq!(packing_lp_by_vertices(&c, &[one, one, one]), Rational64::new(3, 2));
    assert!(optimize_packing_lp(&c, &[one, -one, one]).is_err());
}

#[test]
fn collection_json_roundtrip() {
    let c: SubsetCollection = serde_json::from_str(r#"{"n":4,"sets":[[2,1],[2,3],[3,4]]}"#).unwrap();
    assert_eq!(c.sets()[0], vec![1, 2]);
    let back: SubsetCollection = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
    let kind: StandardKind = serde_json::from_str(r#"{"kind":"all_m_subsets","m":2}"#).unwrap();
    assert_eq!(kind, StandardKind::AllMSubsets { m: 2 });
}

#[test]
fn duplicates_count_with_multiplicity() {
    let c = SubsetCollection::new(3, vec![vec![1], vec![2, 3], vec![2, 3]]).unwrap();
    let m = c.multiplicities();
    assert_eq!(m.r_index, vec![1, 2, 2]);
    assert_eq!(m.r_set, vec![1, 2, 2]);
    assert!(c.classify().quasibalanced);
    assert!(!c.classify().balanced);
}

#[test]
fn augmentation_keeps_r_and_supersets() {
    for n in 3..=6 {
        let c = SubsetCollection::standard(StandardKind::SlidingWindow { k: 2 }, n).unwrap();
        let aug = c.augment_to_balanced();
        assert_eq!(aug.r(), c.r());
        assert!(aug.classify().balanced);
        for (s, t) in c.sets().iter().zip(aug.sets()) {
            assert!(s.iter().all(|i| t.contains(i)));
        }
    }
}

fn arb_collection() -> impl Strategy<Value = SubsetCollection> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::btree_set(1..=n, 1..=n), 1..=8)
            .prop_map(move |sets| SubsetCollection::new(n, sets.into_iter().map(|s| s.into_iter().collect()).collect()).unwrap())
    })
}

proptest! {
    #[test]
    fn balance_identity_holds_exactly_for_balanced(n in 2usize..=7, m_frac in 0.0f64..1.0, a in prop::collection::vec(-50i64..50, 7)) {
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let c = SubsetCollection::standard(StandardKind::AllMSubsets { m }, n).unwrap();
        let ints = &a[..n];
        let (lhs, rhs) = balance_identity_sides(&c, ints).unwrap();
        prop_assert_eq!(lhs, rhs);
        let rats: Vec<Rational64> = ints.iter().map(|&x| Rational64::new(x, 7)).collect();
        let (lhs, rhs) = balance_identity_sides(&c, &rats).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn balance_identity_fails_for_unbalanced_positive(c in arb_collection()) {
        let ones = vec![1i64; c.n()];
        let (lhs, rhs) = balance_identity_sides(&c, &ones).unwrap();
        prop_assert!(lhs <= rhs);
        prop_assert_eq!(lhs == rhs, c.classify().balanced);
    }

    #[test]
    fn multiplicity_bounds(c in arb_collection()) {
        let m = c.multiplicities();
        prop_assert!(m.r >= 1 && m.r <= c.len());
        for (s, &rs) in c.sets().iter().zip(&m.r_set) {
            prop_assert!(s.iter().all(|&i| m.r_index[i - 1] <= rs));
        }
        prop_assert!(validate_packing(&c, &FractionalPacking::<f64>::uniform(&c)).unwrap());
        prop_assert!(validate_packing(&c, &FractionalPacking::<f64>::natural(&c)).unwrap());
    }

    #[test]
    fn weight_entropy_range(raw in prop::collection::vec(0.0f64..1.0, 1..10)) {
        prop_assume!(raw.iter().sum::<f64>() > 1e-6);
        let w = WeightVector::from_unnormalized(raw.clone()).unwrap();
        let h = w.entropy();
        prop_assert!(h >= 0.0 && h <= (raw.len() as f64).ln() + 1e-12);
        prop_assert!(WeightVector::new(w.weights().to_vec()).is_ok());
    }
}
