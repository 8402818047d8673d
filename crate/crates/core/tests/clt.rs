mod common;

use common::{bimodal, smoothed_uniform};
use infosum::clt::*;
use infosum::collections::*;
use infosum::functionals::{entropy, gaussian_entropy};
use infosum::verifiers::{fisher_optimal_weights, verify_entropy_of_sums, Tolerances};
use infosum::{Distribution, Error, GridConfig, SumSystem};

fn cfg() -> GridConfig {
    GridConfig::default()
}

fn tol() -> Tolerances<f64> {
    Tolerances::default()
}

fn strict_increase(res: &CltSweepResult<f64>) {
    for row in &res.rows[1..] {
        assert!(row.gap_prev.unwrap() > 10.0 * tol().entropy_abs, "H step at n={}", row.n);
        assert!(row.entropy_nondecreasing.unwrap());
    }
}

#[test]
fn gaussian_fixed_point() {
    let res = iid_info_sequence(&Distribution::gaussian(0.0, 1.0), 6, &cfg(), &tol()).unwrap();
    for row in &res.rows {
        assert!((row.entropy - gaussian_entropy(1.0)).abs() < 1e-4);
        assert!(row.gap_prev.is_none_or(|g| g.abs() < 1e-4));
    }
}

#[test]
fn smoothed_uniform_sweep() {
    let res = iid_info_sequence(&smoothed_uniform(&cfg()), 6, &cfg(), &tol()).unwrap();
    strict_increase(&res);
    for pair in res.rows.windows(2) {
        assert!(pair[1].rel_entropy_gaussian < pair[0].rel_entropy_gaussian);
        assert!(pair[1].fisher.unwrap() < pair[0].fisher.unwrap());
    }
    // same sweep at twice the resolution
    let fine_cfg = GridConfig::new(8.0, 8192).unwrap();
    let fine = iid_info_sequence(&smoothed_uniform(&fine_cfg), 6, &fine_cfg, &tol()).unwrap();
    for (a, b) in res.rows.iter().zip(&fine.rows) {
        assert!((a.entropy - b.entropy).abs() < 1e-3);
    }
}

#[test]
fn mixture_sweep() {
    let res = iid_info_sequence(&bimodal(), 6, &cfg(), &tol()).unwrap();
    strict_increase(&res);
    for pair in res.rows.windows(2) {
        assert!(pair[1].fisher.unwrap() < pair[0].fisher.unwrap());
    }
    assert!(res.monotone());
    for row in &res.rows {
        assert_eq!(row.entropy_power, (2.0 * row.entropy).exp());
    }
}

#[test]
fn raw_uniform_sweep_reports_missing_fisher() {
    let res = iid_info_sequence(&Distribution::uniform(0.0, 1.0), 6, &cfg(), &tol()).unwrap();
    assert!(res.rows[0].fisher.is_none());
    assert!(res.rows[1].fisher_nonincreasing.is_none());
    assert_eq!(res.rows.iter().filter(|r| r.gap_prev.is_some_and(|g| g >= 0.0)).count(), 5);
}

#[test]
fn averaged_monotonicity_over_pairs() {
    // non-identical summands: two bimodal mixtures, a wider mixture and a normal
    let dists = vec![
        bimodal(),
        bimodal(),
        Distribution::mixture(&[(0.3, -1.5, 0.5), (0.7, 1.0, 0.3)]),
        Distribution::gaussian(0.2, 2.0),
    ];
    let sys = SumSystem::new(dists, &cfg()).unwrap();
    let c = SubsetCollection::standard(StandardKind::AllMSubsets { m: 2 }, 4).unwrap();
    let w = WeightVector::uniform(c.len());
    // H(T_4) >= mean_s H(T^s) + H(w)/2 - log(r)/2 with |C| = 6, r = 3
    let r = verify_entropy_of_sums(&sys, &c, &w, &tol()).unwrap();
    assert!(r.satisfied && r.gap.unwrap() > 0.0);
    // standardized form
    let reps = monotone_on_average(&sys, &c, &tol()).unwrap();
    assert!(reps.iter().all(|r| r.satisfied));
}

#[test]
fn normals_of_distinct_variance() {
    let dists = [1.0, 2.0, 3.0].map(|v| Distribution::gaussian(0.0, v)).to_vec();
    let sys = SumSystem::new(dists, &cfg()).unwrap();
    let c = SubsetCollection::standard(StandardKind::LeaveOneOut, 3).unwrap();
    let reps = monotone_on_average(&sys, &c, &tol()).unwrap();
    assert_eq!(reps.len(), 3);
    for r in &reps {
        assert!(r.relative_gap().unwrap() < 1e-3, "{}", r.name);
        assert_eq!(r.extra["eta_sum"], 1.0);
    }
}

#[test]
fn mixtures_of_unequal_variance() {
    let wide = Distribution::mixture(&[(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]);
    let sys = SumSystem::new(vec![bimodal(), bimodal(), wide], &cfg()).unwrap();
    assert_eq!(sys.variances(), &[1.25, 1.25, 5.0]);
    let c = SubsetCollection::standard(StandardKind::AllMSubsets { m: 2 }, 3).unwrap();
    for r in monotone_on_average(&sys, &c, &tol()).unwrap() {
        assert!(r.gap.unwrap() > 10.0 * r.tolerance, "{}", r.name);
    }
}

#[test]
fn standardization_is_consistent() {
    let sys = SumSystem::iid(bimodal(), 3, &cfg()).unwrap();
    let v = sys.total_variance();
    let direct = entropy(&sys.full_sum().scale(1.0 / v.sqrt()).unwrap());
    assert!((direct - (entropy(sys.full_sum()) - 0.5 * v.ln())).abs() < 1e-6);
}

#[test]
fn projection_gap_examples() {
    let c = SubsetCollection::standard(StandardKind::LeaveOneOut, 3).unwrap();
    let normals = SumSystem::iid(Distribution::gaussian(0.0, 1.0), 3, &cfg()).unwrap();
    let w = fisher_optimal_weights(&normals, &c).unwrap();
    assert!(projection_gap(&normals, &c, &w, 2048, 1).unwrap().gap < 1e-3);

    let mix = SumSystem::iid(bimodal(), 3, &cfg()).unwrap();
    let g = projection_gap(&mix, &c, &WeightVector::uniform(3), 4096, 1).unwrap();
    assert!(g.gap > 0.0);
    assert!(g.gap + g.fisher_full <= g.combined_mean_square + 5e-2);
    assert!((g.gap + g.fisher_full - g.combined_mean_square).abs() < 5e-2);
    assert_eq!(g, projection_gap(&mix, &c, &WeightVector::uniform(3), 4096, 1).unwrap());

    let full = SubsetCollection::new(3, vec![vec![1, 2, 3], vec![1]]).unwrap();
    let g = projection_gap(&mix, &full, &WeightVector::point_mass(2, 0).unwrap(), 1024, 5).unwrap();
    assert_eq!(g.gap, 0.0);

    let raw = SumSystem::iid(Distribution::uniform(0.0, 1.0), 2, &cfg()).unwrap();
    let single = SubsetCollection::standard(StandardKind::Singletons, 2).unwrap();
    assert!(matches!(
        projection_gap(&raw, &single, &WeightVector::uniform(2), 64, 0),
        Err(Error::ScoreUndefined(_))
    ));
}
