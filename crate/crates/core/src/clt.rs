//! Monotonicity experiments along the central limit theorem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collections::{SubsetCollection, WeightVector};
use crate::density::{build_density, convolve, Distribution, GridConfig, GridDensity};
use crate::error::{Error, Result};
use crate::functionals::{entropy, fisher_information, rel_entropy_gaussian, score, ScoreFunction};
use crate::lowdisc::Halton;
use crate::scalar::Real;
use crate::verifiers::{eta_weights, InequalityReport, SumSystem, Tolerances};

pub const MAX_N: usize = 12;

/// One normalized sum `Y_n = (X_1 + ... + X_n) / sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    pub n: usize,
    pub entropy: T,
    /// `None` when the score of `Y_n` is not resolved on the grid.
    pub fisher: Option<T>,
    pub entropy_power: T,
    pub rel_entropy_gaussian: T,
    /// `H(Y_n) - H(Y_{n-1})`.
    pub gap_prev: Option<T>,
    pub entropy_nondecreasing: Option<bool>,
    pub fisher_nonincreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSweepResult<T> {
    pub tolerance: T,
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Real> CltSweepResult<T> {
    /// Every step satisfies both monotonicity checks that could be evaluated.
    pub fn monotone(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.entropy_nondecreasing != Some(false) && r.fisher_nonincreasing != Some(false))
    }
}

/// Entropy and Fisher information of `Y_n` for `n = 1..=n_max` i.i.d. copies
/// of `dist`.
///
/// A step counts as monotone when it goes the wrong way by at most
/// `tol.entropy_abs` (entropy) or `tol.relative * I(Y_{n-1})` (Fisher).
pub fn iid_info_sequence<T: Real>(
    dist: &Distribution<T>,
    n_max: usize,
    cfg: &GridConfig,
    tol: &Tolerances<T>,
) -> Result<CltSweepResult<T>> {
    if !(2..=MAX_N).contains(&n_max) {
        return Err(Error::Domain(format!("n_max = {n_max} not in 2..={MAX_N}")));
    }
    let base = build_density(dist, cfg)?;
    let mut sums = vec![base.clone()];
    for _ in 1..n_max {
        let next = convolve(sums.last().expect("nonempty"), &base)?;
        sums.push(next);
    }

    let stats = sums
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let y = s.scale(T::one() / T::from_usize_lossy(k + 1).sqrt())?;
            let fisher = match fisher_information(&y) {
                Ok(i) => Some(i),
                Err(Error::ScoreUndefined(_)) => None,
                Err(e) => return Err(e),
            };
            Ok((entropy(&y), fisher, rel_entropy_gaussian(&y)))
        })
        .collect::<Result<Vec<_>>>()?;

    let two = T::lit(2.0);
    let mut rows: Vec<SweepRow<T>> = Vec::with_capacity(n_max);
    for (k, &(h, fisher, d)) in stats.iter().enumerate() {
        let prev = k.checked_sub(1).map(|j| stats[j]);
        let gap_prev = prev.map(|p| h - p.0);
        let fisher_nonincreasing = match (prev.and_then(|p| p.1), fisher) {
            (Some(before), Some(now)) => Some(now <= before * (T::one() + tol.relative)),
            _ => None,
        };
        rows.push(SweepRow {
            n: k + 1,
            entropy: h,
            fisher,
            entropy_power: (two * h).exp(),
            rel_entropy_gaussian: d,
            gap_prev,
            entropy_nondecreasing: gap_prev.map(|g| g >= -tol.entropy_abs),
            fisher_nonincreasing,
        });
    }
    Ok(CltSweepResult { tolerance: tol.entropy_abs, rows })
}

pub const MONOTONE_H: &str = "H(V_n) >= sum_s eta_s H(V^s)";
pub const MONOTONE_N: &str = "N(V_n) >= sum_s eta_s N(V^s)";
pub const MONOTONE_INV_I: &str = "1/I(V_n) >= sum_s eta_s / I(V^s)";

/// Monotonicity on average for standardized sums `V = T / sqrt(Var T)`,
/// with `eta_s = v_s / (r v_n)`: reports for the entropy, entropy power and
/// inverse Fisher information.
pub fn monotone_on_average<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    tol: &Tolerances<T>,
) -> Result<Vec<InequalityReport<T>>> {
    if collection.n() != system.n() {
        return Err(Error::Shape(format!(
            "collection is over 1..={} but the system has {} summands",
            collection.n(),
            system.n()
        )));
    }
    if !collection.classify().balanced {
        return Err(Error::Precondition("monotonicity on average needs a balanced collection".into()));
    }
    let eta = eta_weights(system, collection);
    let eta_sum: T = eta.iter().copied().sum();

    let standardize = |d: &GridDensity<T>, v: T| d.scale(T::one() / v.sqrt());
    let v_full = standardize(system.full_sum(), system.total_variance())?;
    let parts = collection
        .sets()
        .iter()
        .map(|s| standardize(&system.subset_sum(s)?, system.subset_variance(s)))
        .collect::<Result<Vec<_>>>()?;

    let h_full = entropy(&v_full);
    let h_parts: Vec<T> = parts.iter().map(entropy).collect();
    let weighted = |vals: &[T]| eta.iter().zip(vals).map(|(&e, &x)| e * x).sum::<T>();

    let h_rhs = weighted(&h_parts);
    let h_rep = InequalityReport::evaluated("monotone_avg_entropy", MONOTONE_H, h_full, h_rhs, h_full - h_rhs, tol.entropy_abs);

    let two = T::lit(2.0);
    let n_full = (two * h_full).exp();
    let n_parts: Vec<T> = h_parts.iter().map(|&h| (two * h).exp()).collect();
    let n_rhs = weighted(&n_parts);
    let n_rep = InequalityReport::evaluated(
        "monotone_avg_entropy_power",
        MONOTONE_N,
        n_full,
        n_rhs,
        n_full - n_rhs,
        tol.relative * n_full,
    );

    let fisher = || -> Result<(T, Vec<T>)> {
        let full = fisher_information(&v_full)?;
        let parts = parts.iter().map(fisher_information).collect::<Result<Vec<_>>>()?;
        Ok((full, parts))
    };
    let i_rep = match fisher() {
        Ok((full, ps)) => {
            let lhs = T::one() / full;
            let inv: Vec<T> = ps.iter().map(|&i| T::one() / i).collect();
            let rhs = weighted(&inv);
            InequalityReport::evaluated("monotone_avg_inverse_fisher", MONOTONE_INV_I, lhs, rhs, lhs - rhs, tol.relative * lhs)
        }
        Err(Error::ScoreUndefined(msg)) => InequalityReport::skipped(
            "monotone_avg_inverse_fisher",
            MONOTONE_INV_I,
            tol.relative,
            format!("not evaluable: score undefined ({msg})"),
        ),
        Err(e) => return Err(e),
    };

    Ok([h_rep, n_rep, i_rep]
        .into_iter()
        .map(|r| r.with_weights(&eta).with_extra("eta_sum", eta_sum))
        .collect())
}

/// Mean squares estimated on one low-discrepancy sample of the summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionGap<T> {
    /// `E[(sum_s w_s rho_s(T^s) - rho(T_n))^2]`
    pub gap: T,
    /// `E[(sum_s w_s rho_s(T^s))^2]`
    pub combined_mean_square: T,
    /// `E[rho(T_n)^2]` on the same points.
    pub full_mean_square: T,
    /// `I(T_n)` by grid quadrature.
    pub fisher_full: T,
    pub points_used: usize,
    pub seed: u64,
}

/// Inverse of the piecewise-linear CDF through the grid points.
fn quantile<T: Real>(d: &GridDensity<T>, cdf: &[T], u: T) -> T {
    let target = u * cdf[cdf.len() - 1];
    let k = cdf.partition_point(|&c| c <= target).clamp(1, cdf.len() - 1);
    let (lo, hi) = (cdf[k - 1], cdf[k]);
    let frac = if hi > lo { (target - lo) / (hi - lo) } else { T::lit(0.5) };
    d.x_at(k - 1) + frac * d.dx()
}

/// Estimates the squared distance between the weighted subset scores and
/// the score of the full sum, evaluated along `T^s = sum_{i in s} X_i` for
/// `points` Halton draws of `(X_1, ..., X_n)`.
///
/// Points where some score is outside its valid region are dropped.
pub fn projection_gap<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    w: &WeightVector<T>,
    points: usize,
    seed: u64,
) -> Result<ProjectionGap<T>> {
    if collection.n() != system.n() {
        return Err(Error::Shape(format!(
            "collection is over 1..={} but the system has {} summands",
            collection.n(),
            system.n()
        )));
    }
    if w.len() != collection.len() {
        return Err(Error::Shape(format!("{} weights for {} sets", w.len(), collection.len())));
    }
    if points == 0 {
        return Err(Error::Domain("projection gap needs at least one point".into()));
    }
    let n = system.n();
    let halton = Halton::new(n, seed)?;
    let members: Vec<&GridDensity<T>> = (1..=n).map(|i| system.member(i)).collect::<Result<_>>()?;
    let cdfs: Vec<Vec<T>> = members.iter().map(|d| d.cdf()).collect();

    let set_scores: Vec<ScoreFunction<T>> = collection
        .sets()
        .iter()
        .map(|s| score(&system.subset_sum(s)?))
        .collect::<Result<_>>()?;
    let full_score = score(system.full_sum())?;
    let fisher_full = fisher_information(system.full_sum())?;

    let per_point: Vec<Option<(T, T)>> = (0..points)
        .into_par_iter()
        .map(|p| {
            let u = halton.point(p);
            let x: Vec<T> = (0..n).map(|i| quantile(members[i], &cdfs[i], T::lit(u[i]))).collect();
            let mut combined = T::zero();
            for ((s, rho), &ws) in collection.sets().iter().zip(&set_scores).zip(w.weights()) {
                let t: T = s.iter().map(|&i| x[i - 1]).sum();
                combined = combined + ws * rho.value_at(t)?;
            }
            let full = full_score.value_at(x.iter().copied().sum())?;
            Some((combined, full))
        })
        .collect();

    let (mut gap, mut comb, mut full, mut used) = (T::zero(), T::zero(), T::zero(), 0usize);
    for (c, f) in per_point.into_iter().flatten() {
        gap = gap + (c - f) * (c - f);
        comb = comb + c * c;
        full = full + f * f;
        used += 1;
    }
    if used == 0 {
        return Err(Error::ScoreUndefined("no sample point lies in every valid score region".into()));
    }
    let m = T::from_usize_lossy(used);
    Ok(ProjectionGap {
        gap: gap / m,
        combined_mean_square: comb / m,
        full_mean_square: full / m,
        fisher_full,
        points_used: used,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collections::StandardKind;
    use crate::functionals::gaussian_entropy;

    #[test]
    fn gaussian_sweep_is_flat() {
        let res = iid_info_sequence(&Distribution::<f64>::gaussian(0.0, 1.0), 4, &GridConfig::default(), &Tolerances::default())
            .unwrap();
        assert_eq!(res.rows.len(), 4);
        for row in &res.rows {
            assert!((row.entropy - gaussian_entropy(1.0)).abs() < 1e-4);
            assert!((row.entropy_power - (2.0 * row.entropy).exp()).abs() < 1e-12);
        }
        assert!(res.rows[0].gap_prev.is_none());
        assert!(res.monotone());
    }

    #[test]
    fn n_max_bounds() {
        let dist = Distribution::gaussian(0.0, 1.0);
        let tol = Tolerances::default();
        assert!(iid_info_sequence(&dist, 1, &GridConfig::default(), &tol).is_err());
        assert!(iid_info_sequence(&dist, 13, &GridConfig::default(), &tol).is_err());
    }

    #[test]
    fn unbalanced_is_rejected() {
        let sys = SumSystem::iid(Distribution::gaussian(0.0, 1.0), 3, &GridConfig::default()).unwrap();
        let c = SubsetCollection::standard(StandardKind::SlidingWindow { k: 2 }, 3).unwrap();
        assert!(matches!(monotone_on_average(&sys, &c, &Tolerances::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn full_set_point_mass_has_zero_gap() {
        let sys = SumSystem::iid(Distribution::mixture(&[(0.5, -1.0, 0.25), (0.5, 1.0, 0.25)]), 2, &GridConfig::default())
            .unwrap();
        let c = SubsetCollection::new(2, vec![vec![1], vec![1, 2]]).unwrap();
        let w = WeightVector::point_mass(2, 1).unwrap();
        let g = projection_gap(&sys, &c, &w, 512, 3).unwrap();
        assert_eq!(g.gap, 0.0);
        assert_eq!(g.points_used, 512);
    }
}
