//! Subset sums of independent summands and checks of the subset-sum
//! Fisher information and entropy power inequalities.
//!
//! Every check produces an [`InequalityReport`] whose `gap` is signed so that
//! a nonnegative gap means the inequality holds, whatever its written
//! orientation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::collections::{validate_packing, FractionalPacking, SubsetCollection, WeightVector};
use crate::density::{build_density_with_step, convolve, default_step, Distribution, GridConfig, GridDensity};
use crate::error::{Error, Result};
use crate::functionals::{entropy, fisher_information, rel_entropy_gaussian};
use crate::scalar::{LpField, Real};

/// Tolerances for deciding `satisfied`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<T> {
    /// Absolute slack on inequalities between entropies (nats).
    pub entropy_abs: T,
    /// Slack relative to the left side for entropy powers and (inverse)
    /// Fisher informations.
    pub relative: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self { entropy_abs: T::lit(1e-6), relative: T::lit(1e-3) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Satisfied,
    Violated,
    /// Not evaluated: a precondition failed or a functional is undefined.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport<T> {
    pub name: String,
    /// The inequality in words/symbols, `lhs >= rhs` after orientation.
    pub inequality: String,
    pub lhs: Option<T>,
    pub rhs: Option<T>,
    pub gap: Option<T>,
    pub satisfied: bool,
    pub tolerance: T,
    pub status: ReportStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packing: Option<Vec<T>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub extra: BTreeMap<String, T>,
}

impl<T: Real> InequalityReport<T> {
    /// Report for `upper >= lower` (gap = upper - lower).
    pub fn evaluated(name: &str, inequality: &str, lhs: T, rhs: T, gap: T, tolerance: T) -> Self {
        let satisfied = gap >= -tolerance;
        Self {
            name: name.to_string(),
            inequality: inequality.to_string(),
            lhs: Some(lhs),
            rhs: Some(rhs),
            gap: Some(gap),
            satisfied,
            tolerance,
            status: if satisfied { ReportStatus::Satisfied } else { ReportStatus::Violated },
            reason: None,
            weights: None,
            packing: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn skipped(name: &str, inequality: &str, tolerance: T, reason: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            inequality: inequality.to_string(),
            lhs: None,
            rhs: None,
            gap: None,
            satisfied: false,
            tolerance,
            status: ReportStatus::Skipped,
            reason: Some(reason.into()),
            weights: None,
            packing: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_weights(mut self, w: &[T]) -> Self {
        self.weights = Some(w.to_vec());
        self
    }

    pub fn with_packing(mut self, beta: &[T]) -> Self {
        self.packing = Some(beta.to_vec());
        self
    }

    pub fn with_extra(mut self, key: &str, value: T) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.status == ReportStatus::Skipped
    }

    /// `|gap| / |lhs|`, when evaluated.
    pub fn relative_gap(&self) -> Option<T> {
        Some(self.gap?.abs() / self.lhs?.abs())
    }
}

/// Independent summands `X_1..X_n` on a common grid step, with cached
/// subset-sum densities `T^(s)`.
#[derive(Debug, Clone)]
pub struct SumSystem<T> {
    dists: Vec<Distribution<T>>,
    variances: Vec<T>,
    members: Vec<GridDensity<T>>,
    cache: BTreeMap<Vec<usize>, GridDensity<T>>,
    cfg: GridConfig,
}

impl<T: Real> SumSystem<T> {
    /// Builds every summand with the finest of their default grid steps so
    /// that subset sums are exact discrete convolutions, and caches the full
    /// sum `T_n`.
    pub fn new(dists: Vec<Distribution<T>>, cfg: &GridConfig) -> Result<Self> {
        if dists.is_empty() {
            return Err(Error::Domain("system needs at least one summand".into()));
        }
        let variances = dists.iter().map(|s| s.variance()).collect::<Result<Vec<_>>>()?;
        let step = dists
            .iter()
            .map(|s| default_step(s, cfg))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(T::infinity(), T::min);
        let members = dists.iter().map(|s| build_density_with_step(s, cfg, step)).collect::<Result<Vec<_>>>()?;
        let mut system = Self { dists, variances, members, cache: BTreeMap::new(), cfg: *cfg };
        let full: Vec<usize> = (1..=system.n()).collect();
        system.ensure(&full)?;
        Ok(system)
    }

    /// `n` copies of one distribution.
    pub fn iid(dist: Distribution<T>, n: usize, cfg: &GridConfig) -> Result<Self> {
        Self::new(vec![dist; n], cfg)
    }

    pub fn n(&self) -> usize {
        self.dists.len()
    }

    pub fn dists(&self) -> &[Distribution<T>] {
        &self.dists
    }

    pub fn grid_config(&self) -> &GridConfig {
        &self.cfg
    }

    /// `sigma_i^2`, in index order.
    pub fn variances(&self) -> &[T] {
        &self.variances
    }

    pub fn member(&self, i: usize) -> Result<&GridDensity<T>> {
        self.members.get(i.wrapping_sub(1)).ok_or_else(|| Error::Domain(format!("no summand {i}")))
    }

    /// `v_s = sum_{i in s} sigma_i^2`.
    pub fn subset_variance(&self, s: &[usize]) -> T {
        s.iter().map(|&i| self.variances[i - 1]).sum()
    }

    pub fn total_variance(&self) -> T {
        self.variances.iter().copied().sum()
    }

    fn key(&self, s: &[usize]) -> Result<Vec<usize>> {
        if s.is_empty() {
            return Err(Error::Domain("subset sum over the empty set".into()));
        }
        let mut key = s.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.len() != s.len() || key[0] < 1 || key[key.len() - 1] > self.n() {
            return Err(Error::Domain(format!("{s:?} is not a subset of 1..={}", self.n())));
        }
        Ok(key)
    }

    /// Computes and caches `T^(s)` and its prefix sums.
    fn ensure(&mut self, s: &[usize]) -> Result<()> {
        let key = self.key(s)?;
        if key.len() == 1 || self.cache.contains_key(&key) {
            return Ok(());
        }
        let prefix = &key[..key.len() - 1];
        self.ensure(prefix)?;
        let head = if prefix.len() == 1 { &self.members[prefix[0] - 1] } else { &self.cache[prefix] };
        let sum = convolve(head, &self.members[key[key.len() - 1] - 1])?;
        self.cache.insert(key, sum);
        Ok(())
    }

    /// Populates the cache for every set of `collection`. After this, the
    /// verifiers only read.
    pub fn prepare(&mut self, collection: &SubsetCollection) -> Result<()> {
        self.check_collection(collection)?;
        for s in collection.sets() {
            self.ensure(s)?;
        }
        Ok(())
    }

    /// Density of `T^(s) = sum_{i in s} X_i`.
    ///
    /// Cached sums are returned directly; others are convolved in increasing
    /// index order, matching what [`prepare`](Self::prepare) would cache.
    pub fn subset_sum(&self, s: &[usize]) -> Result<GridDensity<T>> {
        let key = self.key(s)?;
        if key.len() == 1 {
            return Ok(self.members[key[0] - 1].clone());
        }
        if let Some(d) = self.cache.get(&key) {
            return Ok(d.clone());
        }
        let mut acc = self.members[key[0] - 1].clone();
        for (k, &i) in key.iter().enumerate().skip(1) {
            acc = match self.cache.get(&key[..=k]) {
                Some(d) => d.clone(),
                None => convolve(&acc, &self.members[i - 1])?,
            };
        }
        Ok(acc)
    }

    /// Density of `T_n`.
    pub fn full_sum(&self) -> &GridDensity<T> {
        if self.n() == 1 {
            return &self.members[0];
        }
        let key: Vec<usize> = (1..=self.n()).collect();
        &self.cache[&key]
    }

    pub(crate) fn check_collection(&self, collection: &SubsetCollection) -> Result<()> {
        if collection.n() != self.n() {
            return Err(Error::Shape(format!(
                "collection is over 1..={} but the system has {} summands",
                collection.n(),
                self.n()
            )));
        }
        Ok(())
    }

    pub(crate) fn entropies(&self, collection: &SubsetCollection) -> Result<Vec<T>> {
        collection.sets().iter().map(|s| Ok(entropy(&self.subset_sum(s)?))).collect()
    }

    pub(crate) fn fishers(&self, collection: &SubsetCollection) -> Result<Vec<T>> {
        collection.sets().iter().map(|s| fisher_information(&self.subset_sum(s)?)).collect()
    }
}

fn two<T: Real>() -> T {
    T::lit(2.0)
}

fn ep<T: Real>(h: T) -> T {
    (two::<T>() * h).exp()
}

pub const EPI: &str = "N(T_n) >= (1/r) sum_s N(T^s)";
pub const FII: &str = "1/I(T_n) >= (1/r) sum_s 1/I(T^s)";
pub const WEIGHTED_FII: &str = "r sum_s w_s^2 I(T^s) >= I(T_n)";
pub const ENTROPY_OF_SUMS: &str = "H(T_n) >= sum_s w_s H(T^s) + H(w)/2 - log(r)/2";
pub const RELENT: &str = "sum_s w_s D(T^s) + D(w||eta)/2 >= D(T_n)";
pub const REFINED_FII: &str = "1/I(T_n) >= sum_s beta_s / I(T^s)";
pub const RS_EPI: &str = "N(T_n) >= sum_s N(T^s) / r(s)";

/// Entropy power form: `N(T_n) >= (1/r) sum_s N(T^s)`.
pub fn verify_subset_epi<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    let r = T::from_usize_lossy(collection.r());
    let lhs = ep(entropy(system.full_sum()));
    let rhs = system.entropies(collection)?.into_iter().map(ep).sum::<T>() / r;
    Ok(InequalityReport::evaluated("subset_epi", EPI, lhs, rhs, lhs - rhs, tol.relative * lhs))
}

/// Inverse Fisher information form: `1/I(T_n) >= (1/r) sum_s 1/I(T^s)`.
pub fn verify_fii<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    let (full, parts) = match fisher_pair(system, collection) {
        Ok(v) => v,
        Err(e) => return Ok(InequalityReport::skipped("fii", FII, tol.relative, not_evaluable(e)?)),
    };
    let r = T::from_usize_lossy(collection.r());
    let lhs = T::one() / full;
    let rhs = parts.iter().map(|&i| T::one() / i).sum::<T>() / r;
    Ok(InequalityReport::evaluated("fii", FII, lhs, rhs, lhs - rhs, tol.relative * lhs))
}

/// Weighted form `I(T_n) <= r sum_s w_s^2 I(T^s)`; reported with the
/// weighted sum as the left side.
pub fn verify_weighted_fii<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    w: &WeightVector<T>,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    check_len(w.len(), collection)?;
    let (full, parts) = match fisher_pair(system, collection) {
        Ok(v) => v,
        Err(e) => return Ok(InequalityReport::skipped("weighted_fii", WEIGHTED_FII, tol.relative, not_evaluable(e)?)),
    };
    let r = T::from_usize_lossy(collection.r());
    let lhs = r * w.weights().iter().zip(&parts).map(|(&ws, &i)| ws * ws * i).sum::<T>();
    let rhs = full;
    Ok(InequalityReport::evaluated("weighted_fii", WEIGHTED_FII, lhs, rhs, lhs - rhs, tol.relative * lhs)
        .with_weights(w.weights()))
}

/// Entropy of sums: `H(T_n) >= sum_s w_s H(T^s) + H(w)/2 - log(r)/2`.
///
/// Also evaluates the scaled form `sum_s w_s H(T^s / sqrt(w_s r))` on
/// actually rescaled densities and records it as `scaled_form_rhs`; the two
/// right sides agree by the scaling law of entropy.
pub fn verify_entropy_of_sums<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    w: &WeightVector<T>,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    check_len(w.len(), collection)?;
    let r = T::from_usize_lossy(collection.r());
    let half = T::lit(0.5);
    let lhs = entropy(system.full_sum());
    let hs = system.entropies(collection)?;
    let rhs = w.weights().iter().zip(&hs).map(|(&ws, &h)| ws * h).sum::<T>() + half * w.entropy() - half * r.ln();

    let mut scaled = T::zero();
    for (s, &ws) in collection.sets().iter().zip(w.weights()) {
        if ws > T::zero() {
            let d = system.subset_sum(s)?.scale(T::one() / (ws * r).sqrt())?;
            scaled = scaled + ws * entropy(&d);
        }
    }
    Ok(InequalityReport::evaluated("entropy_of_sums", ENTROPY_OF_SUMS, lhs, rhs, lhs - rhs, tol.entropy_abs)
        .with_weights(w.weights())
        .with_extra("scaled_form_rhs", scaled)
        .with_extra("scaling_identity_error", (scaled - rhs).abs()))
}

/// `eta_s = Var(T^s) / (r Var(T_n))` from the summand variances.
pub fn eta_weights<T: Real>(system: &SumSystem<T>, collection: &SubsetCollection) -> Vec<T> {
    let denom = T::from_usize_lossy(collection.r()) * system.total_variance();
    collection.sets().iter().map(|s| system.subset_variance(s) / denom).collect()
}

/// `mu_s = N(T^s) / Z` with `Z = sum_s N(T^s)`.
pub fn mu_weights<T: Real>(system: &SumSystem<T>, collection: &SubsetCollection) -> Result<WeightVector<T>> {
    system.check_collection(collection)?;
    WeightVector::from_unnormalized(system.entropies(collection)?.into_iter().map(ep).collect())
}

/// `w_s` proportional to `1 / I(T^s)`, the minimizer of the weighted
/// Fisher bound.
pub fn fisher_optimal_weights<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
) -> Result<WeightVector<T>> {
    system.check_collection(collection)?;
    WeightVector::from_unnormalized(system.fishers(collection)?.into_iter().map(|i| T::one() / i).collect())
}

/// Relative entropy form for balanced collections:
/// `D(T_n) <= sum_s w_s D(T^s) + D(w || eta)/2`.
pub fn verify_relent<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    w: &WeightVector<T>,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    check_len(w.len(), collection)?;
    if !collection.classify().balanced {
        return Ok(InequalityReport::skipped(
            "relent",
            RELENT,
            tol.entropy_abs,
            "out of contract: eta is only a subprobability for unbalanced collections",
        ));
    }
    let eta = eta_weights(system, collection);
    let lhs = rel_entropy_gaussian(system.full_sum());
    let mut mix = T::zero();
    for (s, &ws) in collection.sets().iter().zip(w.weights()) {
        mix = mix + ws * rel_entropy_gaussian(&system.subset_sum(s)?);
    }
    let div = w.relative_entropy(&eta)?;
    let rhs = mix + T::lit(0.5) * div;
    Ok(InequalityReport::evaluated("relent", RELENT, rhs, lhs, rhs - lhs, tol.entropy_abs)
        .with_weights(w.weights())
        .with_extra("eta_sum", eta.iter().copied().sum())
        .with_extra("d_w_eta", div))
}

/// Fractional packing form: `1/I(T_n) >= sum_s beta_s / I(T^s)`.
pub fn verify_refined_fii<T: Real + LpField>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    beta: &FractionalPacking<T>,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    if !validate_packing(collection, beta)? {
        return Err(Error::Precondition(format!("{:?} is not a fractional packing", beta.beta)));
    }
    let (full, parts) = match fisher_pair(system, collection) {
        Ok(v) => v,
        Err(e) => return Ok(InequalityReport::skipped("refined_fii", REFINED_FII, tol.relative, not_evaluable(e)?)),
    };
    let lhs = T::one() / full;
    let rhs = beta.beta.iter().zip(&parts).map(|(&b, &i)| b / i).sum::<T>();
    Ok(InequalityReport::evaluated("refined_fii", REFINED_FII, lhs, rhs, lhs - rhs, tol.relative * lhs)
        .with_packing(&beta.beta))
}

/// `N(T_n) >= sum_s N(T^s) / r(s)`, evaluated only when no set dominates
/// its multiplicity class.
pub fn verify_rs_epi<T: Real>(
    system: &SumSystem<T>,
    collection: &SubsetCollection,
    tol: &Tolerances<T>,
) -> Result<InequalityReport<T>> {
    system.check_collection(collection)?;
    let m = collection.multiplicities();
    let powers: Vec<T> = system.entropies(collection)?.into_iter().map(ep).collect();

    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, &rs) in m.r_set.iter().enumerate() {
        classes.entry(rs).or_default().push(k);
    }
    for (&rc, members) in &classes {
        let share = members.iter().map(|&k| powers[k]).sum::<T>() / T::from_usize_lossy(rc);
        if let Some(&k) = members.iter().find(|&&k| powers[k] > share * (T::one() + tol.relative)) {
            return Ok(InequalityReport::skipped(
                "rs_epi",
                RS_EPI,
                tol.relative,
                format!(
                    "set {:?} dominates its multiplicity class r(s) = {rc}: N = {} > {}",
                    collection.sets()[k],
                    powers[k],
                    share
                ),
            ));
        }
    }
    let lhs = ep(entropy(system.full_sum()));
    let rhs = powers.iter().zip(&m.r_set).map(|(&p, &rs)| p / T::from_usize_lossy(rs)).sum::<T>();
    Ok(InequalityReport::evaluated("rs_epi", RS_EPI, lhs, rhs, lhs - rhs, tol.relative * lhs))
}

fn check_len(len: usize, collection: &SubsetCollection) -> Result<()> {
    if len != collection.len() {
        return Err(Error::Shape(format!("{len} weights for {} sets", collection.len())));
    }
    Ok(())
}

fn fisher_pair<T: Real>(system: &SumSystem<T>, collection: &SubsetCollection) -> Result<(T, Vec<T>)> {
    Ok((fisher_information(system.full_sum())?, system.fishers(collection)?))
}

/// Undefined scores become skip reasons; anything else propagates.
fn not_evaluable(e: Error) -> Result<String> {
    match e {
        Error::ScoreUndefined(msg) => Ok(format!("not evaluable: score undefined ({msg})")),
        other => Err(other),
    }
}
