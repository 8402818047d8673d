//! Collections of subsets of `[n] = {1..n}`, their multiplicities, weight
//! vectors and fractional packings.
//!
//! Indices are 1-based throughout, matching the JSON form
//! `{"n":4,"sets":[[1,2],[2,3],[3,4]]}`. Each set is stored sorted; the
//! order of sets is kept as given, and per-set data (weights, packings)
//! are parallel arrays in that order. Duplicate sets are allowed and count
//! with multiplicity.

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{LpField, Real};
use crate::simplex;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCollection")]
pub struct SubsetCollection {
    n: usize,
    sets: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawCollection {
    n: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<RawCollection> for SubsetCollection {
    type Error = Error;

    fn try_from(raw: RawCollection) -> Result<Self> {
        Self::new(raw.n, raw.sets)
    }
}

/// The standard families of collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StandardKind {
    /// `{{1}, {2}, ..., {n}}`
    Singletons,
    /// All sets of size `n - 1`.
    LeaveOneOut,
    /// All sets of size `m`.
    AllMSubsets { m: usize },
    /// Windows of `k` consecutive indices `{i, ..., i+k-1}`.
    SlidingWindow { k: usize },
}

/// Per-index and per-set counts: `r(i)` is the number of sets containing
/// `i`, `r(s) = max_{i in s} r(i)`, and `r = max_i r(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Multiplicities {
    pub r: usize,
    /// `r_index[i - 1] = r(i)`
    pub r_index: Vec<usize>,
    /// `r_set[k] = r(sets[k])`
    pub r_set: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub balanced: bool,
    pub discriminating: bool,
    pub quasibalanced: bool,
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

impl SubsetCollection {
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Collection("n must be at least 1".into()));
        }
        if sets.is_empty() {
            return Err(Error::Collection("collection has no sets".into()));
        }
        let mut clean = Vec::with_capacity(sets.len());
        for (k, mut s) in sets.into_iter().enumerate() {
            if s.is_empty() {
                return Err(Error::Collection(format!("set {k} is empty")));
            }
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Collection(format!("set {k} repeats an index")));
            }
            if s[0] < 1 || s[s.len() - 1] > n {
                return Err(Error::Collection(format!("set {k} = {s:?} is not a subset of 1..={n}")));
            }
            clean.push(s);
        }
        Ok(Self { n, sets: clean })
    }

    pub fn standard(kind: StandardKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Collection("n must be at least 1".into()));
        }
        let sets = match kind {
            StandardKind::Singletons => (1..=n).map(|i| vec![i]).collect(),
            StandardKind::LeaveOneOut => {
                if n < 2 {
                    return Err(Error::Collection("leave-one-out needs n >= 2".into()));
                }
                combinations(n, n - 1)
            }
            StandardKind::AllMSubsets { m } => {
                if m < 1 || m > n {
                    return Err(Error::Collection(format!("subset size m = {m} not in 1..={n}")));
                }
                combinations(n, m)
            }
            StandardKind::SlidingWindow { k } => {
                if k < 1 || k > n {
                    return Err(Error::Collection(format!("window k = {k} not in 1..={n}")));
                }
                (1..=n + 1 - k).map(|i| (i..i + k).collect()).collect()
            }
        };
        Self::new(n, sets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Same sets in lexicographic order.
    pub fn canonical(&self) -> Self {
        let mut sets = self.sets.clone();
        sets.sort();
        Self { n: self.n, sets }
    }

    pub fn multiplicities(&self) -> Multiplicities {
        let mut r_index = vec![0usize; self.n];
        for s in &self.sets {
            for &i in s {
                r_index[i - 1] += 1;
            }
        }
        let r_set = self.sets.iter().map(|s| s.iter().map(|&i| r_index[i - 1]).max().unwrap_or(0)).collect();
        let r = r_index.iter().copied().max().unwrap_or(0);
        Multiplicities { r, r_index, r_set }
    }

    pub fn r(&self) -> usize {
        self.multiplicities().r
    }

    pub fn classify(&self) -> Classification {
        let m = self.multiplicities();
        let balanced = m.r_index.iter().all(|&ri| ri == m.r_index[0]);
        let discriminating = (1..=self.n).all(|i| {
            (1..=self.n).filter(|&j| j != i).all(|j| {
                self.sets.iter().any(|s| s.binary_search(&i).is_ok() && s.binary_search(&j).is_err())
            })
        });
        let quasibalanced = self
            .sets
            .iter()
            .zip(&m.r_set)
            .all(|(s, &rs)| s.iter().all(|&i| m.r_index[i - 1] == rs));
        Classification { balanced, discriminating, quasibalanced }
    }

    /// Adds indices to sets until every index lies in exactly `r` sets,
    /// keeping `r` fixed. Index `i` is added to the first `r - r(i)` sets
    /// (in collection order) that do not contain it.
    pub fn augment_to_balanced(&self) -> Self {
        let m = self.multiplicities();
        let mut sets = self.sets.clone();
        for i in 1..=self.n {
            let mut missing = m.r - m.r_index[i - 1];
            for s in sets.iter_mut() {
                if missing == 0 {
                    break;
                }
                if s.binary_search(&i).is_err() {
                    s.push(i);
                    s.sort_unstable();
                    missing -= 1;
                }
            }
        }
        Self { n: self.n, sets }
    }
}

/// Both sides of `sum_{s in C} sum_{i in s} a_i = r sum_i a_i`, which holds
/// exactly when `C` is balanced. `a[i - 1]` is the value at index `i`.
pub fn balance_identity_sides<S: Num + Clone>(collection: &SubsetCollection, a: &[S]) -> Result<(S, S)> {
    if a.len() != collection.n() {
        return Err(Error::Shape(format!("{} values for n = {}", a.len(), collection.n())));
    }
    let lhs = collection
        .sets()
        .iter()
        .flat_map(|s| s.iter())
        .fold(S::zero(), |acc, &i| acc + a[i - 1].clone());
    let total = a.iter().cloned().fold(S::zero(), |acc, x| acc + x);
    let r = (0..collection.r()).fold(S::zero(), |acc, _| acc + S::one());
    Ok((lhs, r * total))
}

/// A probability distribution on the sets of a collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Shape("empty weight vector".into()));
        }
        if w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
            return Err(Error::Precondition("weights must be finite and nonnegative".into()));
        }
        let total: T = w.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(4 * w.len()));
        if (total - T::one()).abs() > tol {
            return Err(Error::Precondition(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { w })
    }

    /// Normalizes nonnegative raw weights.
    pub fn from_unnormalized(raw: Vec<T>) -> Result<Self> {
        let total: T = raw.iter().copied().sum();
        if !(total > T::zero()) || raw.iter().any(|x| *x < T::zero()) {
            return Err(Error::Precondition("raw weights must be nonnegative with positive sum".into()));
        }
        Ok(Self { w: raw.into_iter().map(|x| x / total).collect() })
    }

    pub fn uniform(len: usize) -> Self {
        let v = T::one() / T::from_usize_lossy(len.max(1));
        Self { w: vec![v; len.max(1)] }
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if at >= len {
            return Err(Error::Shape(format!("point mass at {at} outside {len} sets")));
        }
        let mut w = vec![T::zero(); len];
        w[at] = T::one();
        Ok(Self { w })
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `H(w) = sum_s w_s log(1/w_s)` in nats.
    pub fn entropy(&self) -> T {
        self.w.iter().filter(|x| **x > T::zero()).map(|&x| -x * x.ln()).sum()
    }

    /// Discrete relative entropy `D(self || other)`; infinite when `other`
    /// vanishes where `self` does not.
    pub fn relative_entropy(&self, other: &[T]) -> Result<T> {
        if other.len() != self.w.len() {
            return Err(Error::Shape("weight vectors differ in length".into()));
        }
        Ok(self
            .w
            .iter()
            .zip(other)
            .filter(|(p, _)| **p > T::zero())
            .map(|(&p, &q)| if q > T::zero() { p * (p / q).ln() } else { T::infinity() })
            .sum())
    }
}

/// Nonnegative set weights with `sum_{s containing i} beta_s <= 1` for every
/// index `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalPacking<S> {
    pub beta: Vec<S>,
}

impl<S: LpField> FractionalPacking<S> {
    pub fn new(beta: Vec<S>) -> Self {
        Self { beta }
    }

    /// `beta_s = 1 / r` for every set.
    pub fn uniform(collection: &SubsetCollection) -> Self {
        let r = collection.r() as i64;
        Self { beta: vec![S::from_ratio(1, r); collection.len()] }
    }

    /// `beta_s = 1 / r(s)`.
    pub fn natural(collection: &SubsetCollection) -> Self {
        let m = collection.multiplicities();
        Self { beta: m.r_set.iter().map(|&rs| S::from_ratio(1, rs as i64)).collect() }
    }

    /// Per-index constraint sums `sum_{s containing i} beta_s`.
    pub fn loads(&self, collection: &SubsetCollection) -> Result<Vec<S>> {
        if self.beta.len() != collection.len() {
            return Err(Error::Shape(format!(
                "packing has {} weights for {} sets",
                self.beta.len(),
                collection.len()
            )));
        }
        let mut loads = vec![S::zero(); collection.n()];
        for (s, b) in collection.sets().iter().zip(&self.beta) {
            for &i in s {
                loads[i - 1] = loads[i - 1].clone() + b.clone();
            }
        }
        Ok(loads)
    }
}

/// True iff `beta` is nonnegative and every packing constraint holds within
/// `1e-12` (exactly, for rational scalars).
pub fn validate_packing<S: LpField>(collection: &SubsetCollection, beta: &FractionalPacking<S>) -> Result<bool> {
    let loads = beta.loads(collection)?;
    let bound = S::one() + S::feasibility_tol();
    Ok(beta.beta.iter().all(|b| *b >= S::zero()) && loads.iter().all(|l| *l <= bound))
}

/// Maximizes `sum_s beta_s c_s` over fractional packings.
pub fn optimize_packing_lp<S: LpField>(
    collection: &SubsetCollection,
    objective: &[S],
) -> Result<(FractionalPacking<S>, S)> {
    if objective.len() != collection.len() {
        return Err(Error::Shape(format!(
            "objective has {} entries for {} sets",
            objective.len(),
            collection.len()
        )));
    }
    if objective.iter().any(|c| *c < S::zero()) {
        return Err(Error::Precondition("packing objective must be nonnegative".into()));
    }
    let rows: Vec<Vec<S>> = (1..=collection.n())
        .map(|i| {
            collection
                .sets()
                .iter()
                .map(|s| if s.binary_search(&i).is_ok() { S::one() } else { S::zero() })
                .collect()
        })
        .collect();
    let b = vec![S::one(); collection.n()];
    let sol = simplex::maximize(&rows, &b, objective)?;
    Ok((FractionalPacking { beta: sol.x }, sol.objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn std(kind: StandardKind, n: usize) -> SubsetCollection {
        SubsetCollection::standard(kind, n).unwrap()
    }

    #[test]
    fn standard_collections() {
        let c = std(StandardKind::Singletons, 3);
        assert_eq!(c.sets(), &[vec![1], vec![2], vec![3]]);
        assert_eq!(c.r(), 1);
        let c = std(StandardKind::AllMSubsets { m: 2 }, 4);
        assert_eq!(c.len(), 6);
        assert_eq!(c.r(), 3);
        let c = std(StandardKind::SlidingWindow { k: 2 }, 4);
        assert_eq!(c.sets(), &[vec![1, 2], vec![2, 3], vec![3, 4]]);
        assert_eq!(c.r(), 2);
        assert!(SubsetCollection::standard(StandardKind::AllMSubsets { m: 0 }, 3).is_err());
        assert!(SubsetCollection::standard(StandardKind::SlidingWindow { k: 5 }, 4).is_err());
    }

    #[test]
    fn multiplicity_counts() {
        let m = std(StandardKind::LeaveOneOut, 3).multiplicities();
        assert_eq!((m.r, m.r_index.clone(), m.r_set.clone()), (2, vec![2, 2, 2], vec![2, 2, 2]));
        let m = SubsetCollection::new(2, vec![vec![1], vec![1, 2]]).unwrap().multiplicities();
        assert_eq!((m.r, m.r_index, m.r_set), (2, vec![2, 1], vec![2, 2]));
        let m = std(StandardKind::SlidingWindow { k: 2 }, 4).multiplicities();
        assert_eq!((m.r, m.r_index), (2, vec![1, 2, 2, 1]));
    }

    #[test]
    fn classification() {
        for n in 2..=5 {
            for m in 1..n {
                let c = std(StandardKind::AllMSubsets { m }, n).classify();
                assert!(c.balanced && c.discriminating && c.quasibalanced, "n={n} m={m}");
            }
        }
        let c = std(StandardKind::SlidingWindow { k: 2 }, 4).classify();
        assert!(!c.balanced && !c.quasibalanced);
        let c = SubsetCollection::new(2, vec![vec![1, 2]]).unwrap().classify();
        assert!(!c.discriminating);
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(SubsetCollection::new(3, vec![vec![]]).is_err());
        assert!(SubsetCollection::new(3, vec![vec![4]]).is_err());
        assert!(SubsetCollection::new(3, vec![vec![0, 1]]).is_err());
        assert!(SubsetCollection::new(3, vec![vec![1, 1]]).is_err());
        assert!(SubsetCollection::new(3, vec![]).is_err());
        let parsed: std::result::Result<SubsetCollection, _> = serde_json::from_str(r#"{"n":2,"sets":[[3]]}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn packings() {
        let c = std(StandardKind::SlidingWindow { k: 2 }, 4);
        assert!(validate_packing(&c, &FractionalPacking::<f64>::uniform(&c)).unwrap());
        assert!(validate_packing(&c, &FractionalPacking::<f64>::natural(&c)).unwrap());
        let disjoint = SubsetCollection::new(4, vec![vec![1, 2], vec![3], vec![4]]).unwrap();
        assert!(validate_packing(&disjoint, &FractionalPacking::new(vec![1.0, 1.0, 1.0])).unwrap());
        assert!(!validate_packing(&c, &FractionalPacking::new(vec![1.0, 1.0, 0.0])).unwrap());
        assert!(!validate_packing(&c, &FractionalPacking::new(vec![-0.1, 0.0, 0.0])).unwrap());
        assert!(matches!(validate_packing(&c, &FractionalPacking::new(vec![0.5])), Err(Error::Shape(_))));
    }

    #[test]
    fn packing_lp_examples() {
        let c = SubsetCollection::new(2, vec![vec![1], vec![2]]).unwrap();
        let (beta, obj) = optimize_packing_lp(&c, &[1.0, 1.0]).unwrap();
        assert_eq!((beta.beta, obj), (vec![1.0, 1.0], 2.0));
        let c = SubsetCollection::new(2, vec![vec![1], vec![1, 2]]).unwrap();
        assert_eq!(optimize_packing_lp(&c, &[1.0, 1.0]).unwrap().1, 1.0);
        let c = std(StandardKind::AllMSubsets { m: 2 }, 3);
        let one = Rational64::from_integer(1);
        let (beta, obj) = optimize_packing_lp(&c, &[one, one, one]).unwrap();
        assert_eq!(obj, Rational64::new(3, 2));
        assert!(beta.beta.iter().all(|b| *b == Rational64::new(1, 2)));
    }

    #[test]
    fn weights() {
        let w = WeightVector::<f64>::uniform(4);
        assert!((w.entropy() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(WeightVector::<f64>::point_mass(3, 1).unwrap().entropy(), 0.0);
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(w.relative_entropy(&[0.25; 4]).unwrap().abs() < 1e-15);
        let p = WeightVector::<f64>::new(vec![1.0, 0.0]).unwrap();
        assert!(p.relative_entropy(&[0.0, 1.0]).unwrap().is_infinite());
    }

    #[test]
    fn augmentation_balances() {
        let c = std(StandardKind::SlidingWindow { k: 2 }, 4);
        let aug = c.augment_to_balanced();
        let m = aug.multiplicities();
        assert_eq!(m.r, c.r());
        assert!(aug.classify().balanced);
    }
}
