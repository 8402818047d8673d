//! Exact ANOVA (Hoeffding) decomposition on finite product spaces.
//!
//! Functions are tables over the full product grid, indexed row-major with
//! the last coordinate varying fastest. Coordinates are 1-based in the API;
//! subsets `t` of coordinates are bitmasks internally (bit `j - 1` for
//! coordinate `j`).

use serde::{Deserialize, Serialize};

use crate::collections::{validate_packing, FractionalPacking, SubsetCollection};
use crate::error::{Error, Result};
use crate::scalar::{LpField, Real};

pub const MAX_COORDS: usize = 5;
pub const MAX_SIZE: usize = 8;
/// Tolerance for probability sums, zero means and dependence checks.
pub const TOL_EXACT: f64 = 1e-12;

/// Independent finite coordinates with strictly positive probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ProductSpace<T> {
    supports: Vec<Vec<T>>,
    probs: Vec<Vec<T>>,
}

#[derive(Deserialize)]
struct RawSpace<T> {
    supports: Vec<Vec<T>>,
    probs: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<RawSpace<T>> for ProductSpace<T> {
    type Error = Error;

    fn try_from(raw: RawSpace<T>) -> Result<Self> {
        Self::new(raw.supports, raw.probs)
    }
}

impl<T: Real> ProductSpace<T> {
    pub fn new(supports: Vec<Vec<T>>, probs: Vec<Vec<T>>) -> Result<Self> {
        let n = supports.len();
        if n == 0 || n > MAX_COORDS {
            return Err(Error::Shape(format!("{n} coordinates, need 1..={MAX_COORDS}")));
        }
        if probs.len() != n {
            return Err(Error::Shape(format!("{} probability vectors for {n} coordinates", probs.len())));
        }
        for (j, (s, p)) in supports.iter().zip(&probs).enumerate() {
            if s.is_empty() || s.len() > MAX_SIZE || s.len() != p.len() {
                return Err(Error::Shape(format!(
                    "coordinate {}: {} values and {} probabilities (size must be 1..={MAX_SIZE})",
                    j + 1,
                    s.len(),
                    p.len()
                )));
            }
            if p.iter().any(|&x| !(x > T::zero())) || s.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("coordinate {}: probabilities must be positive", j + 1)));
            }
            let total: T = p.iter().copied().sum();
            if (total - T::one()).abs() > T::lit(TOL_EXACT) {
                return Err(Error::Domain(format!("coordinate {}: probabilities sum to {total}", j + 1)));
            }
        }
        Ok(Self { supports, probs })
    }

    /// `n` independent copies of one coordinate.
    pub fn iid(support: Vec<T>, probs: Vec<T>, n: usize) -> Result<Self> {
        Self::new(vec![support; n], vec![probs; n])
    }

    /// `n` copies of the uniform distribution on `support`.
    pub fn uniform(support: Vec<T>, n: usize) -> Result<Self> {
        let p = vec![T::one() / T::from_usize_lossy(support.len().max(1)); support.len()];
        Self::iid(support, p, n)
    }

    pub fn n(&self) -> usize {
        self.supports.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.supports.iter().map(Vec::len).collect()
    }

    pub fn size(&self) -> usize {
        self.supports.iter().map(Vec::len).product()
    }

    pub fn support(&self, j: usize) -> &[T] {
        &self.supports[j - 1]
    }

    pub fn probs(&self, j: usize) -> &[T] {
        &self.probs[j - 1]
    }

    fn stride(&self, j: usize) -> usize {
        self.supports[j..].iter().map(Vec::len).product()
    }

    /// Per-coordinate indices of flat index `idx`.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n()];
        for j in (0..self.n()).rev() {
            let len = self.supports[j].len();
            out[j] = idx % len;
            idx /= len;
        }
        out
    }

    /// Coordinates `x` at flat index `idx`.
    pub fn point(&self, idx: usize) -> Vec<T> {
        self.unravel(idx).iter().enumerate().map(|(j, &k)| self.supports[j][k]).collect()
    }

    /// Product probability of flat index `idx`.
    pub fn mass(&self, idx: usize) -> T {
        self.unravel(idx).iter().enumerate().map(|(j, &k)| self.probs[j][k]).fold(T::one(), |a, b| a * b)
    }

    fn check_coord(&self, j: usize) -> Result<()> {
        if j < 1 || j > self.n() {
            return Err(Error::Domain(format!("coordinate {j} not in 1..={}", self.n())));
        }
        Ok(())
    }
}

/// A real function on the product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableFunction<T> {
    pub values: Vec<T>,
}

impl<T: Real> TableFunction<T> {
    pub fn new(space: &ProductSpace<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != space.size() {
            return Err(Error::Shape(format!("{} values for a grid of {}", values.len(), space.size())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("table entries must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Tabulates `f(x_1, ..., x_n)`.
    pub fn from_fn(space: &ProductSpace<T>, f: impl Fn(&[T]) -> T) -> Result<Self> {
        Self::new(space, (0..space.size()).map(|i| f(&space.point(i))).collect())
    }

    pub fn zeros(space: &ProductSpace<T>) -> Self {
        Self { values: vec![T::zero(); space.size()] }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect() }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { values: self.values.iter().map(|&a| a * c).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max)
    }
}

/// `E[psi]` under the product measure.
pub fn expectation<T: Real>(psi: &TableFunction<T>, space: &ProductSpace<T>) -> T {
    psi.values.iter().enumerate().map(|(i, &v)| v * space.mass(i)).sum()
}

/// `E[psi phi]`.
pub fn inner<T: Real>(psi: &TableFunction<T>, phi: &TableFunction<T>, space: &ProductSpace<T>) -> T {
    psi.values.iter().zip(&phi.values).enumerate().map(|(i, (&a, &b))| a * b * space.mass(i)).sum()
}

pub fn variance<T: Real>(psi: &TableFunction<T>, space: &ProductSpace<T>) -> T {
    let m = expectation(psi, space);
    inner(psi, psi, space) - m * m
}

/// `E_j psi`: integrates out coordinate `j`, leaving a table constant along it.
pub fn project_out<T: Real>(psi: &TableFunction<T>, j: usize, space: &ProductSpace<T>) -> Result<TableFunction<T>> {
    space.check_coord(j)?;
    let stride = space.stride(j);
    let len = space.supports[j - 1].len();
    let p = &space.probs[j - 1];
    let block = stride * len;
    let mut out = vec![T::zero(); psi.values.len()];
    for start in (0..psi.values.len()).step_by(block) {
        for off in 0..stride {
            let base = start + off;
            let avg: T = (0..len).map(|k| p[k] * psi.values[base + k * stride]).sum();
            for k in 0..len {
                out[base + k * stride] = avg;
            }
        }
    }
    Ok(TableFunction { values: out })
}

/// True when `psi` does not depend on coordinate `j` (within `tol`).
pub fn is_constant_along<T: Real>(psi: &TableFunction<T>, j: usize, space: &ProductSpace<T>, tol: T) -> Result<bool> {
    Ok(project_out(psi, j, space)?.max_abs_diff(psi) <= tol)
}

fn mask_of(t: &[usize]) -> usize {
    t.iter().fold(0, |m, &j| m | 1 << (j - 1))
}

fn coords_of(mask: usize, n: usize) -> Vec<usize> {
    (1..=n).filter(|&j| mask & (1 << (j - 1)) != 0).collect()
}

/// The `2^n` components `Ē_t psi`, indexed by bitmask of `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaDecomposition<T> {
    n: usize,
    components: Vec<TableFunction<T>>,
}

/// One line of the ANOVA table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow<T> {
    pub subset: Vec<usize>,
    pub variance: T,
}

impl<T: Real> AnovaDecomposition<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Component for coordinate subset `t` (1-based, any order).
    pub fn component(&self, t: &[usize]) -> Result<&TableFunction<T>> {
        if t.iter().any(|&j| j < 1 || j > self.n) {
            return Err(Error::Domain(format!("{t:?} is not a subset of 1..={}", self.n)));
        }
        Ok(&self.components[mask_of(t)])
    }

    /// `(t, Ē_t psi)` for every subset, empty set first.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &TableFunction<T>)> {
        self.components.iter().enumerate().map(move |(m, c)| (coords_of(m, self.n), c))
    }

    pub fn reconstruct(&self) -> TableFunction<T> {
        let mut acc = TableFunction { values: vec![T::zero(); self.components[0].values.len()] };
        for c in &self.components {
            acc = acc.add(c);
        }
        acc
    }

    /// `E[(Ē_t psi)^2]` per subset, by subset size then lexicographically.
    pub fn variance_table(&self, space: &ProductSpace<T>) -> Vec<AnovaRow<T>> {
        let mut rows: Vec<AnovaRow<T>> = self
            .iter()
            .map(|(subset, c)| AnovaRow { variance: if subset.is_empty() { T::zero() } else { inner(c, c, space) }, subset })
            .collect();
        rows.sort_by(|a, b| (a.subset.len(), &a.subset).cmp(&(b.subset.len(), &b.subset)));
        rows
    }
}

/// `Ē_t psi = E_{t^c} prod_{j in t} (I - E_j) psi` for every `t`.
pub fn anova_decompose<T: Real>(psi: &TableFunction<T>, space: &ProductSpace<T>) -> Result<AnovaDecomposition<T>> {
    if psi.values.len() != space.size() {
        return Err(Error::Shape(format!("{} values for a grid of {}", psi.values.len(), space.size())));
    }
    let n = space.n();
    let components = (0..1usize << n)
        .map(|mask| {
            let mut cur = psi.clone();
            for j in 1..=n {
                let e = project_out(&cur, j, space)?;
                cur = if mask & (1 << (j - 1)) != 0 { cur.sub(&e) } else { e };
            }
            Ok(cur)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnovaDecomposition { n, components })
}

/// `U = sum_s psi_s(X_s)` with each `psi_s` depending only on `X_s` and
/// centred.
#[derive(Debug, Clone, PartialEq)]
pub struct CAdditiveFunction<T> {
    collection: SubsetCollection,
    components: Vec<TableFunction<T>>,
}

impl<T: Real> CAdditiveFunction<T> {
    /// Checks dependence and zero means within `1e-12`.
    pub fn new(collection: SubsetCollection, components: Vec<TableFunction<T>>, space: &ProductSpace<T>) -> Result<Self> {
        if collection.n() != space.n() {
            return Err(Error::Shape(format!("collection over {} coordinates, space has {}", collection.n(), space.n())));
        }
        if components.len() != collection.len() {
            return Err(Error::Shape(format!("{} components for {} sets", components.len(), collection.len())));
        }
        let tol = T::lit(TOL_EXACT);
        for (k, (s, psi)) in collection.sets().iter().zip(&components).enumerate() {
            if psi.values.len() != space.size() {
                return Err(Error::Shape(format!("component {k} has {} values", psi.values.len())));
            }
            if expectation(psi, space).abs() > tol {
                return Err(Error::Precondition(format!("component {k} does not have mean zero")));
            }
            for j in (1..=space.n()).filter(|j| !s.contains(j)) {
                if !is_constant_along(psi, j, space, tol)? {
                    return Err(Error::Precondition(format!("component {k} depends on coordinate {j} outside {s:?}")));
                }
            }
        }
        Ok(Self { collection, components })
    }

    /// Turns arbitrary tables into valid components:
    /// `psi_s = E_{s^c} raw_s - E[raw_s]`.
    pub fn centered(collection: SubsetCollection, raw: Vec<TableFunction<T>>, space: &ProductSpace<T>) -> Result<Self> {
        let mut components = Vec::with_capacity(raw.len());
        for (s, table) in collection.sets().iter().zip(raw) {
            let mut cur = table;
            for j in (1..=space.n()).filter(|j| !s.contains(j)) {
                cur = project_out(&cur, j, space)?;
            }
            let m = expectation(&cur, space);
            components.push(TableFunction { values: cur.values.iter().map(|&v| v - m).collect() });
        }
        Self::new(collection, components, space)
    }

    pub fn collection(&self) -> &SubsetCollection {
        &self.collection
    }

    pub fn components(&self) -> &[TableFunction<T>] {
        &self.components
    }

    pub fn total(&self) -> TableFunction<T> {
        let mut acc = TableFunction { values: vec![T::zero(); self.components[0].values.len()] };
        for c in &self.components {
            acc = acc.add(c);
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundMode<T> {
    /// `r sum_s E psi_s^2`
    Uniform,
    /// `sum_s E psi_s^2 / beta_s`
    Packing(FractionalPacking<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> VarianceBound<T> {
    /// `lhs <= rhs` up to `1e-12` relative to `max(1, rhs)`.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + T::lit(TOL_EXACT) * T::one().max(self.rhs)
    }
}

/// `E U^2` against its variance-drop bound. A zero packing weight on a
/// nonzero component makes the bound infinite.
pub fn variance_drop_bound<T: Real + LpField>(
    u: &CAdditiveFunction<T>,
    space: &ProductSpace<T>,
    mode: &BoundMode<T>,
) -> Result<VarianceBound<T>> {
    let total = u.total();
    let lhs = inner(&total, &total, space);
    let sq: Vec<T> = u.components.iter().map(|c| inner(c, c, space)).collect();
    let rhs = match mode {
        BoundMode::Uniform => T::from_usize_lossy(u.collection.r()) * sq.iter().copied().sum::<T>(),
        BoundMode::Packing(beta) => {
            if !validate_packing(&u.collection, beta)? {
                return Err(Error::Precondition(format!("{:?} is not a fractional packing", beta.beta)));
            }
            sq.iter()
                .zip(&beta.beta)
                .map(|(&e, &b)| {
                    if e == T::zero() {
                        T::zero()
                    } else if b > T::zero() {
                        e / b
                    } else {
                        T::infinity()
                    }
                })
                .sum()
        }
    };
    Ok(VarianceBound { lhs, rhs })
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// `E U^2` and `(m/n) E psi^2` for the U-statistic
/// `U = C(n,m)^-1 sum_{|s|=m} psi(X_s)` of `n` i.i.d. coordinates.
///
/// `kernel_space` holds `m` copies of the coordinate and `psi` is tabulated
/// on it; `psi` must be symmetric and centred.
pub fn hoeffding_u_variance<T: Real>(
    psi: &TableFunction<T>,
    kernel_space: &ProductSpace<T>,
    n: usize,
) -> Result<VarianceBound<T>> {
    let m = kernel_space.n();
    if m > n || n > MAX_COORDS {
        return Err(Error::Domain(format!("need m <= n <= {MAX_COORDS}, got m = {m}, n = {n}")));
    }
    if psi.values.len() != kernel_space.size() {
        return Err(Error::Shape(format!("{} values for a grid of {}", psi.values.len(), kernel_space.size())));
    }
    let coord = kernel_space.support(1).to_vec();
    let probs = kernel_space.probs(1).to_vec();
    if (2..=m).any(|j| kernel_space.support(j) != coord.as_slice() || kernel_space.probs(j) != probs.as_slice()) {
        return Err(Error::Precondition("kernel coordinates are not identically distributed".into()));
    }
    let tol = T::lit(TOL_EXACT);
    let size = coord.len();
    let flat = |idx: &[usize]| idx.iter().fold(0, |acc, &k| acc * size + k);
    for i in 0..kernel_space.size() {
        let idx = kernel_space.unravel(i);
        for perm in permutations(m) {
            let permuted: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
            if (psi.values[flat(&permuted)] - psi.values[i]).abs() > tol {
                return Err(Error::Precondition("kernel is not symmetric".into()));
            }
        }
    }
    if expectation(psi, kernel_space).abs() > tol {
        return Err(Error::Precondition("kernel does not have mean zero".into()));
    }

    let space = ProductSpace::iid(coord, probs, n)?;
    let subsets = SubsetCollection::standard(crate::collections::StandardKind::AllMSubsets { m }, n)?;
    let count = T::from_usize_lossy(subsets.len());
    let u = TableFunction {
        values: (0..space.size())
            .map(|i| {
                let idx = space.unravel(i);
                subsets
                    .sets()
                    .iter()
                    .map(|s| psi.values[flat(&s.iter().map(|&j| idx[j - 1]).collect::<Vec<_>>())])
                    .sum::<T>()
                    / count
            })
            .collect(),
    };
    let lhs = inner(&u, &u, &space);
    let rhs = T::from_usize_lossy(m) / T::from_usize_lossy(n) * inner(psi, psi, kernel_space);
    Ok(VarianceBound { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1(n: usize) -> ProductSpace<f64> {
        ProductSpace::uniform(vec![-1.0, 1.0], n).unwrap()
    }

    #[test]
    fn projections() {
        let sp = pm1(2);
        let psi = TableFunction::from_fn(&sp, |x| x[0]).unwrap();
        assert!(project_out(&psi, 1, &sp).unwrap().values.iter().all(|&v| v == 0.0));
        assert_eq!(project_out(&psi, 2, &sp).unwrap(), psi);
        let c = TableFunction::from_fn(&sp, |_| 3.0).unwrap();
        assert_eq!(project_out(&c, 1, &sp).unwrap(), c);
        assert!(project_out(&c, 3, &sp).is_err());
    }

    #[test]
    fn interaction_and_main_effects() {
        let sp = pm1(2);
        let prod = anova_decompose(&TableFunction::from_fn(&sp, |x| x[0] * x[1]).unwrap(), &sp).unwrap();
        let sum = anova_decompose(&TableFunction::from_fn(&sp, |x| x[0] + x[1]).unwrap(), &sp).unwrap();
        for (t, c) in prod.iter() {
            let zero = c.values.iter().all(|v| v.abs() < 1e-15);
            assert_eq!(zero, t != vec![1, 2], "{t:?}");
        }
        for (t, c) in sum.iter() {
            let zero = c.values.iter().all(|v| v.abs() < 1e-15);
            assert_eq!(zero, t.len() != 1, "{t:?}");
        }
    }

    #[test]
    fn bad_spaces() {
        assert!(ProductSpace::new(vec![vec![0.0, 1.0]], vec![vec![0.5, 0.6]]).is_err());
        assert!(ProductSpace::new(vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]).is_err());
        assert!(ProductSpace::<f64>::uniform(vec![0.0; 9], 1).is_err());
        assert!(ProductSpace::<f64>::uniform(vec![0.0, 1.0], 6).is_err());
    }

    #[test]
    fn hoeffding_first_order() {
        let k = ProductSpace::<f64>::uniform(vec![-1.0, 0.0, 1.0], 1).unwrap();
        let psi = TableFunction::from_fn(&k, |x| x[0]).unwrap();
        let b = hoeffding_u_variance(&psi, &k, 4).unwrap();
        assert!((b.lhs - (2.0 / 3.0) / 4.0).abs() < 1e-15);
        assert!((b.lhs - b.rhs).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        let k = pm1(2);
        let psi = TableFunction::from_fn(&k, |x| x[0] + 2.0 * x[1]).unwrap();
        assert!(matches!(hoeffding_u_variance(&psi, &k, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn c_additive_validation() {
        let sp = pm1(2);
        let c = SubsetCollection::new(2, vec![vec![1]]).unwrap();
        let bad = TableFunction::from_fn(&sp, |x| x[1]).unwrap();
        assert!(matches!(CAdditiveFunction::new(c, vec![bad], &sp), Err(Error::Precondition(_))));
    }
}
