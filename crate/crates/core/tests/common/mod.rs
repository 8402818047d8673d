#![allow(dead_code)]

use infosum::anova::{ProductSpace, TableFunction};
use infosum::functionals::heat_perturb;
use infosum::{build_density, Distribution, GridConfig, SubsetCollection};
use num_rational::Rational64;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SEED: u64 = 0x5eed_2006;

/// Bimodal mixture 0.5 N(-1, 1/4) + 0.5 N(1, 1/4).
pub fn bimodal() -> Distribution<f64> {
    Distribution::mixture(&[(0.5, -1.0, 0.25), (0.5, 1.0, 0.25)])
}

/// Uniform(0, 1) flowed for heat time 0.01.
pub fn smoothed_uniform(cfg: &GridConfig) -> Distribution<f64> {
    let raw = build_density(&Distribution::uniform(0.0, 1.0), cfg).unwrap();
    Distribution::Tabulated(heat_perturb(&raw, 0.01).unwrap())
}

/// Adaptive quadrature (scipy `quad`, abs 1e-14, rel 1e-13) on the closed
/// form mixture densities: the bimodal mixture and its 2- and 3-fold
/// self-convolutions.
pub mod scipy {
    pub const H: [f64; 3] = [1.358511546382, 1.842199706499, 2.070575608018];
    pub const I: [f64; 3] = [2.902441459348, 0.713346307598, 0.321069697068];
    pub const VAR: [f64; 3] = [1.25, 2.5, 3.75];
    pub const D: [f64; 3] = [0.171998762480, 0.034884192643, 0.009240845178];
    pub const EPI_LOO3: (f64, f64) = (62.87516, 59.73180);
    pub const FII_LOO3: (f64, f64) = (3.1145885, 2.1027655);
}

/// `(w, mean, var)` components of the `k`-fold self-convolution of the
/// bimodal mixture.
pub fn bimodal_power(k: usize) -> Vec<(f64, f64, f64)> {
    let base = [(0.5, -1.0, 0.25), (0.5, 1.0, 0.25)];
    let mut acc = vec![(1.0, 0.0, 0.0)];
    for _ in 0..k {
        acc = acc
            .iter()
            .flat_map(|&(w1, m1, v1)| base.iter().map(move |&(w2, m2, v2)| (w1 * w2, m1 + m2, v1 + v2)))
            .collect();
    }
    acc
}

pub fn mixture_pdf(c: &[(f64, f64, f64)], x: f64) -> f64 {
    c.iter()
        .map(|&(w, m, v)| w * (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
        .sum()
}

/// Analytic score `f'/f` of a Gaussian mixture.
pub fn mixture_score(c: &[(f64, f64, f64)], x: f64) -> f64 {
    let d: f64 = c
        .iter()
        .map(|&(w, m, v)| -w * (x - m) / v * (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
        .sum();
    d / mixture_pdf(c, x)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random collection on `1..=n` with `sets` nonempty sets.
pub fn random_collection(rng: &mut ChaCha8Rng, n: usize, sets: usize) -> SubsetCollection {
    let sets = (0..sets)
        .map(|_| loop {
            let s: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.5)).collect();
            if !s.is_empty() {
                break s;
            }
        })
        .collect();
    SubsetCollection::new(n, sets).unwrap()
}

/// `count` collections with `n <= 5` and at most 8 sets.
pub fn collection_corpus(seed: u64, count: usize) -> Vec<SubsetCollection> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.gen_range(1..=5);
            let m = r.gen_range(1..=8);
            random_collection(&mut r, n, m)
        })
        .collect()
}

pub fn random_space(rng: &mut ChaCha8Rng, n: usize, max_size: usize) -> ProductSpace<f64> {
    let mut supports = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for _ in 0..n {
        let size = rng.gen_range(2..=max_size);
        supports.push((0..size).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let raw: Vec<f64> = (0..size).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        probs.push(raw.iter().map(|p| p / total).collect());
    }
    ProductSpace::new(supports, probs).unwrap()
}

pub fn random_table(rng: &mut ChaCha8Rng, space: &ProductSpace<f64>) -> TableFunction<f64> {
    TableFunction::new(space, (0..space.size()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Optimum of `max c.beta, A beta <= 1, beta >= 0` by enumerating every
/// basic solution in exact arithmetic.
pub fn packing_lp_by_vertices(collection: &SubsetCollection, c: &[Rational64]) -> Rational64 {
    let m = collection.len();
    let n = collection.n();
    let one = Rational64::from_integer(1);
    let zero = Rational64::zero();
    // rows 0..n: packing constraints, rows n..n+m: beta_k >= 0 written as -beta_k <= 0
    let mut rows: Vec<(Vec<Rational64>, Rational64)> = (1..=n)
        .map(|i| (collection.sets().iter().map(|s| if s.contains(&i) { one } else { zero }).collect(), one))
        .collect();
    for k in 0..m {
        let mut r = vec![zero; m];
        r[k] = -one;
        rows.push((r, zero));
    }
    let mut best = zero;
    let mut choice: Vec<usize> = (0..m).collect();
    loop {
        if let Some(x) = solve(&choice.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()) {
            let feasible = rows.iter().all(|(a, b)| a.iter().zip(&x).fold(zero, |acc, (ai, xi)| acc + ai * xi) <= *b);
            if feasible {
                let obj = c.iter().zip(&x).fold(zero, |acc, (ci, xi)| acc + ci * xi);
                if obj > best {
                    best = obj;
                }
            }
        }
        if !next_combination(&mut choice, rows.len()) {
            break;
        }
    }
    best
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < total - k + pos {
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gauss-Jordan on the square system `a x = b`; `None` when singular.
fn solve(rows: &[(Vec<Rational64>, Rational64)]) -> Option<Vec<Rational64>> {
    let m = rows.len();
    let mut a: Vec<Vec<Rational64>> = rows
        .iter()
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(*b);
            v
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[m]).collect())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
