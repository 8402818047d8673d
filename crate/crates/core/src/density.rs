//! One-dimensional densities sampled on uniform grids.
//!
//! A [`GridDensity`] stores `f(x0 + k*dx)` for `k = 0..K`. All integrals use
//! the trapezoidal rule over the full grid, so a normalized density has
//! trapezoidal mass one.

use std::sync::Arc;

use log::warn;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible grid.
pub const MIN_POINTS: usize = 16;
/// Mass tolerance after normalization.
pub const TOL_MASS: f64 = 1e-9;
/// Convolution outputs are trimmed where the density drops below this
/// fraction of the peak.
pub const TRIM_FRACTION: f64 = 1e-14;
/// Largest allowed ratio between the spans of two convolved grids.
pub const MAX_SPAN_RATIO: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity<T> {
    x0: T,
    dx: T,
    values: Vec<T>,
}

/// Trapezoidal integral of uniformly spaced samples.
pub(crate) fn trapezoid<T: Real>(values: &[T], dx: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let interior: T = values.iter().copied().sum();
            dx * (interior - (values[0] + values[n - 1]) * T::lit(0.5))
        }
    }
}

/// Trapezoidal integral of `g(k, f_k)` over the grid.
pub(crate) fn trapezoid_map<T: Real>(values: &[T], dx: T, g: impl Fn(usize, T) -> T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let mut acc = T::zero();
    for (k, &v) in values.iter().enumerate() {
        let term = g(k, v);
        acc = acc
            + if k == 0 || k == n - 1 {
                term * T::lit(0.5)
            } else {
                term
            };
    }
    acc * dx
}

impl<T: Real> GridDensity<T> {
    /// Builds a density from raw samples without normalizing.
    ///
    /// Samples must be finite and nonnegative, with at least
    /// [`MIN_POINTS`] of them.
    pub fn from_samples(x0: T, dx: T, values: Vec<T>) -> Result<Self> {
        if !(dx > T::zero()) || !dx.is_finite() {
            return Err(Error::InvalidDensity(format!("grid step must be positive, got {dx}")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidDensity("grid origin is not finite".into()));
        }
        if values.len() < MIN_POINTS {
            return Err(Error::InvalidDensity(format!(
                "grid has {} points, need at least {MIN_POINTS}",
                values.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < T::zero()) {
            return Err(Error::InvalidDensity(format!("sample {k} is {v}")));
        }
        Ok(Self { x0, dx, values })
    }

    /// Like [`from_samples`](Self::from_samples) followed by [`normalize`](Self::normalize).
    pub fn new(x0: T, dx: T, values: Vec<T>) -> Result<Self> {
        Self::from_samples(x0, dx, values)?.normalize()
    }

    /// Clamps negative samples to zero (with a warning) before validating and
    /// normalizing. Used for user supplied tables.
    pub fn from_table_clamped(x0: T, dx: T, mut values: Vec<T>) -> Result<Self> {
        let negatives = values.iter().filter(|v| **v < T::zero()).count();
        if negatives > 0 {
            warn!("tabulated density has {negatives} negative samples; clamped to zero");
            for v in values.iter_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        }
        Self::new(x0, dx, values)
    }

    #[inline]
    pub fn x0(&self) -> T {
        self.x0
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.dx
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn x_at(&self, k: usize) -> T {
        self.x0 + T::from_usize_lossy(k) * self.dx
    }

    /// Right grid endpoint.
    pub fn x_end(&self) -> T {
        self.x_at(self.len() - 1)
    }

    /// Width of the grid, `(K - 1) * dx`.
    pub fn span(&self) -> T {
        T::from_usize_lossy(self.len() - 1) * self.dx
    }

    pub fn peak(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn mass(&self) -> T {
        trapezoid(&self.values, self.dx)
    }

    /// Rescales the samples so the trapezoidal mass is one.
    pub fn normalize(&self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidDensity(format!("total mass is {mass}")));
        }
        let inv = T::one() / mass;
        Ok(Self {
            x0: self.x0,
            dx: self.dx,
            values: self.values.iter().map(|&v| v * inv).collect(),
        })
    }

    /// Linear interpolation of the density at `x`, zero outside the grid.
    pub fn value_at(&self, x: T) -> T {
        let pos = (x - self.x0) / self.dx;
        if !(pos >= T::zero()) {
            return T::zero();
        }
        let last = self.len() - 1;
        let k = pos.floor();
        let Some(k) = k.to_usize() else { return T::zero() };
        if k > last {
            return T::zero();
        }
        if k == last {
            return if pos == T::from_usize_lossy(last) { self.values[last] } else { T::zero() };
        }
        let frac = pos - T::from_usize_lossy(k);
        self.values[k] * (T::one() - frac) + self.values[k + 1] * frac
    }

    /// Trapezoidal mean and variance.
    pub fn moments(&self) -> (T, T) {
        let mean = trapezoid_map(&self.values, self.dx, |k, f| self.x_at(k) * f);
        let var = trapezoid_map(&self.values, self.dx, |k, f| {
            let c = self.x_at(k) - mean;
            c * c * f
        });
        (mean, var)
    }

    /// Cumulative trapezoidal integral at every grid point.
    pub fn cdf(&self) -> Vec<T> {
        let half = T::lit(0.5) * self.dx;
        let mut out = Vec::with_capacity(self.len());
        let mut acc = T::zero();
        out.push(acc);
        for w in self.values.windows(2) {
            acc = acc + (w[0] + w[1]) * half;
            out.push(acc);
        }
        out
    }

    /// Resamples onto step `new_dx` over the same span by linear
    /// interpolation, then renormalizes.
    pub fn resample(&self, new_dx: T) -> Result<Self> {
        if !(new_dx > T::zero()) {
            return Err(Error::Resolution(format!("resample step {new_dx}")));
        }
        let ratio = self.span() / new_dx;
        let count = (ratio + T::lit(1e-9)).floor().to_usize().ok_or_else(|| {
            Error::Resolution(format!("cannot resample span {} at step {new_dx}", self.span()))
        })? + 1;
        let values = (0..count)
            .map(|k| self.value_at(self.x0 + T::from_usize_lossy(k) * new_dx))
            .collect();
        Self::new(self.x0, new_dx, values)
    }

    /// Density of `a * X`. Exact: the grid is mapped, nothing is resampled.
    pub fn scale(&self, a: T) -> Result<Self> {
        if a == T::zero() || !a.is_finite() {
            return Err(Error::DegenerateScale);
        }
        let abs = a.abs();
        let mut values: Vec<T> = self.values.iter().map(|&v| v / abs).collect();
        let x0 = if a > T::zero() {
            a * self.x0
        } else {
            values.reverse();
            a * self.x_end()
        };
        Ok(Self { x0, dx: abs * self.dx, values })
    }

    /// Density of the shifted variable `X + c`.
    pub fn shift(&self, c: T) -> Self {
        Self { x0: self.x0 + c, dx: self.dx, values: self.values.clone() }
    }

    /// Drops leading and trailing samples below `fraction * peak`.
    fn trimmed(mut self, fraction: T) -> Self {
        let floor = self.peak() * fraction;
        let first = self.values.iter().position(|&v| v >= floor).unwrap_or(0);
        let last = self.values.iter().rposition(|&v| v >= floor).unwrap_or(self.len() - 1);
        // keep at least MIN_POINTS samples, centred on the retained block
        let (mut lo, mut hi) = (first, last);
        while hi + 1 - lo < MIN_POINTS {
            lo = lo.saturating_sub(1);
            if hi + 1 < self.len() {
                hi += 1;
            }
        }
        if lo > 0 || hi + 1 < self.len() {
            self.x0 = self.x_at(lo);
            self.values = self.values[lo..=hi].to_vec();
        }
        self
    }
}

/// `scale_density(d, a)`: density of `aX`.
pub fn scale_density<T: Real>(d: &GridDensity<T>, a: T) -> Result<GridDensity<T>> {
    d.scale(a)
}

/// Normalizes `d` to unit trapezoidal mass.
pub fn normalize<T: Real>(d: &GridDensity<T>) -> Result<GridDensity<T>> {
    d.normalize()
}

/// Mean and variance of a normalized density.
pub fn moments<T: Real>(d: &GridDensity<T>) -> (T, T) {
    d.moments()
}

fn trim_fraction<T: Real>() -> T {
    T::lit(TRIM_FRACTION).max(T::epsilon() * T::lit(64.0))
}

/// Linear convolution of two sample sequences via FFT.
pub(crate) fn fft_convolve<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<T>::new();
    let fwd: Arc<dyn rustfft::Fft<T>> = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let pad = |src: &[T]| {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); size];
        for (slot, &v) in buf.iter_mut().zip(src) {
            slot.re = v;
        }
        buf
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    inv.process(&mut fa);
    let scale = T::one() / T::from_usize_lossy(size);
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Brings two densities onto a common step by resampling the coarser one.
pub(crate) fn align_steps<T: Real>(
    d1: &GridDensity<T>,
    d2: &GridDensity<T>,
) -> Result<(GridDensity<T>, GridDensity<T>)> {
    let (s1, s2) = (d1.span(), d2.span());
    let ratio = if s1 > s2 { s1 / s2 } else { s2 / s1 };
    if !(ratio <= T::lit(MAX_SPAN_RATIO)) {
        return Err(Error::Resolution(format!("grid spans differ by a factor {ratio}")));
    }
    let rel = (d1.dx - d2.dx).abs() / d1.dx.min(d2.dx);
    if rel <= T::lit(1e-12) {
        // identical steps up to rounding: adopt the first one exactly
        let d2 = GridDensity { x0: d2.x0, dx: d1.dx, values: d2.values.clone() };
        return Ok((d1.clone(), d2));
    }
    if d1.dx < d2.dx {
        Ok((d1.clone(), d2.resample(d1.dx)?))
    } else {
        Ok((d1.resample(d2.dx)?, d2.clone()))
    }
}

/// Density of `X1 + X2` for independent `X1 ~ d1`, `X2 ~ d2`.
///
/// The output grid starts at `x0_1 + x0_2`, covers the sum of the two spans
/// and is trimmed where the density falls below `1e-14 * peak`.
pub fn convolve<T: Real>(d1: &GridDensity<T>, d2: &GridDensity<T>) -> Result<GridDensity<T>> {
    let (a, b) = align_steps(d1, d2)?;
    let dx = a.dx;
    let mut values = fft_convolve(&a.values, &b.values);
    for v in values.iter_mut() {
        *v = if *v > T::zero() { *v * dx } else { T::zero() };
    }
    let out = GridDensity::from_samples(a.x0 + b.x0, dx, values)?;
    out.trimmed(trim_fraction()).normalize()
}

/// Grid sizing for [`build_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Half-width of the grid in standard deviations.
    pub half_width_sigmas: f64,
    /// Number of grid points.
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width_sigmas: 8.0, points: 4096 }
    }
}

impl GridConfig {
    pub fn new(half_width_sigmas: f64, points: usize) -> Result<Self> {
        let cfg = Self { half_width_sigmas, points };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_sigmas >= 6.0) || !self.half_width_sigmas.is_finite() {
            return Err(Error::Config(format!(
                "grid half-width {} sigmas cannot hold 6 sigma",
                self.half_width_sigmas
            )));
        }
        if self.points < 1024 || !self.points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid points must be a power of two >= 1024, got {}",
                self.points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent<T> {
    pub weight: T,
    pub mean: T,
    pub variance: T,
}

/// A distribution to be placed on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution<T> {
    Gaussian { mean: T, variance: T },
    Uniform { a: T, b: T },
    GaussianMixture { components: Vec<MixtureComponent<T>> },
    Tabulated(GridDensity<T>),
}

fn gaussian_pdf<T: Real>(x: T, mean: T, variance: T) -> T {
    let z = x - mean;
    (-(z * z) / (T::lit(2.0) * variance)).exp() / (T::lit(2.0) * T::PI() * variance).sqrt()
}

impl<T: Real> Distribution<T> {
    pub fn gaussian(mean: T, variance: T) -> Self {
        Self::Gaussian { mean, variance }
    }

    pub fn uniform(a: T, b: T) -> Self {
        Self::Uniform { a, b }
    }

    /// Mixture from `(weight, mean, variance)` triples.
    pub fn mixture(components: &[(T, T, T)]) -> Self {
        Self::GaussianMixture {
            components: components
                .iter()
                .map(|&(weight, mean, variance)| MixtureComponent { weight, mean, variance })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, what: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(format!("{what} must be finite and > 0, got {v}")))
            }
        };
        match self {
            Self::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidDistribution("mean is not finite".into()));
                }
                positive(*variance, "variance")
            }
            Self::Uniform { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidDistribution("uniform bounds must be finite".into()));
                }
                positive(*b - *a, "uniform width b - a")
            }
            Self::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidDistribution("mixture has no components".into()));
                }
                let mut total = T::zero();
                for c in components {
                    if !(c.weight >= T::zero()) || !c.mean.is_finite() {
                        return Err(Error::InvalidDistribution(format!("bad mixture component {c:?}")));
                    }
                    positive(c.variance, "component variance")?;
                    total = total + c.weight;
                }
                if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
                    return Err(Error::InvalidDistribution(format!("mixture weights sum to {total}")));
                }
                Ok(())
            }
            Self::Tabulated(d) => {
                if d.len() < MIN_POINTS || !(d.dx > T::zero()) {
                    return Err(Error::InvalidDistribution("tabulated grid too small".into()));
                }
                if d.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDistribution("tabulated values not finite".into()));
                }
                let pos: Vec<T> = d.values.iter().map(|&v| v.max(T::zero())).collect();
                if !(trapezoid(&pos, d.dx) > T::zero()) {
                    return Err(Error::InvalidDistribution("tabulated density has no mass".into()));
                }
                Ok(())
            }
        }
    }

    fn tabulated_clean(d: &GridDensity<T>) -> Result<GridDensity<T>> {
        GridDensity::from_table_clamped(d.x0, d.dx, d.values.clone())
    }

    /// Mean and variance of the implied distribution.
    pub fn mean_variance(&self) -> Result<(T, T)> {
        self.validate()?;
        let mv = match self {
            Self::Gaussian { mean, variance } => (*mean, *variance),
            Self::Uniform { a, b } => {
                let w = *b - *a;
                ((*a + *b) * T::lit(0.5), w * w / T::lit(12.0))
            }
            Self::GaussianMixture { components } => {
                let mean: T = components.iter().map(|c| c.weight * c.mean).sum();
                let second: T =
                    components.iter().map(|c| c.weight * (c.variance + c.mean * c.mean)).sum();
                (mean, second - mean * mean)
            }
            Self::Tabulated(d) => Self::tabulated_clean(d)?.moments(),
        };
        if !(mv.1 > T::zero()) || !mv.1.is_finite() {
            return Err(Error::InvalidDistribution(format!("implied variance {} is not finite and positive", mv.1)));
        }
        Ok(mv)
    }

    pub fn variance(&self) -> Result<T> {
        Ok(self.mean_variance()?.1)
    }

    /// Closed-form density for the analytic families.
    pub fn pdf(&self, x: T) -> Option<T> {
        match self {
            Self::Gaussian { mean, variance } => Some(gaussian_pdf(x, *mean, *variance)),
            Self::Uniform { a, b } => {
                Some(if x >= *a && x <= *b { T::one() / (*b - *a) } else { T::zero() })
            }
            Self::GaussianMixture { components } => Some(
                components.iter().map(|c| c.weight * gaussian_pdf(x, c.mean, c.variance)).sum(),
            ),
            Self::Tabulated(_) => None,
        }
    }

    /// Half-width needed around the mean for `sigmas` standard deviations of
    /// the distribution and of each mixture component.
    fn half_width(&self, sigmas: T) -> Result<(T, T)> {
        let (mean, var) = self.mean_variance()?;
        let mut half = sigmas * var.sqrt();
        if let Self::GaussianMixture { components } = self {
            for c in components {
                half = half.max((c.mean - mean).abs() + sigmas * c.variance.sqrt());
            }
        }
        Ok((mean, half))
    }

    fn sample(&self, x0: T, dx: T, count: usize) -> Result<GridDensity<T>> {
        match self {
            Self::Tabulated(table) => {
                let table = Self::tabulated_clean(table)?;
                let values =
                    (0..count).map(|k| table.value_at(x0 + T::from_usize_lossy(k) * dx)).collect();
                GridDensity::new(x0, dx, values)
            }
            Self::Uniform { a, b } => {
                // cell-overlap sampling: an endpoint on a grid point gets half height
                let half = dx * T::lit(0.5);
                let height = T::one() / (*b - *a);
                let values = (0..count)
                    .map(|k| {
                        let x = x0 + T::from_usize_lossy(k) * dx;
                        let overlap = ((x + half).min(*b) - (x - half).max(*a)).max(T::zero());
                        height * overlap / dx
                    })
                    .collect();
                GridDensity::new(x0, dx, values)
            }
            _ => {
                let values = (0..count)
                    .map(|k| self.pdf(x0 + T::from_usize_lossy(k) * dx).unwrap_or(T::zero()))
                    .collect();
                GridDensity::new(x0, dx, values)
            }
        }
    }
}

/// Origin and step of the default grid for `dist`.
fn default_grid<T: Real>(dist: &Distribution<T>, cfg: &GridConfig) -> Result<(T, T)> {
    cfg.validate()?;
    let (mean, half) = dist.half_width(T::lit(cfg.half_width_sigmas))?;
    let intervals = T::from_usize_lossy(cfg.points - 1);
    let mut dx = T::lit(2.0) * half / intervals;
    if let Distribution::Uniform { a, b } = dist {
        // an odd number of steps across [a, b] puts both endpoints on grid
        // points when the grid is centred on the mean
        let width = *b - *a;
        let steps = (width / dx).floor();
        let odd = if (steps / T::lit(2.0)).fract() == T::zero() { steps - T::one() } else { steps };
        if odd >= T::one() {
            dx = width / odd;
        }
    }
    Ok((mean - dx * intervals * T::lit(0.5), dx))
}

/// Places `dist` on a grid of `cfg.points` samples centred on its mean.
pub fn build_density<T: Real>(dist: &Distribution<T>, cfg: &GridConfig) -> Result<GridDensity<T>> {
    let (x0, dx) = default_grid(dist, cfg)?;
    dist.sample(x0, dx, cfg.points)
}

/// Places `dist` on a grid with a prescribed step `dx`, spanning
/// `cfg.half_width_sigmas` standard deviations each side of the mean.
///
/// Used to put several summands on a common step so sums never need
/// resampling.
pub fn build_density_with_step<T: Real>(
    dist: &Distribution<T>,
    cfg: &GridConfig,
    dx: T,
) -> Result<GridDensity<T>> {
    cfg.validate()?;
    if !(dx > T::zero()) {
        return Err(Error::Config(format!("grid step must be positive, got {dx}")));
    }
    let (mean, half) = dist.half_width(T::lit(cfg.half_width_sigmas))?;
    let steps = (half / dx).ceil().to_usize().ok_or_else(|| Error::Config("grid too large".into()))?;
    let count = 2 * steps + 1;
    if count < MIN_POINTS {
        return Err(Error::Config(format!("step {dx} leaves only {count} points")));
    }
    let x0 = mean - T::from_usize_lossy(steps) * dx;
    dist.sample(x0, dx, count)
}

/// Grid step [`build_density`] would use for `dist`.
pub fn default_step<T: Real>(dist: &Distribution<T>, cfg: &GridConfig) -> Result<T> {
    Ok(default_grid(dist, cfg)?.1)
}
