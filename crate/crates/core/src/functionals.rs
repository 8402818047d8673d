//! Information functionals of grid densities: entropy, score, Fisher
//! information, entropy power, relative entropy to the matched Gaussian, the
//! heat flow `X + sqrt(t) Z` and the integral de Bruijn identity.
//!
//! Entropies are in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{align_steps, convolve, trapezoid_map, GridDensity};
use crate::error::{Error, Result};
use crate::quadrature::integrate_log_panels;
use crate::scalar::Real;

/// Scores are computed only where the density exceeds this fraction of its peak.
pub const SCORE_CUTOFF: f64 = 1e-12;
/// Tolerance on `E[rho(X)] = 0`.
pub const TOL_SCORE: f64 = 1e-3;
/// Adjacent samples may differ by at most this fraction of the peak for the
/// density to count as resolved (absolutely continuous on the grid).
pub const MAX_STEP_JUMP: f64 = 0.1;
/// Fisher informations above this are reported as effectively infinite.
pub const FISHER_INFINITE: f64 = 1e8;
/// Default upper limit of the de Bruijn integral.
pub const DE_BRUIJN_T_MAX: f64 = 50.0;
/// Default evaluation budget of the de Bruijn integral.
pub const DE_BRUIJN_NODES: usize = 600;

/// `rho = f'/f` on the grid of the source density.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFunction<T> {
    x0: T,
    dx: T,
    values: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Real> ScoreFunction<T> {
    pub fn x0(&self) -> T {
        self.x0
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Score at grid point `k`, `None` where flagged invalid.
    pub fn get(&self, k: usize) -> Option<T> {
        self.valid.get(k).copied().unwrap_or(false).then(|| self.values[k])
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.valid.get(k).copied().unwrap_or(false)
    }

    /// Linear interpolation between valid neighbours.
    pub fn value_at(&self, x: T) -> Option<T> {
        let pos = (x - self.x0) / self.dx;
        if !(pos >= T::zero()) {
            return None;
        }
        let k = pos.floor().to_usize()?;
        if k + 1 >= self.len() {
            return None;
        }
        let frac = pos - T::from_usize_lossy(k);
        match (self.get(k), self.get(k + 1)) {
            (Some(a), Some(b)) => Some(a * (T::one() - frac) + b * frac),
            (Some(a), None) if frac <= T::lit(0.5) => Some(a),
            (None, Some(b)) if frac > T::lit(0.5) => Some(b),
            _ => None,
        }
    }

    /// `E[rho(X)]` over the valid region for `X ~ d` (same grid).
    pub fn mean_under(&self, d: &GridDensity<T>) -> T {
        trapezoid_map(d.values(), d.dx(), |k, f| self.get(k).map_or(T::zero(), |r| f * r))
    }
}

/// `H(X) = -E[log f(X)]` by the trapezoidal rule, with `0 log 0 = 0`.
pub fn entropy<T: Real>(d: &GridDensity<T>) -> T {
    trapezoid_map(d.values(), d.dx(), |_, f| if f > T::zero() { -f * f.ln() } else { T::zero() })
}

/// `N(X) = exp(2 H(X))`.
pub fn entropy_power<T: Real>(d: &GridDensity<T>) -> T {
    (T::lit(2.0) * entropy(d)).exp()
}

/// `D(X) = H(Z) - H(X)` for the Gaussian `Z` of the same variance.
pub fn rel_entropy_gaussian<T: Real>(d: &GridDensity<T>) -> T {
    gaussian_entropy(d.moments().1) - entropy(d)
}

/// Entropy of a Gaussian with the given variance.
pub fn gaussian_entropy<T: Real>(variance: T) -> T {
    T::lit(0.5) * (T::lit(2.0) * T::PI() * T::E() * variance).ln()
}

/// Score by central differences of `log f`.
///
/// Points where `f < 1e-12 * peak` (or a neighbour is) and the two end points
/// are flagged invalid. A density whose adjacent samples jump by more than
/// a tenth of its peak is not resolved on the grid (e.g. a raw uniform) and
/// has no score.
pub fn score<T: Real>(d: &GridDensity<T>) -> Result<ScoreFunction<T>> {
    let f = d.values();
    let peak = d.peak();
    let n = f.len();
    let max_jump = f.windows(2).map(|w| (w[1] - w[0]).abs()).fold(T::zero(), T::max);
    if max_jump > T::lit(MAX_STEP_JUMP) * peak {
        return Err(Error::ScoreUndefined(format!(
            "density jumps by {} of its peak between grid points (not absolutely continuous on this grid)",
            max_jump / peak
        )));
    }
    let cutoff = peak * T::lit(SCORE_CUTOFF);
    let inv_2dx = T::one() / (T::lit(2.0) * d.dx());
    let mut values = vec![T::zero(); n];
    let mut valid = vec![false; n];
    for k in 1..n - 1 {
        if f[k - 1] >= cutoff && f[k] >= cutoff && f[k + 1] >= cutoff {
            values[k] = (f[k + 1].ln() - f[k - 1].ln()) * inv_2dx;
            valid[k] = true;
        }
    }
    let invalid_mass = trapezoid_map(f, d.dx(), |k, v| if valid[k] { T::zero() } else { v });
    if invalid_mass > T::lit(0.5) {
        return Err(Error::ScoreUndefined(format!(
            "{invalid_mass} of the mass lies where the score is undefined"
        )));
    }
    Ok(ScoreFunction { x0: d.x0(), dx: d.dx(), values, valid })
}

/// `I(X) = E[rho(X)^2]` over the valid score region.
pub fn fisher_information<T: Real>(d: &GridDensity<T>) -> Result<T> {
    let rho = score(d)?;
    Ok(trapezoid_map(d.values(), d.dx(), |k, f| rho.get(k).map_or(T::zero(), |r| f * r * r)))
}

/// True when a Fisher information should be read as infinite.
pub fn is_effectively_infinite<T: Real>(fisher: T) -> bool {
    !(fisher <= T::lit(FISHER_INFINITE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoSummary<T> {
    pub entropy: T,
    pub fisher: T,
    pub entropy_power: T,
    pub rel_entropy_gaussian: T,
    pub variance: T,
}

/// Entropy, Fisher information, entropy power, relative entropy to the
/// matched Gaussian and variance of `d`.
pub fn info_summary<T: Real>(d: &GridDensity<T>) -> Result<InfoSummary<T>> {
    let h = entropy(d);
    let variance = d.moments().1;
    Ok(InfoSummary {
        entropy: h,
        fisher: fisher_information(d)?,
        entropy_power: (T::lit(2.0) * h).exp(),
        rel_entropy_gaussian: gaussian_entropy(variance) - h,
        variance,
    })
}

/// Centred Gaussian of variance `t` sampled with step `dx` over eight
/// standard deviations each side.
pub fn gaussian_on_step<T: Real>(t: T, dx: T) -> Result<GridDensity<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!("Gaussian variance must be positive, got {t}")));
    }
    let sd = t.sqrt();
    let steps = (T::lit(8.0) * sd / dx).ceil().to_usize().unwrap_or(usize::MAX).max(8);
    if steps > 1 << 24 {
        return Err(Error::Resolution(format!("kernel of variance {t} needs {steps} steps of {dx}")));
    }
    let x0 = -T::from_usize_lossy(steps) * dx;
    let two_t = T::lit(2.0) * t;
    let values = (0..=2 * steps)
        .map(|k| {
            let x = x0 + T::from_usize_lossy(k) * dx;
            (-(x * x) / two_t).exp()
        })
        .collect();
    GridDensity::new(x0, dx, values)
}

/// Density of `X + sqrt(t) Z` for a standard normal `Z` independent of `X ~ d`.
pub fn heat_perturb<T: Real>(d: &GridDensity<T>, t: T) -> Result<GridDensity<T>> {
    if !(t > T::zero()) {
        return Err(Error::Domain(format!("heat time must be positive, got {t}")));
    }
    convolve(d, &gaussian_on_step(t, d.dx())?)
}

/// Along the heat flow, `X_t` is resolved on the grid once `t >= 100 dx^2`.
pub fn min_resolved_time<T: Real>(d: &GridDensity<T>) -> T {
    T::lit(100.0) * d.dx() * d.dx()
}

/// Entropy recovered from Fisher informations along the heat flow.
///
/// Uses the variance-matched form
/// `H(X) = ½ log(2πe v) − ½ ∫₀^∞ [I(X_t) − 1/(v+t)] dt`, which equals the
/// unit-variance form `½ log(2πe) − ½ ∫ [I(X_t) − 1/(1+t)] dt` plus the
/// closed-form difference `½ log((1+T)/(v+T))` of the two reference terms.
/// The integrand vanishes identically for Gaussians and decays like `t^-3`,
/// so the tail beyond `t_max` is dropped.
///
/// Below `a = 100 dx²` the flowed density is not resolved; there `I(X_t)` is
/// integrated under a local power law `c t^-p` fitted at `a` and `2a`, which
/// handles both smooth densities (`p ≈ 0`) and jump discontinuities
/// (`p ≈ ½`). On `[a, t_max]` the integral is adaptive Gauss-Legendre on
/// log-spaced panels with at most `n_nodes` Fisher evaluations.
pub fn de_bruijn_entropy<T: Real>(d: &GridDensity<T>, t_max: T, n_nodes: usize) -> Result<T> {
    if !(t_max > T::zero()) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    let v = d.moments().1.as_f64();
    let t_max = t_max.as_f64();
    let a = min_resolved_time(d).as_f64().min(t_max / 4.0);

    let fisher_at = |t: f64| -> Result<f64> {
        let flowed = heat_perturb(d, T::lit(t))?;
        Ok(fisher_information(&flowed)?.as_f64())
    };
    let i_a = fisher_at(a)?;
    let i_2a = fisher_at(2.0 * a)?;
    let p = if i_a > 0.0 && i_2a > 0.0 { (i_a / i_2a).log2().clamp(0.0, 0.9) } else { 0.0 };
    let head = a * i_a / (1.0 - p) - ((v + a) / v).ln();

    // evaluations cannot fail past `a`: the flowed density only gets smoother
    let failure = std::sync::Mutex::new(None);
    let integrand = |t: f64| match fisher_at(t) {
        Ok(i) => i - 1.0 / (v + t),
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
            0.0
        }
    };
    let budget = n_nodes.saturating_sub(2).max(16);
    let body = integrate_log_panels(integrand, a, t_max, 6, budget, 1e-7);
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let h = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * v).ln() - 0.5 * (head + body.value);
    Ok(T::lit(h))
}

/// Maximum deviation between the score of `X1 + X2` and the conditional
/// expectation `E[rho_1(X1) | X1 + X2 = v]`.
///
/// The conditional expectation is evaluated by direct quadrature over the
/// joint density `f1(x) f2(v - x)` on the common grid, independently of the
/// FFT convolution that produces the sum density. The maximum is taken over
/// points where the sum density is at least `1e-6` of its peak.
pub fn score_convolution_check<T: Real>(d1: &GridDensity<T>, d2: &GridDensity<T>) -> Result<T> {
    let (a, b) = align_steps(d1, d2)?;
    let rho1 = score(&a)?;
    let sum = convolve(&a, &b)?;
    let rho_sum = score(&sum)?;
    let base = a.x0() + b.x0();
    let dx = a.dx();
    let floor = sum.peak() * T::lit(1e-6);
    let (fa, fb) = (a.values(), b.values());
    let (na, nb) = (fa.len(), fb.len());

    let worst = (0..sum.len())
        .into_par_iter()
        .filter_map(|k| {
            if sum.values()[k] < floor {
                return None;
            }
            let direct = rho_sum.get(k)?;
            let m = ((sum.x_at(k) - base) / dx).round().to_usize()?;
            let lo = m.saturating_sub(nb - 1);
            let hi = m.min(na - 1);
            let (mut num, mut den) = (T::zero(), T::zero());
            for j in lo..=hi {
                let joint = fa[j] * fb[m - j];
                den = den + joint;
                if let Some(r) = rho1.get(j) {
                    num = num + joint * r;
                }
            }
            (den > T::zero()).then(|| (direct - num / den).abs())
        })
        .reduce(|| T::zero(), T::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{build_density, Distribution, GridConfig};
    use std::f64::consts::{E, PI};

    fn build(dist: Distribution<f64>) -> GridDensity<f64> {
        build_density(&dist, &GridConfig::default()).unwrap()
    }

    #[test]
    fn gaussian_entropy_and_fisher() {
        let d = build(Distribution::gaussian(0.0, 1.0));
        assert!((entropy(&d) - 0.5 * (2.0 * PI * E).ln()).abs() < 1e-5);
        assert!((fisher_information(&d).unwrap() - 1.0).abs() < 1e-3);
        let s = info_summary(&d).unwrap();
        assert!((s.entropy_power - 2.0 * PI * E).abs() < 1e-3);
        assert!(s.rel_entropy_gaussian.abs() < 1e-6);
        assert_eq!(s.entropy_power, (2.0 * s.entropy).exp());
    }

    #[test]
    fn gaussian_score_is_linear() {
        let (mu, var) = (0.7, 2.5);
        let d = build(Distribution::gaussian(mu, var));
        let rho = score(&d).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..d.len() {
            let x = d.x_at(k);
            if (x - mu).abs() <= 4.0 * var.sqrt() {
                worst = worst.max((rho.get(k).unwrap() + (x - mu) / var).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(rho.mean_under(&d).abs() < TOL_SCORE);
    }

    #[test]
    fn raw_uniform_has_no_score() {
        let d = build(Distribution::uniform(0.0, 1.0));
        assert!(matches!(fisher_information(&d), Err(Error::ScoreUndefined(_))));
        assert!(entropy(&d).abs() < 5e-3);
        let smooth = heat_perturb(&d, 0.01).unwrap();
        let rho = score(&smooth).unwrap();
        assert!(rho.mean_under(&smooth).abs() < TOL_SCORE);
    }

    #[test]
    fn mostly_invalid_score_is_rejected() {
        let mut values = vec![0.0; 64];
        for v in values.iter_mut().take(34).skip(30) {
            *v = 1.0;
        }
        // smooth enough steps are impossible here, so the jump check fires first
        let d = GridDensity::new(0.0, 0.1, values).unwrap();
        assert!(matches!(score(&d), Err(Error::ScoreUndefined(_))));
    }

    #[test]
    fn heat_perturb_domain() {
        let d = build(Distribution::gaussian(0.0, 1.0));
        assert!(matches!(heat_perturb(&d, 0.0), Err(Error::Domain(_))));
        assert!(matches!(heat_perturb(&d, -1.0), Err(Error::Domain(_))));
        let flowed = heat_perturb(&d, 1.0).unwrap();
        assert!((flowed.moments().1 - 2.0).abs() < 1e-4);
    }

    #[test]
    fn de_bruijn_domain() {
        let d = build(Distribution::gaussian(0.0, 1.0));
        assert!(matches!(de_bruijn_entropy(&d, 0.0, 100), Err(Error::Domain(_))));
    }

    #[test]
    fn effectively_infinite() {
        assert!(is_effectively_infinite(2e8));
        assert!(is_effectively_infinite(f64::NAN));
        assert!(!is_effectively_infinite(1e3));
    }
}
