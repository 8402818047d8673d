//! Gauss-Legendre rules and adaptive integration on geometric panels.

use rayon::prelude::*;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Roots of P_n are found by Newton iteration from the Tricomi initial
/// guesses.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    (nodes, weights)
}

/// Result of [`integrate_log_panels`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub evaluations: usize,
    /// Sum of accepted panel error estimates.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    estimate: f64,
}

/// Integrates `g` over `[lo, hi]` (`0 < lo < hi`) with Gauss-Legendre rules in
/// the variable `u = ln t` on geometrically spaced panels.
///
/// A panel is accepted once its estimate agrees with the sum over its two
/// halves to within its share of `tol`; otherwise the halves are refined.
/// Refinement stops when `max_evals` evaluations of `g` are spent. Panels at
/// one refinement level are evaluated in parallel; the result does not
/// depend on evaluation order.
pub fn integrate_log_panels<G>(
    g: G,
    lo: f64,
    hi: f64,
    order: usize,
    max_evals: usize,
    tol: f64,
) -> Quadrature
where
    G: Fn(f64) -> f64 + Sync,
{
    assert!(lo > 0.0 && hi > lo, "integration range must satisfy 0 < lo < hi");
    let (nodes, weights) = gauss_legendre(order);
    let rule = |a: f64, b: f64| -> f64 {
        let (ua, ub) = (a.ln(), b.ln());
        let (mid, half) = (0.5 * (ua + ub), 0.5 * (ub - ua));
        nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| {
                let t = (mid + half * x).exp();
                w * g(t) * t
            })
            .sum::<f64>()
            * half
    };

    let panels = (hi / lo).log2().ceil().max(1.0) as usize;
    let ratio = (hi / lo).powf(1.0 / panels as f64);
    let mut bounds: Vec<f64> = (0..=panels).map(|k| lo * ratio.powi(k as i32)).collect();
    bounds[panels] = hi;

    let mut active: Vec<Panel> = bounds
        .windows(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|w| Panel { lo: w[0], hi: w[1], estimate: rule(w[0], w[1]) })
        .collect();
    let mut evaluations = panels * order;
    let total_log = (hi / lo).ln();
    let mut value = 0.0;
    let mut error_estimate = 0.0;

    while !active.is_empty() {
        let refine_cost = active.len() * 2 * order;
        if evaluations + refine_cost > max_evals {
            value += active.iter().map(|p| p.estimate).sum::<f64>();
            break;
        }
        evaluations += refine_cost;
        let split: Vec<(Panel, Panel)> = active
            .par_iter()
            .map(|p| {
                let mid = (p.lo * p.hi).sqrt();
                (
                    Panel { lo: p.lo, hi: mid, estimate: rule(p.lo, mid) },
                    Panel { lo: mid, hi: p.hi, estimate: rule(mid, p.hi) },
                )
            })
            .collect();
        let mut next = Vec::new();
        for (parent, (left, right)) in active.iter().zip(split) {
            let refined = left.estimate + right.estimate;
            let err = (refined - parent.estimate).abs();
            let share = tol * (parent.hi / parent.lo).ln() / total_log;
            if err <= share {
                value += refined;
                error_estimate += err;
            } else {
                next.push(left);
                next.push(right);
            }
        }
        active = next;
    }
    Quadrature { value, evaluations, error_estimate }
}
