//! One-dimensional Gauss–Legendre integration, fixed and adaptive.

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

/// Fixed-order Gauss–Legendre on `[a, b]`.
pub fn integrate_fixed(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Globally adaptive bisection with a 15-point Gauss–Legendre rule per panel.
///
/// Each panel's error is estimated by comparing its rule value with the sum
/// over its two halves; the panel with the largest error is split until the
/// total estimate drops below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    const MAX_PANELS: usize = 20_000;
    let (nodes, weights) = gl15();
    let rule = |lo: f64, hi: f64| integrate_fixed(&f, lo, hi, nodes, weights);

    struct Panel {
        lo: f64,
        hi: f64,
        value: f64,
        error: f64,
    }
    impl PartialEq for Panel {
        fn eq(&self, other: &Self) -> bool {
            self.error == other.error
        }
    }
    impl Eq for Panel {}
    impl PartialOrd for Panel {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Panel {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.error.total_cmp(&other.error)
        }
    }

    let mut evaluations = 0;
    let mut make_panel = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        let coarse = rule(lo, hi);
        let value = rule(lo, mid) + rule(mid, hi);
        evaluations += 3 * nodes.len();
        Panel {
            lo,
            hi,
            value,
            error: (value - coarse).abs(),
        }
    };

    let mut heap = BinaryHeap::new();
    heap.push(make_panel(a, b));
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let tol = abs_tol.max(rel_tol * value.abs());
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Numeric(format!(
                "adaptive quadrature on [{a}, {b}]: integrand produced a non-finite value"
            )));
        }
        if error <= tol || error <= 50.0 * f64::EPSILON * value.abs() {
            // Sum in a fixed order so results never depend on heap layout.
            let mut panels = heap.into_vec();
            panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
            return Ok(Integral {
                value: panels.iter().map(|p| p.value).sum(),
                error_estimate: error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if heap.len() >= MAX_PANELS || mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Numeric(format!(
                "adaptive quadrature on [{a}, {b}] did not converge: error estimate {error:.3e} \
                 exceeds tolerance {tol:.3e}; worst panel [{}, {}] after {evaluations} evaluations",
                worst.lo, worst.hi
            )));
        }
        heap.push(make_panel(worst.lo, mid));
        heap.push(make_panel(mid, worst.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let v = integrate_fixed(|t| t.powi(10) + t.powi(3), -1.0, 1.0, &x, &w);
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = integrate_adaptive(|t| 1.0 / t.sqrt(), 0.0, 1.0, 1e-10, 1e-12).unwrap();
        assert!((v.value - 2.0).abs() < 1e-8, "{}", v.value);
    }

    #[test]
    fn adaptive_oscillatory() {
        let v = integrate_adaptive(|t| (40.0 * t).cos(), 0.0, 3.0, 1e-13, 1e-13).unwrap();
        assert!((v.value - (120.0f64).sin() / 40.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let err = integrate_adaptive(|t| if t < 0.5 { 0.0 } else { 1.0 / (t - 0.5) }, 0.0, 1.0, 1e-12, 0.0);
        assert!(matches!(err, Err(Error::Numeric(_))));
    }
}
