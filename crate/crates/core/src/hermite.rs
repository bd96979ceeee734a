//! Probabilists' Hermite polynomials and Hermite expansions of nonlinear
//! transforms `G` of a standard normal variable.
//!
//! `He_0 = 1`, `He_1 = x`, `He_{k+1} = x He_k − k He_{k−1}`, orthogonal under
//! the standard normal density `φ` with `∫He_j He_k φ = k! δ_jk`. A function
//! `G` expands as `G = Σ_j (C_j / j!) He_j` with `C_j = ∫G He_j φ`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate_fixed};
use crate::special::gauss_hermite_rule;

/// Largest polynomial degree accepted by [`hermite_poly`].
pub const MAX_HERMITE_DEGREE: usize = 30;
/// Largest expansion length accepted by [`hermite_coeffs`].
pub const MAX_JMAX: usize = 20;
/// Largest degree of the built-in `hermite_k` nonlinearities.
pub const MAX_BUILTIN_HERMITE: usize = 6;

/// `He_k(x)`.
pub fn hermite_poly(k: usize, x: f64) -> Result<f64> {
    if k > MAX_HERMITE_DEGREE {
        return Err(Error::config(
            "hermite degree",
            format!("{k} exceeds the supported maximum {MAX_HERMITE_DEGREE}"),
        ));
    }
    Ok(hermite_unchecked(k, x))
}

pub(crate) fn hermite_unchecked(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fill `out[j] = He_j(x)` for `j < out.len()`.
pub fn hermite_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 2..out.len() {
        out[j] = x * out[j - 1] - (j - 1) as f64 * out[j - 2];
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// A nonlinear transform `G` applied pointwise to the field.
#[derive(Clone)]
pub enum Nonlinearity {
    /// `He_k(w)`, `k ≤ 6`.
    Hermite(usize),
    /// `w²`.
    Square,
    /// `|w|`.
    Abs,
    /// `1{w > c}`.
    Indicator(f64),
    /// `w^k`.
    Power(u32),
    /// Library extension point; not reachable from configuration files.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Nonlinearity {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Nonlinearity::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, w: f64) -> f64 {
        match self {
            Nonlinearity::Hermite(k) => hermite_unchecked(*k, w),
            Nonlinearity::Square => w * w,
            Nonlinearity::Abs => w.abs(),
            Nonlinearity::Indicator(c) => {
                if w > *c {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::Power(k) => w.powi(*k as i32),
            Nonlinearity::Custom { f, .. } => f(w),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Hermite(k) if *k > MAX_BUILTIN_HERMITE => Err(Error::config(
                "g",
                format!("hermite_{k}: built-in Hermite nonlinearities go up to degree {MAX_BUILTIN_HERMITE}"),
            )),
            Nonlinearity::Indicator(c) if !c.is_finite() => Err(Error::config("g", "indicator threshold must be finite")),
            _ => Ok(()),
        }
    }

    /// Polynomial degree, if `G` is a polynomial.
    fn degree(&self) -> Option<usize> {
        match self {
            Nonlinearity::Hermite(k) => Some(*k),
            Nonlinearity::Square => Some(2),
            Nonlinearity::Power(k) => Some(*k as usize),
            _ => None,
        }
    }

    /// Location of a kink or jump, where Gauss–Hermite rules converge slowly.
    fn breakpoint(&self) -> Option<f64> {
        match self {
            Nonlinearity::Abs => Some(0.0),
            Nonlinearity::Indicator(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Hermite(k) => write!(f, "hermite_{k}"),
            Nonlinearity::Square => f.write_str("square"),
            Nonlinearity::Abs => f.write_str("abs"),
            Nonlinearity::Indicator(c) => write!(f, "indicator({c})"),
            Nonlinearity::Power(k) => write!(f, "power_{k}"),
            Nonlinearity::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

/// Accepts `hermite_k`/`hk` (k ≤ 6), `square`, `abs`, `indicator`,
/// `indicator(c)` and `power_k`.
impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || Error::config("g", format!("unknown nonlinearity '{s}'"));
        let g = match t.as_str() {
            "square" => Nonlinearity::Square,
            "abs" => Nonlinearity::Abs,
            "indicator" => Nonlinearity::Indicator(0.0),
            _ => {
                if let Some(inner) = t.strip_prefix("indicator(").and_then(|r| r.strip_suffix(')')) {
                    Nonlinearity::Indicator(inner.trim().parse().map_err(|_| bad())?)
                } else if let Some(k) = t.strip_prefix("hermite_").or_else(|| t.strip_prefix('h')) {
                    Nonlinearity::Hermite(k.parse().map_err(|_| bad())?)
                } else if let Some(k) = t.strip_prefix("power_") {
                    Nonlinearity::Power(k.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        };
        g.validate()?;
        Ok(g)
    }
}

/// Hermite coefficients of `G` up to `jmax`, with its Hermite rank.
#[derive(Debug, Clone)]
pub struct HermiteSpec {
    pub g: Nonlinearity,
    /// `C_0 ..= C_jmax`.
    pub coeffs: Vec<f64>,
    pub rank: usize,
    pub jmax: usize,
    /// `∫G² φ`.
    pub second_moment: f64,
}

impl HermiteSpec {
    /// `C_κ`, or zero beyond `jmax`.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }
}

/// Threshold below which `C_j` counts as zero for rank detection.
pub fn rank_tolerance(j: usize) -> f64 {
    1e-9 * factorial(j).sqrt()
}

/// Half-width of the truncated integration range for kinked nonlinearities.
const KINK_RANGE: f64 = 16.0;
const KINK_PANELS: usize = 16;
const KINK_NODES: usize = 24;

/// `∫ f φ` on `[-16, 16]` split at `c`, Gauss–Legendre on equal panels.
fn integrate_split(f: impl Fn(f64) -> f64, c: f64) -> f64 {
    let (x, w) = gauss_legendre(KINK_NODES);
    let c = c.clamp(-KINK_RANGE, KINK_RANGE);
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    if c == 0.0 {
        // Fold onto [0, 16] so parity cancellations are exact.
        let h = KINK_RANGE / KINK_PANELS as f64;
        for p in 0..KINK_PANELS {
            let a = p as f64 * h;
            total += integrate_fixed(|t| (f(t) + f(-t)) * phi(t), a, a + h, &x, &w);
        }
        return total;
    }
    for (lo, hi) in [(-KINK_RANGE, c), (c, KINK_RANGE)] {
        let h = (hi - lo) / KINK_PANELS as f64;
        if h <= 0.0 {
            continue;
        }
        for p in 0..KINK_PANELS {
            let a = lo + p as f64 * h;
            total += integrate_fixed(|t| f(t) * phi(t), a, a + h, &x, &w);
        }
    }
    total
}

/// Compute `C_0 ..= C_jmax` of `g` and its Hermite rank.
///
/// Smooth transforms use the Gauss–Hermite rule of `rule_order` nodes. For
/// `abs` and indicators the integrals are split at the kink and done with
/// piecewise Gauss–Legendre on `[-16, 16]`.
pub fn hermite_coeffs(g: &Nonlinearity, jmax: usize, rule_order: usize) -> Result<HermiteSpec> {
    g.validate()?;
    if jmax > MAX_JMAX {
        return Err(Error::config("jmax", format!("{jmax} exceeds the supported maximum {MAX_JMAX}")));
    }
    if rule_order < jmax + 2 {
        return Err(Error::config(
            "rule_order",
            format!("{rule_order} nodes cannot resolve coefficients up to j = {jmax}; need at least {}", jmax + 2),
        ));
    }
    let mut coeffs = vec![0.0; jmax + 1];
    let second_moment;
    if let Some(c) = g.breakpoint() {
        for (j, cj) in coeffs.iter_mut().enumerate() {
            *cj = integrate_split(|t| g.eval(t) * hermite_unchecked(j, t), c);
        }
        second_moment = integrate_split(|t| g.eval(t).powi(2), c);
    } else {
        let rule = gauss_hermite_rule(rule_order)?;
        let mut he = vec![0.0; jmax + 1];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let gx = g.eval(x);
            hermite_values(x, &mut he);
            for (cj, h) in coeffs.iter_mut().zip(&he) {
                *cj += w * gx * h;
            }
        }
        // A polynomial G² needs deg + 1 nodes for an exact second moment.
        let order2 = g.degree().map_or(rule_order, |d| rule_order.max(d + 1));
        second_moment = gauss_hermite_rule(order2)?.integrate(|x| g.eval(x).powi(2));
    }
    if !second_moment.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric(format!("Hermite coefficients of {g} are not finite")));
    }
    let rank = (1..=jmax)
        .find(|&j| coeffs[j].abs() > rank_tolerance(j))
        .ok_or_else(|| Error::config("g", format!("{g} has no nonzero Hermite coefficient of order 1..={jmax}")))?;
    Ok(HermiteSpec {
        g: g.clone(),
        coeffs,
        rank,
        jmax,
        second_moment,
    })
}

/// `∫G²φ − Σ_{j ≤ jmax} C_j² / j!`; nonnegative up to quadrature error.
pub fn parseval_gap(spec: &HermiteSpec) -> f64 {
    let partial: f64 = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * c / factorial(j))
        .sum();
    spec.second_moment - partial
}
