//! Isotropic long-range dependent covariance models.
//!
//! The Cauchy family `B(x) = (1 + ‖x‖²)^{-α/2}` has the isotropic spectral density
//!
//! ```text
//! f(λ) = λ^{(α−d)/2} K_{(d−α)/2}(λ) / (π^{d/2} 2^{(α−d)/2} Γ(α/2))
//!      = c₂(d, α) λ^{α−d} L(1/λ)
//! ```
//!
//! with the slowly varying factor `L(x) = 2^{(d+α)/2} x^{−(d−α)/2} K_{(d−α)/2}(1/x) / Γ((d−α)/2)`,
//! which tends to `2^{d−1}` as `x → ∞`.
//!
//! With that normalisation the density has total mass `2^{d−1}` rather than
//! `B(0) = 1`; [`CovarianceModel::spectral_density_unit_mass`] divides it out
//! and is the density whose Hankel transform reproduces `B`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::special::{bessel_j_unchecked, bessel_k_unchecked, gamma_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceFamily {
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceModel {
    pub family: CovarianceFamily,
    pub alpha: f64,
    pub d: usize,
}

impl CovarianceModel {
    /// Cauchy model in dimension `d ≥ 2` with long-range exponent `0 < α < d`.
    pub fn cauchy(d: usize, alpha: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::config("d", format!("dimension must be at least 2, got {d}")));
        }
        if !(alpha > 0.0 && alpha < d as f64) {
            return Err(Error::config("alpha", format!("must lie in (0, {d}), got {alpha}")));
        }
        Ok(CovarianceModel {
            family: CovarianceFamily::Cauchy,
            alpha,
            d,
        })
    }

    /// `B(dist)`; equals one at the origin.
    pub fn cov(&self, dist: f64) -> Result<f64> {
        if !(dist >= 0.0) {
            return Err(Error::domain(format!("distance must be non-negative, got {dist}")));
        }
        Ok(self.cov_unchecked(dist))
    }

    #[inline]
    pub(crate) fn cov_unchecked(&self, dist: f64) -> f64 {
        match self.family {
            CovarianceFamily::Cauchy => (1.0 + dist * dist).powf(-0.5 * self.alpha),
        }
    }

    fn bessel_order(&self) -> f64 {
        0.5 * (self.d as f64 - self.alpha)
    }

    pub fn spectral_density(&self, lam: f64) -> Result<f64> {
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::domain(format!("spectral density needs lambda > 0, got {lam}")));
        }
        self.spectral_density_unchecked(lam)
    }

    fn spectral_density_unchecked(&self, lam: f64) -> Result<f64> {
        let d = self.d as f64;
        let a = self.alpha;
        let nu = self.bessel_order();
        let k = bessel_k_unchecked(nu, lam)?;
        Ok(lam.powf(-nu) * k / (PI.powf(d / 2.0) * 2f64.powf(-nu) * gamma_unchecked(a / 2.0)))
    }

    /// `f(λ) / 2^{d−1}`, the spectral density with unit total mass.
    pub fn spectral_density_unit_mass(&self, lam: f64) -> Result<f64> {
        Ok(self.spectral_density(lam)? / self.spectral_mass())
    }

    /// Total mass `∫ f(‖λ‖) dλ = 2^{d−1}` of [`Self::spectral_density`].
    pub fn spectral_mass(&self) -> f64 {
        2f64.powi(self.d as i32 - 1)
    }

    /// The slowly varying factor `L(x)` of the spectral density.
    pub fn slowly_varying_l(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::domain(format!("slowly varying factor needs x > 0, got {x}")));
        }
        let d = self.d as f64;
        let nu = self.bessel_order();
        let k = bessel_k_unchecked(nu, 1.0 / x)?;
        Ok(2f64.powf(0.5 * (d + self.alpha)) / gamma_unchecked(nu) * x.powf(-nu) * k)
    }

    pub fn c2(&self) -> f64 {
        c2_unchecked(self.d, self.alpha)
    }
}

/// `c₂(d, α) = Γ((d−α)/2) / (2^α π^{d/2} Γ(α/2))`.
pub fn c2_const(d: usize, alpha: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    if !(alpha > 0.0 && alpha < d as f64) {
        return Err(Error::domain(format!("alpha must lie in (0, {d}), got {alpha}")));
    }
    Ok(c2_unchecked(d, alpha))
}

fn c2_unchecked(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    gamma_unchecked(0.5 * (d - alpha)) / (2f64.powf(alpha) * PI.powf(d / 2.0) * gamma_unchecked(alpha / 2.0))
}

/// `Y_d(z) = 2^{(d−2)/2} Γ(d/2) J_{(d−2)/2}(z) z^{(2−d)/2}`, with `Y_d(0) = 1`.
pub fn isotropic_kernel_y(d: usize, z: f64) -> f64 {
    let nu = 0.5 * (d as f64 - 2.0);
    let z = z.abs();
    if z < 2.0 {
        // Σ_k (−z²/4)^k / (k! (ν+1)_k): no cancellation for small z.
        let q = -0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let fk = k as f64;
            term *= q / (fk * (nu + fk));
            sum += term;
            if term.abs() <= f64::EPSILON * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let j = bessel_j_unchecked(nu, z).unwrap_or(f64::NAN);
    2f64.powf(nu) * gamma_unchecked(nu + 1.0) * j * z.powf(-nu)
}

/// Recovers `B(r)` from the unit-mass spectral density `f₁`:
/// `B(r) = ∫₀^∞ Y_d(rz) 2π^{d/2}/Γ(d/2) z^{d−1} f₁(z) dz`.
///
/// Near the origin the integrand behaves like `z^{α−1}`; the substitution
/// `z = t^{1/α}` on `[0, z₀]` removes that singularity. The remainder is split
/// at `z₀ = min(1, 1/r)` and into panels of width `π/r` to follow the
/// oscillation of `Y_d`, and truncated where `K_ν` has decayed below 1e-20.
pub fn cov_from_spectrum(model: &CovarianceModel, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("distance must be non-negative, got {r}")));
    }
    let d = model.d as f64;
    let alpha = model.alpha;
    let shell = 2.0 * PI.powf(d / 2.0) / gamma_unchecked(d / 2.0) / model.spectral_mass();
    let density = |z: f64| {
        if z <= 0.0 {
            return 0.0;
        }
        model
            .spectral_density_unchecked(z)
            .map(|f| shell * z.powf(d - 1.0) * f * isotropic_kernel_y(model.d, r * z))
            .unwrap_or(f64::NAN)
    };

    const ABS_TOL: f64 = 1e-11;
    let z0 = if r > 1.0 { 1.0 / r } else { 1.0 };
    // ∫₀^{z0} g(z) dz = ∫₀^{z0^α} g(t^{1/α}) (1/α) t^{1/α − 1} dt
    let near = integrate_adaptive(
        |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let z = t.powf(1.0 / alpha);
            density(z) * z / (alpha * t)
        },
        0.0,
        z0.powf(alpha),
        ABS_TOL,
        1e-12,
    )
    .map_err(|e| diagnose(e, model, r, "near-origin segment"))?;

    let z_max = 60.0 + 2.0 * d;
    let panel = if r > 0.0 { (PI / r).min(1.0) } else { 1.0 };
    let mut total = near.value;
    let mut lo = z0;
    while lo < z_max {
        let hi = (lo + panel).min(z_max);
        let piece = integrate_adaptive(density, lo, hi, ABS_TOL * panel / z_max, 1e-12)
            .map_err(|e| diagnose(e, model, r, "oscillatory tail"))?;
        total += piece.value;
        lo = hi;
    }
    Ok(total)
}

fn diagnose(err: Error, model: &CovarianceModel, r: f64, segment: &str) -> Error {
    match err {
        Error::Numeric(msg) => Error::Numeric(format!(
            "spectral covariance (d={}, alpha={}, r={r}) failed on the {segment}: {msg}",
            model.d, model.alpha
        )),
        other => other,
    }
}
