//! Weighted functionals of `G(η)` over a surface cloud and the least squares
//! estimator they normalize.
//!
//! For weights `h(x) = h_rad(‖x‖) h_sp(x/‖x‖)` the functional is
//!
//! ```text
//! X_{r,G} = c_r · (|S(r)| / n) · Σ_p G(η(p)) h_sp(p/‖p‖)
//! c_r     = κ! c₂^{−κ/2} / (C_κ r^{d−1−κα/2} L^{κ/2}(r))
//! ```
//!
//! and the LSE of `a` in `ξ = a h + G(η)` is `â = Σ ξ h / Σ h²`, so that
//! `X = c_h c_r (â − a)` with `c_h = h_rad(r) (|S(r)|/n) Σ h_sp²`.
//!
//! Angles: `θ = arccos(z/‖p‖) ∈ [0, π]` measured from `+z`, and
//! `φ = atan2(y, x) ∈ [0, 2π)` measured from `+x`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::hermite::{hermite_unchecked, HermiteSpec, Nonlinearity};
use crate::surface::{distance, norm, sphere_points, Point3, SurfaceCloud};

/// Largest cloud accepted by [`exact_variance`].
pub const MAX_EXACT_VARIANCE_POINTS: usize = 5000;
/// Smallest node count accepted by [`fourier_k`].
pub const MIN_FOURIER_NODES: usize = 500;

/// `offset + amplitude · sin(a θ + θ₀) · sin(b φ + φ₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub offset: f64,
    pub amplitude: f64,
    pub theta_freq: f64,
    pub phi_freq: f64,
    pub theta_phase: f64,
    pub phi_phase: f64,
}

impl Harmonic {
    fn eval(&self, theta: f64, phi: f64) -> f64 {
        self.offset
            + self.amplitude
                * (self.theta_freq * theta + self.theta_phase).sin()
                * (self.phi_freq * phi + self.phi_phase).sin()
    }
}

/// Angular part `h_sp` of the weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    ConstantOne,
    /// `1.2 + 0.2 sin(5θ) sin(5φ)`.
    SphereWeight,
    /// `2 + cos(3θ)`.
    CubeWeight,
    Harmonic(Harmonic),
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::ConstantOne => f.write_str("constant_one"),
            WeightKind::SphereWeight => f.write_str("sphere_weight"),
            WeightKind::CubeWeight => f.write_str("cube_weight"),
            WeightKind::Harmonic(h) => write!(
                f,
                "harmonic({},{},{},{},{},{})",
                h.offset, h.amplitude, h.theta_freq, h.phi_freq, h.theta_phase, h.phi_phase
            ),
        }
    }
}

/// Accepts `constant_one`, `sphere_weight`, `cube_weight` and
/// `harmonic(offset,amplitude,theta_freq,phi_freq[,theta_phase,phi_phase])`.
impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || Error::config("weight", format!("unknown weight '{s}'"));
        match t.as_str() {
            "constant_one" | "one" | "none" => Ok(WeightKind::ConstantOne),
            "sphere_weight" => Ok(WeightKind::SphereWeight),
            "cube_weight" => Ok(WeightKind::CubeWeight),
            _ => {
                let inner = t
                    .strip_prefix("harmonic(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(bad)?;
                let v: Vec<f64> = inner
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?;
                if !(v.len() == 4 || v.len() == 6) || v.iter().any(|x| !x.is_finite()) {
                    return Err(bad());
                }
                Ok(WeightKind::Harmonic(Harmonic {
                    offset: v[0],
                    amplitude: v[1],
                    theta_freq: v[2],
                    phi_freq: v[3],
                    theta_phase: v.get(4).copied().unwrap_or(0.0),
                    phi_phase: v.get(5).copied().unwrap_or(0.0),
                }))
            }
        }
    }
}

/// Radial part `h_rad` of the weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialFactor {
    Constant(f64),
    /// `r^p`.
    Power(f64),
}

impl RadialFactor {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RadialFactor::Constant(c) => c,
            RadialFactor::Power(p) => r.powf(p),
        }
    }
}

impl Default for RadialFactor {
    fn default() -> Self {
        RadialFactor::Constant(1.0)
    }
}

/// `h(x) = h_rad(‖x‖) · h_sp(x/‖x‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunction {
    pub kind: WeightKind,
    pub radial: RadialFactor,
}

impl WeightFunction {
    pub fn new(kind: WeightKind) -> Self {
        WeightFunction {
            kind,
            radial: RadialFactor::default(),
        }
    }

    pub fn constant_one() -> Self {
        Self::new(WeightKind::ConstantOne)
    }

    pub fn sphere_weight() -> Self {
        Self::new(WeightKind::SphereWeight)
    }

    pub fn cube_weight() -> Self {
        Self::new(WeightKind::CubeWeight)
    }

    pub fn with_radial(mut self, radial: RadialFactor) -> Self {
        self.radial = radial;
        self
    }

    fn eval_angles(&self, theta: f64, phi: f64) -> f64 {
        match self.kind {
            WeightKind::ConstantOne => 1.0,
            WeightKind::SphereWeight => 1.2 + 0.2 * (5.0 * theta).sin() * (5.0 * phi).sin(),
            WeightKind::CubeWeight => 2.0 + (3.0 * theta).cos(),
            WeightKind::Harmonic(h) => h.eval(theta, phi),
        }
    }
}

/// Polar and azimuthal angles of a nonzero vector.
pub fn spherical_angles(p: &Point3) -> Result<(f64, f64)> {
    let len = norm(p);
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::domain(format!("weight evaluated at the non-normalizable point {p:?}")));
    }
    let theta = (p[2] / len).clamp(-1.0, 1.0).acos();
    let mut phi = p[1].atan2(p[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    if phi >= 2.0 * PI {
        phi = 0.0;
    }
    Ok((theta, phi))
}

/// `h_sp(p / ‖p‖)`.
pub fn weight_eval(w: &WeightFunction, p: &Point3) -> Result<f64> {
    let (theta, phi) = spherical_angles(p)?;
    Ok(w.eval_angles(theta, phi))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Everything that fixes the functional apart from the cloud and the field.
#[derive(Debug, Clone)]
pub struct FunctionalConfig {
    pub d: usize,
    pub alpha: f64,
    pub kappa: usize,
    /// `C_κ`.
    pub c_kappa: f64,
    pub model: CovarianceModel,
    pub weight: WeightFunction,
    pub hermite: HermiteSpec,
}

impl FunctionalConfig {
    /// Uses the Hermite rank of `hermite` as `κ`.
    pub fn new(model: CovarianceModel, weight: WeightFunction, hermite: HermiteSpec) -> Result<Self> {
        let kappa = hermite.rank;
        Self::with_kappa(model, weight, hermite, kappa)
    }

    pub fn with_kappa(model: CovarianceModel, weight: WeightFunction, hermite: HermiteSpec, kappa: usize) -> Result<Self> {
        let d = model.d;
        let alpha = model.alpha;
        if kappa == 0 {
            return Err(Error::config("kappa", "must be at least 1"));
        }
        let ka = kappa as f64 * alpha;
        if !(ka > 0.0 && ka < (d - 1) as f64) {
            return Err(Error::config(
                "alpha",
                format!("kappa·alpha = {kappa}·{alpha} = {ka} must lie in (0, {}) for d = {d}", d - 1),
            ));
        }
        let c_kappa = hermite.coeff(kappa);
        if c_kappa.abs() <= crate::hermite::rank_tolerance(kappa) {
            return Err(Error::config(
                "kappa",
                format!("{} has a vanishing Hermite coefficient C_{kappa}", hermite.g),
            ));
        }
        Ok(FunctionalConfig {
            d,
            alpha,
            kappa,
            c_kappa,
            model,
            weight,
            hermite,
        })
    }
}

/// `c_r(d, α)`.
pub fn c_r_norm(cfg: &FunctionalConfig, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("c_r needs r > 0, got {r}")));
    }
    let k = cfg.kappa as f64;
    let l = cfg.model.slowly_varying_l(r)?;
    let c2 = cfg.model.c2();
    let exponent = (cfg.d - 1) as f64 - k * cfg.alpha / 2.0;
    Ok(factorial(cfg.kappa) * c2.powf(-k / 2.0) / (cfg.c_kappa * r.powf(exponent) * l.powf(k / 2.0)))
}

/// `h_sp` at every point of the cloud.
pub fn cloud_weights(w: &WeightFunction, cloud: &SurfaceCloud) -> Result<Vec<f64>> {
    cloud.points.iter().map(|p| weight_eval(w, p)).collect()
}

/// Discrete `c_h(r) = h_rad(r) · (|S(r)|/n) · Σ h_sp²`.
pub fn c_h_norm(cfg: &FunctionalConfig, cloud: &SurfaceCloud) -> Result<f64> {
    let h = cloud_weights(&cfg.weight, cloud)?;
    let s: f64 = h.iter().map(|v| v * v).sum();
    if s == 0.0 {
        return Err(Error::config("weight", "weight vanishes on every point of the cloud"));
    }
    Ok(cfg.weight.radial.eval(cloud.radius()) * cloud.cell_weight * s)
}

/// Which transform of the field enters the sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FunctionalMode {
    /// `G` itself.
    #[default]
    Full,
    /// Only the leading term `(C_κ/κ!) H_κ` of the Hermite expansion.
    LeadingTerm,
}

/// Precomputed prefactor and weights for repeated evaluation on one cloud.
#[derive(Debug, Clone)]
pub struct FunctionalEvaluator {
    /// `c_r · |S(r)| / n`.
    pub prefactor: f64,
    pub weights: Vec<f64>,
    g: Nonlinearity,
    mode: FunctionalMode,
    kappa: usize,
    leading_coeff: f64,
}

impl FunctionalEvaluator {
    pub fn new(cfg: &FunctionalConfig, cloud: &SurfaceCloud, r: f64, mode: FunctionalMode) -> Result<Self> {
        Ok(FunctionalEvaluator {
            prefactor: c_r_norm(cfg, r)? * cloud.cell_weight,
            weights: cloud_weights(&cfg.weight, cloud)?,
            g: cfg.hermite.g.clone(),
            mode,
            kappa: cfg.kappa,
            leading_coeff: cfg.c_kappa / factorial(cfg.kappa),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Transform applied to each field value.
    pub fn transform(&self, w: f64) -> f64 {
        match self.mode {
            FunctionalMode::Full => self.g.eval(w),
            FunctionalMode::LeadingTerm => self.leading_coeff * hermite_unchecked(self.kappa, w),
        }
    }

    pub fn eval(&self, field: &[f64]) -> Result<f64> {
        if field.len() != self.weights.len() {
            return Err(Error::Shape {
                context: "field values versus cloud points",
                expected: self.weights.len(),
                got: field.len(),
            });
        }
        let s: f64 = field.iter().zip(&self.weights).map(|(&v, &h)| self.transform(v) * h).sum();
        Ok(self.prefactor * s)
    }
}

/// `X_{r,G}` for one field realization.
pub fn functional_x(
    cfg: &FunctionalConfig,
    cloud: &SurfaceCloud,
    field: &[f64],
    r: f64,
    mode: FunctionalMode,
) -> Result<f64> {
    FunctionalEvaluator::new(cfg, cloud, r, mode)?.eval(field)
}

/// `â = Σ ξ h / Σ h²` with `h = h_rad(r) h_sp`.
pub fn lse_estimate(observations: &[f64], cfg: &FunctionalConfig, cloud: &SurfaceCloud) -> Result<f64> {
    if observations.len() != cloud.len() {
        return Err(Error::Shape {
            context: "observations versus cloud points",
            expected: cloud.len(),
            got: observations.len(),
        });
    }
    let rad = cfg.weight.radial.eval(cloud.radius());
    let h = cloud_weights(&cfg.weight, cloud)?;
    let num: f64 = observations.iter().zip(&h).map(|(x, hs)| x * rad * hs).sum();
    let den: f64 = h.iter().map(|hs| (rad * hs).powi(2)).sum();
    if den == 0.0 {
        return Err(Error::config("weight", "the squared weights sum to zero"));
    }
    Ok(num / den)
}

/// Exact variance of `X_{r,G}` in [`FunctionalMode::LeadingTerm`]:
/// `(c_r |S(r)|/n)² (C_κ/κ!)² κ! Σ_{p,q} B^κ(‖p−q‖) h(p) h(q)`.
pub fn exact_variance(cfg: &FunctionalConfig, cloud: &SurfaceCloud, r: f64) -> Result<f64> {
    let n = cloud.len();
    if n > MAX_EXACT_VARIANCE_POINTS {
        return Err(Error::Resource(format!(
            "exact variance needs O(n²) work; {n} points exceed the limit of {MAX_EXACT_VARIANCE_POINTS}"
        )));
    }
    let h = cloud_weights(&cfg.weight, cloud)?;
    let prefactor = c_r_norm(cfg, r)? * cloud.cell_weight;
    let lead = cfg.c_kappa / factorial(cfg.kappa);
    Ok(prefactor * prefactor * lead * lead * factorial(cfg.kappa) * hermite_quadratic_form(&cfg.model, cloud, &h, cfg.kappa))
}

/// `Σ_{p,q} B^κ(‖p−q‖) h(p) h(q)`, diagonal plus twice the strict lower triangle.
pub fn hermite_quadratic_form(model: &CovarianceModel, cloud: &SurfaceCloud, h: &[f64], kappa: usize) -> f64 {
    let pts = &cloud.points;
    let mut off = 0.0;
    for i in 0..pts.len() {
        let mut row = 0.0;
        for j in 0..i {
            row += model.cov_unchecked(distance(&pts[i], &pts[j])).powi(kappa as i32) * h[j];
        }
        off += row * h[i];
    }
    let diag: f64 = h.iter().map(|v| v * v).sum();
    diag + 2.0 * off
}

/// Result of [`fourier_k`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierValue {
    pub value: Complex64,
    /// Set when `‖x‖` exceeds the documented range `quad_n / 10`.
    pub accuracy_warning: bool,
}

/// `K(x) = ∫_{S(1)} e^{i⟨x,u⟩} h_sp(u) σ(du)` on `quad_n` equal-area spiral nodes.
pub fn fourier_k(x: &Point3, w: &WeightFunction, quad_n: usize) -> Result<FourierValue> {
    let nodes = FourierNodes::new(w, quad_n)?;
    Ok(nodes.eval(x))
}

/// Spiral nodes on `S(1)` with the weight values folded into the cell weights.
#[derive(Debug, Clone)]
pub struct FourierNodes {
    points: Vec<Point3>,
    weights: Vec<f64>,
}

impl FourierNodes {
    pub fn new(w: &WeightFunction, quad_n: usize) -> Result<Self> {
        if quad_n < MIN_FOURIER_NODES {
            return Err(Error::config(
                "quad_n",
                format!("{quad_n} nodes is below the minimum {MIN_FOURIER_NODES}"),
            ));
        }
        let cloud = sphere_points(1.0, quad_n)?;
        let weights = cloud
            .points
            .iter()
            .map(|p| weight_eval(w, p).map(|v| v * cloud.cell_weight))
            .collect::<Result<_>>()?;
        Ok(FourierNodes {
            points: cloud.points,
            weights,
        })
    }

    pub fn eval(&self, x: &Point3) -> FourierValue {
        let mut re = 0.0;
        let mut im = 0.0;
        for (u, w) in self.points.iter().zip(&self.weights) {
            let (s, c) = (x[0] * u[0] + x[1] * u[1] + x[2] * u[2]).sin_cos();
            re += w * c;
            im += w * s;
        }
        FourierValue {
            value: Complex64::new(re, im),
            accuracy_warning: norm(x) > self.points.len() as f64 / 10.0,
        }
    }
}

/// `r² · mean_ω |K(rω)|²` over `n_dirs` random unit directions for each radius.
///
/// The directions are drawn once from `seed` and reused for every radius.
pub fn direction_averaged_power(
    w: &WeightFunction,
    radii: &[f64],
    n_dirs: usize,
    quad_n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_dirs == 0 {
        return Err(Error::config("directions", "must be at least 1"));
    }
    let nodes = FourierNodes::new(w, quad_n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Point3> = (0..n_dirs)
        .map(|_| loop {
            let v: Point3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let len = norm(&v);
            if len > 1e-12 {
                break [v[0] / len, v[1] / len, v[2] / len];
            }
        })
        .collect();
    Ok(radii
        .iter()
        .map(|&r| {
            let mean = dirs
                .iter()
                .map(|d| nodes.eval(&[r * d[0], r * d[1], r * d[2]]).value.norm_sqr())
                .sum::<f64>()
                / n_dirs as f64;
            mean * r * r
        })
        .collect())
}
