//! Deterministic observation windows on spheres and cube shells.
//!
//! Spheres use the equal-area golden-angle spiral: point `i` of `n` sits at
//! height `z = 1 − (2i + 1)/n`, so every point owns a latitude band of area
//! `4π/n`, and the azimuth advances by the golden angle `π(3 − √5)` per point.
//! Cube shells use a `k × k` grid of cell centres on each of the six faces,
//! so no point is shared between faces.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special::gamma_unchecked;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    Sphere,
    Cube,
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Cube => "cube",
        })
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sphere" => Ok(SurfaceKind::Sphere),
            "cube" => Ok(SurfaceKind::Cube),
            other => Err(Error::config("surface", format!("expected `sphere` or `cube`, got `{other}`"))),
        }
    }
}

/// A sphere `S(r)` or the shell of the cube `[-r, r]³`, both in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub radius: f64,
}

impl SurfaceSpec {
    pub const DIMENSION: usize = 3;

    pub fn new(kind: SurfaceKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::config("radius", format!("must be positive, got {radius}")));
        }
        Ok(SurfaceSpec { kind, radius })
    }

    pub fn area(&self) -> f64 {
        surface_area(self)
    }

    /// Point count giving `density` points per unit area (at least the
    /// minimum accepted by the sampler).
    pub fn points_for_density(&self, density: f64) -> usize {
        let n = (density * self.area()).round() as usize;
        match self.kind {
            SurfaceKind::Sphere => n.max(4),
            SurfaceKind::Cube => n.max(24),
        }
    }

    /// Sample this surface with `n` points (a target count for cubes).
    pub fn sample(&self, n: usize) -> Result<SurfaceCloud> {
        match self.kind {
            SurfaceKind::Sphere => sphere_points(self.radius, n),
            SurfaceKind::Cube => cube_points(self.radius, n),
        }
    }

    pub fn sample_with_density(&self, density: f64) -> Result<SurfaceCloud> {
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::config("points_density", format!("must be positive, got {density}")));
        }
        self.sample(self.points_for_density(density))
    }
}

/// Surface area: `4πr²` for the sphere, `24r²` for the cube shell.
pub fn surface_area(spec: &SurfaceSpec) -> f64 {
    let r = spec.radius;
    match spec.kind {
        SurfaceKind::Sphere => 4.0 * PI * r * r,
        SurfaceKind::Cube => 24.0 * r * r,
    }
}

/// Identifies the cloud a field realization was drawn on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CloudId(pub u64);

/// A finite point set on a surface with uniform cell weights `area / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCloud {
    pub spec: SurfaceSpec,
    pub points: Vec<Point3>,
    pub area: f64,
    pub cell_weight: f64,
}

impl SurfaceCloud {
    fn new(spec: SurfaceSpec, points: Vec<Point3>) -> Self {
        let area = surface_area(&spec);
        let cell_weight = area / points.len() as f64;
        SurfaceCloud {
            spec,
            points,
            area,
            cell_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius
    }

    pub fn id(&self) -> CloudId {
        // FNV-1a over the defining parameters; clouds are deterministic in them.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(match self.spec.kind {
            SurfaceKind::Sphere => 1,
            SurfaceKind::Cube => 2,
        });
        feed(self.spec.radius.to_bits());
        feed(self.points.len() as u64);
        CloudId(h)
    }

    /// CSV with header `x,y,z`, one point per row, 16 significant digits.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,y,z")?;
        for p in &self.points {
            writeln!(out, "{:.15e},{:.15e},{:.15e}", p[0], p[1], p[2])?;
        }
        Ok(())
    }
}

/// Equal-area spiral of `n ≥ 4` points on the sphere of radius `r`.
pub fn sphere_points(r: f64, n: usize) -> Result<SurfaceCloud> {
    let spec = SurfaceSpec::new(SurfaceKind::Sphere, r)?;
    if n < 4 {
        return Err(Error::config("points", format!("sphere clouds need at least 4 points, got {n}")));
    }
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = (i as f64 * golden_angle) % (2.0 * PI);
            [r * (rho * phi.cos()), r * (rho * phi.sin()), r * z]
        })
        .collect();
    Ok(SurfaceCloud::new(spec, points))
}

/// Six `k × k` cell-centre grids on the shell of `[-r, r]³`, with `k` chosen
/// so that `6k²` is as close as possible to `n_target`.
pub fn cube_points(r: f64, n_target: usize) -> Result<SurfaceCloud> {
    let spec = SurfaceSpec::new(SurfaceKind::Cube, r)?;
    if n_target < 24 {
        return Err(Error::config(
            "points",
            format!("cube clouds need at least 24 points, got {n_target}"),
        ));
    }
    let k = (n_target as f64 / 6.0).sqrt().round().max(2.0) as usize;
    let step = 2.0 * r / k as f64;
    let coords: Vec<f64> = (0..k).map(|a| -r + (a as f64 + 0.5) * step).collect();
    let mut points = Vec::with_capacity(6 * k * k);
    for axis in 0..3 {
        for side in [r, -r] {
            for &u in &coords {
                for &v in &coords {
                    let mut p = [0.0; 3];
                    p[axis] = side;
                    p[(axis + 1) % 3] = u;
                    p[(axis + 2) % 3] = v;
                    points.push(p);
                }
            }
        }
    }
    Ok(SurfaceCloud::new(spec, points))
}

/// Density of the distance between two independent uniform points on the
/// sphere of radius `r` in `R^d`; zero outside `(0, 2r)`.
pub fn pair_distance_density(d: usize, r: f64, rho: f64) -> f64 {
    if d < 2 || !(r > 0.0) || !(rho > 0.0) || rho >= 2.0 * r {
        return 0.0;
    }
    let df = d as f64;
    let norm = gamma_unchecked(df / 2.0) / (PI.sqrt() * gamma_unchecked((df - 1.0) / 2.0));
    norm * r.powf(1.0 - df) * rho.powf(df - 2.0) * (1.0 - rho * rho / (4.0 * r * r)).powf((df - 3.0) / 2.0)
}

/// Analytic distribution function of the pair distance for `d = 3`: `ρ²/(4r²)`.
pub fn pair_distance_cdf_3d(r: f64, rho: f64) -> f64 {
    (rho * rho / (4.0 * r * r)).clamp(0.0, 1.0)
}

pub(crate) fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub(crate) fn norm(p: &Point3) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}
