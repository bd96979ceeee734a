//! Kolmogorov-distance convergence studies.
//!
//! For every repeat `m` and grid radius `r`, a study draws `N` independent
//! values of `X_{r,G}` and `N` independent values of `X_{R,G}` at the
//! reference radius `R`, and records the two-sample Kolmogorov–Smirnov
//! distance between them. The `(repeat, radius)` tasks run on a worker pool;
//! each task derives its own seeds from the master seed, so results do not
//! depend on the number of workers or on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::field::{check_factor_memory, factor_bytes, FieldSampler, SeedPolicy, DEFAULT_MAX_FACTOR_BYTES};
use crate::functionals::{FunctionalConfig, FunctionalEvaluator, FunctionalMode, WeightFunction, WeightKind};
use crate::hermite::{hermite_coeffs, Nonlinearity};
use crate::surface::{SurfaceKind, SurfaceSpec};

/// Smallest accepted number of replicates per radius.
pub const MIN_REPLICATES: usize = 50;

const HERMITE_JMAX: usize = 10;
const HERMITE_RULE_ORDER: usize = 40;
const ROLE_SAMPLE: u64 = 0;
const ROLE_REFERENCE: u64 = 1;

/// Exact two-sample Kolmogorov–Smirnov statistic `sup_z |F̂₁(z) − F̂₂(z)|`.
pub fn ks_statistic(sample1: &[f64], sample2: &[f64]) -> Result<f64> {
    if sample1.is_empty() || sample2.is_empty() {
        return Err(Error::domain("Kolmogorov–Smirnov statistic needs two nonempty samples"));
    }
    if sample1.iter().chain(sample2).any(|v| v.is_nan()) {
        return Err(Error::domain("Kolmogorov–Smirnov statistic got a NaN sample value"));
    }
    let mut a = sample1.to_vec();
    let mut b = sample2.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as i128, b.len() as i128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: i128 = 0;
    while i < a.len() && j < b.len() {
        let z = a[i].min(b[j]);
        while i < a.len() && a[i] <= z {
            i += 1;
        }
        while j < b.len() && b[j] <= z {
            j += 1;
        }
        d = d.max((i as i128 * n2 - j as i128 * n1).abs());
    }
    Ok(d as f64 / (n1 * n2) as f64)
}

/// Five-number summary with quartiles by linear interpolation between order
/// statistics (position `(n − 1) q` in the sorted sample).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn boxplot_summary(values: &[f64]) -> Result<BoxSummary> {
    if values.is_empty() {
        return Err(Error::domain("box-plot summary of an empty sample"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(BoxSummary {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// Ordinary least squares fit of `log d` on `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub n_points: usize,
    pub excluded_zeros: usize,
}

impl RateFit {
    /// Two-sided confidence interval for the slope from Student's t.
    pub fn slope_interval(&self, level: f64) -> (f64, f64) {
        let df = (self.n_points - 2) as f64;
        let t = StudentsT::new(0.0, 1.0, df)
            .map(|dist| dist.inverse_cdf(0.5 + level / 2.0))
            .unwrap_or(f64::INFINITY);
        (self.slope - t * self.slope_se, self.slope + t * self.slope_se)
    }
}

/// Fit `log d = a + b r` over `distances[repeat][radius]`, pooled over repeats.
/// Zero distances are left out and counted.
pub fn fit_log_rate(distances: &[Vec<f64>], grid: &[f64]) -> Result<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zeros = 0;
    for row in distances {
        if row.len() != grid.len() {
            return Err(Error::Shape {
                context: "distance row versus radius grid",
                expected: grid.len(),
                got: row.len(),
            });
        }
        for (&d, &r) in row.iter().zip(grid) {
            if d > 0.0 {
                xs.push(r);
                ys.push(d.ln());
            } else {
                zeros += 1;
            }
        }
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Numeric(format!(
            "log-rate fit needs at least 3 positive distances, got {n} ({zeros} zeros excluded)"
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric("log-rate fit needs at least two distinct radii".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(RateFit {
        intercept,
        slope,
        slope_se,
        n_points: n,
        excluded_zeros: zeros,
    })
}

/// Spearman rank correlation with one- and two-sided p-values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpearmanTest {
    pub rho: f64,
    /// `P(ρ* ≤ ρ)` under independence.
    pub p_less: f64,
    /// `P(ρ* ≥ ρ)` under independence.
    pub p_greater: f64,
    /// Whether the p-values come from full enumeration of permutations.
    pub exact: bool,
}

/// Largest sample size for which p-values are computed by enumeration.
pub const SPEARMAN_EXACT_MAX: usize = 8;

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman's `ρ` between `x` and `y`. Exact permutation p-values for
/// `n ≤ 8`, Student's t approximation with `n − 2` degrees of freedom above.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanTest> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            context: "Spearman correlation",
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::domain("Spearman correlation needs at least 3 pairs"));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let rho = pearson(&rx, &ry);
    const EPS: f64 = 1e-12;
    if n <= SPEARMAN_EXACT_MAX {
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut total, mut less, mut greater) = (0usize, 0usize, 0usize);
        let mut permuted = vec![0.0; n];
        loop {
            for (slot, &p) in permuted.iter_mut().zip(&perm) {
                *slot = ry[p];
            }
            let r = pearson(&rx, &permuted);
            total += 1;
            if r <= rho + EPS {
                less += 1;
            }
            if r >= rho - EPS {
                greater += 1;
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        return Ok(SpearmanTest {
            rho,
            p_less: less as f64 / total as f64,
            p_greater: greater as f64 / total as f64,
            exact: true,
        });
    }
    let df = (n - 2) as f64;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numeric(e.to_string()))?;
    let t = if rho.abs() >= 1.0 {
        rho.signum() * f64::INFINITY
    } else {
        rho * (df / (1.0 - rho * rho)).sqrt()
    };
    Ok(SpearmanTest {
        rho,
        p_less: dist.cdf(t),
        p_greater: 1.0 - dist.cdf(t),
        exact: false,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("a larger element exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Parameters of one convergence study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub surface: SurfaceKind,
    pub weight: WeightFunction,
    pub alpha: f64,
    /// Hermite rank used for the normalization; defaults to the rank of `g`.
    pub kappa: Option<usize>,
    pub g: Nonlinearity,
    pub radii: Vec<f64>,
    /// Defaults to `4/3` of the largest grid radius.
    pub reference_radius: Option<f64>,
    pub replicates: usize,
    pub repeats: usize,
    /// Points per unit surface area.
    pub points_density: f64,
    pub seed: u64,
    pub workers: usize,
    /// Draw the same normals for every weight on a given surface.
    pub share_fields: bool,
    /// Reuse the sample streams for the reference; only meaningful with `R = r`.
    pub self_test: bool,
    pub mode: FunctionalMode,
    pub max_factor_bytes: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            surface: SurfaceKind::Sphere,
            weight: WeightFunction::constant_one(),
            alpha: 2.0 / 3.0,
            kappa: None,
            g: Nonlinearity::Hermite(2),
            radii: vec![20.0, 40.0, 60.0, 80.0, 100.0, 120.0],
            reference_radius: None,
            replicates: 500,
            repeats: 20,
            points_density: 0.01,
            seed: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            share_fields: false,
            self_test: false,
            mode: FunctionalMode::Full,
            max_factor_bytes: DEFAULT_MAX_FACTOR_BYTES,
        }
    }
}

impl StudyConfig {
    pub fn reference(&self) -> f64 {
        self.reference_radius
            .unwrap_or_else(|| 4.0 / 3.0 * self.radii.iter().cloned().fold(0.0, f64::max))
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::config("radii", "the radius grid is empty"));
        }
        if self.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::config("radii", "all radii must be positive and finite"));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("radii", "radii must be distinct and increasing"));
        }
        let max = self.radii[self.radii.len() - 1];
        let reference = self.reference();
        if !reference.is_finite() || reference < max || (reference == max && !self.self_test) {
            return Err(Error::config(
                "reference_radius",
                format!("{reference} must exceed the largest grid radius {max}"),
            ));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(Error::config(
                "replicates",
                format!("{} is below the minimum {MIN_REPLICATES}", self.replicates),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if !(self.points_density > 0.0) || !self.points_density.is_finite() {
            return Err(Error::config("points_density", "must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        self.functional_config()?;
        Ok(())
    }

    pub fn functional_config(&self) -> Result<FunctionalConfig> {
        let model = CovarianceModel::cauchy(SurfaceSpec::DIMENSION, self.alpha)
            .map_err(|e| Error::config("alpha", e.to_string()))?;
        let jmax = HERMITE_JMAX.max(self.kappa.unwrap_or(0));
        let spec = hermite_coeffs(&self.g, jmax, HERMITE_RULE_ORDER.max(jmax + 2))?;
        let kappa = self.kappa.unwrap_or(spec.rank);
        FunctionalConfig::with_kappa(model, self.weight, spec, kappa)
    }

    /// Point counts of the grid clouds followed by the reference cloud.
    pub fn point_counts(&self) -> Result<Vec<usize>> {
        self.radii
            .iter()
            .chain(std::iter::once(&self.reference()))
            .map(|&r| Ok(SurfaceSpec::new(self.surface, r)?.points_for_density(self.points_density)))
            .collect()
    }

    fn stream_tag(&self) -> u64 {
        let surface = match self.surface {
            SurfaceKind::Sphere => 1,
            SurfaceKind::Cube => 2,
        };
        let weight = if self.share_fields {
            0
        } else {
            match self.weight.kind {
                WeightKind::ConstantOne => 1,
                WeightKind::SphereWeight => 2,
                WeightKind::CubeWeight => 3,
                WeightKind::Harmonic(h) => {
                    4 ^ [h.offset, h.amplitude, h.theta_freq, h.phi_freq, h.theta_phase, h.phi_phase]
                        .iter()
                        .fold(0u64, |acc, v| acc.rotate_left(11) ^ v.to_bits())
                }
            }
        };
        (surface << 32) ^ weight
    }
}

/// Facts about one simulated cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudInfo {
    pub radius: f64,
    pub points: usize,
    pub jitter: f64,
    pub min_pivot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyMeta {
    pub master_seed: u64,
    pub stream_tag: u64,
    pub kappa: usize,
    pub c_kappa: f64,
    /// Grid clouds, then the reference cloud.
    pub clouds: Vec<CloudInfo>,
    pub wall_seconds: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub surface: SurfaceKind,
    pub weight: WeightKind,
    pub radii: Vec<f64>,
    pub reference_radius: f64,
    /// `distances[repeat][radius]`.
    pub distances: Vec<Vec<f64>>,
    pub boxes: Vec<BoxSummary>,
    pub fit: Option<RateFit>,
    pub meta: StudyMeta,
}

impl StudyResult {
    pub fn medians(&self) -> Vec<f64> {
        self.boxes.iter().map(|b| b.median).collect()
    }

    /// Distances at grid index `i` across repeats.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.distances.iter().map(|row| row[i]).collect()
    }
}

struct PreparedCloud {
    sampler: FieldSampler,
    evaluator: FunctionalEvaluator,
}

impl PreparedCloud {
    fn draw(&self, seeds: &SeedPolicy, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut failure = None;
        self.sampler.for_each_replicate(seeds, n, |_, values| match self.evaluator.eval(values) {
            Ok(x) => out.push(x),
            Err(e) => failure = Some(e),
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    run_study_with_progress(cfg, &|_, _| {})
}

/// Run a study, calling `progress(done, total)` after each finished task.
pub fn run_study_with_progress(cfg: &StudyConfig, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<StudyResult> {
    let start = Instant::now();
    cfg.validate()?;
    let fcfg = cfg.functional_config()?;
    let reference = cfg.reference();
    let counts = cfg.point_counts()?;
    let largest = counts.iter().copied().max().unwrap_or(0);
    check_factor_memory(largest, cfg.max_factor_bytes)?;
    if counts.len() as u64 * factor_bytes(largest) as u64 > 4 * cfg.max_factor_bytes as u64 {
        return Err(Error::Resource(format!(
            "{} cached factors of up to {largest} points exceed the memory budget",
            counts.len()
        )));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start {} workers: {e}", cfg.workers)))?;

    let radii_all: Vec<f64> = cfg.radii.iter().copied().chain(std::iter::once(reference)).collect();
    let prepared: Vec<PreparedCloud> = pool.install(|| {
        radii_all
            .par_iter()
            .map(|&r| {
                let cloud = SurfaceSpec::new(cfg.surface, r)?.sample_with_density(cfg.points_density)?;
                let sampler = FieldSampler::with_memory_limit(&fcfg.model, &cloud, cfg.max_factor_bytes).map_err(|e| match e {
                    Error::Numeric(msg) => Error::Numeric(format!("{} of radius {r}: {msg}", cfg.surface)),
                    other => other,
                })?;
                let evaluator = FunctionalEvaluator::new(&fcfg, &cloud, r, cfg.mode)?;
                Ok(PreparedCloud { sampler, evaluator })
            })
            .collect::<Result<_>>()
    })?;
    let (grid_clouds, reference_cloud) = prepared.split_at(cfg.radii.len());
    let reference_cloud = &reference_cloud[0];

    let master = SeedPolicy::new(cfg.seed);
    let tag = cfg.stream_tag();
    let n_radii = cfg.radii.len();
    let total = cfg.repeats * n_radii;
    let done = AtomicUsize::new(0);
    let distances_flat: Vec<f64> = pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|task| {
                let (m, i) = (task / n_radii, task % n_radii);
                let sample_seeds = master.derive(&[tag, m as u64, i as u64, ROLE_SAMPLE]);
                let reference_seeds = if cfg.self_test {
                    sample_seeds
                } else {
                    master.derive(&[tag, m as u64, i as u64, ROLE_REFERENCE])
                };
                let xs = grid_clouds[i].draw(&sample_seeds, cfg.replicates)?;
                let ys = reference_cloud.draw(&reference_seeds, cfg.replicates)?;
                let d = ks_statistic(&xs, &ys)?;
                progress(done.fetch_add(1, Ordering::SeqCst) + 1, total);
                Ok(d)
            })
            .collect::<Result<_>>()
    })?;

    let distances: Vec<Vec<f64>> = distances_flat.chunks(n_radii).map(<[f64]>::to_vec).collect();
    let boxes = (0..n_radii)
        .map(|i| boxplot_summary(&distances.iter().map(|row| row[i]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let fit = fit_log_rate(&distances, &cfg.radii).ok();
    let clouds = radii_all
        .iter()
        .zip(&prepared)
        .map(|(&r, p)| CloudInfo {
            radius: r,
            points: p.sampler.len(),
            jitter: p.sampler.jitter(),
            min_pivot: p.sampler.factor().min_pivot,
        })
        .collect();
    Ok(StudyResult {
        surface: cfg.surface,
        weight: cfg.weight.kind,
        radii: cfg.radii.clone(),
        reference_radius: reference,
        distances,
        boxes,
        fit,
        meta: StudyMeta {
            master_seed: cfg.seed,
            stream_tag: tag,
            kappa: fcfg.kappa,
            c_kappa: fcfg.c_kappa,
            clouds,
            wall_seconds: start.elapsed().as_secs_f64(),
            workers: cfg.workers,
        },
    })
}

pub const DISTANCES_FILE: &str = "distances.csv";
pub const BOXES_FILE: &str = "boxes.csv";
pub const RATE_FIT_FILE: &str = "rate_fit.csv";
pub const BOXES_SVG_FILE: &str = "boxes.svg";
pub const LOG_BOXES_SVG_FILE: &str = "logboxes.svg";
pub const META_FILE: &str = "meta.txt";

pub fn distances_csv(results: &[StudyResult]) -> String {
    let mut s = String::from("surface,weight,r,repeat,ks_distance\n");
    for res in results {
        for (m, row) in res.distances.iter().enumerate() {
            for (r, d) in res.radii.iter().zip(row) {
                let _ = writeln!(s, "{},{},{},{},{:.17e}", res.surface, res.weight, r, m, d);
            }
        }
    }
    s
}

pub fn boxes_csv(result: &StudyResult) -> String {
    let mut s = String::from("r,min,q1,median,q3,max,log_median\n");
    for (r, b) in result.radii.iter().zip(&result.boxes) {
        let _ = writeln!(
            s,
            "{r},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            b.min,
            b.q1,
            b.median,
            b.q3,
            b.max,
            b.median.ln()
        );
    }
    s
}

pub fn rate_fit_csv(fit: &RateFit) -> String {
    format!(
        "intercept,slope,slope_se,n_points,excluded_zeros\n{:.17e},{:.17e},{:.17e},{},{}\n",
        fit.intercept, fit.slope, fit.slope_se, fit.n_points, fit.excluded_zeros
    )
}

pub fn meta_text(result: &StudyResult) -> String {
    let m = &result.meta;
    let mut s = String::new();
    let _ = writeln!(s, "surface = {}", result.surface);
    let _ = writeln!(s, "weight = {}", result.weight);
    let _ = writeln!(s, "master_seed = {}", m.master_seed);
    let _ = writeln!(s, "stream_tag = {}", m.stream_tag);
    let _ = writeln!(s, "kappa = {}", m.kappa);
    let _ = writeln!(s, "c_kappa = {}", m.c_kappa);
    let _ = writeln!(s, "reference_radius = {}", result.reference_radius);
    for c in &m.clouds {
        let _ = writeln!(
            s,
            "cloud r = {} points = {} jitter = {:e} min_pivot = {:e}",
            c.radius, c.points, c.jitter, c.min_pivot
        );
    }
    if let Some(fit) = &result.fit {
        let _ = writeln!(s, "excluded_zeros = {}", fit.excluded_zeros);
    }
    let _ = writeln!(s, "workers = {}", m.workers);
    let _ = writeln!(s, "wall_seconds = {:.3}", m.wall_seconds);
    s
}

/// Static box plot of per-radius summaries.
pub fn boxplot_svg(radii: &[f64], boxes: &[BoxSummary], title: &str, y_label: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let lo = boxes.iter().map(|b| b.min).fold(f64::INFINITY, f64::min);
    let hi = boxes.iter().map(|b| b.max).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi.is_finite() && hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, lo + 1.0)
    };
    let y = |v: f64| top + (hi - v) / (hi - lo) * (h - top - bottom);
    let slot = (w - left - right) / boxes.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        h - bottom
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            left - 6.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">{y_label}</text>"#,
        (top + h - bottom) / 2.0,
        (top + h - bottom) / 2.0
    );
    for (k, (r, b)) in radii.iter().zip(boxes).enumerate() {
        let cx = left + slot * (k as f64 + 0.5);
        let half = slot * 0.25;
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
            y(b.max),
            y(b.min)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="black"/>"##,
            cx - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            y(b.median),
            cx + half,
            y(b.median)
        );
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{r}</text>"#, h - bottom + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">r</text>"#, (left + w - right) / 2.0, h - 10.0);
    s.push_str("</svg>\n");
    s
}

/// Write every study output into `dir`; returns the written paths.
pub fn write_outputs(result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put(DISTANCES_FILE, distances_csv(std::slice::from_ref(result)))?;
    put(BOXES_FILE, boxes_csv(result))?;
    if let Some(fit) = &result.fit {
        put(RATE_FIT_FILE, rate_fit_csv(fit))?;
    }
    let title = format!("{} / {}", result.surface, result.weight);
    put(BOXES_SVG_FILE, boxplot_svg(&result.radii, &result.boxes, &title, "KS distance"))?;
    let log_boxes: Vec<BoxSummary> = (0..result.radii.len())
        .map(|i| {
            let logs: Vec<f64> = result.column(i).iter().map(|d| d.ln()).filter(|v| v.is_finite()).collect();
            boxplot_summary(&logs).unwrap_or(BoxSummary {
                min: f64::NAN,
                q1: f64::NAN,
                median: f64::NAN,
                q3: f64::NAN,
                max: f64::NAN,
            })
        })
        .collect();
    put(LOG_BOXES_SVG_FILE, boxplot_svg(&result.radii, &log_boxes, &title, "log KS distance"))?;
    put(META_FILE, meta_text(result))?;
    Ok(written)
}
