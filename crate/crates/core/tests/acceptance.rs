//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use lrdfield::covariance::{cov_from_spectrum, CovarianceModel};
use lrdfield::field::{FieldSampler, SeedPolicy};
use lrdfield::functionals::{
    c_h_norm, c_r_norm, direction_averaged_power, functional_x, lse_estimate, FourierNodes,
    FunctionalConfig, FunctionalMode, WeightFunction,
};
use lrdfield::hermite::{hermite_coeffs, hermite_poly, parseval_gap, Nonlinearity};
use lrdfield::special::{bessel_k, gamma, gauss_hermite_rule};
use lrdfield::study::{distances_csv, run_study, spearman, StudyConfig, StudyResult};
use lrdfield::surface::{pair_distance_cdf_3d, sphere_points, SurfaceKind, SurfaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn h2_config(weight: WeightFunction) -> FunctionalConfig {
    let model = CovarianceModel::cauchy(3, 2.0 / 3.0).unwrap();
    let spec = hermite_coeffs(&Nonlinearity::Hermite(2), 10, 40).unwrap();
    FunctionalConfig::new(model, weight, spec).unwrap()
}

fn weights() -> [(&'static str, WeightFunction); 3] {
    [
        ("constant_one", WeightFunction::constant_one()),
        ("sphere_weight", WeightFunction::sphere_weight()),
        ("cube_weight", WeightFunction::cube_weight()),
    ]
}

fn criterion_1() -> Outcome {
    let cfg = h2_config(WeightFunction::constant_one());
    let mut worst: f64 = 0.0;
    for r in [200.0, 1000.0, 3000.0, 4000.0] {
        let assembled = c_r_norm(&cfg, r).map_err(|e| e.to_string())?;
        let shown = PI.powf(1.5) * gamma(1.0 / 3.0).unwrap()
            / (2f64.powf(7.0 / 6.0) * r.powf(1.0 / 6.0) * bessel_k(7.0 / 6.0, 1.0 / r).unwrap());
        worst = worst.max(((assembled - shown) / shown).abs());
    }
    check(worst < 1e-12, format!("max relative difference {worst:.2e} (tolerance 1e-12)"))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [2.0 / 3.0, 1.5] {
        let m = CovarianceModel::cauchy(3, alpha).unwrap();
        for r in [0.0, 0.1, 0.5, 1.0, 5.0, 10.0] {
            let spectral = cov_from_spectrum(&m, r).map_err(|e| e.to_string())?;
            worst = worst.max((spectral - m.cov(r).unwrap()).abs());
        }
    }
    check(worst < 1e-5, format!("max absolute difference {worst:.2e} (tolerance 1e-5)"))
}

fn criterion_3() -> Outcome {
    let rule = gauss_hermite_rule(24).unwrap();
    let mut orth: f64 = 0.0;
    for j in 0..=10 {
        for k in 0..=10 {
            let v = rule.integrate(|x| hermite_poly(j, x).unwrap() * hermite_poly(k, x).unwrap());
            let fj: f64 = (1..=j).map(|i| i as f64).product();
            let fk: f64 = (1..=k).map(|i| i as f64).product();
            let want = if j == k { fk } else { 0.0 };
            // Error measured in units of the natural scale √(j! k!).
            orth = orth.max((v - want).abs() / (fj * fk).sqrt());
        }
    }
    let gap_h2 = parseval_gap(&hermite_coeffs(&Nonlinearity::Hermite(2), 10, 24).unwrap());
    let gap_sq = parseval_gap(&hermite_coeffs(&Nonlinearity::Square, 10, 24).unwrap());

    const DRAWS: usize = 1_000_000;
    let mut worst_z: f64 = 0.0;
    for (ci, rho) in [0.3f64, 0.9].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7 + ci as u64);
        let s = (1.0 - rho * rho).sqrt();
        let mut sum = [0.0f64; 3];
        let mut sum2 = [0.0f64; 3];
        for _ in 0..DRAWS {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let x2 = rho * z1 + s * z2;
            for k in 1..=3 {
                let p = hermite_poly(k, z1).unwrap() * hermite_poly(k, x2).unwrap();
                sum[k - 1] += p;
                sum2[k - 1] += p * p;
            }
        }
        for k in 1..=3 {
            let n = DRAWS as f64;
            let mean = sum[k - 1] / n;
            let se = ((sum2[k - 1] / n - mean * mean) / n).sqrt();
            let want = (1..=k).map(|i| i as f64).product::<f64>() * rho.powi(k as i32);
            worst_z = worst_z.max(((mean - want) / se).abs());
        }
    }
    check(
        orth < 1e-9 && gap_h2.abs() < 1e-10 && gap_sq.abs() < 1e-10 && worst_z < 4.0,
        format!(
            "orthogonality error {orth:.1e} (relative to √(j!k!)), Parseval gaps H2 {gap_h2:.1e} / w² {gap_sq:.1e}, worst |z| of E[H_k H_k] = k!ρ^k is {worst_z:.2}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let cloud = sphere_points(20.0, 200).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (name, w)) in weights().into_iter().enumerate() {
        let cfg = h2_config(w);
        let cmp = lrdfield::cli::compare_variance(&cfg, &cloud, 20.0, 10_000, 100 + i as u64).map_err(|e| e.to_string())?;
        ok &= cmp.passes(3.0);
        parts.push(format!("{name} z = {:+.2}", cmp.z_score()));
    }
    check(ok, format!("Monte Carlo vs exact variance: {}", parts.join(", ")))
}

fn criterion_5() -> Outcome {
    let a = 0.75;
    // Noise-free recovery.
    let mut recovery: f64 = 0.0;
    for (_, w) in weights() {
        let cfg = h2_config(w);
        for kind in [SurfaceKind::Sphere, SurfaceKind::Cube] {
            let cloud = SurfaceSpec::new(kind, 12.0).unwrap().sample(600).unwrap();
            let h: Vec<f64> = lrdfield::functionals::cloud_weights(&cfg.weight, &cloud).unwrap();
            let xi: Vec<f64> = h.iter().map(|v| a * v).collect();
            recovery = recovery.max((lse_estimate(&xi, &cfg, &cloud).unwrap() - a).abs());
        }
    }

    // Unbiasedness over 10⁴ replicates and the algebraic identity on the same fields.
    let mut worst_z: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for (wi, (_, w)) in weights().into_iter().enumerate() {
        let cfg = h2_config(w);
        for (si, kind) in [SurfaceKind::Sphere, SurfaceKind::Cube].into_iter().enumerate() {
            let r = 10.0;
            let cloud = SurfaceSpec::new(kind, r).unwrap().sample(150).unwrap();
            let h = lrdfield::functionals::cloud_weights(&cfg.weight, &cloud).unwrap();
            let sampler = FieldSampler::new(&cfg.model, &cloud).map_err(|e| e.to_string())?;
            let c_h = c_h_norm(&cfg, &cloud).unwrap();
            let c_r = c_r_norm(&cfg, r).unwrap();
            let (mut s, mut s2, mut n) = (0.0, 0.0, 0.0);
            let mut err = None;
            sampler.for_each_replicate(&SeedPolicy::new(500 + 10 * wi as u64 + si as u64), 10_000, |k, eta| {
                let xi: Vec<f64> = eta.iter().zip(&h).map(|(e, hv)| a * hv + e * e - 1.0).collect();
                let est = lse_estimate(&xi, &cfg, &cloud).unwrap();
                s += est;
                s2 += est * est;
                n += 1.0;
                if k % 97 == 0 {
                    let x = functional_x(&cfg, &cloud, eta, r, FunctionalMode::Full).unwrap();
                    let rhs = c_h * c_r * (est - a);
                    let rel = ((x - rhs) / x).abs();
                    if !rel.is_finite() {
                        err = Some("non-finite identity residual".to_string());
                    }
                    worst_rel = worst_rel.max(rel);
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            let mean = s / n;
            let se = ((s2 / n - mean * mean) / n).sqrt();
            worst_z = worst_z.max(((mean - a) / se).abs());
        }
    }
    check(
        recovery < 1e-12 && worst_z < 3.0 && worst_rel < 1e-9,
        format!("noise-free error {recovery:.1e}, worst unbiasedness |z| {worst_z:.2}, worst identity residual {worst_rel:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let cloud = sphere_points(1.0, 2000).unwrap();
    let pts = &cloud.points;
    let mut d = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in 0..i {
            let (a, b) = (pts[i], pts[j]);
            d.push(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let n = d.len() as f64;
    let mut sup: f64 = 0.0;
    for (k, &rho) in d.iter().enumerate() {
        let f = pair_distance_cdf_3d(1.0, rho);
        sup = sup.max((k as f64 / n - f).abs()).max(((k + 1) as f64 / n - f).abs());
    }
    check(sup < 0.02, format!("sup-norm ECDF distance {sup:.4} (tolerance 0.02)"))
}

fn criterion_7() -> Outcome {
    let one = FourierNodes::new(&WeightFunction::constant_one(), 50_000).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for i in 0..400 {
        let t = 20.0 * (i as f64 + 0.5) / 400.0;
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let x = [t * v[0] / len, t * v[1] / len, t * v[2] / len];
        let k = one.eval(&x).value;
        let want = 4.0 * PI * t.sin() / t;
        worst = worst.max((k.re - want).abs().max(k.im.abs()));
    }
    let radii: Vec<f64> = (1..=10).map(|i| 10.0 * i as f64).collect();
    let power = direction_averaged_power(&WeightFunction::sphere_weight(), &radii, 500, 20_000, 11).map_err(|e| e.to_string())?;
    let sp = spearman(&radii, &power).map_err(|e| e.to_string())?;
    check(
        worst < 1e-4 && sp.p_greater >= 0.05,
        format!(
            "max |K − 4π sin‖x‖/‖x‖| = {worst:.2e} for ‖x‖ ≤ 20; decay Spearman ρ = {:+.3}, one-sided p(growth) = {:.3}",
            sp.rho, sp.p_greater
        ),
    )
}

const DESK_DENSITY: f64 = 0.003;
const DESK_SEED: u64 = 1;

fn desk_configs(workers: usize) -> Vec<StudyConfig> {
    let mut out = Vec::new();
    for surface in [SurfaceKind::Sphere, SurfaceKind::Cube] {
        let weighted = match surface {
            SurfaceKind::Sphere => WeightFunction::sphere_weight(),
            SurfaceKind::Cube => WeightFunction::cube_weight(),
        };
        for weight in [WeightFunction::constant_one(), weighted] {
            out.push(StudyConfig {
                surface,
                weight,
                radii: vec![20.0, 40.0, 60.0, 80.0, 100.0, 120.0],
                reference_radius: Some(200.0),
                replicates: 500,
                repeats: 20,
                points_density: DESK_DENSITY,
                seed: DESK_SEED,
                workers,
                ..StudyConfig::default()
            });
        }
    }
    out
}

fn run_desk(workers: usize) -> Result<Vec<StudyResult>, String> {
    desk_configs(workers)
        .iter()
        .map(|cfg| run_study(cfg).map_err(|e| e.to_string()))
        .collect()
}

fn slope_gap(a: &StudyResult, b: &StudyResult) -> f64 {
    let (fa, fb) = (a.fit.unwrap(), b.fit.unwrap());
    (fa.slope - fb.slope).abs() / (fa.slope_se.powi(2) + fb.slope_se.powi(2)).sqrt()
}

fn criterion_8(results: &[StudyResult]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for res in results {
        let Some(fit) = res.fit else {
            return Err(format!("{}/{}: no rate fit", res.surface, res.weight));
        };
        let sp = spearman(&res.radii, &res.medians()).map_err(|e| e.to_string())?;
        let (lo, hi) = fit.slope_interval(0.95);
        let a = sp.rho < 0.0 && sp.p_less < 0.05;
        let b = fit.slope < 0.0 && hi < 0.0;
        ok &= a && b;
        lines.push(format!(
            "{}/{}: medians ρ = {:+.3} (p = {:.4}) [{}], slope {:.3e} CI [{:.3e}, {:.3e}] [{}]",
            res.surface,
            res.weight,
            sp.rho,
            sp.p_less,
            if a { "a ok" } else { "a FAIL" },
            fit.slope,
            lo,
            hi,
            if b { "b ok" } else { "b FAIL" }
        ));
    }
    // results: sphere/unweighted, sphere/weighted, cube/unweighted, cube/weighted
    for (x, y, label) in [(0, 1, "c sphere"), (2, 3, "c cube"), (0, 2, "d unweighted"), (1, 3, "d weighted")] {
        let g = slope_gap(&results[x], &results[y]);
        ok &= g <= 2.0;
        lines.push(format!("{label}: slope gap {g:.2} pooled SE [{}]", if g <= 2.0 { "ok" } else { "FAIL" }));
    }
    check(ok, lines.join("; "))
}

fn criterion_9(first: &[StudyResult]) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = run_desk(3)?;
    let p1 = dir.path().join("distances_w1.csv");
    let p2 = dir.path().join("distances_w3.csv");
    std::fs::write(&p1, distances_csv(first)).map_err(|e| e.to_string())?;
    std::fs::write(&p2, distances_csv(&second)).map_err(|e| e.to_string())?;
    let b1 = std::fs::read(&p1).map_err(|e| e.to_string())?;
    let b2 = std::fs::read(&p2).map_err(|e| e.to_string())?;
    check(
        b1 == b2,
        format!("distances.csv with 1 and 3 workers: {} bytes each, identical = {}", b1.len(), b1 == b2),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, title: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({title}, {secs:.1}s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {n} ({title}, {secs:.1}s): {detail}");
            }
        }
    };
    let t = Instant::now();
    report(1, "prefactor identity", t, criterion_1());
    let t = Instant::now();
    report(2, "spectral-covariance duality", t, criterion_2());
    let t = Instant::now();
    report(3, "Hermite suite", t, criterion_3());
    let t = Instant::now();
    report(4, "variance oracle", t, criterion_4());
    let t = Instant::now();
    report(5, "LSE correctness", t, criterion_5());
    let t = Instant::now();
    report(6, "pair-distance density", t, criterion_6());
    let t = Instant::now();
    report(7, "Fourier decay", t, criterion_7());
    let t = Instant::now();
    let desk = run_desk(1);
    match &desk {
        Ok(results) => report(8, "desk-scale convergence study", t, criterion_8(results)),
        Err(e) => report(8, "desk-scale convergence study", t, Err(e.clone())),
    }
    let t = Instant::now();
    match &desk {
        Ok(results) => report(9, "determinism across worker counts", t, criterion_9(results)),
        Err(e) => report(9, "determinism across worker counts", t, Err(format!("criterion 8 run failed: {e}"))),
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
