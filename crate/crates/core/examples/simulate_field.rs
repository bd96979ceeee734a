//! Cholesky simulation on a sphere cloud, with an empirical covariance check.
use lrdfield::covariance::CovarianceModel;
use lrdfield::field::{FieldSampler, SeedPolicy};
use lrdfield::surface::sphere_points;

fn main() -> lrdfield::Result<()> {
    let model = CovarianceModel::cauchy(3, 2.0 / 3.0)?;
    let cloud = sphere_points(20.0, 400)?;
    let sampler = FieldSampler::new(&model, &cloud)?;
    println!("factorized {} points, jitter {:e}, smallest pivot {:.3e}", sampler.len(), sampler.jitter(), sampler.factor().min_pivot);

    let pairs = [(0, 1), (0, 57), (10, 300), (100, 399)];
    let reps = 20_000;
    let mut acc = [0.0; 4];
    sampler.for_each_replicate(&SeedPolicy::new(2024), reps, |_, v| {
        for (k, &(i, j)) in pairs.iter().enumerate() {
            acc[k] += v[i] * v[j];
        }
    });
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let (a, b) = (cloud.points[i], cloud.points[j]);
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        println!("pair ({i:>3},{j:>3}) |x-y| = {d:7.3}  B = {:.4}  empirical {:.4}", model.cov(d)?, acc[k] / reps as f64);
    }
    Ok(())
}
