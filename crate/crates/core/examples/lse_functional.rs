//! Normalizations, the exact variance of the leading term, and the least squares estimator.
use lrdfield::covariance::CovarianceModel;
use lrdfield::field::{FieldSampler, SeedPolicy};
use lrdfield::functionals::{
    c_h_norm, c_r_norm, cloud_weights, exact_variance, lse_estimate, FunctionalConfig, FunctionalEvaluator,
    FunctionalMode, WeightFunction,
};
use lrdfield::hermite::{hermite_coeffs, Nonlinearity};
use lrdfield::surface::sphere_points;

fn main() -> lrdfield::Result<()> {
    let model = CovarianceModel::cauchy(3, 2.0 / 3.0)?;
    let cfg = FunctionalConfig::new(model, WeightFunction::sphere_weight(), hermite_coeffs(&Nonlinearity::Hermite(2), 10, 40)?)?;
    let r = 15.0;
    let cloud = sphere_points(r, 300)?;
    println!("c_r = {:.6}   c_h = {:.4}", c_r_norm(&cfg, r)?, c_h_norm(&cfg, &cloud)?);

    let exact = exact_variance(&cfg, &cloud, r)?;
    let eval = FunctionalEvaluator::new(&cfg, &cloud, r, FunctionalMode::LeadingTerm)?;
    let sampler = FieldSampler::new(&cfg.model, &cloud)?;
    let mut xs = Vec::new();
    sampler.for_each_replicate(&SeedPolicy::new(5), 5000, |_, v| xs.push(eval.eval(v).expect("cloud-sized field")));
    let (mc, se) = lrdfield::cli::variance_with_se(&xs);
    println!("Var X_r: exact {exact:.5}, Monte Carlo {mc:.5} ± {se:.5}");

    // Observations a·h(x) + H₂(η(x)) with a = 3.
    let h = cloud_weights(&cfg.weight, &cloud)?;
    let mut est = Vec::new();
    sampler.for_each_replicate(&SeedPolicy::new(6), 1000, |_, eta| {
        let obs: Vec<f64> = eta.iter().zip(&h).map(|(e, w)| 3.0 * w + e * e - 1.0).collect();
        est.push(lse_estimate(&obs, &cfg, &cloud).expect("cloud-sized observations"));
    });
    let mean = est.iter().sum::<f64>() / est.len() as f64;
    println!("mean LSE over {} fields: {mean:.4} (true 3)", est.len());
    Ok(())
}
