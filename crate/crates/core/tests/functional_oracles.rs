use std::f64::consts::PI;

use lrdfield::covariance::CovarianceModel;
use lrdfield::field::{FieldSampler, SeedPolicy};
use lrdfield::functionals::{
    c_h_norm, cloud_weights, exact_variance, lse_estimate, FunctionalConfig, FunctionalEvaluator, FunctionalMode,
    WeightFunction,
};
use lrdfield::hermite::{hermite_coeffs, Nonlinearity};
use lrdfield::surface::sphere_points;

// ∫_{S(1)} (1.2 + 0.2 sin5θ sin5φ)² dσ = 1.44·4π + 0.04π·100/99, from the mpmath oracle script.
const SPHERE_WEIGHT_SQUARED_INTEGRAL: f64 = 18.22250672118588756823;

fn config(weight: WeightFunction, g: Nonlinearity) -> FunctionalConfig {
    let model = CovarianceModel::cauchy(3, 2.0 / 3.0).unwrap();
    FunctionalConfig::new(model, weight, hermite_coeffs(&g, 10, 40).unwrap()).unwrap()
}

#[test]
fn c_h_matches_surface_quadrature() {
    let cfg = config(WeightFunction::sphere_weight(), Nonlinearity::Hermite(2));
    let coarse = c_h_norm(&cfg, &sphere_points(1.0, 10_000).unwrap()).unwrap();
    let fine = c_h_norm(&cfg, &sphere_points(1.0, 20_000).unwrap()).unwrap();
    assert!((coarse / SPHERE_WEIGHT_SQUARED_INTEGRAL - 1.0).abs() < 5e-3, "{coarse}");
    assert!((fine / coarse - 1.0).abs() < 2e-3);
    let one = config(WeightFunction::constant_one(), Nonlinearity::Hermite(2));
    let area = c_h_norm(&one, &sphere_points(6.0, 1000).unwrap()).unwrap();
    assert!((area / (4.0 * PI * 36.0) - 1.0).abs() < 1e-3);
}

#[test]
fn monte_carlo_variance_of_leading_term() {
    let cfg = config(WeightFunction::sphere_weight(), Nonlinearity::Hermite(2));
    let cloud = sphere_points(20.0, 200).unwrap();
    let exact = exact_variance(&cfg, &cloud, 20.0).unwrap();
    let eval = FunctionalEvaluator::new(&cfg, &cloud, 20.0, FunctionalMode::LeadingTerm).unwrap();
    let sampler = FieldSampler::new(&cfg.model, &cloud).unwrap();
    let mut xs = Vec::new();
    sampler.for_each_replicate(&SeedPolicy::new(31), 4000, |_, v| xs.push(eval.eval(v).unwrap()));
    let (var, se) = lrdfield::cli::variance_with_se(&xs);
    assert!((var - exact).abs() < 3.0 * se, "{var} ± {se} vs {exact}");
}

#[test]
fn leading_term_scales_hermite_component() {
    // For G = w² the leading term is (C₂/2!) H₂ = H₂, while the full transform adds the constant C₀ = 1.
    let cfg = config(WeightFunction::constant_one(), Nonlinearity::Square);
    assert_eq!(cfg.kappa, 2);
    let cloud = sphere_points(8.0, 64).unwrap();
    let full = FunctionalEvaluator::new(&cfg, &cloud, 8.0, FunctionalMode::Full).unwrap();
    let lead = FunctionalEvaluator::new(&cfg, &cloud, 8.0, FunctionalMode::LeadingTerm).unwrap();
    let field: Vec<f64> = (0..64).map(|i| (i as f64 * 0.41).sin() * 2.0).collect();
    let shift = full.prefactor * cloud_weights(&cfg.weight, &cloud).unwrap().iter().sum::<f64>();
    let diff = full.eval(&field).unwrap() - lead.eval(&field).unwrap();
    assert!((diff - shift).abs() < 1e-9 * shift.abs());
}

#[test]
fn lse_is_unbiased() {
    let cfg = config(WeightFunction::cube_weight(), Nonlinearity::Hermite(2));
    let cloud = sphere_points(10.0, 120).unwrap();
    let h = cloud_weights(&cfg.weight, &cloud).unwrap();
    let sampler = FieldSampler::new(&cfg.model, &cloud).unwrap();
    let a = 2.5;
    let mut est = Vec::new();
    sampler.for_each_replicate(&SeedPolicy::new(12), 4000, |_, eta| {
        let xi: Vec<f64> = eta.iter().zip(&h).map(|(e, hv)| a * hv + e * e - 1.0).collect();
        est.push(lse_estimate(&xi, &cfg, &cloud).unwrap());
    });
    let n = est.len() as f64;
    let m = est.iter().sum::<f64>() / n;
    let sd = (est.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((m - a).abs() < 3.0 * sd / n.sqrt(), "{m}");
}
