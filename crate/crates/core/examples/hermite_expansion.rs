//! Hermite coefficients and ranks of the built-in nonlinearities.
use lrdfield::hermite::{hermite_coeffs, parseval_gap, Nonlinearity};

fn main() -> lrdfield::Result<()> {
    let gs = [
        Nonlinearity::Hermite(2),
        Nonlinearity::Hermite(3),
        Nonlinearity::Square,
        Nonlinearity::Power(4),
        Nonlinearity::Abs,
        Nonlinearity::Indicator(0.5),
        Nonlinearity::custom("cos", f64::cos),
    ];
    for g in gs {
        let spec = hermite_coeffs(&g, 10, 80)?;
        let shown: Vec<String> = (0..=6).map(|j| format!("{:+.5}", spec.coeff(j))).collect();
        println!(
            "{:<16} rank {:<2} C0..C6 [{}]  Parseval gap {:.2e}",
            g.to_string(),
            spec.rank,
            shown.join(", "),
            parseval_gap(&spec)
        );
    }
    Ok(())
}
