//! Gamma, Bessel K and J, and a Gauss–Hermite rule.
use lrdfield::special::{bessel_j, bessel_k, gamma, gauss_hermite_rule};

fn main() -> lrdfield::Result<()> {
    println!("Γ(1/3)      = {:.15}", gamma(1.0 / 3.0)?);
    for z in [0.01, 0.5, 1.0, 5.0, 40.0] {
        println!("K_7/6({z:>5}) = {:.12e}   J_1/2({z:>5}) = {:+.12e}", bessel_k(7.0 / 6.0, z)?, bessel_j(0.5, z)?);
    }
    let rule = gauss_hermite_rule(40)?;
    // E[W⁴] for W ~ N(0,1)
    println!("E[W^4] by 40-node Gauss–Hermite = {:.14}", rule.integrate(|x| x.powi(4)));
    Ok(())
}
