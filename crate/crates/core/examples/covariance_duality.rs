//! The Cauchy covariance against the inverse transform of its spectral density.
use lrdfield::covariance::{cov_from_spectrum, CovarianceModel};

fn main() -> lrdfield::Result<()> {
    let model = CovarianceModel::cauchy(3, 2.0 / 3.0)?;
    println!("c2 = {:.12}", model.c2());
    println!("{:>8} {:>18} {:>18} {:>10}", "r", "closed form", "from spectrum", "rel err");
    for r in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let direct = model.cov(r)?;
        let spectral = cov_from_spectrum(&model, r)?;
        println!("{r:>8} {direct:>18.12} {spectral:>18.12} {:>10.2e}", (spectral / direct - 1.0).abs());
    }
    for x in [10.0, 100.0, 1e4] {
        println!("L({x}) = {:.10}", model.slowly_varying_l(x)?);
    }
    Ok(())
}
