//! Fourier transform of the weighted sphere measure; r²·mean|K|² should stay bounded.
use lrdfield::functionals::{direction_averaged_power, fourier_k, WeightFunction};

fn main() -> lrdfield::Result<()> {
    let one = WeightFunction::constant_one();
    // For h ≡ 1 on S(1), K(x) = 4π sin|x| / |x|.
    for t in [0.5, 2.0, 7.0] {
        let k = fourier_k(&[0.0, 0.0, t], &one, 20_000)?;
        println!("K({t}) = {:+.6}  closed form {:+.6}", k.value.re, 4.0 * std::f64::consts::PI * t.sin() / t);
    }
    let radii = [10.0, 20.0, 40.0, 80.0];
    for w in [WeightFunction::sphere_weight(), WeightFunction::cube_weight()] {
        let p = direction_averaged_power(&w, &radii, 300, 20_000, 3)?;
        let shown: Vec<String> = radii.iter().zip(&p).map(|(r, v)| format!("r={r}: {v:.3}")).collect();
        println!("{:<14} r²·mean|K|²  {}", w.kind.to_string(), shown.join("  "));
    }
    Ok(())
}
