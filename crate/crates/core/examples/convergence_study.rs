//! A small Kolmogorov-distance study on the sphere, written to a temporary directory.
use lrdfield::study::{run_study_with_progress, write_outputs, StudyConfig};

fn main() -> lrdfield::Result<()> {
    let cfg = StudyConfig {
        radii: vec![5.0, 10.0, 15.0, 20.0],
        reference_radius: Some(30.0),
        replicates: 200,
        repeats: 5,
        points_density: 0.05,
        seed: 7,
        ..StudyConfig::default()
    };
    let result = run_study_with_progress(&cfg, &|k, total| eprint!("\r{k}/{total}"))?;
    eprintln!();
    for (r, b) in result.radii.iter().zip(&result.boxes) {
        println!("r = {r:>4}: median KS {:.4}  IQR [{:.4}, {:.4}]", b.median, b.q1, b.q3);
    }
    if let Some(fit) = result.fit {
        let (lo, hi) = fit.slope_interval(0.95);
        println!("log-distance slope {:.5} (95% [{lo:.5}, {hi:.5}])", fit.slope);
    }
    let dir = std::env::temp_dir().join("lrdfield-convergence-example");
    for path in write_outputs(&result, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
