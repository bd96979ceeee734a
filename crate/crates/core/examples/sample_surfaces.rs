//! Point clouds on spheres and cubes, with the pair-distance check for the sphere.
use lrdfield::surface::{pair_distance_cdf_3d, SurfaceKind, SurfaceSpec};

fn main() -> lrdfield::Result<()> {
    for kind in [SurfaceKind::Sphere, SurfaceKind::Cube] {
        for r in [10.0, 40.0] {
            let spec = SurfaceSpec::new(kind, r)?;
            let cloud = spec.sample_with_density(0.01)?;
            println!(
                "{kind:?} r={r}: {} points, area {:.1}, cell weight {:.3}",
                cloud.len(),
                cloud.area,
                cloud.cell_weight
            );
        }
    }

    let r = 1.0;
    let cloud = SurfaceSpec::new(SurfaceKind::Sphere, r)?.sample(1500)?;
    let mut dists = Vec::new();
    for (i, a) in cloud.points.iter().enumerate() {
        for b in &cloud.points[i + 1..] {
            dists.push(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
        }
    }
    let n = dists.len() as f64;
    for rho in [0.25, 0.5, 1.0, 1.5, 1.9] {
        let emp = dists.iter().filter(|&&d| d <= rho).count() as f64 / n;
        println!("P(|X-Y| <= {rho}) empirical {emp:.4}  exact {:.4}", pair_distance_cdf_3d(r, rho));
    }
    Ok(())
}
