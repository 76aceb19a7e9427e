//! Rotation speeds of the helical families, checked against the KMD
//! right-hand side of sampled data.

use helix_kmd::central::{
    rotation_speed, sample_trajectory, stationary_radius, theorem_alpha, AxialGrid, HelixConfig, Variant,
};
use helix_kmd::kmd::kmd_residual;

fn main() -> helix_kmd::Result<()> {
    for n in 2..=5 {
        let c = HelixConfig::polygon_helix(1.0, 1.0, n)?;
        let traj = sample_trajectory(&c, 1e-4, 4, AxialGrid::pitches(128, 1.0, 1))?;
        println!(
            "N = {n}: speed {:>5.1}, KMD residual {:.1e}, stationary radius {:.4}",
            rotation_speed(&c),
            kmd_residual(&traj)?,
            stationary_radius(1.0, n)?
        );
    }
    let c = HelixConfig::polygon_with_center(2.0, 1.0, 3)?;
    println!(
        "polygon with center (2, 1, 3): speed {}, alpha {}",
        rotation_speed(&c),
        theorem_alpha(2.0, 1.0, 3, Variant::PolygonWithCenter)
    );
    Ok(())
}
