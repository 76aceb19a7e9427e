//! Three straight filaments on the unit circle rotating rigidly.
//! Pass a path to also write the trajectory CSV.

use std::fs::File;

use helix_kmd::central::{sample, AxialGrid, HelixConfig};
use helix_kmd::kmd::KmdSystem;

fn main() -> helix_kmd::Result<()> {
    let c = HelixConfig::straight_polygon(1.0, 3)?;
    let state = sample(&c, 0.0, AxialGrid::pitches(64, 1.0, 1))?;
    let traj = KmdSystem::for_state(&state).simulate(&state, 1.0, 1e-4, 100)?;
    println!("angular speed      {:.10}", traj.angular_speed(0));
    println!("center drift rate  {:.2e}", traj.center_drift_rate());
    if let Some(path) = std::env::args().nth(1) {
        traj.write_csv(File::create(path)?)?;
    }
    Ok(())
}
