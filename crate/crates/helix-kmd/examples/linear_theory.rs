//! Projection constants of the linearised Liouville operator and a solve
//! with a source that lies in its kernel.

use helix_kmd::linear::{gamma_constants, kernel_z, projected_solve, ProjectedOptions};
use helix_kmd::stream::profile::bubble;

fn main() -> helix_kmd::Result<()> {
    let (g0, g1) = gamma_constants()?;
    println!("gamma0 = {g0:.12}, gamma1 = {g1:.12}, 3/(32 pi) = {:.12}", 3.0 / (32.0 * std::f64::consts::PI));
    let sol = projected_solve(|y| bubble(y) * kernel_z(1, y), &ProjectedOptions::default())?;
    println!("d = {:?}, sup |phi| = {:.2e}", sol.d, sol.sup_norm(16));
    let src = |y: [f64; 2]| bubble(y) * (y[0] * y[1] - 0.3 * y[0]);
    let sol = projected_solve(src, &ProjectedOptions::default())?;
    println!("generic source: d = {:?}", sol.d);
    Ok(())
}
