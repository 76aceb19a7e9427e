//! Rotation speed of the concentrated helices: root of the projection
//! on the first kernel element, against the leading-order value.

use helix_kmd::stream::{solve_alpha, StreamContext, StreamParams};

fn main() -> helix_kmd::Result<()> {
    for r in [1.0, 2f64.sqrt()] {
        for l in [20.0f64, 40.0] {
            let ctx = StreamContext::build(&StreamParams::new((-l).exp(), r, 1.0, 3))?;
            let s = solve_alpha(&ctx)?;
            println!(
                "r = {r:.4}, |log eps| = {l}: alpha = {:.6} (leading {:.1}), ratio {:.3}",
                s.alpha, s.alpha_leading, s.correction_ratio
            );
        }
    }
    Ok(())
}
