//! Lifts the planar vorticity to the helical field in space and compares
//! it with the vortex lines in the weak sense.

use helix_kmd::lift::{
    helical_symmetry_defect, stream_vorticity_field, weak_convergence_gap, BumpField, SampleBox,
};
use helix_kmd::stream::{solve_alpha, StreamContext, StreamParams};

fn main() -> helix_kmd::Result<()> {
    for l in [10.0f64, 20.0, 40.0] {
        let ctx = StreamContext::build(&StreamParams::new((-l).exp(), 1.0, 1.0, 3))?;
        let ctx = ctx.with_alpha(solve_alpha(&ctx)?.alpha)?;
        let r = weak_convergence_gap(&ctx, &BumpField::generic())?;
        let field = stream_vorticity_field(ctx);
        let defect = helical_symmetry_defect(&field, 0.7, 1.0, &SampleBox::cube(1.0, 7));
        println!(
            "|log eps| = {l}: volume {:.4}, lines {:.4}, gap {:.4}, symmetry {defect:.1e}",
            r.volume, r.lines, r.gap
        );
    }
    Ok(())
}
