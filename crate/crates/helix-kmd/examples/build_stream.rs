//! Builds the concentrated stream function for three helices and prints
//! the residual norms over a sweep of core sizes.

use helix_kmd::stream::{residual_scan, StreamContext, StreamParams};

fn main() -> helix_kmd::Result<()> {
    let params = StreamParams::new((-20.0f64).exp(), 1.0, 1.0, 3);
    let ctx = StreamContext::build(&params)?;
    println!(
        "|log eps| = 20: mu = {:.4}, eps*mu = {:.3e}, c1 = {:.4}, k2 = {:.4}",
        ctx.mu, ctx.em, ctx.c1, ctx.k2
    );
    let eps: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|l: &f64| (-l).exp()).collect();
    let report = residual_scan(&params, &eps)?;
    for r in &report.rows {
        println!("|log eps| = {:>2}: outer {:.3e}  inner {:.3}", r.log_eps, r.outer_norm, r.inner_norm);
    }
    println!("outer slope {:.3}", report.slope);
    Ok(())
}
