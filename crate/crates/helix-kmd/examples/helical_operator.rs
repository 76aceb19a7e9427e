//! The divergence-form operator `L = −∇·(K∇)` on a test function, exact
//! against finite differences.

use helix_kmd::helical::{apply_l, apply_l_fd, k_matrix};
use helix_kmd::numerics::Jet;

fn main() {
    let h = 0.8;
    // ψ = exp(−|x|²)
    let psi = |p: [f64; 2]| (-(p[0] * p[0] + p[1] * p[1])).exp();
    for x in [[0.3, -0.2], [1.1, 0.4], [-0.7, 0.9]] {
        let e = psi(x);
        let jet = Jet::new(
            e,
            [-2.0 * x[0] * e, -2.0 * x[1] * e],
            [(4.0 * x[0] * x[0] - 2.0) * e, 4.0 * x[0] * x[1] * e, (4.0 * x[1] * x[1] - 2.0) * e],
        );
        let k = k_matrix(x, h);
        println!(
            "x = {x:?}: det K = {:.6}, L psi = {:.10}, FD {:.10}",
            k.det(),
            apply_l(&jet, x, h),
            apply_l_fd(psi, x, h, 1e-4)
        );
    }
}
