//! Small numerical building blocks shared by the solvers.

pub mod bessel;
pub mod jet;
pub mod quad;
pub mod spline;

pub use jet::Jet;

/// Thomas algorithm. `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / den } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// C² quintic transition: 0 for t ≤ 0, 1 for t ≥ 1. Returns value and
/// first two derivatives in t.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
        )
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let sub = [0.0, 1.0, -0.5, 2.0];
        let diag = [4.0, 5.0, 3.0, 6.0];
        let sup = [1.0, 0.3, 1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { sub[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { sup[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let s = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..4 {
            assert!((s[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn smoothstep_is_c2_at_the_ends() {
        let (v, d, dd) = smoothstep(1e-9);
        assert!(v < 1e-25 && d < 1e-15 && dd < 1e-6);
        let (v, d, dd) = smoothstep(1.0 - 1e-9);
        assert!((1.0 - v) < 1e-25 && d < 1e-15 && dd.abs() < 1e-6);
        let (v, _, _) = smoothstep(0.5);
        assert!((v - 0.5).abs() < 1e-15);
    }
}
