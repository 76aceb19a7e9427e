use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use helix_kmd::central::{self, rotation_speed, AxialGrid, HelixConfig};
use helix_kmd::grid::csv_float;
use helix_kmd::harness::{parse_epsilon_list, ExperimentConfig};
use helix_kmd::helical::{apply_l, apply_l_fd, Matrix2};
use helix_kmd::kmd::{galilean_transform, kmd_rhs, step, FilamentEnsemble, C64};
use helix_kmd::lift::{helical_symmetry_defect, lift_vorticity, SampleBox, VectorField3};
use helix_kmd::numerics::Jet;
use helix_kmd::stream::{psi0_sum, psi_star, H2Grid, StreamContext, StreamParams};

fn bump(x: [f64; 2]) -> f64 {
    let q = (x[0] + 0.2).powi(2) + 1.5 * (x[1] - 0.1).powi(2);
    (1.0 - q).max(0.0).powi(4)
}

fn stream() -> &'static StreamContext {
    static CTX: OnceLock<StreamContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let mut p = StreamParams::new((-15.0f64).exp(), 1.0, 1.0, 3);
        p.grid = H2Grid::coarse();
        StreamContext::build(&p).unwrap()
    })
}

fn wavy_filament(coeffs: &[(i32, f64, f64)], m: usize) -> FilamentEnsemble {
    let period = 2.0 * PI;
    FilamentEnsemble::from_fn(1, m, period, 1.0, 1.0, |_, s| {
        coeffs
            .iter()
            .map(|&(k, a, b)| C64::new(a, b) * C64::from_polar(1.0, k as f64 * s))
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_filament_step_keeps_mode_amplitudes(
        coeffs in prop::collection::vec((-6i32..=6, -1.0f64..1.0, -1.0f64..1.0), 1..5),
        dt in 1e-4f64..0.5,
    ) {
        let e = wavy_filament(&coeffs, 32);
        let next = step(&e, dt).unwrap();
        let l2 = |f: &FilamentEnsemble| f.positions[0].iter().map(|z| z.norm_sqr()).sum::<f64>();
        prop_assert!((l2(&next) - l2(&e)).abs() <= 1e-12 * l2(&e).max(1.0));
    }

    #[test]
    fn galilean_round_trip(
        coeffs in prop::collection::vec((-4i32..=4, -1.0f64..1.0, -1.0f64..1.0), 1..4),
        nu in -3i32..=3,
        t in 0.0f64..2.0,
    ) {
        let mut e = wavy_filament(&coeffs, 32);
        e.time = t;
        let there = galilean_transform(&e, nu as f64).unwrap();
        let back = galilean_transform(&there, -(nu as f64)).unwrap();
        prop_assert!(back.max_distance(&e) < 1e-12);
    }

    #[test]
    fn helix_family_rhs_is_rigid_rotation(r in 0.5f64..3.0, h in 0.3f64..2.0, n in 2usize..7) {
        let c = HelixConfig::polygon_helix(r, h, n).unwrap();
        let e = central::sample(&c, 0.0, AxialGrid::pitches(32, h, 1)).unwrap();
        let f = kmd_rhs(&e).unwrap();
        let w = rotation_speed(&c);
        for j in 0..n {
            for (x, v) in e.positions[j].iter().zip(&f[j]) {
                prop_assert!((v - C64::new(0.0, w) * x).norm() < 1e-9 * (1.0 + w.abs() * r));
            }
        }
    }

    #[test]
    fn lifted_fields_are_helical(rho in -7.0f64..7.0, h in 0.2f64..3.0) {
        let f = VectorField3::lifted(bump, h);
        prop_assert!(helical_symmetry_defect(&f, rho, h, &SampleBox::cube(1.1, 5)) < 1e-12);
    }

    #[test]
    fn lift_is_axially_periodic(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -3.0f64..3.0, h in 0.2f64..3.0) {
        let a = lift_vorticity(bump, [x, y, z], h);
        let b = lift_vorticity(bump, [x, y, z + 2.0 * PI * h], h);
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn stream_function_has_dihedral_symmetry(rad in 0.0f64..0.9, th in 0.0f64..(2.0 * PI)) {
        let ctx = stream();
        let x = [rad * th.cos(), rad * th.sin()];
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
        for y in [Matrix2::rotation(2.0 * PI / 3.0).apply(x), [x[0], -x[1]]] {
            prop_assert!(rel(psi0_sum(x, ctx), psi0_sum(y, ctx)) < 1e-12);
            prop_assert!(rel(psi_star(x, ctx), psi_star(y, ctx)) < 1e-12);
        }
    }

    #[test]
    fn operator_matches_finite_differences(x0 in -1.0f64..1.0, x1 in -1.0f64..1.0, h in 0.3f64..2.0) {
        let f = |p: [f64; 2]| (0.7 * p[0] - 0.2 * p[1]).sin() + p[0] * p[1] * p[1];
        let x = [x0, x1];
        let (s, c) = (0.7 * x0 - 0.2 * x1).sin_cos();
        let jet = Jet::new(
            f(x),
            [0.7 * c + x1 * x1, -0.2 * c + 2.0 * x0 * x1],
            [-0.49 * s, 0.14 * s + 2.0 * x1, -0.04 * s + 2.0 * x0],
        );
        let exact = apply_l(&jet, x, h);
        prop_assert!((apply_l_fd(f, x, h, 1e-3) - exact).abs() < 1e-4 * (1.0 + exact.abs()));
    }

    #[test]
    fn csv_floats_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(csv_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn epsilon_lists_parse(ls in prop::collection::vec(1.0f64..200.0, 1..5)) {
        let text: Vec<String> = ls.iter().map(|l| format!("e^-{l}")).collect();
        let eps = parse_epsilon_list(&text.join(",")).unwrap();
        for (e, l) in eps.iter().zip(&ls) {
            prop_assert_eq!(*e, (-l).exp());
        }
    }
}

#[test]
fn config_round_trips_through_toml() {
    let c = ExperimentConfig::default();
    let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
}
