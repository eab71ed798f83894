mod common;

use chemo_core::grid::{self, Field, Grid};
use proptest::prelude::*;

fn field_strategy(lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    (2usize..24, 2usize..24, 0.1f64..3.0).prop_flat_map(move |(nx, ny, h)| {
        prop::collection::vec(lo..hi, nx * ny).prop_map(move |v| {
            let g = Grid::new(nx as f64 * h, ny as f64 * h, nx, ny).unwrap();
            Field::from_values(g, v).unwrap()
        })
    })
}

fn h2(f: &Field) -> f64 {
    f.grid().h() * f.grid().h()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn integrate_matches_compensated_sum(f in field_strategy(0.0, 1e3)) {
        let want = h2(&f) * common::kahan_sum(f.values().iter().copied());
        let got = grid::integrate(&f).unwrap();
        prop_assert!(common::rel_err(got, want) <= 1e-14, "{got} vs {want}");
    }

    #[test]
    fn integrate_signed_within_absolute_scale(f in field_strategy(-1.0, 1.0)) {
        let want = h2(&f) * common::kahan_sum(f.values().iter().copied());
        let scale = h2(&f) * f.values().iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!((grid::integrate(&f).unwrap() - want).abs() <= 1e-14 * scale.max(1e-300));
    }

    #[test]
    fn lp_matches_oracle(f in field_strategy(0.0, 10.0), p in 1.0f64..4.0) {
        let want = h2(&f) * common::kahan_sum(f.values().iter().map(|v| v.powf(p)));
        let got = grid::lp_norm_p(&f, p).unwrap();
        prop_assert!(common::rel_err(got, want) <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn lp_is_homogeneous(f in field_strategy(0.0, 10.0), p in 1.0f64..4.0, c in 0.01f64..100.0) {
        let a = grid::lp_norm_p(&f.map(|v| c * v), p).unwrap();
        let b = c.powf(p) * grid::lp_norm_p(&f, p).unwrap();
        prop_assert!(common::rel_err(a, b) <= 1e-12 || b == 0.0);
    }

    #[test]
    fn laplacian_integrates_to_zero(f in field_strategy(-5.0, 5.0)) {
        let lap = grid::neumann_laplacian_apply(&f).unwrap();
        let scale = h2(&f) * lap.values().iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!(grid::integrate(&lap).unwrap().abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn summation_by_parts(f in field_strategy(-5.0, 5.0)) {
        let lap = grid::neumann_laplacian_apply(&f).unwrap();
        let minus_f_lap = -h2(&f) * common::kahan_sum(f.values().iter().zip(lap.values()).map(|(a, b)| a * b));
        let e = grid::grad_energy(&f).unwrap();
        prop_assert!((minus_f_lap - e).abs() <= 1e-11 * e.max(1.0));
    }

    #[test]
    fn grad_energy_nonnegative_and_shift_invariant(f in field_strategy(-5.0, 5.0), c in -10.0f64..10.0) {
        let e = grid::grad_energy(&f).unwrap();
        prop_assert!(e >= 0.0);
        let shifted = grid::grad_energy(&f.map(|v| v + c)).unwrap();
        prop_assert!((shifted - e).abs() <= 1e-10 * e.max(1.0));
    }
}

#[test]
fn fractional_power_of_negative_field_is_rejected() {
    let g = Grid::new(1.0, 1.0, 4, 4).unwrap();
    let mut f = Field::constant(g, 1.0);
    f.values_mut()[5] = -0.5;
    assert!(matches!(grid::lp_norm_p(&f, 1.5), Err(grid::GridError::NegativeFieldWithFractionalPower { .. })));
    assert!(grid::lp_norm_p(&f, 2.0).is_ok());
}
