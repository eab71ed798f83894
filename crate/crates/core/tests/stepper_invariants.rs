mod common;

use std::f64::consts::PI;

use chemo_core::diagnostics::{self, DiagnosticsConfig};
use chemo_core::grid::{self, Field, Grid};
use chemo_core::model::{build_initial_data, Bump, InitialData, InitialShape};
use chemo_core::{run, DomainSpec, ModelParams, RunOptions, Scheme, Status, Stepper, StepperConfig};
use proptest::prelude::*;

fn diag() -> DiagnosticsConfig {
    DiagnosticsConfig { ps: vec![2.0], sample_every: 10, bounds: None }
}

fn bump_state(n: usize, mass: f64) -> Field {
    let spec = InitialData::gaussian([0.5, 0.5], 0.1, 1.0).with_mass(mass);
    build_initial_data(&spec, &DomainSpec::unit_square(n)).unwrap().0
}

#[test]
fn uniform_state_is_a_fixed_point() {
    for scheme in [Scheme::ExplicitUpwind, Scheme::ImexDiffusion] {
        let g = Grid::new(1.0, 1.0, 32, 32).unwrap();
        let p = ModelParams { chi: 3.0, xi: 0.5, ..ModelParams::unit(0.5) };
        let st = Stepper::new(p, StepperConfig { scheme, ..Default::default() }, g).unwrap();
        let mut s = st.initial_state(Field::constant(g, 2.0)).unwrap();
        for _ in 0..1000 {
            s = st.step(&s).unwrap();
        }
        let dev = s.u.values().iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-12, "{scheme:?}: {dev:e}");
    }
}

#[test]
fn mass_is_conserved_over_ten_thousand_steps() {
    let u0 = bump_state(32, 3.0);
    let p = ModelParams { chi: 2.0, xi: 0.5, ..ModelParams::unit(0.5) };
    let st = Stepper::new(p, StepperConfig::default(), *u0.grid()).unwrap();
    let opts = RunOptions { max_steps: Some(10_000), steady_tol: 0.0, ..RunOptions::until(f64::INFINITY) };
    let rep = run(&st, st.initial_state(u0).unwrap(), &opts, &diag(), |_| {}).unwrap();
    assert_eq!(rep.state.step, 10_000, "{:?} {:?}", rep.state.status, rep.blowup_reason);
    assert!(rep.max_mass_drift <= 1e-12, "{:e}", rep.max_mass_drift);
}

#[test]
fn run_with_t_end_zero_returns_initial_state() {
    let u0 = bump_state(16, 1.0);
    let st = Stepper::new(ModelParams::unit(0.5), StepperConfig::default(), *u0.grid()).unwrap();
    let rep = run(&st, st.initial_state(u0.clone()).unwrap(), &RunOptions::until(0.0), &diag(), |_| {}).unwrap();
    assert_eq!(rep.state.step, 0);
    assert_eq!(rep.state.u, u0);
    assert_eq!(rep.state.status, Status::Completed);
    assert!(rep.records.is_empty());
}

#[test]
fn relaxation_to_uniform_is_detected_as_steady() {
    let g = Grid::new(1.0, 1.0, 8, 8).unwrap();
    let u0 = Field::from_fn(g, |x, _| 1.0 + 0.1 * (PI * x).cos());
    let p = ModelParams { chi: 0.1, xi: 0.1, ..ModelParams::unit(0.5) };
    let st = Stepper::new(p, StepperConfig::default(), g).unwrap();
    let opts = RunOptions { steady_tol: 1e-6, ..RunOptions::until(100.0) };
    let rep = run(&st, st.initial_state(u0).unwrap(), &opts, &diag(), |_| {}).unwrap();
    assert_eq!(rep.state.status, Status::SteadyDetected);
    assert!(rep.state.t < 100.0);
}

#[test]
fn sensitivities_may_vanish_for_the_stepper_only() {
    let p = ModelParams { chi: 0.0, xi: 0.0, ..ModelParams::unit(1.0) };
    assert!(chemo_core::validate_params(&p).is_err());
    assert!(Stepper::new(p, StepperConfig::default(), Grid::new(1.0, 1.0, 4, 4).unwrap()).is_ok());
}

fn heat_amplitude(u: &Field) -> f64 {
    let g = u.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let c = (PI * g.center(i, j).0).cos();
            num += (u.get(i, j) - 1.0) * c;
            den += c * c;
        }
    }
    num / den
}

#[test]
fn pure_diffusion_follows_discrete_eigen_decay() {
    let g = Grid::new(1.0, 1.0, 64, 64).unwrap();
    let lam = g.eigenvalue_1d(1, 64);
    let p = ModelParams { chi: 0.0, xi: 0.0, ..ModelParams::unit(0.5) };
    for scheme in [Scheme::ExplicitUpwind, Scheme::ImexDiffusion] {
        let dt = 1e-7;
        let st = Stepper::new(p, StepperConfig { dt_max: dt, scheme, ..Default::default() }, g).unwrap();
        let mut s = st.initial_state(Field::from_fn(g, |x, _| 1.0 + (PI * x).cos())).unwrap();
        let a0 = heat_amplitude(&s.u);
        let mut prev_e2 = grid::lp_norm_p(&s.u, 2.0).unwrap();
        for _ in 0..100 {
            s = st.step(&s).unwrap();
            let e2 = grid::lp_norm_p(&s.u, 2.0).unwrap();
            assert!(e2 <= prev_e2 + 1e-12);
            prev_e2 = e2;
        }
        let a = heat_amplitude(&s.u);
        let factor = match scheme {
            Scheme::ExplicitUpwind => (1.0 - dt * lam).powi(100),
            Scheme::ImexDiffusion => (1.0 + dt * lam).powi(-100),
        };
        assert!(common::rel_err(a / a0, factor) <= 1e-11, "{scheme:?}");
        let rate = -(a / a0).ln() / s.t;
        assert!(common::rel_err(rate, lam) <= 1e-6, "{scheme:?}: {rate} vs {lam}");
    }
}

fn bump_strategy() -> impl Strategy<Value = Vec<Bump>> {
    prop::collection::vec(
        ((0.0f64..1.0, 0.0f64..1.0), 0.03f64..0.3, 0.1f64..5.0)
            .prop_map(|((x, y), width, amplitude)| Bump { center: [x, y], width, amplitude }),
        1..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stays_nonnegative_and_conservative(
        bumps in bump_strategy(),
        chi in 0.1f64..8.0,
        xi in 0.1f64..8.0,
        rho in prop::sample::select(vec![0.3, 0.5, 0.8, 1.0]),
        mass in 0.5f64..30.0,
        imex in any::<bool>(),
    ) {
        let spec = InitialData { shape: InitialShape::MultiBump { bumps }, mass: Some(mass) };
        let (u0, m) = build_initial_data(&spec, &DomainSpec::unit_square(24)).unwrap();
        let p = ModelParams { chi, xi, rho, ..ModelParams::unit(rho) };
        let scheme = if imex { Scheme::ImexDiffusion } else { Scheme::ExplicitUpwind };
        let st = Stepper::new(p, StepperConfig { scheme, ..Default::default() }, *u0.grid()).unwrap();
        let mut s = st.initial_state(u0).unwrap();
        for _ in 0..200 {
            s = st.step(&s).unwrap();
            let max = s.u.max();
            prop_assert!(s.u.min() >= -1e-13 * max, "min {} max {}", s.u.min(), max);
            let drift = (grid::integrate(&s.u).unwrap() - m).abs() / m;
            prop_assert!(drift <= 1e-12, "drift {drift:e}");
        }
    }
}

#[test]
fn diagnostics_series_has_forward_differences() {
    let u0 = bump_state(16, 2.0);
    let st = Stepper::new(ModelParams::unit(0.5), StepperConfig::default(), *u0.grid()).unwrap();
    let cfg = DiagnosticsConfig { ps: vec![1.5, 2.0], sample_every: 5, bounds: None };
    let rep = run(&st, st.initial_state(u0).unwrap(), &RunOptions { max_steps: Some(50), ..RunOptions::until(1.0) }, &cfg, |_| {})
        .unwrap();
    assert_eq!(rep.records.len(), 11);
    for w in rep.records.windows(2) {
        let want = (w[1].energy(1.5).unwrap() - w[0].energy(1.5).unwrap()) / (w[1].t - w[0].t);
        assert!(common::rel_err(w[0].de_dt, want) < 1e-12);
    }
    assert!(rep.records.last().unwrap().de_dt.is_nan());
    let mut csv = Vec::new();
    diagnostics::write_csv(&rep.records, &cfg.ps, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 12);
}
