mod common;

use chemo_core::bounds::{self, EhrlingSchedule};
use common::rel_err;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

#[test]
fn oracle_reproduces_worked_values() {
    assert_eq!(common::theta(2.0, 2), 0.5);
    assert!(rel_err(common::c1(2.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0), 16.276041666666668) < 1e-15);
    assert!(rel_err(common::c_star(2.0, 2, 1.0, 1.0), 2.5) < 1e-15);
}

#[test]
fn worked_values() {
    assert_eq!(bounds::theta(2.0, 2).unwrap(), 0.5);
    let c1 = bounds::c1(2.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    assert!(rel_err(c1, 16.276041666666668) < TOL, "{c1}");
    let cs = bounds::c_star(2.0, 2, 1.0, 1.0).unwrap();
    assert!(rel_err(cs, 2.5) < TOL, "{cs}");
}

#[test]
fn random_tuples_match_high_precision_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = if i % 4 == 3 { 3 } else { 2 };
        let p = rng.gen_range(1.05..4.0);
        let rho = rng.gen_range(0.05..0.9);
        let [alpha, chi, gamma, xi, delta] = [(); 5].map(|_| log_uniform(&mut rng, 0.2, 5.0));
        let omega = log_uniform(&mut rng, 0.25, 4.0);
        let m = log_uniform(&mut rng, 0.1, 100.0);
        let c_gn = log_uniform(&mut rng, 0.5, 5.0);
        let c_e = log_uniform(&mut rng, 0.1, 10.0);
        let ctx = format!("tuple {i}: p={p} n={n} rho={rho} a={alpha} chi={chi} g={gamma} xi={xi} d={delta}");

        let mut check = |name: &str, got: f64, want: f64| {
            let e = rel_err(got, want);
            worst = worst.max(e);
            assert!(e <= TOL, "{name}: {got} vs {want} (rel {e:.2e}); {ctx}");
        };
        check("theta", bounds::theta(p, n).unwrap(), common::theta(p, n));
        let c1 = bounds::c1(p, rho, alpha, chi, gamma, xi, omega).unwrap();
        check("c1", c1, common::c1(p, rho, alpha, chi, gamma, xi, omega));

        let (s, ch, eta, ct) = bounds::ehrling_schedule(p, gamma, xi, delta, c_e).unwrap();
        let (os, och, oeta, oct) = common::ehrling(p, gamma, xi, delta, c_e);
        check("sigma", s, os);
        check("c_hat", ch, och);
        check("eta", eta, oeta);
        check("c_tilde", ct, oct);

        let cs = bounds::c_star(p, n, m, c_gn).unwrap();
        check("c_star", cs, common::c_star(p, n, m, c_gn));
        let (cbar, total) = bounds::cbar_and_total(c1, ct, m, p, cs);
        let (obar, ototal) = common::cbar_and_total(c1, ct, m, p, cs);
        check("cbar", cbar, obar);
        check("c_star_total", total, ototal);
    }
    eprintln!("worst relative error over 1000 tuples: {worst:.3e}");
}

#[test]
fn eta_is_preimage_of_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let p = rng.gen_range(1.05..4.0);
        let [gamma, xi, delta] = [(); 3].map(|_| log_uniform(&mut rng, 0.2, 5.0));
        let s = EhrlingSchedule::new(p, gamma, xi, delta).unwrap();
        assert!(s.eta > 0.0 && s.eta < 0.5);
        assert!(rel_err(s.sigma_of(s.eta), s.sigma) < 1e-12);
    }
}

#[test]
fn c1_grows_without_bound_as_rho_approaches_one() {
    // The base is below one for these coefficients, so the negative
    // exponent (p+ρ)/(ρ−1) drives c1 up as ρ → 1⁻.
    let mut prev = 0.0;
    for rho in [0.5, 0.7, 0.8, 0.9, 0.95, 0.97, 0.98] {
        let c = bounds::c1(2.0, rho, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(c > prev, "rho={rho}: {c} <= {prev}");
        prev = c;
    }
    assert!(prev > 1e10);
    assert!(matches!(bounds::c1(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0), Err(bounds::BoundsError::RhoNotSublinear(_))));
}
