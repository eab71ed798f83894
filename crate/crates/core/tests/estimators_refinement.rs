use chemo_core::bounds;
use chemo_core::estimators::{default_family, estimate_cgn, estimate_cgn_over, estimate_ehrling_ce};
use chemo_core::grid::Grid;
use chemo_core::ModelParams;

fn sig2(x: f64) -> f64 {
    let scale = 10f64.powi(x.abs().log10().floor() as i32 - 1);
    (x / scale).round() * scale
}

#[test]
fn cgn_estimate_is_stable_under_refinement() {
    let values: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| estimate_cgn(&Grid::new(1.0, 1.0, n, n).unwrap(), 2.0, 2).unwrap().value)
        .collect();
    let rounded: Vec<f64> = values.iter().map(|&v| sig2(v)).collect();
    assert!(rounded.windows(2).all(|w| w[0] == w[1]), "{values:?}");
}

#[test]
fn cgn_estimate_is_monotone_in_family() {
    let g = Grid::new(1.0, 1.0, 48, 48).unwrap();
    let fam = default_family();
    let mut prev = 0.0;
    for k in (1..=fam.len()).step_by(7).chain([fam.len()]) {
        let e = estimate_cgn_over(&g, 2.0, 2, &fam[..k]).unwrap();
        assert!(e.value >= prev);
        prev = e.value;
    }
}

#[test]
fn ehrling_constant_lower_bound_on_unit_square() {
    let g = Grid::new(1.0, 1.0, 64, 64).unwrap();
    for (eta, p) in [(0.1, 1.5), (0.3, 2.0), (0.45, 3.0)] {
        let e = estimate_ehrling_ce(&g, eta, p).unwrap();
        assert!(e.value >= 1.0 - eta - 1e-12, "{eta} {p}: {}", e.value);
    }
}

#[test]
fn critical_mass_is_homogeneous() {
    for lam in [0.1, 0.5, 2.0, 7.0] {
        let a = bounds::critical_mass(2.0, 1.0, 1.0, 1.0).unwrap();
        let b = bounds::critical_mass(2.0 * lam, 1.0 / lam, 1.0, 1.0).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }
    assert_eq!(bounds::critical_mass(1.0, 1.0, 1.0, 1.0), None);
    assert_eq!(bounds::critical_mass(1.0, 1.0, 2.0, 1.0), None);
}

#[test]
fn report_flags_every_constant() {
    let g = Grid::new(1.0, 1.0, 32, 32).unwrap();
    let r = bounds::bounds_report(&ModelParams::unit(0.5), &g, 1.0, 1.5, Default::default()).unwrap();
    for name in ["theta", "c1", "sigma", "c_hat", "eta"] {
        assert_eq!(r.provenance[name], bounds::Provenance::ExactFormula, "{name}");
    }
    for name in ["c_gn", "c_e", "c_tilde", "c_star", "cbar", "c_star_total"] {
        assert_eq!(r.provenance[name], bounds::Provenance::EstimatedConstant, "{name}");
    }
    assert!(r.uses_estimates());
    assert!(r.c_gn_witness.is_some() && r.c_e_witness.is_some());
    let supplied = bounds::SuppliedConstants { c_gn: Some(2.0), c_e: Some(3.0) };
    let r = bounds::bounds_report(&ModelParams::unit(0.5), &g, 1.0, 1.5, supplied).unwrap();
    assert_eq!((r.c_gn, r.c_e), (2.0, 3.0));
    assert_eq!(r.c_gn_source, bounds::ConstantSource::Config);
    assert!(r.c_gn_witness.is_none());
}
