//! Explicit constants of the Lᵖ energy estimates and the two-dimensional
//! critical mass.
//!
//! Powers with exponents that blow up as ρ → 1 (such as `(p+ρ)/(ρ−1)`) are
//! evaluated through logarithms. Two constants have no closed form: the
//! Gagliardo–Nirenberg constant `C_GN` and the Ehrling constant `c_E(η)`.
//! They are either supplied or estimated on the grid (see
//! [`crate::estimators`]), and every constant that depends on them is marked
//! [`Provenance::EstimatedConstant`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{self, EstimatorError};
use crate::grid::Grid;
use crate::model::{validate_params, ModelError, ModelParams};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("{0}")]
    DomainError(String),
    #[error("rho = {0} is not sublinear: c1 requires 0 < rho < 1")]
    RhoNotSublinear(f64),
    #[error("eta = {0} left (0, 1/2) while inverting sigma(eta)")]
    EtaOutOfRange(f64),
    #[error("{0} overflows double precision")]
    Overflow(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), BoundsError> {
    if cond {
        Ok(())
    } else {
        Err(BoundsError::DomainError(msg()))
    }
}

fn positive(name: &str, x: f64) -> Result<(), BoundsError> {
    require(x > 0.0 && x.is_finite(), || format!("{name} = {x} must be positive and finite"))
}

fn finite(name: &'static str, x: f64) -> Result<f64, BoundsError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(BoundsError::Overflow(name))
    }
}

/// `θ = (p/2 − 1/2) / (p/2 + 1/n − 1/2)`, in (0, 1) for p > 1, n ≥ 2.
pub fn theta(p: f64, n: usize) -> Result<f64, BoundsError> {
    require(p > 1.0 && p.is_finite(), || format!("p = {p} must be > 1"))?;
    require(n >= 2, || format!("n = {n} must be >= 2"))?;
    let num = 0.5 * p - 0.5;
    let th = num / (num + 1.0 / n as f64);
    require(th > 0.0 && th < 1.0, || format!("theta = {th} outside (0, 1)"))?;
    Ok(th)
}

/// `c₁ = αχ(p−1)(1−ρ)/(p+1) · ((p+1)γξ / (3(p+ρ)αχ))^{(p+ρ)/(ρ−1)} · |Ω|`
pub fn c1(p: f64, rho: f64, alpha: f64, chi: f64, gamma: f64, xi: f64, omega_vol: f64) -> Result<f64, BoundsError> {
    require(p > 1.0 && p.is_finite(), || format!("p = {p} must be > 1"))?;
    if rho >= 1.0 {
        return Err(BoundsError::RhoNotSublinear(rho));
    }
    require(rho > 0.0, || format!("rho = {rho} must be positive"))?;
    for (name, x) in [("alpha", alpha), ("chi", chi), ("gamma", gamma), ("xi", xi), ("|Omega|", omega_vol)] {
        positive(name, x)?;
    }
    let ln_prefactor = (alpha * chi * (p - 1.0) * (1.0 - rho) / (p + 1.0)).ln();
    let ln_base = ((p + 1.0) * gamma * xi).ln() - ((p + rho) * 3.0 * alpha * chi).ln();
    let exponent = (p + rho) / (rho - 1.0);
    finite("c1", (ln_prefactor + exponent * ln_base + omega_vol.ln()).exp())
}

/// Coefficient schedule of the Ehrling-type estimate for `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EhrlingSchedule {
    /// `σ = γξ(p−1)/3`
    pub sigma: f64,
    /// `ĉ = ξδ(p−1)/(p+1) · ((p+1)γ/(3pδ))^{−p}`
    pub c_hat: f64,
    /// `K = (γ(p+1))^{p+1} ĉ / (4^{p+1} p)`, so that `σ(η) = η K / (1 − 2η)`.
    pub k: f64,
    /// `η = σ / (2σ + K)`, the preimage of σ.
    pub eta: f64,
}

impl EhrlingSchedule {
    pub fn new(p: f64, gamma: f64, xi: f64, delta: f64) -> Result<Self, BoundsError> {
        require(p > 1.0 && p.is_finite(), || format!("p = {p} must be > 1"))?;
        for (name, x) in [("gamma", gamma), ("xi", xi), ("delta", delta)] {
            positive(name, x)?;
        }
        let sigma = gamma * xi * (p - 1.0) / 3.0;
        let ln_c_hat = (xi * delta * (p - 1.0) / (p + 1.0)).ln() - p * ((p + 1.0) * gamma / (3.0 * p * delta)).ln();
        let c_hat = finite("c_hat", ln_c_hat.exp())?;
        let ln_k = (p + 1.0) * (gamma * (p + 1.0) / 4.0).ln() + ln_c_hat - p.ln();
        let k = ln_k.exp();
        // η = σ/(2σ + K) = 1 / (2 + K/σ), stable even when K overflows.
        let eta = 1.0 / (2.0 + (ln_k - sigma.ln()).exp());
        if !(eta > 0.0 && eta < 0.5) {
            return Err(BoundsError::EtaOutOfRange(eta));
        }
        Ok(Self { sigma, c_hat, k, eta })
    }

    /// `σ(η) = η/(1 − 2η) · K`
    pub fn sigma_of(&self, eta: f64) -> f64 {
        eta / (1.0 - 2.0 * eta) * self.k
    }

    /// `c̃ = (γ/δ)^{p+1} (ĉ + 2σ/K) c_E(η)`
    pub fn c_tilde(&self, p: f64, gamma: f64, delta: f64, c_e: f64) -> Result<f64, BoundsError> {
        positive("c_E", c_e)?;
        let ln = (p + 1.0) * (gamma / delta).ln() + (self.c_hat + 2.0 * self.sigma / self.k).ln() + c_e.ln();
        finite("c_tilde", ln.exp())
    }
}

/// Full schedule with `c̃` for a supplied `c_E(η)`:
/// returns `(σ, ĉ, η, c̃)`.
pub fn ehrling_schedule(p: f64, gamma: f64, xi: f64, delta: f64, c_e: f64) -> Result<(f64, f64, f64, f64), BoundsError> {
    let s = EhrlingSchedule::new(p, gamma, xi, delta)?;
    let c_tilde = s.c_tilde(p, gamma, delta, c_e)?;
    Ok((s.sigma, s.c_hat, s.eta, c_tilde))
}

/// `c* = 2 mᵖ C² [(1−θ) mᵖ (2(p−1)/(pθC²))^{θ/(θ−1)} + 1]`
pub fn c_star(p: f64, n: usize, m: f64, c_gn: f64) -> Result<f64, BoundsError> {
    let th = theta(p, n)?;
    positive("m", m)?;
    positive("C_GN", c_gn)?;
    let ln_mp = p * m.ln();
    let ln_inner =
        (1.0 - th).ln() + ln_mp + th / (th - 1.0) * (2.0 * (p - 1.0) / (p * th * c_gn * c_gn)).ln();
    let inner = ln_inner.exp() + 1.0;
    finite("c_star", 2.0 * (ln_mp + 2.0 * c_gn.ln()).exp() * inner)
}

/// `c̄ = c₁ + c̃ m^{p+1}` and `c_* = c* + c̄`.
pub fn cbar_and_total(c1: f64, c_tilde: f64, m: f64, p: f64, c_star: f64) -> (f64, f64) {
    let cbar = c1 + c_tilde * m.powf(p + 1.0);
    (cbar, c_star + cbar)
}

/// `4π / (χα − ξγ)` when attraction dominates, otherwise `None`.
pub fn critical_mass(chi: f64, alpha: f64, xi: f64, gamma: f64) -> Option<f64> {
    let excess = chi * alpha - xi * gamma;
    (excess > 0.0).then(|| 4.0 * PI / excess)
}

/// Default energy exponent: the midpoint `3n/4` of `(n/2, n)`.
pub fn default_p(n: usize) -> f64 {
    0.75 * n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactFormula,
    EstimatedConstant,
}

/// Where `C_GN` and `c_E` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantSource {
    Estimator,
    Config,
}

/// Optional user-supplied values for the non-explicit constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuppliedConstants {
    pub c_gn: Option<f64>,
    pub c_e: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub p: f64,
    pub n: usize,
    pub mass: f64,
    pub omega_volume: f64,
    pub theta: f64,
    pub c1: f64,
    pub sigma: f64,
    pub c_hat: f64,
    pub eta: f64,
    pub c_gn: f64,
    pub c_gn_source: ConstantSource,
    /// Test function that attains the estimate, when estimated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_gn_witness: Option<String>,
    pub c_e: f64,
    pub c_e_source: ConstantSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_e_witness: Option<String>,
    pub c_tilde: f64,
    pub cbar: f64,
    pub c_star: f64,
    pub c_star_total: f64,
    pub critical_mass: Option<f64>,
    pub provenance: BTreeMap<String, Provenance>,
}

impl BoundsReport {
    /// True when `c_*` depends on a numerically estimated constant.
    pub fn uses_estimates(&self) -> bool {
        self.provenance.get("c_star_total") == Some(&Provenance::EstimatedConstant)
    }
}

/// Evaluates every constant for `(params, p, m)` on the given grid. Missing
/// `C_GN` / `c_E` values are estimated on that grid.
pub fn bounds_report(
    params: &ModelParams,
    grid: &Grid,
    mass: f64,
    p: f64,
    supplied: SuppliedConstants,
) -> Result<BoundsReport, BoundsError> {
    validate_params(params)?;
    positive("mass", mass)?;
    let n = params.dim;
    let omega = grid.volume();
    let th = theta(p, n)?;
    let c1v = c1(p, params.rho, params.alpha, params.chi, params.gamma, params.xi, omega)?;
    let sched = EhrlingSchedule::new(p, params.gamma, params.xi, params.delta)?;

    let (c_gn, c_gn_source, c_gn_witness) = match supplied.c_gn {
        Some(c) => (c, ConstantSource::Config, None),
        None => {
            let est = estimators::estimate_cgn(grid, p, n)?;
            (est.value, ConstantSource::Estimator, Some(est.witness))
        }
    };
    let (c_e, c_e_source, c_e_witness) = match supplied.c_e {
        Some(c) => (c, ConstantSource::Config, None),
        None => {
            let est = estimators::estimate_ehrling_ce(grid, sched.eta, p)?;
            (est.value, ConstantSource::Estimator, Some(est.witness))
        }
    };
    let c_tilde = sched.c_tilde(p, params.gamma, params.delta, c_e)?;
    let cs = c_star(p, n, mass, c_gn)?;
    let (cbar, total) = cbar_and_total(c1v, c_tilde, mass, p, cs);
    finite("cbar", cbar)?;
    finite("c_star_total", total)?;

    let mut provenance = BTreeMap::new();
    for name in ["theta", "c1", "sigma", "c_hat", "eta", "critical_mass"] {
        provenance.insert(name.to_string(), Provenance::ExactFormula);
    }
    for name in ["c_gn", "c_e", "c_tilde", "cbar", "c_star", "c_star_total"] {
        provenance.insert(name.to_string(), Provenance::EstimatedConstant);
    }
    Ok(BoundsReport {
        p,
        n,
        mass,
        omega_volume: omega,
        theta: th,
        c1: c1v,
        sigma: sched.sigma,
        c_hat: sched.c_hat,
        eta: sched.eta,
        c_gn,
        c_gn_source,
        c_gn_witness,
        c_e,
        c_e_source,
        c_e_witness,
        c_tilde,
        cbar,
        c_star: cs,
        c_star_total: total,
        critical_mass: critical_mass(params.chi, params.alpha, params.xi, params.gamma),
        provenance,
    })
}
