//! Finite-volume simulation and analytic bounds for the zero-flux
//! attraction-repulsion chemotaxis system with sublinear signal production.
//!
//! Modules, bottom up: [`grid`] (discrete calculus), [`model`] (parameters,
//! initial data, regime taxonomy), [`elliptic`] (signal solves), [`transport`]
//! (density stepper and run loop), [`diagnostics`] (energies and inequality
//! checks), [`bounds`] and [`estimators`] (explicit and estimated constants).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod diagnostics;
pub mod elliptic;
pub mod estimators;
pub mod grid;
pub mod model;
pub mod transport;

pub use bounds::{bounds_report, BoundsReport, SuppliedConstants};
pub use diagnostics::{DiagnosticsConfig, DiagnosticsRecord};
pub use elliptic::{solve_helmholtz, solve_signals, HelmholtzProblem, HelmholtzSolver, Signals};
pub use grid::{Field, Grid};
pub use model::{classify_regime, validate_dynamics, validate_params, DomainSpec, InitialData, ModelParams, Regime};
pub use transport::{run, RunOptions, RunReport, Scheme, SimState, Status, Stepper, StepperConfig};
