#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment runner for the chemotaxis simulator: JSON configs, the `sim`
//! subcommands, and SVG plots.

pub mod commands;
pub mod config;
pub mod svg;
