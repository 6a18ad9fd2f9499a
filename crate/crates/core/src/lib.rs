//! Stochastic von Neumann-Gale dynamics on finite scenario trees.
//!
//! A model is a scenario tree carrying one finitely generated cone per
//! non-root node. The crate computes rapid paths (paths admitting a
//! supporting dual), certifies them by linear programming, and converts
//! between Dynkin and Radner dual paths.

pub mod cli;
pub mod cones;
pub mod error;
pub mod horizon;
pub mod model;
pub mod model_io;
pub mod paths;
pub mod sampling;
pub mod scenario_tree;
pub mod solver;

pub use error::{Result, VngError};
pub use model::Model;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/scenario_trees.md")]
    mod scenario_trees {}
    #[doc = include_str!("../../../book/src/cones.md")]
    mod cones {}
    #[doc = include_str!("../../../book/src/rapid_paths.md")]
    mod rapid_paths {}
    #[doc = include_str!("../../../book/src/duals.md")]
    mod duals {}
    #[doc = include_str!("../../../book/src/horizons.md")]
    mod horizons {}
    #[doc = include_str!("../../../book/src/files_and_cli.md")]
    mod files_and_cli {}
}
