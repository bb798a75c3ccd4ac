//! Joint caching, routing and link scheduling for small-cell networks,
//! solved by ε-bounded column generation.
//!
//! The pipeline is: [`model`] draws a scenario and its communication tuples,
//! [`conflict`] builds the conflict graph, [`master`] solves the restricted
//! master LP with the in-crate simplex in [`lp`], [`pricing`] finds the next
//! independent set, and [`colgen`] drives the loop. [`baseline`] and
//! [`oracle`] provide the comparison system and tiny-instance ground truth;
//! [`sweep`] runs experiments and writes CSV.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix it to `f64`, with `*32` variants for `f32`.
//!
//! ```
//! use cachesched::colgen::{run_column_generation, CgOptions};
//! use cachesched::model::{generate_scenario, ScenarioConfig};
//!
//! let scenario: cachesched::Scenario = generate_scenario(&ScenarioConfig::tiny(), 7).unwrap();
//! let result = run_column_generation(&scenario, &CgOptions::default()).unwrap();
//! assert!(result.delta_l <= result.delta_u + 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod colgen;
pub mod conflict;
pub mod fixtures;
pub mod lp;
pub mod master;
pub mod model;
pub mod oracle;
pub mod pricing;
pub mod scalar;
pub mod sweep;

pub use scalar::Scalar;

pub type Scenario = model::Scenario<f64>;
pub type CommTuple = model::CommTuple<f64>;
pub type ConflictGraph = conflict::ConflictGraph<f64>;
pub type LpProblem = lp::LpProblem<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type RmpSolution = master::RmpSolution<f64>;
pub type PricingResult = pricing::PricingResult<f64>;
pub type CgResult = colgen::CgResult<f64>;
pub type BaselineResult = baseline::BaselineResult<f64>;
pub type OracleSolution = oracle::OracleSolution<f64>;

pub type Scenario32 = model::Scenario<f32>;
pub type ConflictGraph32 = conflict::ConflictGraph<f32>;
pub type LpProblem32 = lp::LpProblem<f32>;
pub type CgResult32 = colgen::CgResult<f32>;
