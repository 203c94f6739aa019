//! Provenance-guided false-positive suppression for remote patient
//! monitoring alerts.
//!
//! An epoch flows through five layers: [`provenance::assemble`] builds a
//! tagged record, [`sentinel::detect`] raises a candidate alert,
//! [`routing::route`] picks specialists, [`specialists`] issue claims and
//! [`meta::resolve`] turns them into a binary decision. [`synthgen`] builds
//! the synthetic dataset and [`eval`] scores it.

pub mod config;
pub mod eval;
pub mod meta;
pub mod model;
pub mod pipeline;
pub mod provenance;
pub mod routing;
pub mod sentinel;
pub mod specialists;
pub mod synthgen;

pub use config::PipelineConfig;
pub use pipeline::Pipeline;
