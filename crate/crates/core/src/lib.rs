//! Spatial scaffolding for scene understanding datasets.
//!
//! A scene is a set of labelled 9-DoF boxes plus an optional camera
//! trajectory. From it the crate derives:
//!
//! - [`localcogmap`]: 10x10 bird's-eye grids that pin two anchor objects and
//!   encode a third relative to them.
//! - [`graph`]: chains of such grids that fix the whole layout up to a
//!   similarity transform, with connectivity and rigidity checks.
//! - [`geometry`]: a gravity-aligned frame anchored at the first camera and
//!   yaw-only 7-DoF boxes expressed in it.
//! - [`referral`]: unambiguous referring phrases for repeated categories.
//! - [`qa`]: deterministic question/answer records in JSONL.
//! - [`metrics`]: answer parsers and error histograms for model outputs.
//!
//! The `scaffold` binary wires these into batch commands; see [`cli`].

pub mod align;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod localcogmap;
pub mod metrics;
pub mod qa;
pub mod referral;
pub mod scene;

pub use error::{Error, Result};
