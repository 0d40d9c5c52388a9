//! Distance-ratio and quasihyperbolic metrics on planar domains.
//!
//! The crate computes `j_D` in closed form and brackets `k_D` with an
//! adaptive graph solver, extracts and verifies near-geodesics, evaluates
//! explicit planar homeomorphisms, and profiles how they distort both
//! metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod counterexamples;
pub mod distortion;
pub mod error;
pub mod geodesics;
pub mod geometry;
pub mod maps;
pub mod metrics;
pub mod report;
mod solver;

pub use error::{Error, Result};
pub use geodesics::{
    chain_points, extract_neargeodesic, verify_neargeodesic, ChainResult, NearGeodesic,
};
pub use geometry::{sample_interior, BBox, Domain, Point, Segment};
pub use maps::MapSpec;
pub use metrics::{
    j_distance, qh_closed_form, qh_distance, qh_length, MetricResult, PathPolyline, SolverConfig,
};
