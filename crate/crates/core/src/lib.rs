//! Quasi-stationary families of almost-invariant sets in time-dependent flows.
//!
//! A flow on a 2-D domain is discretised into boxes ([`grid`]), each frozen-time
//! slice becomes a sparse rate matrix ([`generator`]), the slices are coupled by
//! diffusion in time into one spacetime operator ([`inflated`]), and the leading
//! eigenvectors of that operator ([`spectrum`]) are rotated into sparse,
//! individually interpretable features ([`seba`]). [`pipeline`] drives the
//! whole chain from a JSON configuration.

// `!(x > 0.0)` style guards deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generator;
pub mod grid;
pub mod inflated;
pub mod pipeline;
pub mod quadrature;
pub mod seba;
pub mod sparse;
pub mod spectrum;
pub mod stats;
pub mod velocity;

pub use error::{Error, Result};
pub use generator::{averaged_generator, slice_generators, ulam_generator, GeneratorMatrix, SliceLabel};
pub use grid::{Axis, Cell, Face, Geometry, Grid, GridSpec, EARTH_RADIUS_M};
pub use inflated::{assemble, InflatedGenerator, TimeUnit};
pub use quadrature::QuadratureOptions;
pub use sparse::CsrMatrix;
pub use velocity::{GriddedVelocity, SwitchingDoubleGyre, Units, VelocityField};
pub use spectrum::{
    classify, leading_eigenpairs, Classification, ClassifyOptions, EigenClass, EigenOptions, EigenSolution, C64,
};
pub use seba::{extract_families, seba, Family, SebaBasis, SebaInit, SebaOptions};
pub use pipeline::{export_selection, run_pipeline, run_seba, RunArtifacts, RunConfig, RunManifest, RunOptions, SebaRequest, Selection};
