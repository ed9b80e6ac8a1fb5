//! Multiphase image segmentation by thresholding a single ROF restoration.
//!
//! The pipeline solves the Rudin–Osher–Fatemi problem
//! `min_u TV(u) + (mu/2) |u - f|^2` once ([`rof::solve_rof`]) and then
//! segments by iteratively thresholding `u`, moving each threshold to the
//! midpoint of the neighbouring phase means of `f` ([`trof::segment`]).
//!
//! Supporting modules provide the discrete operators and data model
//! ([`image`]), the energy functionals and brute-force oracles used to check
//! the thresholding equivalences ([`energy`]), initial thresholds from
//! intensity clustering ([`init`]), synthetic benchmark images ([`synth`]),
//! accuracy metrics ([`metrics`]), the end-to-end driver ([`pipeline`]), image and report I/O ([`io`], [`report`]),
//! and the property battery run by `trof verify` ([`verify`]).

pub mod energy;
pub mod error;
pub mod image;
pub mod init;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rof;
pub mod synth;
pub mod trof;
pub mod verify;

pub use error::{Error, Result};
pub use image::{
    BinaryMask, GrayImage, Grid, PhasePartition, ThresholdVector, TvVariant, VectorField,
};
pub use pipeline::{segment_image, InitSource, SegmentConfig};
pub use rof::{solve_rof, RofParams, RofSolution};
pub use trof::{segment, segment_with_solution, TrofParams, TrofResult, TrofTrace};

/// Crate version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
