//! 4D geometric shell shaping (4D-GSS) and a 400ZR-class nonlinear-fiber
//! evaluation pipeline.
//!
//! The crate designs 256-point four-dimensional constellations constrained by
//! orthant symmetry, polarization-swap (X-Y) symmetry, and a fixed number of
//! equal-occupancy energy shells, then evaluates them — alongside PM-16QAM,
//! probabilistically shaped PM-16QAM, and file-loaded packings — by mutual
//! information over a single-span fiber link simulated with the split-step
//! Fourier method (Manakov model) and the 400ZR AWGN loading budget.
//!
//! Module map:
//! - [`constellation`]: 4D point sets, the GSS parameterization, baselines,
//!   validation, and the on-disk text format.
//! - [`txdsp`]: symbol drawing, root-raised-cosine pulse shaping, launch power.
//! - [`channel`]: split-step Fourier propagation over standard single-mode fiber.
//! - [`noise`]: the two 400ZR AWGN loading stages and the OSNR/SNR/BER budget.
//! - [`rxdsp`]: chromatic dispersion compensation, matched filtering, alignment.
//! - [`metrics`]: mismatched-Gaussian mutual information and PAPR figures.
//! - [`optimizer`]: bound-constrained compass (pattern) search.
//! - [`experiments`]: sweep orchestration, persistence, and plot-data emission.

// Validation guards are written `!(x >= lo)` rather than `x < lo` so that NaN
// fails closed instead of slipping past the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod constellation;
pub mod experiments;
pub mod fft;
pub mod metrics;
pub mod noise;
pub mod optimizer;
pub mod rxdsp;
pub mod txdsp;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
