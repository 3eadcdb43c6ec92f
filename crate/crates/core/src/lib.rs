//! Grid-cell-inspired positional embeddings for `n`-dimensional positions.
//!
//! Each frequency scale uses `n + 1` wave vectors pointing at the vertices of
//! a regular simplex; scales shrink geometrically by at most `e^(1/n)`.
//! Queries and keys are rotated pairwise by the phases `w . x`, so attention
//! scores depend only on relative displacement.
//!
//! - [`simplex`]: direction sets for one scale.
//! - [`scales`]: magnitude schedules, the base bound, the economy model.
//! - [`embedding`]: wave-vector banks, feature maps, rotations.
//! - [`kernel`]: velocity-controlled oscillator model, grid rasters, shift kernels.
//! - [`baselines`]: sinusoidal, axial RoPE and mixed RoPE encoders.
//! - [`attention`]: a single-layer attention harness and its diagnostics.

pub mod attention;
pub mod baselines;
pub mod embedding;
mod error;
pub mod kernel;
pub mod rng;
pub mod rotary;
pub mod scales;
pub mod simplex;

pub use embedding::{apply_rotation, build_bank, feature_map, relative_score, FeatureMap, GridPEConfig, WaveVectorBank};
pub use error::{Error, Result};
pub use rotary::{rotate_batch, ContentVector, Rotary};
pub use simplex::{DirectionMode, SimplexFrame};
