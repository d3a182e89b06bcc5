//! Uncertainty-aware stereo matching at desk scale.
//!
//! The pipeline: a census cost volume feeds a small per-pixel head that
//! predicts an ordinal distribution over disparity bins ([`matcher`]). Its mean
//! is the disparity and its variance the data uncertainty ([`distribution`]).
//! A kernel regressor fitted post hoc on the head's logits gives the model
//! uncertainty ([`kernel_uq`]). [`metrics`] scores both against ground truth
//! from the synthetic generator in [`datagen`].

// `!(x >= lo)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod datagen;
pub mod distribution;
pub mod error;
pub mod grid;
pub mod kernel_uq;
pub mod matcher;
pub mod metrics;
pub mod ordinal;
pub mod storage;

pub mod cli;

pub use distribution::{BinLayout, BinScheme, Pmf, ProbabilityVolume};
pub use error::{Error, Result};
pub use grid::{DisparityMap, EmbeddingVolume, FeatureVolume, Grid, Image, Mask, UncertaintyMap};
