//! Toy differentiable stereo matcher.
//!
//! Census descriptors are matched by Hamming distance into a cost volume with
//! one slice per disparity bin. A small per-pixel head turns each pixel's cost
//! vector into `K` logits; their softmax is the disparity PMF and the logits
//! themselves are the embeddings consumed by [`crate::kernel_uq`].

pub mod census;
pub mod cost;
pub mod head;
pub mod train;

use rayon::prelude::*;

pub use census::{census_transform, CensusImage};
pub use cost::{bin_disparities, build_cost_volume, CostVolume};
pub use head::{normalize_cost, HeadParameters};
pub use train::{train, train_on_samples, EpochRecord, TrainConfig, TrainingLog, TrainingSample};

use crate::distribution::{moments, softmax_into, BinLayout, ProbabilityVolume};
use crate::error::{Error, Result};
use crate::grid::{DisparityMap, EmbeddingVolume, FeatureVolume, Image, Mask, UncertaintyMap};

pub const DEFAULT_WINDOW: usize = 11;

/// Rectified grayscale pair; rows correspond.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoPair {
    pub id: String,
    pub left: Image,
    pub right: Image,
}

impl StereoPair {
    pub fn new(id: impl Into<String>, left: Image, right: Image) -> Result<Self> {
        left.check_shape(&right)?;
        Ok(Self {
            id: id.into(),
            left,
            right,
        })
    }

    pub fn height(&self) -> usize {
        self.left.height()
    }

    pub fn width(&self) -> usize {
        self.left.width()
    }
}

/// Pixels whose full census window lies inside the image.
pub fn interior_mask(height: usize, width: usize, window: usize) -> Mask {
    let r = window / 2;
    Mask::from_fn(height, width, |row, col| {
        row >= r && col >= r && row + r < height && col + r < width
    })
}

/// Trained model: the head plus the cost-volume settings it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Matcher {
    pub layout: BinLayout,
    pub window: usize,
    pub head: HeadParameters,
}

/// Everything inference produces for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub disparity: DisparityMap,
    pub data_uncertainty: UncertaintyMap,
    pub embeddings: EmbeddingVolume,
    pub volume: ProbabilityVolume,
}

/// Runs the head over every pixel: the PMF volume and the logits as embeddings.
pub fn forward(
    head: &HeadParameters,
    cost: &CostVolume,
) -> Result<(ProbabilityVolume, EmbeddingVolume)> {
    let k = cost.disparities();
    if head.bins() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: head.bins(),
        });
    }
    let n = cost.height() * cost.width();
    let mut logits = vec![0.0; n * k];
    let mut probs = vec![0.0; n * k];
    logits
        .par_chunks_mut(k)
        .zip(probs.par_chunks_mut(k))
        .zip(cost.as_slice().par_chunks(k))
        .for_each_init(
            || (vec![0.0; k], vec![0.0; head.hidden()]),
            |(x, act), ((z, p), c)| {
                normalize_cost(c, x);
                head.forward_into(x, act, z);
                softmax_into(z, p);
            },
        );
    let volume =
        ProbabilityVolume::from_softmax(cost.height(), cost.width(), cost.layout().clone(), probs);
    let embeddings = FeatureVolume::new(cost.height(), cost.width(), k, logits)?;
    Ok((volume, embeddings))
}

impl Matcher {
    pub fn new(layout: BinLayout, window: usize, head: HeadParameters) -> Result<Self> {
        census::check_window(window)?;
        bin_disparities(&layout)?;
        if head.bins() != layout.count() {
            return Err(Error::DimensionMismatch {
                expected: layout.count(),
                actual: head.bins(),
            });
        }
        Ok(Self {
            layout,
            window,
            head,
        })
    }

    pub fn cost_volume(&self, pair: &StereoPair) -> Result<CostVolume> {
        build_cost_volume(pair, &self.layout, self.window)
    }

    pub fn infer(&self, pair: &StereoPair) -> Result<Inference> {
        let cost = self.cost_volume(pair)?;
        let (volume, embeddings) = forward(&self.head, &cost)?;
        let mids = self.layout.midpoints();
        let (mean, var): (Vec<f64>, Vec<f64>) = volume.pixels().map(|m| moments(m, mids)).unzip();
        let (h, w) = (pair.height(), pair.width());
        Ok(Inference {
            disparity: DisparityMap::from_vec(h, w, mean)?,
            data_uncertainty: UncertaintyMap::from_vec(h, w, var)?,
            embeddings,
            volume,
        })
    }
}

/// Disparity map, data-uncertainty map and embeddings for one pair.
pub fn infer(
    head: &HeadParameters,
    pair: &StereoPair,
    layout: &BinLayout,
    window: usize,
) -> Result<(DisparityMap, UncertaintyMap, EmbeddingVolume)> {
    let out = Matcher::new(layout.clone(), window, head.clone())?.infer(pair)?;
    Ok((out.disparity, out.data_uncertainty, out.embeddings))
}
