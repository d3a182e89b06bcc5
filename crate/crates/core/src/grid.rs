//! Row-major 2-D scalar fields: images, disparity maps, uncertainty maps, masks.

use crate::error::{Error, Result};

/// A dense `height x width` grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

/// Grayscale image with intensities nominally in 0..=255.
pub type Image = Grid<f64>;
/// Per-pixel disparity in pixels. Non-finite entries mark invalid pixels.
pub type DisparityMap = Grid<f64>;
/// Per-pixel uncertainty (data: px^2, model: px).
pub type UncertaintyMap = Grid<f64>;
/// Per-pixel boolean selection.
pub type Mask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                actual: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn check_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            })
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Copy of the rectangle starting at `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Grid<T>
    where
        T: Clone,
    {
        assert!(row + height <= self.height && col + width <= self.width);
        Grid::from_fn(height, width, |r, c| self.get(row + r, col + c).clone())
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

impl Grid<f64> {
    /// Mask of finite entries.
    pub fn finite_mask(&self) -> Mask {
        self.map(|v| v.is_finite())
    }

    /// Mean over the selected pixels, or `None` when none are selected.
    pub fn masked_mean(&self, mask: &Mask) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (v, &m) in self.data.iter().zip(mask.as_slice()) {
            if m {
                sum += v;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }
}

/// An `H x W` grid of `dim`-vectors stored pixel-major (`[row][col][dim]`):
/// logits, embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume {
    height: usize,
    width: usize,
    dim: usize,
    data: Vec<f64>,
}

/// Per-pixel OR logits exported for kernel-regression uncertainty.
pub type EmbeddingVolume = FeatureVolume;

impl FeatureVolume {
    pub fn new(height: usize, width: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * dim {
            return Err(Error::DimensionMismatch {
                expected: height * width * dim,
                actual: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            dim,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}
