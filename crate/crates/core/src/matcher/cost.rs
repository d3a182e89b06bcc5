use rayon::prelude::*;

use super::census::{census_transform, CensusImage};
use super::StereoPair;
use crate::distribution::{BinLayout, BinScheme};
use crate::error::{Error, Result};

/// Hamming matching costs, `[row][col][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    height: usize,
    width: usize,
    layout: BinLayout,
    max_cost: u16,
    cost: Vec<u16>,
}

impl CostVolume {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn disparities(&self) -> usize {
        self.layout.count()
    }

    pub fn layout(&self) -> &BinLayout {
        &self.layout
    }

    /// Cost assigned to out-of-frame lookups: the descriptor length.
    pub fn max_cost(&self) -> u16 {
        self.max_cost
    }

    pub fn at(&self, row: usize, col: usize) -> &[u16] {
        let k = self.disparities();
        let start = (row * self.width + col) * k;
        &self.cost[start..start + k]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.cost
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, u16> {
        self.cost.chunks_exact(self.disparities())
    }

    /// Crop to a sub-rectangle, keeping the layout.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> CostVolume {
        assert!(row + height <= self.height && col + width <= self.width);
        let k = self.disparities();
        let mut cost = Vec::with_capacity(height * width * k);
        for r in row..row + height {
            for c in col..col + width {
                cost.extend_from_slice(self.at(r, c));
            }
        }
        CostVolume {
            height,
            width,
            layout: self.layout.clone(),
            max_cost: self.max_cost,
            cost,
        }
    }
}

/// Integer disparity sampled by each bin: its midpoint when midpoints are
/// integers, otherwise its lower edge `t_k`. Requires a uniform layout with
/// integer bin width and one of those two anchors integral.
pub fn bin_disparities(layout: &BinLayout) -> Result<Vec<i64>> {
    if layout.scheme() != BinScheme::Uniform {
        return Err(Error::NonUniformLayout);
    }
    let width = layout.bin_width(0);
    let is_int = |v: f64| (v - v.round()).abs() <= 1e-9;
    if !is_int(width) || width.round() < 1.0 {
        return Err(Error::NonUniformLayout);
    }
    let start = if is_int(layout.midpoint(0)) {
        layout.midpoint(0)
    } else if is_int(layout.alpha()) {
        layout.alpha()
    } else {
        return Err(Error::NonUniformLayout);
    };
    let (start, step) = (start.round() as i64, width.round() as i64);
    Ok((0..layout.count() as i64)
        .map(|k| start + k * step)
        .collect())
}

pub fn build_cost_volume(
    pair: &StereoPair,
    layout: &BinLayout,
    window: usize,
) -> Result<CostVolume> {
    let disparities = bin_disparities(layout)?;
    let left = census_transform(&pair.left, window)?;
    let right = census_transform(&pair.right, window)?;
    Ok(cost_from_census(
        &left,
        &right,
        layout.clone(),
        &disparities,
    ))
}

pub(crate) fn cost_from_census(
    left: &CensusImage,
    right: &CensusImage,
    layout: BinLayout,
    disparities: &[i64],
) -> CostVolume {
    let (height, width) = (left.height(), left.width());
    let k = disparities.len();
    let max_cost = left.bits() as u16;
    let mut cost = vec![0u16; height * width * k];
    cost.par_chunks_mut(width * k)
        .enumerate()
        .for_each(|(row, out)| {
            for col in 0..width {
                let l = left.at(row, col);
                let cell = &mut out[col * k..(col + 1) * k];
                for (c, &d) in cell.iter_mut().zip(disparities) {
                    let src = col as i64 - d;
                    *c = if (0..width as i64).contains(&src) {
                        (l ^ right.at(row, src as usize)).count_ones() as u16
                    } else {
                        max_cost
                    };
                }
            }
        });
    CostVolume {
        height,
        width,
        layout,
        max_cost,
        cost,
    }
}
