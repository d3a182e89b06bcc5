//! Census transform: one bit per non-center window position, set when the
//! neighbor is brighter than the center. Border pixels sample with clamped
//! coordinates.

use crate::error::{Error, Result};
use crate::grid::Image;

/// Largest supported window; 11x11 - 1 = 120 bits fits a `u128`.
pub const MAX_WINDOW: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct CensusImage {
    height: usize,
    width: usize,
    window: usize,
    descriptors: Vec<u128>,
}

impl CensusImage {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Descriptor length in bits.
    pub fn bits(&self) -> u32 {
        (self.window * self.window - 1) as u32
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u128 {
        self.descriptors[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[u128] {
        &self.descriptors
    }
}

pub(crate) fn check_window(window: usize) -> Result<()> {
    if !(3..=MAX_WINDOW).contains(&window) || window.is_multiple_of(2) {
        return Err(Error::InvalidWindow(window));
    }
    Ok(())
}

pub fn census_transform(image: &Image, window: usize) -> Result<CensusImage> {
    check_window(window)?;
    let (height, width) = (image.height(), image.width());
    if height < window || width < window {
        return Err(Error::ImageTooSmall {
            height,
            width,
            window,
        });
    }
    let r = (window / 2) as isize;
    let px = image.as_slice();
    let at = |row: isize, col: isize| {
        let row = row.clamp(0, height as isize - 1) as usize;
        let col = col.clamp(0, width as isize - 1) as usize;
        px[row * width + col]
    };
    let mut descriptors = Vec::with_capacity(height * width);
    for row in 0..height as isize {
        for col in 0..width as isize {
            let center = at(row, col);
            let mut bits = 0u128;
            let mut bit = 0u32;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    if at(row + dy, col + dx) > center {
                        bits |= 1u128 << bit;
                    }
                    bit += 1;
                }
            }
            descriptors.push(bits);
        }
    }
    Ok(CensusImage {
        height,
        width,
        window,
        descriptors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_image_gives_zero_descriptors() {
        let img = Image::filled(7, 9, 128.0);
        let c = census_transform(&img, 3).unwrap();
        assert!(c.as_slice().iter().all(|&d| d == 0));
    }

    #[test]
    fn horizontal_gradient_interior_is_uniform() {
        let img = Image::from_fn(6, 10, |_, col| col as f64 * 10.0);
        let c = census_transform(&img, 3).unwrap();
        let reference = c.at(1, 1);
        assert_ne!(reference, 0);
        for row in 1..5 {
            for col in 1..9 {
                assert_eq!(c.at(row, col), reference);
            }
        }
    }

    /// Independent nested-loop oracle with explicit bit positions.
    #[test]
    fn matches_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = Image::from_fn(8, 8, |_, _| rng.gen_range(0..256) as f64);
        for window in [3usize, 5, 7] {
            let c = census_transform(&img, window).unwrap();
            let r = window as i64 / 2;
            for y in 0..8i64 {
                for x in 0..8i64 {
                    let center = *img.get(y as usize, x as usize);
                    let mut expected = 0u128;
                    let mut pos = 0;
                    for wy in 0..window as i64 {
                        for wx in 0..window as i64 {
                            if wy == r && wx == r {
                                continue;
                            }
                            let ny = (y + wy - r).clamp(0, 7) as usize;
                            let nx = (x + wx - r).clamp(0, 7) as usize;
                            if *img.get(ny, nx) > center {
                                expected += 1u128 << pos;
                            }
                            pos += 1;
                        }
                    }
                    assert_eq!(c.at(y as usize, x as usize), expected);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_windows_and_small_images() {
        let img = Image::filled(4, 4, 0.0);
        assert!(matches!(
            census_transform(&img, 4),
            Err(Error::InvalidWindow(4))
        ));
        assert!(matches!(
            census_transform(&img, 1),
            Err(Error::InvalidWindow(1))
        ));
        assert!(matches!(
            census_transform(&img, 5),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(census_transform(&img, 3).is_ok());
    }
}
