//! Binary PGM (`P5`) with maxval 255. Comment lines are skipped on read.

use std::path::Path;

use super::{read_file, write_file, HeaderReader};
use crate::error::{Error, Result};
use crate::grid::Image;

/// Samples are rounded and clamped to `0..=255`.
pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .as_slice()
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut header = HeaderReader::new(bytes);
    let magic = header.token()?;
    if magic != "P5" {
        return Err(Error::BadMagic(format!("expected P5, found {magic:?}")));
    }
    let w = header.number::<usize>("width")?;
    let h = header.number::<usize>("height")?;
    let maxval = header.number::<u32>("maxval")?;
    if maxval != 255 {
        return Err(Error::BadHeader(format!(
            "maxval must be 255, got {maxval}"
        )));
    }
    let body = header.body()?;
    let needed = w
        .checked_mul(h)
        .ok_or_else(|| Error::DimOverflow(format!("{w}x{h}")))?;
    if body.len() < needed {
        return Err(Error::Truncated {
            needed,
            available: body.len(),
        });
    }
    Image::from_vec(h, w, body[..needed].iter().map(|&b| f64::from(b)).collect())
}

pub fn write_pgm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(image))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&read_file(path.as_ref())?)
}
