//! Grayscale PFM (`Pf`): text header, f32 samples, rows stored bottom-up.
//! A negative scale marks little-endian data. Writes are always little-endian.

use std::path::Path;

use super::{read_file, write_file, HeaderReader};
use crate::error::{Error, Result};
use crate::grid::DisparityMap;

/// A decoded PFM map and the number of NaN samples it held.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub map: DisparityMap,
    pub nan_count: usize,
}

pub fn encode_pfm(map: &DisparityMap) -> Vec<u8> {
    let (h, w) = (map.height(), map.width());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * h * w);
    for row in (0..h).rev() {
        for &v in &map.as_slice()[row * w..(row + 1) * w] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Pfm> {
    let mut header = HeaderReader::new(bytes);
    let magic = header.token()?;
    if magic != "Pf" {
        return Err(Error::BadMagic(format!("expected Pf, found {magic:?}")));
    }
    let w = header.number::<usize>("width")?;
    let h = header.number::<usize>("height")?;
    let scale = header.number::<f64>("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::BadHeader(format!(
            "PFM scale must be non-zero, got {scale}"
        )));
    }
    let body = header.body()?;
    let count = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4).map(|b| (n, b)))
        .ok_or_else(|| Error::DimOverflow(format!("{w}x{h}")))?;
    let (n, needed) = count;
    if body.len() < needed {
        return Err(Error::Truncated {
            needed,
            available: body.len(),
        });
    }
    let little = scale < 0.0;
    let mut data = vec![0.0; n];
    let mut nan_count = 0;
    for (i, chunk) in body[..needed].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        nan_count += usize::from(v.is_nan());
        let (row, col) = (h - 1 - i / w, i % w);
        data[row * w + col] = f64::from(v);
    }
    Ok(Pfm {
        map: DisparityMap::from_vec(h, w, data)?,
        nan_count,
    })
}

pub fn write_pfm(map: &DisparityMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pfm(map))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Pfm> {
    decode_pfm(&read_file(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let map = DisparityMap::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = encode_pfm(&map);
        assert!(bytes.starts_with(b"Pf\n2 2\n-1.0\n"));
        // Bottom row first.
        assert_eq!(&bytes[12..16], &3.0f32.to_le_bytes());
        let back = decode_pfm(&bytes).unwrap();
        assert_eq!(back.map, map);
        assert_eq!(back.nan_count, 0);
    }

    #[test]
    fn nan_is_preserved_and_counted() {
        let map = DisparityMap::from_vec(1, 3, vec![f64::NAN, f64::INFINITY, 0.5]).unwrap();
        let back = decode_pfm(&encode_pfm(&map)).unwrap();
        assert_eq!(back.nan_count, 1);
        assert!(back.map.as_slice()[0].is_nan());
        assert_eq!(back.map.as_slice()[1], f64::INFINITY);
    }

    #[test]
    fn rejects_color_and_short_files() {
        assert!(matches!(
            decode_pfm(b"PF\n1 1\n-1.0\n\0\0\0\0"),
            Err(Error::BadMagic(_))
        ));
        assert!(matches!(
            decode_pfm(b"Pf\n2 1\n-1.0\n\0\0\0\0"),
            Err(Error::Truncated { .. })
        ));
        assert!(decode_pfm(b"Pf\n2").is_err());
        assert!(decode_pfm(b"Pf\n1 1\n0\n\0\0\0\0").is_err());
    }
}
