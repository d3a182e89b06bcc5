//! File IO: PFM disparity maps, PGM images, the `UQT1` tensor container with
//! typed artifact helpers, and CSV reports.

pub mod artifacts;
pub mod container;
pub mod pfm;
pub mod pgm;
pub mod report;

use std::path::Path;

pub use artifacts::{
    estimator_from_container, estimator_to_container, inference_from_container,
    inference_to_container, matcher_from_container, matcher_to_container, uq_map_from_container,
    uq_map_to_container,
};
pub use container::{DType, Tensor, TensorContainer, TensorData};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm, Pfm};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use report::{read_reports, write_curve, write_reports};

use crate::error::{Error, Result};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated header tokens with `#` comments, as in PNM/PFM.
pub(crate) struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    pub(crate) fn token(&mut self) -> Result<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::BadHeader("header ended early".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::BadHeader("header is not ASCII".into()))
    }

    pub(crate) fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::BadHeader(format!("bad {what} {tok:?}")))
    }

    /// Payload after the single whitespace byte that ends the header.
    pub(crate) fn body(self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(Error::BadHeader("missing separator after header".into())),
        }
    }
}
