//! Parsers for the big-endian IDX container used by digit datasets.
//!
//! Two shapes are supported: magic 2051 for unsigned-byte image tensors
//! (count x rows x cols) and magic 2049 for unsigned-byte label vectors.
//! Both parsers insist the payload length matches the header exactly, so
//! truncated downloads fail loudly instead of yielding short batches.

use anyhow::{bail, Result};

/// A batch of same-sized grayscale images, row-major, one byte per pixel.
#[derive(Debug)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes; image `i` starts at `i * rows * cols`.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    /// Pixels of image `i`.
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Parse an IDX image file (magic 2051).
pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    if bytes.len() < 16 {
        bail!("IDX image file too short for its 16-byte header");
    }
    let magic = be_u32(bytes, 0);
    if magic != 2051 {
        bail!("bad IDX image magic {magic}, expected 2051");
    }
    let count = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        bail!(
            "IDX image file holds {} bytes but the header promises {expected}",
            bytes.len()
        );
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

/// Parse an IDX label file (magic 2049).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    if bytes.len() < 8 {
        bail!("IDX label file too short for its 8-byte header");
    }
    let magic = be_u32(bytes, 0);
    if magic != 2049 {
        bail!("bad IDX label magic {magic}, expected 2049");
    }
    let count = be_u32(bytes, 4) as usize;
    let expected = 8 + count;
    if bytes.len() != expected {
        bail!(
            "IDX label file holds {} bytes but the header promises {expected}",
            bytes.len()
        );
    }
    Ok(bytes[8..].to_vec())
}
