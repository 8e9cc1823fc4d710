//! MNIST IDX container: big-endian magic, dimension sizes, raw bytes.

use std::path::Path;

use super::{DataError, Matrix};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, what: &'static str) -> Result<u32, DataError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DataError::Truncated {
            what,
            expected: offset + 4,
            actual: bytes.len(),
        })
}

/// Parses an image file into an `N × (rows·cols)` matrix scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Matrix, DataError> {
    const WHAT: &str = "IDX images";
    let magic = be_u32(bytes, 0, WHAT)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::WrongMagic {
            what: WHAT,
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4, WHAT)? as usize;
    let rows = be_u32(bytes, 8, WHAT)? as usize;
    let cols = be_u32(bytes, 12, WHAT)? as usize;
    let width = rows * cols;
    let expected = 16 + count * width;
    let payload = bytes.get(16..expected).ok_or(DataError::Truncated {
        what: WHAT,
        expected,
        actual: bytes.len(),
    })?;
    let data = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(Matrix::from_vec(count, width, data))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    const WHAT: &str = "IDX labels";
    let magic = be_u32(bytes, 0, WHAT)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::WrongMagic {
            what: WHAT,
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4, WHAT)? as usize;
    let expected = 8 + count;
    bytes
        .get(8..expected)
        .map(<[u8]>::to_vec)
        .ok_or(DataError::Truncated {
            what: WHAT,
            expected,
            actual: bytes.len(),
        })
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an image/label file pair.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<(Matrix, Vec<u8>), DataError> {
    let images = parse_idx_images(&read(images_path)?)?;
    let labels = parse_idx_labels(&read(labels_path)?)?;
    if images.rows() != labels.len() {
        return Err(DataError::CountMismatch {
            images: images.rows(),
            labels: labels.len(),
        });
    }
    Ok((images, labels))
}
