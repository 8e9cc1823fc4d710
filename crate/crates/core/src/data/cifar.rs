//! CIFAR-10 binary batches: 3073-byte records of one label byte followed by
//! the 1024 red, 1024 green and 1024 blue pixel bytes.

use std::path::Path;

use super::{DataError, Matrix};

pub const CIFAR_RECORD_LEN: usize = 3073;

pub const CIFAR_LABELS: [&str; 10] = [
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
];

/// Parses one batch file into raw `[0, 255]` RGB rows and labels.
pub fn parse_cifar(bytes: &[u8]) -> Result<(Matrix, Vec<u8>), DataError> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        return Err(DataError::CifarLength {
            len: bytes.len(),
            record: CIFAR_RECORD_LEN,
        });
    }
    let n = bytes.len() / CIFAR_RECORD_LEN;
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * (CIFAR_RECORD_LEN - 1));
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD_LEN).enumerate() {
        if rec[0] > 9 {
            return Err(DataError::CifarLabel {
                record: i,
                label: rec[0],
            });
        }
        labels.push(rec[0]);
        data.extend(rec[1..].iter().map(|&b| f64::from(b)));
    }
    Ok((Matrix::from_vec(n, CIFAR_RECORD_LEN - 1, data), labels))
}

/// Reads and concatenates batch files in the given order.
pub fn load_cifar_binary<P: AsRef<Path>>(paths: &[P]) -> Result<(Matrix, Vec<u8>), DataError> {
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let (m, l) = parse_cifar(&bytes)?;
        data.extend_from_slice(m.as_slice());
        labels.extend(l);
    }
    let n = labels.len();
    Ok((Matrix::from_vec(n, CIFAR_RECORD_LEN - 1, data), labels))
}
