//! Datasets: containers, file readers, preprocessing and sample streams.

mod cifar;
mod idx;
mod preprocess;
mod stream;
mod synthetic;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cifar::{load_cifar_binary, parse_cifar, CIFAR_LABELS, CIFAR_RECORD_LEN};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use preprocess::{filter_binary, to_grayscale, Standardizer};
pub use stream::{PairStream, PermutedStream};
pub use synthetic::sample_mixture;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{what}: wrong magic number {found:#010x}, expected {expected:#010x}")]
    WrongMagic {
        what: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{what}: truncated, need {expected} bytes but only {actual} available")]
    Truncated {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("CIFAR file length {len} is not a multiple of {record}")]
    CifarLength { len: usize, record: usize },

    #[error("CIFAR record {record}: label byte {label} out of range 0..=9")]
    CifarLabel { record: usize, label: u8 },

    #[error("class label {0} not present in the corpus")]
    MissingClass(u8),

    #[error("the two classes must differ, got {0} twice")]
    SameClass(u8),

    #[error("expected width {expected}, got {actual}")]
    Width { expected: usize, actual: usize },

    #[error("no dataset directory given and ${env} is not set")]
    NoDataDir { env: &'static str },

    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Row-major matrix of samples, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact would yield nothing for zero-width matrices
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    One,
    Two,
}

impl Label {
    /// `+1` for class 1, `-1` for class 2.
    pub fn sign(self) -> f64 {
        match self {
            Label::One => 1.0,
            Label::Two => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::One => 0,
            Label::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Synthetic,
    Mnist,
    Cifar,
    Custom,
}

/// Two classes of samples with a shared input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    class1: Matrix,
    class2: Matrix,
    provenance: Provenance,
}

impl LabeledDataset {
    pub fn new(class1: Matrix, class2: Matrix, provenance: Provenance) -> crate::Result<Self> {
        if class1.rows() == 0 {
            return Err(crate::Error::EmptyClass(1));
        }
        if class2.rows() == 0 {
            return Err(crate::Error::EmptyClass(2));
        }
        if class1.cols() != class2.cols() {
            return Err(crate::Error::DimensionMismatch {
                expected: class1.cols(),
                actual: class2.cols(),
            });
        }
        if class1.cols() == 0 {
            return Err(crate::Error::invalid("k", "input dimension must be at least 1"));
        }
        if !class1.as_slice().iter().chain(class2.as_slice()).all(|v| v.is_finite()) {
            return Err(crate::Error::invalid("data", "non-finite sample value"));
        }
        Ok(Self {
            class1,
            class2,
            provenance,
        })
    }

    pub fn class(&self, label: Label) -> &Matrix {
        match label {
            Label::One => &self.class1,
            Label::Two => &self.class2,
        }
    }

    pub fn class1(&self) -> &Matrix {
        &self.class1
    }

    pub fn class2(&self) -> &Matrix {
        &self.class2
    }

    pub fn n1(&self) -> usize {
        self.class1.rows()
    }

    pub fn n2(&self) -> usize {
        self.class2.rows()
    }

    pub fn k(&self) -> usize {
        self.class1.cols()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn sample(&self, label: Label, i: usize) -> &[f64] {
        self.class(label).row(i)
    }

    pub(crate) fn map_classes(self, mut f: impl FnMut(Matrix) -> Matrix) -> crate::Result<Self> {
        let provenance = self.provenance;
        Self::new(f(self.class1), f(self.class2), provenance)
    }
}
