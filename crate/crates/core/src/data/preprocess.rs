use serde::{Deserialize, Serialize};

use super::{DataError, LabeledDataset, Matrix, Provenance};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
const PLANE: usize = 1024;

/// Converts raw `[0, 255]` CIFAR RGB rows (planar R, G, B) to luma in
/// `[0, 1]`.
pub fn to_grayscale(rgb: &Matrix) -> Result<Matrix, DataError> {
    if rgb.cols() != 3 * PLANE {
        return Err(DataError::Width {
            expected: 3 * PLANE,
            actual: rgb.cols(),
        });
    }
    let mut out = Matrix::zeros(rgb.rows(), PLANE);
    for i in 0..rgb.rows() {
        let src = rgb.row(i);
        let (r, rest) = src.split_at(PLANE);
        let (g, b) = rest.split_at(PLANE);
        for (j, px) in out.row_mut(i).iter_mut().enumerate() {
            *px = LUMA[0] * (r[j] / 255.0) + LUMA[1] * (g[j] / 255.0) + LUMA[2] * (b[j] / 255.0);
        }
    }
    Ok(out)
}

/// Per-coordinate z-scoring with statistics taken from training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub const STD_FLOOR: f64 = 1e-8;

    /// Population mean and standard deviation of every column.
    pub fn fit(training: &Matrix) -> Self {
        let (n, k) = (training.rows(), training.cols());
        let mut mean = vec![0.0; k];
        for row in training.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let inv = 1.0 / n.max(1) as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut var = vec![0.0; k];
        for row in training.iter_rows() {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| (s * inv).sqrt().max(Self::STD_FLOOR))
            .collect();
        Self { mean, std }
    }

    /// Fits on the union of both training classes.
    pub fn fit_dataset(training: &LabeledDataset) -> Self {
        let mut rows: Vec<Vec<f64>> = training.class1().iter_rows().map(<[f64]>::to_vec).collect();
        rows.extend(training.class2().iter_rows().map(<[f64]>::to_vec));
        Self::fit(&Matrix::from_rows(&rows))
    }

    pub fn apply(&self, data: &Matrix) -> Matrix {
        let mut out = data.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn apply_dataset(&self, data: LabeledDataset) -> crate::Result<LabeledDataset> {
        data.map_classes(|m| self.apply(&m))
    }
}

/// Splits a labelled corpus into a two-class dataset, keeping corpus order
/// and at most `cap` samples per class.
pub fn filter_binary(
    data: &Matrix,
    labels: &[u8],
    class_a: u8,
    class_b: u8,
    cap: Option<usize>,
    provenance: Provenance,
) -> crate::Result<LabeledDataset> {
    if class_a == class_b {
        return Err(DataError::SameClass(class_a).into());
    }
    if data.rows() != labels.len() {
        return Err(DataError::CountMismatch {
            images: data.rows(),
            labels: labels.len(),
        }
        .into());
    }
    let cap = cap.unwrap_or(usize::MAX);
    let pick = |c: u8| -> Vec<usize> {
        labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == c)
            .map(|(i, _)| i)
            .take(cap)
            .collect()
    };
    let (ia, ib) = (pick(class_a), pick(class_b));
    if ia.is_empty() {
        return Err(DataError::MissingClass(class_a).into());
    }
    if ib.is_empty() {
        return Err(DataError::MissingClass(class_b).into());
    }
    LabeledDataset::new(data.select_rows(&ia), data.select_rows(&ib), provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: f64, g: f64, b: f64) -> Matrix {
        let mut row = vec![r; PLANE];
        row.extend(std::iter::repeat_n(g, PLANE));
        row.extend(std::iter::repeat_n(b, PLANE));
        Matrix::from_rows(&[row])
    }

    #[test]
    fn grayscale_examples() {
        let g = to_grayscale(&rgb(0.0, 0.0, 0.0)).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        let g = to_grayscale(&rgb(255.0, 0.0, 0.0)).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.299));
        for c in [1.0, 77.0, 128.0, 255.0] {
            let g = to_grayscale(&rgb(c, c, c)).unwrap();
            assert!(g.as_slice().iter().all(|&v| (v - c / 255.0).abs() < 1e-15));
        }
        assert!(to_grayscale(&Matrix::zeros(1, 1024)).is_err());
    }

    #[test]
    fn standardizer_examples() {
        let train = Matrix::from_rows(&[vec![0.0, 5.0], vec![2.0, 5.0]]);
        let s = Standardizer::fit(&train);
        assert_eq!(s.mean, vec![1.0, 5.0]);
        assert_eq!(s.std, vec![1.0, Standardizer::STD_FLOOR]);
        let t = s.apply(&train);
        assert_eq!(t.as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
        // test data uses training statistics
        let test = s.apply(&Matrix::from_rows(&[vec![4.0, 5.0]]));
        assert_eq!(test.as_slice(), &[3.0, 0.0]);
    }

    #[test]
    fn standardized_training_has_unit_moments() {
        let rows: Vec<Vec<f64>> = (0..500)
            .map(|i| {
                let x = i as f64;
                vec![(x * 0.37).sin() * 40.0 + 100.0, x * x * 1e-3, 3.0]
            })
            .collect();
        let m = Matrix::from_rows(&rows);
        let t = Standardizer::fit(&m).apply(&m);
        for j in 0..2 {
            let col: Vec<f64> = t.iter_rows().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(mean.abs() < 1e-8);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn filter_examples() {
        let m = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let d = filter_binary(&m, &[4, 9, 4], 4, 9, None, Provenance::Mnist).unwrap();
        assert_eq!((d.n1(), d.n2()), (2, 1));
        assert_eq!(d.class1().as_slice(), &[1.0, 3.0]);
        let d = filter_binary(&m, &[4, 9, 4], 4, 9, Some(1), Provenance::Mnist).unwrap();
        assert_eq!(d.class1().as_slice(), &[1.0]);
        assert!(filter_binary(&m, &[4, 9, 4], 4, 4, None, Provenance::Mnist).is_err());
        assert!(matches!(
            filter_binary(&m, &[4, 9, 4], 4, 7, None, Provenance::Mnist),
            Err(crate::Error::Data(DataError::MissingClass(7)))
        ));
    }
}
