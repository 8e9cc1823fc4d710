//! Empirical error probabilities and criterion values, evolution logs and
//! their export.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Matrix};
use crate::error::{Error, Result};
use crate::loss::{OutputNonlinearity, PhiSpec};
use crate::network::NetParams;
use crate::trainer::CriterionMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Fraction of class-1 samples with `D < 0`.
    pub err1: f64,
    /// Fraction of class-2 samples with `D ≥ 0`.
    pub err2: f64,
    /// `(err1 + err2) / 2`
    pub avg: f64,
    /// Misclassified samples over all samples.
    pub pooled: f64,
    pub j_hat: f64,
    pub n1: usize,
    pub n2: usize,
    /// Indices (within each class) of misclassified samples, ascending.
    pub misclassified_indices: [Vec<usize>; 2],
}

/// Pre-output `z` for every row, in row order.
fn pre_outputs(params: &NetParams, m: &Matrix) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m.rows())
            .into_par_iter()
            .with_min_len(256)
            .map(|i| params.pre_output(m.row(i)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        m.iter_rows().map(|x| params.pre_output(x)).collect()
    }
}

fn check_shapes(params: &NetParams, data: &LabeledDataset) -> Result<()> {
    if params.input_dim() != data.k() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            actual: data.k(),
        });
    }
    Ok(())
}

/// Criterion summand of one sample. Class-2 terms carry their sign, so the
/// empirical criterion is the plain mean of these over the merged set.
pub fn criterion_term(omega: &OutputNonlinearity, mode: CriterionMode, sign: f64, z: f64) -> f64 {
    match mode {
        CriterionMode::DifferenceMax => sign * omega.omega(z),
        CriterionMode::SumMin => omega.phi().phi(sign * omega.decision(z)),
    }
}

fn report_from(
    omega: &OutputNonlinearity,
    mode: CriterionMode,
    z1: &[f64],
    z2: &[f64],
) -> EvalReport {
    let wrong1: Vec<usize> = z1
        .iter()
        .enumerate()
        .filter(|(_, &z)| omega.decision(z) < 0.0)
        .map(|(i, _)| i)
        .collect();
    let wrong2: Vec<usize> = z2
        .iter()
        .enumerate()
        .filter(|(_, &z)| omega.decision(z) >= 0.0)
        .map(|(i, _)| i)
        .collect();
    let (n1, n2) = (z1.len(), z2.len());
    let err1 = wrong1.len() as f64 / n1 as f64;
    let err2 = wrong2.len() as f64 / n2 as f64;
    let total = z1.iter().map(|&z| criterion_term(omega, mode, 1.0, z)).sum::<f64>()
        + z2.iter().map(|&z| criterion_term(omega, mode, -1.0, z)).sum::<f64>();
    EvalReport {
        err1,
        err2,
        avg: 0.5 * (err1 + err2),
        pooled: (wrong1.len() + wrong2.len()) as f64 / (n1 + n2) as f64,
        j_hat: total / (n1 + n2) as f64,
        n1,
        n2,
        misclassified_indices: [wrong1, wrong2],
    }
}

/// Classifies every sample of `data` and counts errors. Class 1 errs when
/// `D < 0`, class 2 when `D ≥ 0`. `j_hat` is the empirical criterion of the
/// mode implied by `omega`'s category.
pub fn empirical_perr(
    params: &NetParams,
    omega: &OutputNonlinearity,
    data: &LabeledDataset,
) -> Result<EvalReport> {
    check_shapes(params, data)?;
    let z1 = pre_outputs(params, data.class1());
    let z2 = pre_outputs(params, data.class2());
    Ok(report_from(omega, CriterionMode::for_phi(omega.phi()), &z1, &z2))
}

/// Empirical criterion on `data`:
///
/// - difference: `(Σ φ(D(X¹)) - Σ φ(D(X²))) / (N₁ + N₂)`
/// - sum: `(Σ φ(D(X¹)) + Σ φ(-D(X²))) / (N₁ + N₂)`
pub fn empirical_j(
    params: &NetParams,
    phi: &PhiSpec,
    data: &LabeledDataset,
    mode: CriterionMode,
) -> Result<f64> {
    check_shapes(params, data)?;
    let omega = phi.output();
    let z1 = pre_outputs(params, data.class1());
    let z2 = pre_outputs(params, data.class2());
    let total = z1.iter().map(|&z| criterion_term(&omega, mode, 1.0, z)).sum::<f64>()
        + z2.iter().map(|&z| criterion_term(&omega, mode, -1.0, z)).sum::<f64>();
    Ok(total / (data.n1() + data.n2()) as f64)
}

/// Report and criterion in one pass, for an explicit mode.
pub fn evaluate(
    params: &NetParams,
    phi: &PhiSpec,
    mode: CriterionMode,
    data: &LabeledDataset,
) -> Result<EvalReport> {
    check_shapes(params, data)?;
    let omega = phi.output();
    let z1 = pre_outputs(params, data.class1());
    let z2 = pre_outputs(params, data.class2());
    Ok(report_from(&omega, mode, &z1, &z2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: u64,
    pub err1: f64,
    pub err2: f64,
    pub avg: f64,
    pub j_hat: f64,
}

impl Snapshot {
    pub fn from_report(iteration: u64, r: &EvalReport) -> Self {
        Self {
            iteration,
            err1: r.err1,
            err2: r.err2,
            avg: r.avg,
            j_hat: r.j_hat,
        }
    }
}

/// Evaluation snapshots taken during training, by increasing iteration.
///
/// The first snapshots of a run reflect the warm-up of the power estimates:
/// they start at zero, so the first update of every parameter is a sign step
/// of size `μ/√(1-λ)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionLog {
    snapshots: Vec<Snapshot>,
}

impl EvolutionLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics if `s.iteration` does not exceed the last recorded iteration.
    pub fn push(&mut self, s: Snapshot) {
        if let Some(last) = self.snapshots.last() {
            assert!(s.iteration > last.iteration, "iterations must increase");
        }
        self.snapshots.push(s);
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,err1,err2,avg,j_hat")?;
        for s in &self.snapshots {
            writeln!(w, "{},{},{},{},{}", s.iteration, s.err1, s.err2, s.avg, s.j_hat)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii")
    }
}

pub fn export_evolution_csv(log: &EvolutionLog, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    log.write_csv(std::io::BufWriter::new(file))
        .map_err(|e| Error::io(path, e))
}

pub fn export_report_json(report: &EvalReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}
