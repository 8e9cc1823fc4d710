//! Run orchestration: dataset construction, training, evaluation and the
//! artifacts written to an output directory.
//!
//! A run directory holds
//!
//! - `evolution.csv`: test-set snapshots during training,
//! - `report.json`: final test-set report with misclassified indices,
//! - `params.bin`: the trained network,
//! - `lrt.json`: the LRT errors and criterion bound (synthetic runs only),
//! - `config.json`: the resolved configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{cifar_label, DatasetConfig, RunConfig, DATA_DIR_ENV};
use crate::data::{
    filter_binary, load_cifar_binary, load_idx, sample_mixture, to_grayscale, DataError,
    LabeledDataset, Matrix, Provenance, Standardizer,
};
use crate::error::{Error, Result};
use crate::eval::{self, export_evolution_csv, export_report_json, EvalReport, EvolutionLog};
use crate::network::NetParams;
use crate::oracle::{criterion_upper_bound, lrt_errors_quadrature, LrtErrors};
use crate::rng::{substream, Stream};
use crate::trainer::{train_from, TrainerState};

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// LRT reference for a synthetic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtReference {
    #[serde(flatten)]
    pub errors: LrtErrors,
    pub criterion_upper_bound: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: TrainerState,
    pub log: EvolutionLog,
    pub report: EvalReport,
    pub lrt: Option<LrtReference>,
}

fn data_dir(explicit: &Option<PathBuf>, sub: &str) -> Result<PathBuf> {
    if let Some(d) = explicit {
        return Ok(d.clone());
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(root) if !root.is_empty() => Ok(PathBuf::from(root).join(sub)),
        _ => Err(DataError::NoDataDir { env: DATA_DIR_ENV }.into()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFile {
    class1: Vec<Vec<f64>>,
    class2: Vec<Vec<f64>>,
}

fn load_custom(path: &Path) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |reason: String| DataError::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let f: CustomFile = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let matrix = |rows: &[Vec<f64>]| -> Result<Matrix> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(malformed(format!("ragged rows: {} and {} values", k, r.len())).into());
        }
        Ok(Matrix::from_rows(rows))
    };
    LabeledDataset::new(matrix(&f.class1)?, matrix(&f.class2)?, Provenance::Custom)
}

/// Builds the training and test sets of a run. Synthetic samples come from
/// the run seed's train/test substreams, so runs sharing a seed share data.
pub fn load_data(cfg: &RunConfig) -> Result<PreparedData> {
    match &cfg.data {
        DatasetConfig::Synthetic(s) => {
            let draw = |kind, f, n| sample_mixture(f, n, &mut substream(cfg.seed, kind, 0));
            let train = LabeledDataset::new(
                draw(Stream::TrainClass1, &s.pair.f1, s.n_train_per_class),
                draw(Stream::TrainClass2, &s.pair.f2, s.n_train_per_class),
                Provenance::Synthetic,
            )?;
            let test = LabeledDataset::new(
                draw(Stream::TestClass1, &s.pair.f1, s.n_test_per_class),
                draw(Stream::TestClass2, &s.pair.f2, s.n_test_per_class),
                Provenance::Synthetic,
            )?;
            Ok(PreparedData { train, test })
        }
        DatasetConfig::Mnist(m) => {
            let dir = data_dir(&m.dir, "mnist")?;
            let (train_x, train_y) = load_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
            )?;
            let (test_x, test_y) = load_idx(
                &dir.join("t10k-images-idx3-ubyte"),
                &dir.join("t10k-labels-idx1-ubyte"),
            )?;
            let (a, b) = (m.class1_digit, m.class2_digit);
            let mut train = filter_binary(&train_x, &train_y, a, b, m.train_cap_per_class, Provenance::Mnist)?;
            let mut test = filter_binary(&test_x, &test_y, a, b, None, Provenance::Mnist)?;
            // the reader yields byte / 255
            if m.pixel_scale != 255.0 {
                let f = 255.0 / m.pixel_scale;
                let rescale = |mtx: Matrix| {
                    let v = mtx.as_slice().iter().map(|x| x * f).collect();
                    Matrix::from_vec(mtx.rows(), mtx.cols(), v)
                };
                train = train.map_classes(rescale)?;
                test = test.map_classes(rescale)?;
            }
            Ok(PreparedData { train, test })
        }
        DatasetConfig::Cifar(c) => {
            let dir = data_dir(&c.dir, "cifar-10-batches-bin")?;
            let train_files: Vec<PathBuf> =
                (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect();
            let (train_rgb, train_y) = load_cifar_binary(&train_files)?;
            let (test_rgb, test_y) = load_cifar_binary(&[dir.join("test_batch.bin")])?;
            let a = cifar_label(&c.class1).ok_or_else(|| Error::Config(vec![format!("dataset.class1: unknown category `{}`", c.class1)]))?;
            let b = cifar_label(&c.class2).ok_or_else(|| Error::Config(vec![format!("dataset.class2: unknown category `{}`", c.class2)]))?;
            let train = filter_binary(&to_grayscale(&train_rgb)?, &train_y, a, b, c.train_cap_per_class, Provenance::Cifar)?;
            let test = filter_binary(&to_grayscale(&test_rgb)?, &test_y, a, b, None, Provenance::Cifar)?;
            let s = Standardizer::fit_dataset(&train);
            Ok(PreparedData {
                train: s.apply_dataset(train)?,
                test: s.apply_dataset(test)?,
            })
        }
        DatasetConfig::Custom(c) => Ok(PreparedData {
            train: load_custom(&c.train)?,
            test: load_custom(&c.test)?,
        }),
    }
}

/// The LRT reference of a synthetic config, `None` otherwise.
pub fn lrt_reference(cfg: &RunConfig) -> Result<Option<LrtReference>> {
    match &cfg.data {
        DatasetConfig::Synthetic(s) if s.pair.dim() == 1 => Ok(Some(LrtReference {
            errors: lrt_errors_quadrature(&s.pair, None)?,
            criterion_upper_bound: criterion_upper_bound(&s.pair, None)?,
        })),
        _ => Ok(None),
    }
}

/// Initial network of a run: Glorot from the run seed.
pub fn initial_params(cfg: &RunConfig, data: &PreparedData) -> Result<NetParams> {
    NetParams::glorot_init(cfg.n_hidden, data.train.k(), cfg.seed)
}

/// Trains on prepared data from `init` and evaluates the final network on
/// the test set. Nothing is written.
pub fn run_prepared(cfg: &RunConfig, data: &PreparedData, init: NetParams) -> Result<RunOutcome> {
    let run = cfg.train_run()?;
    let (state, log) = train_from(&run, init, &data.train, &data.test)?;
    let report = eval::evaluate(&state.params, &run.phi, run.criterion, &data.test)?;
    Ok(RunOutcome {
        state,
        log,
        report,
        lrt: lrt_reference(cfg)?,
    })
}

/// Validates, loads data, trains and, when `out_dir` is given, writes the
/// run artifacts there.
pub fn run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let data = load_data(cfg)?;
    log::info!(
        "data: train {}+{}, test {}+{}, k = {}",
        data.train.n1(),
        data.train.n2(),
        data.test.n1(),
        data.test.n2(),
        data.train.k()
    );
    let init = initial_params(cfg, &data)?;
    let outcome = run_prepared(cfg, &data, init)?;
    if let Some(dir) = out_dir {
        write_artifacts(cfg, &outcome, dir)?;
    }
    Ok(outcome)
}

/// Runs several configs from the same data and the same initial network.
/// The data and initialisation come from the first config; all configs
/// must agree on dataset, seed and network size.
pub fn run_compare(
    configs: &[(String, RunConfig)],
    out_dir: Option<&Path>,
) -> Result<Vec<(String, RunOutcome)>> {
    let Some((_, first)) = configs.first() else {
        return Ok(Vec::new());
    };
    let mut violations = Vec::new();
    for (name, c) in configs {
        violations.extend(c.validate().into_iter().map(|v| format!("{name}: {v}")));
        if c.data != first.data || c.seed != first.seed || c.n_hidden != first.n_hidden {
            violations.push(format!(
                "{name}: compared runs must share dataset, seed and n_hidden"
            ));
        }
    }
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let data = load_data(first)?;
    let init = initial_params(first, &data)?;
    let results: Vec<Result<RunOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(_, c)| {
                let (data, init) = (&data, init.clone());
                s.spawn(move || run_prepared(c, data, init))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(configs.len());
    for ((name, cfg), r) in configs.iter().zip(results) {
        let outcome = r?;
        if let Some(dir) = out_dir {
            write_artifacts(cfg, &outcome, &dir.join(name))?;
        }
        out.push((name.clone(), outcome));
    }
    Ok(out)
}

pub fn write_artifacts(cfg: &RunConfig, outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let o = &cfg.outputs;
    export_evolution_csv(&outcome.log, &dir.join(&o.evolution_csv))?;
    export_report_json(&outcome.report, &dir.join(&o.report_json))?;
    outcome.state.params.save(&dir.join(&o.params))?;
    if let Some(lrt) = &outcome.lrt {
        eval::write_json(lrt, &dir.join(&o.lrt_json))?;
    }
    eval::write_json(cfg, &dir.join("config.json"))
}
