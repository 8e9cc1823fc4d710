//! JSON run configuration and the named presets.
//!
//! A config names the experiment and its dataset, the loss, the network size
//! and the optimiser settings:
//!
//! ```json
//! {
//!   "experiment": "synthetic",
//!   "dataset": {
//!     "pair": {"p1": 0.5, "f1": [[1, 0, 1]], "f2": [[0.6, 1, 1], [0.4, -3, 1]]},
//!     "n_train_per_class": 5000,
//!     "n_test_per_class": 100000
//!   },
//!   "phi_name": "cat_a_rational", "rho": 2,
//!   "criterion": "difference_max",
//!   "n_hidden": 100, "mu": 1e-4, "lambda": 0.99,
//!   "iterations": 5000, "mode": "sgd", "sampling_policy": "alternating_pairs",
//!   "eval_every": 50, "seed": 8
//! }
//! ```
//!
//! When loaded together with a preset, the file only needs the fields that
//! differ: objects are merged key by key over the preset.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::CIFAR_LABELS;
use crate::error::{Error, Result};
use crate::loss::PhiSpec;
use crate::oracle::{HypothesisPair, MixtureDensity};
use crate::trainer::{CriterionMode, SamplingPolicy, TrainMode, TrainRun};

/// Environment variable holding the root directory of the real datasets.
/// MNIST is looked up in `$LRTNET_DATA_DIR/mnist`, CIFAR-10 in
/// `$LRTNET_DATA_DIR/cifar-10-batches-bin`.
pub const DATA_DIR_ENV: &str = "LRTNET_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "dataset", rename_all = "snake_case")]
pub enum DatasetConfig {
    Synthetic(SyntheticConfig),
    Mnist(MnistConfig),
    Cifar(CifarConfig),
    Custom(CustomConfig),
}

impl DatasetConfig {
    pub fn experiment(&self) -> &'static str {
        match self {
            DatasetConfig::Synthetic(_) => "synthetic",
            DatasetConfig::Mnist(_) => "mnist",
            DatasetConfig::Cifar(_) => "cifar",
            DatasetConfig::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub pair: HypothesisPair,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistConfig {
    /// Directory with the four IDX files; defaults to `$LRTNET_DATA_DIR/mnist`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub class1_digit: u8,
    pub class2_digit: u8,
    /// Training samples kept per class, first occurrences in corpus order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_cap_per_class: Option<usize>,
    /// Pixels are divided by this before training.
    pub pixel_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CifarConfig {
    /// Directory with `data_batch_{1..5}.bin` and `test_batch.bin`; defaults
    /// to `$LRTNET_DATA_DIR/cifar-10-batches-bin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub class1: String,
    pub class2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_cap_per_class: Option<usize>,
}

/// Two JSON files of the form `{"class1": [[...], ...], "class2": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub evolution_csv: String,
    pub report_json: String,
    pub params: String,
    /// Written for synthetic runs only.
    pub lrt_json: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            evolution_csv: "evolution.csv".into(),
            report_json: "report.json".into(),
            params: "params.bin".into(),
            lrt_json: "lrt.json".into(),
        }
    }
}

fn default_eval_every() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub data: DatasetConfig,
    pub phi_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub criterion: CriterionMode,
    pub n_hidden: usize,
    pub mu: f64,
    pub lambda: f64,
    pub iterations: u64,
    pub mode: TrainMode,
    pub sampling_policy: SamplingPolicy,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    pub seed: u64,
    /// Artifact file names, relative to the output directory.
    #[serde(default)]
    pub outputs: OutputConfig,
}

impl RunConfig {
    pub fn phi(&self) -> Result<PhiSpec> {
        PhiSpec::from_name(&self.phi_name, self.rho)
    }

    /// All structural and range problems, each prefixed with the field name.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        match self.phi() {
            Ok(phi) => {
                if !self.criterion.accepts(&phi) {
                    v.push(format!(
                        "criterion: {:?} cannot be paired with phi_name `{}` ({:?})",
                        self.criterion,
                        self.phi_name,
                        phi.category()
                    ));
                }
            }
            Err(Error::InvalidParameter { name, reason }) => v.push(format!("{name}: {reason}")),
            Err(e) => v.push(format!("phi_name: {e}")),
        }
        if self.n_hidden < 1 {
            v.push("n_hidden: must be at least 1".into());
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            v.push(format!("mu: must be positive, got {}", self.mu));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            v.push(format!("lambda: must lie in (0, 1), got {}", self.lambda));
        }
        if self.iterations < 1 {
            v.push("iterations: must be at least 1".into());
        }
        if self.eval_every < 1 {
            v.push("eval_every: must be at least 1".into());
        }
        for (field, name) in [
            ("outputs.evolution_csv", &self.outputs.evolution_csv),
            ("outputs.report_json", &self.outputs.report_json),
            ("outputs.params", &self.outputs.params),
            ("outputs.lrt_json", &self.outputs.lrt_json),
        ] {
            if name.is_empty() {
                v.push(format!("{field}: must not be empty"));
            }
        }
        match &self.data {
            DatasetConfig::Synthetic(s) => {
                if let Err(e) = s.pair.validate() {
                    v.push(format!("dataset.pair: {e}"));
                }
                if s.n_train_per_class < 1 {
                    v.push("dataset.n_train_per_class: must be at least 1".into());
                }
                if s.n_test_per_class < 1 {
                    v.push("dataset.n_test_per_class: must be at least 1".into());
                }
            }
            DatasetConfig::Mnist(m) => {
                for (f, d) in [("class1_digit", m.class1_digit), ("class2_digit", m.class2_digit)] {
                    if d > 9 {
                        v.push(format!("dataset.{f}: must be a digit 0-9, got {d}"));
                    }
                }
                if m.class1_digit == m.class2_digit {
                    v.push("dataset.class2_digit: must differ from class1_digit".into());
                }
                if m.train_cap_per_class == Some(0) {
                    v.push("dataset.train_cap_per_class: must be at least 1".into());
                }
                if !(m.pixel_scale > 0.0 && m.pixel_scale.is_finite()) {
                    v.push(format!("dataset.pixel_scale: must be positive, got {}", m.pixel_scale));
                }
            }
            DatasetConfig::Cifar(c) => {
                for (f, name) in [("class1", &c.class1), ("class2", &c.class2)] {
                    if cifar_label(name).is_none() {
                        v.push(format!("dataset.{f}: unknown category `{name}`, expected one of {CIFAR_LABELS:?}"));
                    }
                }
                if c.class1 == c.class2 {
                    v.push("dataset.class2: must differ from class1".into());
                }
                if c.train_cap_per_class == Some(0) {
                    v.push("dataset.train_cap_per_class: must be at least 1".into());
                }
            }
            DatasetConfig::Custom(c) => {
                if c.train.as_os_str().is_empty() {
                    v.push("dataset.train: must not be empty".into());
                }
                if c.test.as_os_str().is_empty() {
                    v.push("dataset.test: must not be empty".into());
                }
            }
        }
        v
    }

    /// Training settings; `self` must validate.
    pub fn train_run(&self) -> Result<TrainRun> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }
        Ok(TrainRun {
            mode: self.mode,
            criterion: self.criterion,
            phi: self.phi()?,
            n_hidden: self.n_hidden,
            mu: self.mu,
            lambda: self.lambda,
            iterations: self.iterations,
            sampling_policy: self.sampling_policy,
            eval_every: self.eval_every,
            seed: self.seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

pub(crate) fn cifar_label(name: &str) -> Option<u8> {
    CIFAR_LABELS.iter().position(|&l| l == name).map(|i| i as u8)
}

pub const PRESET_NAMES: [&str; 7] = [
    "synthetic-cat-a",
    "synthetic-cat-b",
    "synthetic-hinge",
    "mnist-4v9-cat-a",
    "mnist-4v9-hinge",
    "cifar-cat-b",
    "cifar-hinge",
];

/// `f₁ = N(0,1)` against `f₂ = 0.6·N(1,1) + 0.4·N(-3,1)`, equal priors.
pub fn synthetic_pair() -> HypothesisPair {
    HypothesisPair::new(
        0.5,
        MixtureDensity::standard_normal(),
        MixtureDensity::scalar(&[(0.6, 1.0, 1.0), (0.4, -3.0, 1.0)]).expect("valid mixture"),
    )
    .expect("valid pair")
}

fn with_loss(phi: &str) -> (String, Option<f64>, CriterionMode) {
    match phi {
        "cat_a" => ("cat_a_rational".into(), Some(2.0), CriterionMode::DifferenceMax),
        "cat_b" => ("cat_b_identity".into(), None, CriterionMode::DifferenceMax),
        _ => ("hinge".into(), None, CriterionMode::SumMin),
    }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let (data, loss, n_hidden, mu, iterations, sampling_policy, eval_every, seed) = match name {
        "synthetic-cat-a" | "synthetic-cat-b" | "synthetic-hinge" => (
            DatasetConfig::Synthetic(SyntheticConfig {
                pair: synthetic_pair(),
                n_train_per_class: 5000,
                n_test_per_class: 100_000,
            }),
            &name["synthetic-".len()..],
            100,
            1e-4,
            5000,
            SamplingPolicy::AlternatingPairs,
            50,
            8,
        ),
        "mnist-4v9-cat-a" | "mnist-4v9-hinge" => (
            DatasetConfig::Mnist(MnistConfig {
                dir: None,
                class1_digit: 4,
                class2_digit: 9,
                train_cap_per_class: Some(5500),
                pixel_scale: 255.0,
            }),
            &name["mnist-4v9-".len()..],
            300,
            1e-4,
            500_000,
            SamplingPolicy::Permuted,
            1000,
            1,
        ),
        "cifar-cat-b" | "cifar-hinge" => (
            DatasetConfig::Cifar(CifarConfig {
                dir: None,
                class1: "automobile".into(),
                class2: "airplane".into(),
                train_cap_per_class: None,
            }),
            &name["cifar-".len()..],
            100,
            if name == "cifar-cat-b" { 2e-5 } else { 1e-5 },
            200_000,
            SamplingPolicy::Permuted,
            1000,
            1,
        ),
        _ => return None,
    };
    let loss = loss.replace('-', "_");
    let (phi_name, rho, criterion) = with_loss(&loss);
    Some(RunConfig {
        data,
        phi_name,
        rho,
        criterion,
        n_hidden,
        mu,
        lambda: 0.99,
        iterations,
        mode: TrainMode::Sgd,
        sampling_policy,
        eval_every,
        seed,
        outputs: OutputConfig::default(),
    })
}

/// The presets `--compare` runs together with `name`, sharing its dataset
/// and seed: the three synthetic variants, or both real-data variants.
pub fn compare_group(name: &str) -> Option<&'static [&'static str]> {
    const SYN: &[&str] = &["synthetic-cat-a", "synthetic-cat-b", "synthetic-hinge"];
    const MNIST: &[&str] = &["mnist-4v9-cat-a", "mnist-4v9-hinge"];
    const CIFAR: &[&str] = &["cifar-cat-b", "cifar-hinge"];
    [SYN, MNIST, CIFAR].into_iter().find(|g| g.contains(&name))
}

/// Recursively overlays `patch` onto `base`. Objects merge key by key;
/// anything else in `patch` replaces the base value.
pub fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

/// Parses a config from JSON text, optionally layered over a preset.
pub fn parse_config(text: &str, preset_name: Option<&str>) -> Result<RunConfig> {
    let patch: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(vec![format!("invalid JSON: {e}")]))?;
    let value = match preset_name {
        Some(name) => {
            let base = preset(name).ok_or_else(|| {
                Error::Config(vec![format!("preset: unknown preset `{name}`, expected one of {PRESET_NAMES:?}")])
            })?;
            let mut value = serde_json::to_value(base).expect("config serialises");
            merge_json(&mut value, patch);
            value
        }
        None => patch,
    };
    serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))
}

pub fn load_config(path: &Path, preset_name: Option<&str>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, preset_name).map_err(|e| match e {
        Error::Config(v) => Error::Config(
            v.into_iter()
                .map(|m| format!("{}: {m}", path.display()))
                .collect(),
        ),
        other => other,
    })
}
