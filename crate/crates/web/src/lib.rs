//! Browser bindings for the lrtnet demo page.
//!
//! Every export takes and returns JSON strings so the page needs no
//! generated type glue beyond wasm-bindgen's own.

use lrtnet::config;
use lrtnet::data::{sample_mixture, Label, LabeledDataset, Provenance};
use lrtnet::eval::{self, EvalReport};
use lrtnet::oracle::{criterion_upper_bound, default_interval, lrt_errors_quadrature, HypothesisPair, LrtErrors};
use lrtnet::rng::{substream, Stream};
use lrtnet::trainer::{CriterionMode, Trainer, TrainerState};
use lrtnet::{NetParams, PhiSpec};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("bad range [{lo}, {hi}]"));
    }
    if !(2..=100_000).contains(&n) {
        return Err(format!("grid size {n} outside 2..=100000"));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn parse_phi(name: &str, rho: f64) -> Result<PhiSpec, String> {
    let rho = rho.is_finite().then_some(rho);
    PhiSpec::from_name(name, rho).map_err(err)
}

fn pair_or_default(pair_json: &str) -> Result<HypothesisPair, String> {
    if pair_json.trim().is_empty() {
        return Ok(config::synthetic_pair());
    }
    let h: HypothesisPair = serde_json::from_str(pair_json).map_err(err)?;
    h.validate().map_err(err)?;
    if h.dim() != 1 {
        return Err("the demo only handles scalar densities".into());
    }
    Ok(h)
}

#[derive(Serialize)]
struct Curves {
    name: &'static str,
    category: String,
    z: Vec<f64>,
    phi: Vec<f64>,
    phi_prime: Vec<f64>,
    omega: Vec<f64>,
    omega_prime: Vec<f64>,
}

/// `φ`, `φ'`, `ω` and `ω'` sampled on `n` points of `[lo, hi]`.
/// A non-finite `rho` selects the loss's default.
#[wasm_bindgen]
pub fn loss_curves(name: &str, rho: f64, lo: f64, hi: f64, n: usize) -> Result<String, String> {
    let phi = parse_phi(name, rho)?;
    let omega = phi.output();
    let z = grid(lo, hi, n)?;
    let c = Curves {
        name: phi.name(),
        category: format!("{:?}", phi.category()),
        phi: z.iter().map(|&v| phi.phi(v)).collect(),
        phi_prime: z.iter().map(|&v| phi.phi_prime(v)).collect(),
        omega: z.iter().map(|&v| omega.omega(v)).collect(),
        omega_prime: z.iter().map(|&v| omega.omega_prime(v)).collect(),
        z,
    };
    serde_json::to_string(&c).map_err(err)
}

#[derive(Serialize)]
struct OracleView {
    x: Vec<f64>,
    /// `p₁f₁(x)`
    weighted1: Vec<f64>,
    /// `p₂f₂(x)`
    weighted2: Vec<f64>,
    errors: LrtErrors,
    criterion_upper_bound: f64,
}

/// Weighted class densities on a grid plus the exact LRT errors of a scalar
/// pair given as `{"p1": .., "f1": [[w, mean, var], ..], "f2": ..}`.
/// An empty string selects the built-in mixture example.
#[wasm_bindgen]
pub fn oracle_view(pair_json: &str, n: usize) -> Result<String, String> {
    let h = pair_or_default(pair_json)?;
    let (lo, hi) = default_interval(&h);
    // plot a narrower window than the integration interval
    let (lo, hi) = (lo.max(-12.0), hi.min(12.0));
    let x = grid(lo, hi, n)?;
    let dens = |f: &lrtnet::oracle::MixtureDensity, w: f64| -> Result<Vec<f64>, String> {
        x.iter().map(|&v| f.density(&[v]).map(|d| w * d).map_err(err)).collect()
    };
    let view = OracleView {
        weighted1: dens(&h.f1, h.p1)?,
        weighted2: dens(&h.f2, h.p2())?,
        errors: lrt_errors_quadrature(&h, None).map_err(err)?,
        criterion_upper_bound: criterion_upper_bound(&h, None).map_err(err)?,
        x,
    };
    serde_json::to_string(&view).map_err(err)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlaygroundOptions {
    pair: Option<HypothesisPair>,
    phi_name: String,
    rho: Option<f64>,
    n_hidden: usize,
    mu: f64,
    lambda: f64,
    n_train_per_class: usize,
    n_test_per_class: usize,
    seed: u64,
}

impl Default for PlaygroundOptions {
    fn default() -> Self {
        Self {
            pair: None,
            phi_name: "cat_a_rational".into(),
            rho: Some(2.0),
            n_hidden: 20,
            mu: 1e-3,
            lambda: 0.99,
            n_train_per_class: 2000,
            n_test_per_class: 5000,
            seed: 8,
        }
    }
}

#[derive(Serialize)]
struct Status {
    iteration: u64,
    report: Report,
}

#[derive(Serialize)]
struct Report {
    err1: f64,
    err2: f64,
    avg: f64,
    j_hat: f64,
}

impl From<&EvalReport> for Report {
    fn from(r: &EvalReport) -> Self {
        Self { err1: r.err1, err2: r.err2, avg: r.avg, j_hat: r.j_hat }
    }
}

#[derive(Serialize)]
struct DecisionCurve {
    x: Vec<f64>,
    /// Network decision statistic; class 1 where it is non-negative.
    decision: Vec<f64>,
    lrt_boundaries: Vec<f64>,
}

/// A scalar synthetic problem trained one tick at a time, where a tick feeds
/// one class-1 and one class-2 sample.
#[wasm_bindgen]
pub struct Playground {
    pair: HypothesisPair,
    lrt: LrtErrors,
    train: LabeledDataset,
    test: LabeledDataset,
    trainer: Trainer,
    state: TrainerState,
    tick: u64,
}

#[wasm_bindgen]
impl Playground {
    /// Options as JSON; every field is optional (see the page for names).
    #[wasm_bindgen(constructor)]
    pub fn new(options_json: &str) -> Result<Playground, String> {
        let o: PlaygroundOptions = if options_json.trim().is_empty() {
            PlaygroundOptions::default()
        } else {
            serde_json::from_str(options_json).map_err(err)?
        };
        let pair = match o.pair {
            Some(p) => pair_or_default(&serde_json::to_string(&p).map_err(err)?)?,
            None => config::synthetic_pair(),
        };
        if o.n_train_per_class == 0 || o.n_test_per_class == 0 {
            return Err("sample counts must be at least 1".into());
        }
        if !(1..=2000).contains(&o.n_hidden) {
            return Err("n_hidden must lie in 1..=2000".into());
        }
        let phi = PhiSpec::from_name(&o.phi_name, o.rho).map_err(err)?;
        let draw = |kind, f, n| sample_mixture(f, n, &mut substream(o.seed, kind, 0));
        let train = LabeledDataset::new(
            draw(Stream::TrainClass1, &pair.f1, o.n_train_per_class),
            draw(Stream::TrainClass2, &pair.f2, o.n_train_per_class),
            Provenance::Synthetic,
        )
        .map_err(err)?;
        let test = LabeledDataset::new(
            draw(Stream::TestClass1, &pair.f1, o.n_test_per_class),
            draw(Stream::TestClass2, &pair.f2, o.n_test_per_class),
            Provenance::Synthetic,
        )
        .map_err(err)?;
        let trainer = Trainer::new(phi.clone(), CriterionMode::for_phi(&phi)).map_err(err)?;
        let init = NetParams::glorot_init(o.n_hidden, 1, o.seed).map_err(err)?;
        let state = TrainerState::new(init, o.mu, o.lambda).map_err(err)?;
        let lrt = lrt_errors_quadrature(&pair, None).map_err(err)?;
        Ok(Playground { pair, lrt, train, test, trainer, state, tick: 0 })
    }

    /// Runs `ticks` ticks and returns the test-set status.
    pub fn step(&mut self, ticks: u32) -> Result<String, String> {
        let (n1, n2) = (self.train.n1() as u64, self.train.n2() as u64);
        for _ in 0..ticks {
            let (i, j) = ((self.tick % n1) as usize, (self.tick % n2) as usize);
            self.trainer
                .sgd_step(&mut self.state, self.train.sample(Label::One, i), Label::One)
                .and_then(|()| {
                    self.trainer
                        .sgd_step(&mut self.state, self.train.sample(Label::Two, j), Label::Two)
                })
                .map_err(err)?;
            self.tick += 1;
        }
        self.status()
    }

    /// Current test-set errors without training.
    pub fn status(&self) -> Result<String, String> {
        let phi = self.trainer.phi();
        let r = eval::evaluate(&self.state.params, phi, self.trainer.mode(), &self.test).map_err(err)?;
        serde_json::to_string(&Status { iteration: self.tick, report: (&r).into() }).map_err(err)
    }

    /// Exact LRT errors of the playground's pair.
    pub fn lrt(&self) -> Result<String, String> {
        serde_json::to_string(&self.lrt).map_err(err)
    }

    /// Pair in the JSON form accepted by [`oracle_view`].
    pub fn pair(&self) -> Result<String, String> {
        serde_json::to_string(&self.pair).map_err(err)
    }

    /// Decision statistic of the current network on `n` points of `[lo, hi]`.
    pub fn decision_curve(&self, lo: f64, hi: f64, n: usize) -> Result<String, String> {
        let omega = self.trainer.phi().output();
        let x = grid(lo, hi, n)?;
        let decision = x.iter().map(|&v| omega.decision(self.state.params.pre_output(&[v]))).collect();
        serde_json::to_string(&DecisionCurve { x, decision, lrt_boundaries: self.lrt.boundaries.clone() })
            .map_err(err)
    }

    pub fn iteration(&self) -> u64 {
        self.tick
    }
}
