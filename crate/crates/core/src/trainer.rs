//! RMS-normalised gradient training.
//!
//! Both the batch and the stochastic variants keep an exponentially weighted
//! power estimate `P` of every gradient element and move each parameter by
//! `μ·g / √P`:
//!
//! ```text
//! P ← λP + (1-λ)·g²        θ ← θ ± μ·g ⊘ (√P + ε)
//! ```
//!
//! The difference criterion is maximised with `g = ∇ω(z)` signed by the
//! sample's class (batch: class-1 sum minus class-2 sum). The sum criterion
//! `Σ φ(D(X¹)) + Σ φ(-D(X²))` used by the Hinge baseline is minimised with
//! the same plumbing.
//!
//! Powers start at zero and are not bias corrected, so the first update of
//! every element with a non-zero gradient is a sign step of size
//! `μ/√(1-λ)`.

use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledDataset, PairStream, PermutedStream};
use crate::error::{Error, Result};
use crate::eval::{self, EvolutionLog, Snapshot};
use crate::loss::{Category, OutputNonlinearity, PhiSpec};
use crate::network::NetParams;

/// Added to `√P` so that elements whose gradient has always been zero stay
/// put instead of producing `0/0`.
pub const DIVISION_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionMode {
    /// `p₁E₁[φ(D)] - p₂E₂[φ(D)]`, maximised.
    DifferenceMax,
    /// `p₁E₁[φ(D)] + p₂E₂[φ(-D)]`, minimised.
    SumMin,
}

impl CriterionMode {
    pub fn for_phi(phi: &PhiSpec) -> Self {
        match phi.category() {
            Category::CatA | Category::CatB => CriterionMode::DifferenceMax,
            Category::LegacySum => CriterionMode::SumMin,
        }
    }

    pub fn accepts(self, phi: &PhiSpec) -> bool {
        self == Self::for_phi(phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Batch,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingPolicy {
    /// Random permutation of the merged set, reshuffled on every pass.
    Permuted,
    /// One sample from each class per iteration.
    AlternatingPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub params: NetParams,
    /// Power estimates, laid out like `params`.
    pub power: NetParams,
    pub mu: f64,
    pub lambda: f64,
    /// Number of parameter updates performed.
    pub t: u64,
}

impl TrainerState {
    pub fn new(params: NetParams, mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::invalid("lambda", format!("must lie in (0, 1), got {lambda}")));
        }
        let power = params.zeros_like();
        Ok(Self {
            params,
            power,
            mu,
            lambda,
            t: 0,
        })
    }
}

/// A loss and criterion bound together with scratch buffers for steps.
#[derive(Debug, Clone)]
pub struct Trainer {
    phi: PhiSpec,
    omega: OutputNonlinearity,
    mode: CriterionMode,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    direction: Option<NetParams>,
}

impl Trainer {
    pub fn new(phi: PhiSpec, mode: CriterionMode) -> Result<Self> {
        if !mode.accepts(&phi) {
            return Err(Error::invalid(
                "criterion",
                format!("{mode:?} cannot be used with {phi} ({:?})", phi.category()),
            ));
        }
        Ok(Self {
            omega: phi.output(),
            phi,
            mode,
            pre: Vec::new(),
            hidden: Vec::new(),
            direction: None,
        })
    }

    pub fn phi(&self) -> &PhiSpec {
        &self.phi
    }

    pub fn mode(&self) -> CriterionMode {
        self.mode
    }

    /// `c` such that the update direction for one sample is `c·∇z`.
    fn coefficient(&self, label: Label, z: f64) -> f64 {
        let eps = label.sign();
        match self.mode {
            // ascent on ε·ω(z)
            CriterionMode::DifferenceMax => eps * self.omega.omega_prime(z),
            // descent on φ(ε·z)
            CriterionMode::SumMin => -eps * self.phi.phi_prime(eps * z),
        }
    }

    fn buffers(&mut self, params: &NetParams) -> NetParams {
        let n = params.n_hidden();
        self.pre.resize(n, 0.0);
        self.hidden.resize(n, 0.0);
        match self.direction.take() {
            Some(d) if d.n_hidden() == n && d.input_dim() == params.input_dim() => d,
            _ => params.zeros_like(),
        }
    }

    fn check_input(params: &NetParams, x: &[f64]) -> Result<()> {
        if x.len() != params.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: params.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// One stochastic update from a single labelled sample.
    pub fn sgd_step(&mut self, state: &mut TrainerState, x: &[f64], label: Label) -> Result<()> {
        Self::check_input(&state.params, x)?;
        let mut dir = self.buffers(&state.params);
        let z = state.params.forward_into(x, &mut self.pre, &mut self.hidden);
        let c = self.coefficient(label, z);
        state
            .params
            .scaled_grad_into(x, &self.pre, &self.hidden, c, &mut dir);
        let result = apply_update(state, &dir);
        self.direction = Some(dir);
        result
    }

    /// One full-batch update over both classes.
    pub fn batch_step(&mut self, state: &mut TrainerState, data: &LabeledDataset) -> Result<()> {
        Self::check_input(&state.params, data.sample(Label::One, 0))?;
        let mut dir = self.buffers(&state.params);
        dir.as_mut_slice().fill(0.0);
        for label in [Label::One, Label::Two] {
            for x in data.class(label).iter_rows() {
                let z = state.params.forward_into(x, &mut self.pre, &mut self.hidden);
                let c = self.coefficient(label, z);
                state
                    .params
                    .add_scaled_grad(x, &self.pre, &self.hidden, c, &mut dir);
            }
        }
        let result = apply_update(state, &dir);
        self.direction = Some(dir);
        result
    }

    /// The empirical criterion the steps optimise, computed with the
    /// trainer's own forward path.
    pub fn objective(&mut self, params: &NetParams, data: &LabeledDataset) -> f64 {
        self.pre.resize(params.n_hidden(), 0.0);
        self.hidden.resize(params.n_hidden(), 0.0);
        let mut total = 0.0;
        for label in [Label::One, Label::Two] {
            for x in data.class(label).iter_rows() {
                let z = params.forward_into(x, &mut self.pre, &mut self.hidden);
                total += eval::criterion_term(&self.omega, self.mode, label.sign(), z);
            }
        }
        total / (data.n1() + data.n2()) as f64
    }
}

/// `P ← λP + (1-λ)g²`, `θ ← θ + μ g / (√P + ε)` for every element, where
/// `g` already points in the improving direction.
fn apply_update(state: &mut TrainerState, dir: &NetParams) -> Result<()> {
    let (mu, lambda) = (state.mu, state.lambda);
    let mut finite = true;
    let theta = state.params.as_mut_slice();
    let power = state.power.as_mut_slice();
    for ((th, p), &g) in theta.iter_mut().zip(power.iter_mut()).zip(dir.as_slice()) {
        if g == 0.0 {
            *p *= lambda;
            continue;
        }
        *p = lambda * *p + (1.0 - lambda) * g * g;
        *th += mu * g / (p.sqrt() + DIVISION_GUARD);
        finite &= th.is_finite();
    }
    state.t += 1;
    if finite {
        Ok(())
    } else {
        Err(Error::Diverged { iteration: state.t })
    }
}

pub fn sgd_step(
    state: &mut TrainerState,
    x: &[f64],
    label: Label,
    phi: &PhiSpec,
    mode: CriterionMode,
) -> Result<()> {
    Trainer::new(phi.clone(), mode)?.sgd_step(state, x, label)
}

pub fn batch_step(
    state: &mut TrainerState,
    data: &LabeledDataset,
    phi: &PhiSpec,
    mode: CriterionMode,
) -> Result<()> {
    Trainer::new(phi.clone(), mode)?.batch_step(state, data)
}

/// Everything a training run needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub mode: TrainMode,
    pub criterion: CriterionMode,
    pub phi: PhiSpec,
    pub n_hidden: usize,
    pub mu: f64,
    pub lambda: f64,
    /// Iteration budget. With alternating pairs one iteration is two updates.
    pub iterations: u64,
    pub sampling_policy: SamplingPolicy,
    /// Evaluate on the test set every this many iterations (and at the end).
    pub eval_every: u64,
    pub seed: u64,
}

/// Trains from the Glorot initialisation of `run.seed`.
pub fn train(
    run: &TrainRun,
    train_data: &LabeledDataset,
    test_data: &LabeledDataset,
) -> Result<(TrainerState, EvolutionLog)> {
    let init = NetParams::glorot_init(run.n_hidden, train_data.k(), run.seed)?;
    train_from(run, init, train_data, test_data)
}

/// Trains from given initial parameters, recording a test-set snapshot at
/// iteration 0, every `eval_every` iterations and at the final iteration.
pub fn train_from(
    run: &TrainRun,
    init: NetParams,
    train_data: &LabeledDataset,
    test_data: &LabeledDataset,
) -> Result<(TrainerState, EvolutionLog)> {
    if run.iterations < 1 {
        return Err(Error::invalid("iterations", "must be at least 1"));
    }
    if run.eval_every < 1 {
        return Err(Error::invalid("eval_every", "must be at least 1"));
    }
    if init.input_dim() != train_data.k() || test_data.k() != train_data.k() {
        return Err(Error::DimensionMismatch {
            expected: init.input_dim(),
            actual: train_data.k(),
        });
    }
    let mut trainer = Trainer::new(run.phi.clone(), run.criterion)?;
    let mut state = TrainerState::new(init, run.mu, run.lambda)?;
    let mut log = EvolutionLog::new();
    let snapshot = |state: &TrainerState, it: u64| -> Result<Snapshot> {
        let r = eval::evaluate(&state.params, &run.phi, run.criterion, test_data)?;
        Ok(Snapshot::from_report(it, &r))
    };
    log.push(snapshot(&state, 0)?);

    let mut permuted = PermutedStream::new(train_data, run.seed);
    let mut pairs = PairStream::new(train_data);
    for it in 1..=run.iterations {
        let step = match (run.mode, run.sampling_policy) {
            (TrainMode::Batch, _) => trainer.batch_step(&mut state, train_data),
            (TrainMode::Sgd, SamplingPolicy::Permuted) => {
                let (label, i) = permuted.next().expect("endless stream");
                trainer.sgd_step(&mut state, train_data.sample(label, i), label)
            }
            (TrainMode::Sgd, SamplingPolicy::AlternatingPairs) => {
                let (i, j) = pairs.next().expect("endless stream");
                trainer
                    .sgd_step(&mut state, train_data.sample(Label::One, i), Label::One)
                    .and_then(|()| {
                        trainer.sgd_step(&mut state, train_data.sample(Label::Two, j), Label::Two)
                    })
            }
        };
        step.map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged { iteration: it },
            other => other,
        })?;
        if it % run.eval_every == 0 || it == run.iterations {
            let snap = snapshot(&state, it)?;
            log::debug!("iteration {it}: err1 {:.4} err2 {:.4} avg {:.4}", snap.err1, snap.err2, snap.avg);
            log.push(snap);
        }
    }
    Ok((state, log))
}
