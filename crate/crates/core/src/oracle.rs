//! Known-density machinery: Gaussian-mixture class models, the likelihood
//! ratio test, its exact and Monte Carlo error probabilities, posteriors, the
//! attainable criterion bound `Ē|p₁(X) - p₂(X)|`, and a brute-force check
//! that no classifier beats the LRT sign rule under the difference
//! criterion.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{sample_mixture, Label};
use crate::error::{Error, Result};
use crate::loss::{Category, PhiSpec};
use crate::rng::{substream, Stream};

/// One weighted diagonal Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianComponent {
    pub fn std_devs(&self) -> impl Iterator<Item = f64> + '_ {
        self.var.iter().map(|v| v.sqrt())
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        let mut log_p = 0.0;
        for ((&xi, &m), &v) in x.iter().zip(&self.mean).zip(&self.var) {
            let d = xi - m;
            log_p -= 0.5 * (d * d / v + (2.0 * PI * v).ln());
        }
        log_p.exp()
    }
}

/// `Σ wᵢ·N(x; μᵢ, diag σᵢ²)` with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComponentRepr>", into = "Vec<ComponentRepr>")]
pub struct MixtureDensity {
    components: Vec<GaussianComponent>,
}

impl MixtureDensity {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("mixture", "needs at least one component"))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::invalid("mixture", "zero-dimensional component"));
        }
        for c in &components {
            if c.mean.len() != dim || c.var.len() != dim {
                return Err(Error::invalid("mixture", "components disagree on dimension"));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::invalid("mixture", format!("weight {} not positive", c.weight)));
            }
            if c.var.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("mixture", "variances must be positive"));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::invalid("mixture", "non-finite mean"));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mixture", format!("weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// Scalar mixture from `(weight, mean, variance)` triples.
    pub fn scalar(parts: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(
            parts
                .iter()
                .map(|&(weight, mean, var)| GaussianComponent {
                    weight,
                    mean: vec![mean],
                    var: vec![var],
                })
                .collect(),
        )
    }

    pub fn standard_normal() -> Self {
        Self::scalar(&[(1.0, 0.0, 1.0)]).expect("valid")
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self.density_unchecked(x))
    }

    fn density_unchecked(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(x)).sum()
    }

    /// Component whose cumulative weight first exceeds `u ∈ [0, 1)`.
    pub(crate) fn pick_component(&self, u: f64) -> &GaussianComponent {
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                return c;
            }
        }
        self.components.last().expect("non-empty")
    }

    /// Scalar mixture mass on `[lo, hi]` (either end may be infinite).
    fn mass_1d(&self, lo: f64, hi: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let (m, s) = (c.mean[0], c.var[0].sqrt());
                c.weight * (normal_cdf((hi - m) / s) - normal_cdf((lo - m) / s))
            })
            .sum()
    }

    fn support_hint(&self) -> (f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sigma: f64 = 0.0;
        for c in &self.components {
            lo = lo.min(c.mean[0]);
            hi = hi.max(c.mean[0]);
            sigma = sigma.max(c.var[0].sqrt());
        }
        (lo, hi, sigma)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn into_vec(self) -> Vec<f64> {
        match self {
            ScalarOrVec::Scalar(v) => vec![v],
            ScalarOrVec::Vec(v) => v,
        }
    }

    fn from_vec(v: Vec<f64>) -> Self {
        if v.len() == 1 {
            ScalarOrVec::Scalar(v[0])
        } else {
            ScalarOrVec::Vec(v)
        }
    }
}

/// `[weight, mean, variance]`, with scalar or vector mean and variance.
#[derive(Serialize, Deserialize)]
struct ComponentRepr(f64, ScalarOrVec, ScalarOrVec);

impl TryFrom<Vec<ComponentRepr>> for MixtureDensity {
    type Error = Error;

    fn try_from(v: Vec<ComponentRepr>) -> Result<Self> {
        Self::new(
            v.into_iter()
                .map(|ComponentRepr(weight, mean, var)| GaussianComponent {
                    weight,
                    mean: mean.into_vec(),
                    var: var.into_vec(),
                })
                .collect(),
        )
    }
}

impl From<MixtureDensity> for Vec<ComponentRepr> {
    fn from(d: MixtureDensity) -> Self {
        d.components
            .into_iter()
            .map(|c| {
                ComponentRepr(
                    c.weight,
                    ScalarOrVec::from_vec(c.mean),
                    ScalarOrVec::from_vec(c.var),
                )
            })
            .collect()
    }
}

/// Class densities and the class-1 prior; `p2 = 1 - p1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub p1: f64,
    pub f1: MixtureDensity,
    pub f2: MixtureDensity,
}

impl HypothesisPair {
    pub fn new(p1: f64, f1: MixtureDensity, f2: MixtureDensity) -> Result<Self> {
        let h = Self { p1, f1, f2 };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p1 > 0.0 && self.p1 < 1.0) {
            return Err(Error::invalid("p1", format!("must lie in (0, 1), got {}", self.p1)));
        }
        if self.f1.dim() != self.f2.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.f1.dim(),
                actual: self.f2.dim(),
            });
        }
        Ok(())
    }

    pub fn p2(&self) -> f64 {
        1.0 - self.p1
    }

    pub fn dim(&self) -> usize {
        self.f1.dim()
    }

    /// `p₁f₁(x) - p₂f₂(x)`
    pub fn discriminant(&self, x: &[f64]) -> Result<f64> {
        Ok(self.p1 * self.f1.density(x)? - self.p2() * self.f2.density(x)?)
    }

    fn discriminant_unchecked(&self, x: &[f64]) -> f64 {
        self.p1 * self.f1.density_unchecked(x) - self.p2() * self.f2.density_unchecked(x)
    }
}

/// The Bayes-optimal decision: class 1 iff `p₁f₁(x) ≥ p₂f₂(x)`.
pub fn lrt_decide(h: &HypothesisPair, x: &[f64]) -> Result<Label> {
    Ok(if h.discriminant(x)? >= 0.0 {
        Label::One
    } else {
        Label::Two
    })
}

/// `(p₁(x), p₂(x))`, the class posteriors.
pub fn posterior(h: &HypothesisPair, x: &[f64]) -> Result<(f64, f64)> {
    let a = h.p1 * h.f1.density(x)?;
    let b = h.p2() * h.f2.density(x)?;
    let total = a + b;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegeneratePosterior { x: x.to_vec() });
    }
    let p1x = a / total;
    Ok((p1x, 1.0 - p1x))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtErrors {
    /// `P₁(decide 2)`
    pub err1: f64,
    /// `P₂(decide 1)`
    pub err2: f64,
    /// `p₁·err1 + p₂·err2`
    pub avg: f64,
    /// Decision boundaries found in the scan interval, ascending.
    pub boundaries: Vec<f64>,
    /// Smallest mass of either class density inside the scan interval.
    pub coverage: f64,
}

/// Scan interval for a scalar pair: ten of the widest standard deviations
/// beyond the extreme means.
pub fn default_interval(h: &HypothesisPair) -> (f64, f64) {
    let (lo1, hi1, s1) = h.f1.support_hint();
    let (lo2, hi2, s2) = h.f2.support_hint();
    let s = s1.max(s2);
    (lo1.min(lo2) - 10.0 * s, hi1.max(hi2) + 10.0 * s)
}

const SCAN_POINTS: usize = 200_000;
const COVERAGE_TARGET: f64 = 1.0 - 1e-8;

fn require_scalar(h: &HypothesisPair) -> Result<()> {
    if h.dim() != 1 {
        return Err(Error::invalid("hypothesis", "quadrature needs scalar densities"));
    }
    Ok(())
}

/// Sign changes of the discriminant on `[lo, hi]`, each refined by bisection
/// to a bracket narrower than `1e-10`.
fn decision_boundaries(h: &HypothesisPair, lo: f64, hi: f64) -> Vec<f64> {
    let class1 = |x: f64| h.discriminant_unchecked(&[x]) >= 0.0;
    let step = (hi - lo) / SCAN_POINTS as f64;
    let mut out = Vec::new();
    let mut prev_x = lo;
    let mut prev = class1(lo);
    for i in 1..=SCAN_POINTS {
        let x = lo + step * i as f64;
        let cur = class1(x);
        if cur != prev {
            let (mut a, mut b) = (prev_x, x);
            while b - a > 1e-10 {
                let m = 0.5 * (a + b);
                if class1(m) == prev {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev_x = x;
        prev = cur;
    }
    out
}

fn coverage(h: &HypothesisPair, lo: f64, hi: f64) -> f64 {
    let c = h.f1.mass_1d(lo, hi).min(h.f2.mass_1d(lo, hi));
    if c < COVERAGE_TARGET {
        log::warn!(
            "scan interval [{lo}, {hi}] holds only {c:.10} of a class density; boundaries outside it are missed"
        );
    }
    c
}

/// Exact LRT error probabilities for scalar densities.
///
/// Boundaries come from a fine scan plus bisection; each class's error is
/// then a sum of Gaussian CDF differences over the misclassified intervals,
/// tails included.
pub fn lrt_errors_quadrature(h: &HypothesisPair, interval: Option<(f64, f64)>) -> Result<LrtErrors> {
    require_scalar(h)?;
    let (lo, hi) = interval.unwrap_or_else(|| default_interval(h));
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::invalid("interval", "lower end must be below upper end"));
    }
    let boundaries = decision_boundaries(h, lo, hi);
    let coverage = coverage(h, lo, hi);

    let mut edges = Vec::with_capacity(boundaries.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(&boundaries);
    edges.push(f64::INFINITY);

    let (mut err1, mut err2) = (0.0, 0.0);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let probe = match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (false, true) => b.min(lo) - 1.0,
            (true, false) => a.max(hi) + 1.0,
            (false, false) => 0.5 * (lo + hi),
        };
        // decision is constant between boundaries and beyond the scan
        let probe = probe.clamp(lo, hi);
        if h.discriminant_unchecked(&[probe]) >= 0.0 {
            err2 += h.f2.mass_1d(a, b);
        } else {
            err1 += h.f1.mass_1d(a, b);
        }
    }
    Ok(LrtErrors {
        err1,
        err2,
        avg: h.p1 * err1 + h.p2() * err2,
        boundaries,
        coverage,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloErrors {
    pub err1: f64,
    pub err2: f64,
    /// Unweighted mean of the two rates (equal-size test sets).
    pub avg: f64,
    /// `p₁·err1 + p₂·err2`
    pub weighted_avg: f64,
    pub n_per_class: usize,
}

/// LRT error rates measured on `n_per_class` fresh samples of each class.
pub fn lrt_errors_montecarlo(h: &HypothesisPair, n_per_class: usize, seed: u64) -> Result<MonteCarloErrors> {
    if n_per_class < 1 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    h.validate()?;
    let count = |d: &MixtureDensity, index: u64, wrong: Label| {
        let mut rng = substream(seed, Stream::MonteCarlo, index);
        let xs = sample_mixture(d, n_per_class, &mut rng);
        xs.iter_rows()
            .filter(|x| {
                let decided = if h.discriminant_unchecked(x) >= 0.0 {
                    Label::One
                } else {
                    Label::Two
                };
                decided == wrong
            })
            .count()
    };
    let err1 = count(&h.f1, 1, Label::Two) as f64 / n_per_class as f64;
    let err2 = count(&h.f2, 2, Label::One) as f64 / n_per_class as f64;
    Ok(MonteCarloErrors {
        err1,
        err2,
        avg: 0.5 * (err1 + err2),
        weighted_avg: h.p1 * err1 + h.p2() * err2,
        n_per_class,
    })
}

/// `∫|p₁f₁(x) - p₂f₂(x)| dx = Ē|p₁(X) - p₂(X)|`, the largest value any
/// classifier can reach under the difference criterion.
///
/// Composite Simpson on each piece between consecutive decision boundaries,
/// so the integrand is smooth on every panel. Mass beyond the scan interval
/// is ignored; [`LrtErrors::coverage`] reports how much that is.
pub fn criterion_upper_bound(h: &HypothesisPair, interval: Option<(f64, f64)>) -> Result<f64> {
    require_scalar(h)?;
    let (lo, hi) = interval.unwrap_or_else(|| default_interval(h));
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::invalid("interval", "lower end must be below upper end"));
    }
    coverage(h, lo, hi);
    let mut knots = vec![lo];
    knots.extend(decision_boundaries(h, lo, hi));
    knots.push(hi);
    let f = |x: f64| h.discriminant_unchecked(&[x]).abs();
    const PANELS: usize = 20_000;
    Ok(knots.windows(2).map(|w| simpson(f, w[0], w[1], PANELS)).sum())
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Class likelihoods on a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePair {
    pub p1: f64,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl DiscretePair {
    pub fn new(p1: f64, f1: Vec<f64>, f2: Vec<f64>) -> Result<Self> {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::invalid("p1", "must lie in (0, 1)"));
        }
        if f1.len() != f2.len() || f1.is_empty() {
            return Err(Error::invalid("alphabet", "f1 and f2 must share a non-empty alphabet"));
        }
        for f in [&f1, &f2] {
            if f.iter().any(|&v| v.is_nan() || v < 0.0) {
                return Err(Error::invalid("alphabet", "probabilities must be non-negative"));
            }
            let total: f64 = f.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("alphabet", format!("probabilities sum to {total}")));
            }
        }
        Ok(Self { p1, f1, f2 })
    }

    pub fn size(&self) -> usize {
        self.f1.len()
    }

    /// `p₁f₁(x) - p₂f₂(x)` for every symbol.
    pub fn discriminant(&self) -> Vec<f64> {
        let p2 = 1.0 - self.p1;
        self.f1
            .iter()
            .zip(&self.f2)
            .map(|(a, b)| self.p1 * a - p2 * b)
            .collect()
    }
}

pub const MAX_ALPHABET: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityCheck {
    /// `D(x) ∈ {-1, +1}` of the best assignment found by enumeration.
    pub best_assignment: Vec<i8>,
    pub best_j: f64,
    /// `sign(p₁f₁ - p₂f₂)`, ties to `+1`.
    pub lrt_assignment: Vec<i8>,
    pub lrt_j: f64,
}

impl OptimalityCheck {
    /// `best_j - lrt_j`; zero when the LRT assignment is optimal.
    pub fn gap(&self) -> f64 {
        self.best_j - self.lrt_j
    }
}

/// Enumerates all `2^m` assignments `D: alphabet → {-1, +1}` and scores
/// `J = Σₓ (p₁f₁(x) - p₂f₂(x))·φ(D(x))`.
pub fn brute_force_optimality(d: &DiscretePair, phi: &PhiSpec) -> Result<OptimalityCheck> {
    let m = d.size();
    if m > MAX_ALPHABET {
        return Err(Error::invalid(
            "alphabet",
            format!("size {m} exceeds the enumeration cap {MAX_ALPHABET}"),
        ));
    }
    if phi.category() == Category::LegacySum {
        return Err(Error::invalid("phi", "enumeration scores the difference criterion only"));
    }
    let w = d.discriminant();
    let (up, down) = (phi.phi(1.0), phi.phi(-1.0));
    let score = |mask: u32| -> f64 {
        w.iter()
            .enumerate()
            .map(|(i, &wi)| wi * if mask >> i & 1 == 1 { up } else { down })
            .sum()
    };
    let assignment = |mask: u32| -> Vec<i8> {
        (0..m).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect()
    };

    let mut best_mask = 0u32;
    let mut best_j = score(0);
    for mask in 1..(1u32 << m) {
        let j = score(mask);
        if j > best_j {
            best_j = j;
            best_mask = mask;
        }
    }
    let lrt_mask = w
        .iter()
        .enumerate()
        .filter(|(_, &wi)| wi >= 0.0)
        .fold(0u32, |acc, (i, _)| acc | 1 << i);
    Ok(OptimalityCheck {
        best_assignment: assignment(best_mask),
        best_j,
        lrt_assignment: assignment(lrt_mask),
        lrt_j: score(lrt_mask),
    })
}

/// Random scalar pair for property checks: one or two components per class,
/// means in `[-4, 4]`, variances in `[0.25, 4]`, `p₁` in `[0.2, 0.8]` unless
/// `equal_priors`.
pub fn random_scalar_pair<R: Rng + ?Sized>(rng: &mut R, equal_priors: bool) -> HypothesisPair {
    let mixture = |rng: &mut R| {
        let parts = rng.random_range(1..=2usize);
        let w0 = if parts == 1 { 1.0 } else { rng.random_range(0.2..0.8) };
        let weights = [w0, 1.0 - w0];
        let comps: Vec<_> = (0..parts)
            .map(|i| (weights[i], rng.random_range(-4.0..4.0), rng.random_range(0.25..4.0)))
            .collect();
        MixtureDensity::scalar(&comps).expect("valid random mixture")
    };
    let f1 = mixture(rng);
    let f2 = mixture(rng);
    let p1 = if equal_priors { 0.5 } else { rng.random_range(0.2..0.8) };
    HypothesisPair::new(p1, f1, f2).expect("valid random pair")
}
