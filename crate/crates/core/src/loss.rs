//! Loss nonlinearities `φ(z)` and the output nonlinearity `ω(z)`.
//!
//! Three families are supported:
//!
//! - **Category A**: `φ` has global minimum `-1` at `z = -1` and global
//!   maximum `1` at `z = 1`. The network output is unconstrained and
//!   `ω = φ`.
//! - **Category B**: `φ` is strictly increasing on `[-1, 1]` with
//!   `φ(±1) = ±1`. The network output is squashed by `g(z) = tanh(z)` and
//!   `ω = φ ∘ g`.
//! - **Legacy sum** penalties (`|1-z|`, Hinge and their powers) used with the
//!   classical criterion `p₁E₁[φ(D)] + p₂E₂[φ(-D)]`, minimised. Here `ω` is
//!   the identity and `φ` is applied by the trainer.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    CatA,
    CatB,
    LegacySum,
}

/// Closed-form shape of a nonlinearity. `rho` is the shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    /// `ρz / (ρ - 1 + |z|^ρ)`, `ρ > 1`.
    Rational { rho: f64 },
    /// `z·exp((1 - |z|^ρ)/ρ)`, `ρ > 0`.
    Exp { rho: f64 },
    /// `z` on `[-1, 1]`.
    Identity,
    /// `|1 - z|`.
    Abs,
    /// `|1 - z|^ρ`, `ρ > 1`.
    AbsPow { rho: f64 },
    /// `(1 - z)⁺`.
    Hinge,
    /// `((1 - z)⁺)^ρ`, `ρ > 1`.
    HingePow { rho: f64 },
}

/// Selector for the classical Table-style penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LegacyKind {
    Abs,
    AbsPow(f64),
    Hinge,
    HingePow(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpec {
    kind: PhiKind,
    category: Category,
}

pub fn make_phi_rational(rho: f64) -> Result<PhiSpec> {
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("rational φ needs ρ > 1, got {rho}")));
    }
    Ok(PhiSpec {
        kind: PhiKind::Rational { rho },
        category: Category::CatA,
    })
}

pub fn make_phi_exp(rho: f64) -> Result<PhiSpec> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("exponential φ needs ρ > 0, got {rho}")));
    }
    Ok(PhiSpec {
        kind: PhiKind::Exp { rho },
        category: Category::CatA,
    })
}

/// `φ(z) = 2z / (1 + z²)`.
pub fn make_phi_cat_a_default() -> PhiSpec {
    PhiSpec {
        kind: PhiKind::Rational { rho: 2.0 },
        category: Category::CatA,
    }
}

pub fn make_phi_cat_b_identity() -> PhiSpec {
    PhiSpec {
        kind: PhiKind::Identity,
        category: Category::CatB,
    }
}

pub fn make_phi_hinge() -> PhiSpec {
    PhiSpec {
        kind: PhiKind::Hinge,
        category: Category::LegacySum,
    }
}

pub fn make_legacy_phi(kind: LegacyKind) -> Result<PhiSpec> {
    let check = |rho: f64| {
        if rho > 1.0 && rho.is_finite() {
            Ok(rho)
        } else {
            Err(Error::invalid("rho", format!("power penalty needs ρ > 1, got {rho}")))
        }
    };
    let kind = match kind {
        LegacyKind::Abs => PhiKind::Abs,
        LegacyKind::AbsPow(rho) => PhiKind::AbsPow { rho: check(rho)? },
        LegacyKind::Hinge => PhiKind::Hinge,
        LegacyKind::HingePow(rho) => PhiKind::HingePow { rho: check(rho)? },
    };
    Ok(PhiSpec {
        kind,
        category: Category::LegacySum,
    })
}

/// Names accepted in run configurations.
pub const PHI_NAMES: &[&str] = &[
    "cat_a_rational",
    "cat_a_exp",
    "cat_a_default",
    "cat_b_identity",
    "hinge",
    "hinge_pow",
    "abs",
    "abs_pow",
];

impl PhiSpec {
    /// Looks up a nonlinearity by its configuration name. `rho` is required
    /// by the parametrised families and ignored by the others.
    pub fn from_name(name: &str, rho: Option<f64>) -> Result<Self> {
        let need_rho = || rho.ok_or_else(|| Error::invalid("rho", format!("`{name}` needs rho")));
        match name {
            "cat_a_rational" => make_phi_rational(need_rho()?),
            "cat_a_exp" => make_phi_exp(need_rho()?),
            "cat_a_default" => Ok(make_phi_cat_a_default()),
            "cat_b_identity" => Ok(make_phi_cat_b_identity()),
            "hinge" => Ok(make_phi_hinge()),
            "hinge_pow" => make_legacy_phi(LegacyKind::HingePow(need_rho()?)),
            "abs" => make_legacy_phi(LegacyKind::Abs),
            "abs_pow" => make_legacy_phi(LegacyKind::AbsPow(need_rho()?)),
            other => Err(Error::invalid(
                "phi_name",
                format!("unknown loss `{other}`, expected one of {PHI_NAMES:?}"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PhiKind::Rational { .. } => "cat_a_rational",
            PhiKind::Exp { .. } => "cat_a_exp",
            PhiKind::Identity => "cat_b_identity",
            PhiKind::Abs => "abs",
            PhiKind::AbsPow { .. } => "abs_pow",
            PhiKind::Hinge => "hinge",
            PhiKind::HingePow { .. } => "hinge_pow",
        }
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn rho(&self) -> Option<f64> {
        match self.kind {
            PhiKind::Rational { rho }
            | PhiKind::Exp { rho }
            | PhiKind::AbsPow { rho }
            | PhiKind::HingePow { rho } => Some(rho),
            _ => None,
        }
    }

    pub fn phi(&self, z: f64) -> f64 {
        match self.kind {
            PhiKind::Rational { rho } => rho * z / (rho - 1.0 + z.abs().powf(rho)),
            PhiKind::Exp { rho } => z * ((1.0 - z.abs().powf(rho)) / rho).exp(),
            PhiKind::Identity => z,
            PhiKind::Abs => (1.0 - z).abs(),
            PhiKind::AbsPow { rho } => (1.0 - z).abs().powf(rho),
            PhiKind::Hinge => (1.0 - z).max(0.0),
            PhiKind::HingePow { rho } => (1.0 - z).max(0.0).powf(rho),
        }
    }

    pub fn phi_prime(&self, z: f64) -> f64 {
        match self.kind {
            // ρ(ρ-1)(1 - |z|^ρ) / (ρ - 1 + |z|^ρ)², equal to ρ/(ρ-1) at 0.
            PhiKind::Rational { rho } => {
                let p = z.abs().powf(rho);
                let den = rho - 1.0 + p;
                rho * (rho - 1.0) * (1.0 - p) / (den * den)
            }
            // exp((1 - |z|^ρ)/ρ)·(1 - |z|^ρ), equal to e^{1/ρ} at 0.
            PhiKind::Exp { rho } => {
                let p = z.abs().powf(rho);
                ((1.0 - p) / rho).exp() * (1.0 - p)
            }
            PhiKind::Identity => 1.0,
            PhiKind::Abs => {
                if z < 1.0 {
                    -1.0
                } else if z > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PhiKind::AbsPow { rho } => {
                let r = 1.0 - z;
                -rho * r.abs().powf(rho - 1.0) * r.signum()
            }
            // Right derivative at the knee.
            PhiKind::Hinge => {
                if z < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            PhiKind::HingePow { rho } => -rho * (1.0 - z).max(0.0).powf(rho - 1.0),
        }
    }

    /// Points where `φ` (or one of its low derivatives) is not smooth.
    pub fn non_smooth_points(&self) -> Vec<f64> {
        match self.kind {
            PhiKind::Rational { rho } | PhiKind::Exp { rho } if rho < 2.0 => vec![0.0],
            PhiKind::Rational { .. } | PhiKind::Exp { .. } | PhiKind::Identity => Vec::new(),
            PhiKind::Abs | PhiKind::AbsPow { .. } | PhiKind::Hinge | PhiKind::HingePow { .. } => {
                vec![1.0]
            }
        }
    }

    pub fn is_odd(&self) -> bool {
        matches!(
            self.kind,
            PhiKind::Rational { .. } | PhiKind::Exp { .. } | PhiKind::Identity
        )
    }

    pub fn output(&self) -> OutputNonlinearity {
        OutputNonlinearity { phi: self.clone() }
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rho() {
            Some(rho) => write!(f, "{}(rho={rho})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// `ω(z)` placed after the last linear layer.
///
/// The network's classifier function `D` is `tanh(z)` for Category B and `z`
/// otherwise; `ω(z) = φ(D)` for the two difference categories, so the
/// criterion summand for one sample is exactly `ω(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputNonlinearity {
    phi: PhiSpec,
}

impl OutputNonlinearity {
    pub fn phi(&self) -> &PhiSpec {
        &self.phi
    }

    pub fn category(&self) -> Category {
        self.phi.category
    }

    /// Classifier value `D` for pre-output `z`. Its sign is the decision.
    pub fn decision(&self, z: f64) -> f64 {
        match self.phi.category {
            Category::CatB => z.tanh(),
            Category::CatA | Category::LegacySum => z,
        }
    }

    pub fn omega(&self, z: f64) -> f64 {
        match self.phi.category {
            Category::CatA => self.phi.phi(z),
            Category::CatB => self.phi.phi(z.tanh()),
            Category::LegacySum => z,
        }
    }

    pub fn omega_prime(&self, z: f64) -> f64 {
        match self.phi.category {
            Category::CatA => self.phi.phi_prime(z),
            Category::CatB => {
                let g = z.tanh();
                self.phi.phi_prime(g) * (1.0 - g * g)
            }
            Category::LegacySum => 1.0,
        }
    }

    /// Points of `z` where `ω` is not smooth.
    pub fn non_smooth_points(&self) -> Vec<f64> {
        match self.phi.category {
            Category::CatA => self.phi.non_smooth_points(),
            Category::CatB | Category::LegacySum => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
    }

    fn all_cat_a() -> Vec<PhiSpec> {
        let mut v: Vec<_> = [1.1, 1.5, 2.0, 3.0, 4.0]
            .iter()
            .map(|&r| make_phi_rational(r).unwrap())
            .collect();
        v.extend(
            [0.3, 0.5, 1.0, 2.0, 3.0]
                .iter()
                .map(|&r| make_phi_exp(r).unwrap()),
        );
        v
    }

    fn all_specs() -> Vec<PhiSpec> {
        let mut v = all_cat_a();
        v.push(make_phi_cat_b_identity());
        v.push(make_phi_hinge());
        v.push(make_legacy_phi(LegacyKind::Abs).unwrap());
        v.push(make_legacy_phi(LegacyKind::AbsPow(2.0)).unwrap());
        v.push(make_legacy_phi(LegacyKind::AbsPow(1.5)).unwrap());
        v.push(make_legacy_phi(LegacyKind::HingePow(2.0)).unwrap());
        v.push(make_legacy_phi(LegacyKind::HingePow(3.0)).unwrap());
        v
    }

    #[test]
    fn rational_examples() {
        let phi = make_phi_rational(2.0).unwrap();
        assert_eq!(phi.phi(1.0), 1.0);
        assert_eq!(phi.phi(-1.0), -1.0);
        assert_eq!(phi.phi(0.0), 0.0);
        assert!((phi.phi(3.0) - 0.6).abs() < 1e-15);
        assert!(make_phi_rational(1.0).is_err());
        assert!(make_phi_rational(0.5).is_err());
        assert!(make_phi_rational(f64::NAN).is_err());
    }

    #[test]
    fn exp_examples() {
        let phi = make_phi_exp(1.0).unwrap();
        assert_eq!(phi.phi(1.0), 1.0);
        assert_eq!(phi.phi(-1.0), -1.0);
        assert!((phi.phi(2.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((phi.phi(2.0) - 0.735759).abs() < 1e-6);
        assert!(make_phi_exp(0.0).is_err());
        assert!(make_phi_exp(-1.0).is_err());
    }

    #[test]
    fn default_is_rational_two() {
        let phi = make_phi_cat_a_default();
        assert_eq!(phi, make_phi_rational(2.0).unwrap());
        assert_eq!(phi.phi(1.0), 1.0);
        assert_eq!(phi.phi(-1.0), -1.0);
        assert!((phi.phi(0.5) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cat_b_identity_composes_with_tanh() {
        let omega = make_phi_cat_b_identity().output();
        assert_eq!(omega.omega(0.0), 0.0);
        assert_eq!(omega.omega_prime(0.0), 1.0);
        assert!((omega.omega(1.0) - 0.761594).abs() < 1e-6);
        for z in grid(-30.0, 30.0, 1001) {
            assert!(omega.decision(z).abs() <= 1.0);
            if z.abs() < 15.0 {
                assert!(omega.decision(z).abs() < 1.0);
            }
        }
    }

    #[test]
    fn hinge_examples() {
        let phi = make_phi_hinge();
        assert_eq!(phi.category(), Category::LegacySum);
        assert_eq!(phi.phi(1.0), 0.0);
        assert_eq!(phi.phi(0.0), 1.0);
        assert_eq!(phi.phi(2.0), 0.0);
        assert_eq!(phi.phi_prime(0.5), -1.0);
        assert_eq!(phi.phi_prime(1.0), 0.0);
        assert_eq!(phi.phi_prime(1.5), 0.0);
    }

    #[test]
    fn legacy_examples() {
        let abs = make_legacy_phi(LegacyKind::Abs).unwrap();
        assert_eq!(abs.phi(1.0), 0.0);
        let abs2 = make_legacy_phi(LegacyKind::AbsPow(2.0)).unwrap();
        assert!((abs2.phi(-1.0) - 4.0).abs() < 1e-15);
        let hinge2 = make_legacy_phi(LegacyKind::HingePow(2.0)).unwrap();
        assert!((hinge2.phi(0.5) - 0.25).abs() < 1e-15);
        assert!(make_legacy_phi(LegacyKind::AbsPow(1.0)).is_err());
        assert!(make_legacy_phi(LegacyKind::HingePow(0.5)).is_err());
    }

    #[test]
    fn cat_a_bound_on_dense_grid() {
        for phi in all_cat_a() {
            assert_eq!(phi.phi(1.0), 1.0, "{phi}");
            assert_eq!(phi.phi(-1.0), -1.0, "{phi}");
            for z in grid(-10.0, 10.0, 10_000) {
                let v = phi.phi(z);
                assert!((-1.0..=1.0).contains(&v), "{phi} at {z}: {v}");
                if (z.abs() - 1.0).abs() > 1e-2 {
                    assert!(v.abs() < 1.0, "{phi} touches ±1 away from ±1 at {z}");
                }
            }
            // tails decay towards zero
            assert!(phi.phi(1e6) < phi.phi(10.0), "{phi}");
            assert!(phi.phi(1e6) >= 0.0, "{phi}");
        }
    }

    #[test]
    fn cat_b_strictly_increasing() {
        let phi = make_phi_cat_b_identity();
        let values: Vec<f64> = grid(-1.0, 1.0, 2001).map(|z| phi.phi(z)).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(phi.phi(1.0), 1.0);
        assert_eq!(phi.phi(-1.0), -1.0);
    }

    #[test]
    fn legacy_penalties_nonnegative_and_convex() {
        for phi in all_specs()
            .into_iter()
            .filter(|p| p.category() == Category::LegacySum)
        {
            let zs: Vec<f64> = grid(-5.0, 5.0, 2001).collect();
            let vs: Vec<f64> = zs.iter().map(|&z| phi.phi(z)).collect();
            assert!(vs.iter().all(|&v| v >= 0.0), "{phi}");
            for w in vs.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12, "{phi} not convex");
            }
        }
    }

    #[test]
    fn odd_functions_are_exactly_odd() {
        for phi in all_specs().into_iter().filter(PhiSpec::is_odd) {
            for z in grid(-10.0, 10.0, 4001) {
                assert_eq!(phi.phi(-z), -phi.phi(z), "{phi} at {z}");
            }
        }
    }

    fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(floor)
    }

    #[test]
    fn phi_prime_matches_central_differences() {
        let h = 1e-6;
        for phi in all_specs() {
            let kinks = phi.non_smooth_points();
            for z in grid(-10.0, 10.0, 4001) {
                if kinks.iter().any(|&k| (z - k).abs() <= 1e-3) {
                    continue;
                }
                let fd = (phi.phi(z + h) - phi.phi(z - h)) / (2.0 * h);
                let an = phi.phi_prime(z);
                // absolute floor for points where both are ~0 (flat tails)
                if an.abs() < 1e-6 && fd.abs() < 1e-6 {
                    continue;
                }
                assert!(rel_err(an, fd, 1e-8) < 1e-4, "{phi} at {z}: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn phi_prime_at_zero_is_analytic_limit() {
        for rho in [0.3, 0.5, 1.0, 2.0] {
            let phi = make_phi_exp(rho).unwrap();
            assert!((phi.phi_prime(0.0) - (1.0 / rho).exp()).abs() < 1e-12);
        }
        for rho in [1.01, 1.5, 2.0, 4.0] {
            let phi = make_phi_rational(rho).unwrap();
            assert!((phi.phi_prime(0.0) - rho / (rho - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn omega_prime_matches_central_differences() {
        let h = 1e-6;
        for phi in all_specs() {
            let omega = phi.output();
            let kinks = omega.non_smooth_points();
            for z in grid(-6.0, 6.0, 1201) {
                if kinks.iter().any(|&k| (z - k).abs() <= 1e-3) {
                    continue;
                }
                let fd = (omega.omega(z + h) - omega.omega(z - h)) / (2.0 * h);
                let an = omega.omega_prime(z);
                // unit floor: near stationary points of ω the ratio is meaningless
                assert!(rel_err(an, fd, 1.0) < 1e-6, "{phi} ω' at {z}: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(
            PhiSpec::from_name("cat_a_rational", Some(2.0)).unwrap(),
            make_phi_cat_a_default()
        );
        assert!(PhiSpec::from_name("cat_a_rational", None).is_err());
        assert!(PhiSpec::from_name("cat_a_exp", Some(-1.0)).is_err());
        assert_eq!(
            PhiSpec::from_name("hinge", None).unwrap().category(),
            Category::LegacySum
        );
        assert!(PhiSpec::from_name("logistic", None).is_err());
        for name in PHI_NAMES {
            assert!(PhiSpec::from_name(name, Some(2.0)).is_ok(), "{name}");
        }
    }
}
