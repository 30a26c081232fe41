//! Utility functions on `(a, ∞)` and their convex conjugates.
//!
//! The catalog covers the standard exponential, logarithmic and power
//! utilities plus two piecewise constructions:
//!
//! * `glued_unbounded`: `U(x) = 2√x` for `x ≥ 1` and `U(x) = 3 − e^{1−x}` for
//!   `x < 1`. Defined on the whole line, unbounded above, with
//!   `V(y) = 1/y` for `y ≤ 1` and `V(y) = 3 − 2y + y ln y` for `y > 1`.
//! * `slow_loss`: `U(x) = x ln(−x)` for `x ≤ −e` and
//!   `U(x) = −e + 2(1 − e^{−(x+e)})` for `x > −e`. Both pieces meet with value
//!   `−e` and slope `2`. Its elasticity `1 + 1/ln(−x)` tends to 1, so it is
//!   the canonical utility without reasonable asymptotic elasticity.

mod analysis;
mod conjugate;
mod tabulated;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use analysis::{
    asymptotic_elasticity_minus, check_inada, growth_constants, growth_constants_with_b,
    Elasticity, GrowthCertificate, InadaReport,
};
pub use conjugate::{conjugate, conjugate_with_range, ConjugatePair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtilityError {
    #[error("marginal utility does not bracket y = {y}: Inada conditions fail on the working range")]
    NonInada { y: f64 },
    #[error("elasticity undefined at x = {x} (U(x) is zero or not finite)")]
    Domain { x: f64 },
    #[error("conjugate is never positive and increasing on the search range")]
    NoPositiveRegion,
    #[error("growth constants need reasonable asymptotic elasticity at -infinity")]
    RaeRequired,
    #[error("growth certificate failed verification at y = {y}")]
    CertificateRejected { y: f64 },
    #[error("utility violates its shape invariants: {0}")]
    Shape(String),
    #[error("utility table: {0}")]
    Table(String),
    #[error("invalid utility parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported schema_version {0}, expected 1")]
    SchemaVersion(u32),
}

type ScalarFn<F> = Arc<dyn Fn(F) -> F + Send + Sync>;

/// A user-supplied utility given by closures for `U` and `U'`.
#[derive(Clone)]
pub struct CustomUtility<F> {
    pub label: String,
    pub u: ScalarFn<F>,
    pub u_prime: ScalarFn<F>,
    /// `sup U` when known; otherwise estimated from samples.
    pub sup: Option<F>,
}

#[derive(Clone)]
pub enum UtilityKind<F> {
    /// `U(x) = (1 − e^{−γx})/γ`
    Exponential { gamma: F },
    /// `U(x) = ln x`
    Log,
    /// `U(x) = x^p / p` with `p < 1`, `p ≠ 0`
    Power { p: F },
    GluedUnbounded,
    SlowLoss,
    Custom(CustomUtility<F>),
}

/// Catalog tag, as written in utility files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    Exponential,
    Log,
    Power,
    GluedUnbounded,
    SlowLoss,
    Custom,
}

#[derive(Clone)]
pub struct UtilityFunction<F> {
    critical_wealth: F,
    kind: UtilityKind<F>,
}

impl<F: fmt::Debug> fmt::Debug for UtilityFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            UtilityKind::Exponential { gamma } => format!("exponential(gamma={gamma:?})"),
            UtilityKind::Log => "log".into(),
            UtilityKind::Power { p } => format!("power(p={p:?})"),
            UtilityKind::GluedUnbounded => "glued_unbounded".into(),
            UtilityKind::SlowLoss => "slow_loss".into(),
            UtilityKind::Custom(c) => format!("custom({})", c.label),
        };
        f.debug_struct("UtilityFunction")
            .field("kind", &kind)
            .field("critical_wealth", &self.critical_wealth)
            .finish()
    }
}

impl<F: Real> UtilityFunction<F> {
    pub fn exponential() -> Self {
        Self::exponential_with(F::one()).expect("unit risk aversion")
    }

    pub fn exponential_with(gamma: F) -> Result<Self, UtilityError> {
        if !(gamma > F::zero()) || !gamma.is_finite() {
            return Err(UtilityError::InvalidParameter(format!(
                "risk aversion must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            critical_wealth: F::neg_infinity(),
            kind: UtilityKind::Exponential { gamma },
        })
    }

    pub fn log() -> Self {
        Self {
            critical_wealth: F::zero(),
            kind: UtilityKind::Log,
        }
    }

    pub fn power(p: F) -> Result<Self, UtilityError> {
        if !(p < F::one()) || p == F::zero() || !p.is_finite() {
            return Err(UtilityError::InvalidParameter(format!(
                "power exponent must be < 1 and nonzero, got {p}"
            )));
        }
        Ok(Self {
            critical_wealth: F::zero(),
            kind: UtilityKind::Power { p },
        })
    }

    pub fn glued_unbounded() -> Self {
        Self {
            critical_wealth: F::neg_infinity(),
            kind: UtilityKind::GluedUnbounded,
        }
    }

    pub fn slow_loss() -> Self {
        Self {
            critical_wealth: F::neg_infinity(),
            kind: UtilityKind::SlowLoss,
        }
    }

    pub fn custom(
        label: impl Into<String>,
        critical_wealth: F,
        u: impl Fn(F) -> F + Send + Sync + 'static,
        u_prime: impl Fn(F) -> F + Send + Sync + 'static,
    ) -> Self {
        Self {
            critical_wealth,
            kind: UtilityKind::Custom(CustomUtility {
                label: label.into(),
                u: Arc::new(u),
                u_prime: Arc::new(u_prime),
                sup: None,
            }),
        }
    }

    /// Same utility with a known `sup U` (custom kinds only).
    pub fn with_sup(mut self, sup: F) -> Self {
        if let UtilityKind::Custom(c) = &mut self.kind {
            c.sup = Some(sup);
        }
        self
    }

    pub fn critical_wealth(&self) -> F {
        self.critical_wealth
    }

    pub fn kind(&self) -> &UtilityKind<F> {
        &self.kind
    }

    pub fn tag(&self) -> KindTag {
        match self.kind {
            UtilityKind::Exponential { .. } => KindTag::Exponential,
            UtilityKind::Log => KindTag::Log,
            UtilityKind::Power { .. } => KindTag::Power,
            UtilityKind::GluedUnbounded => KindTag::GluedUnbounded,
            UtilityKind::SlowLoss => KindTag::SlowLoss,
            UtilityKind::Custom(_) => KindTag::Custom,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            UtilityKind::Exponential { gamma } => format!("exponential(gamma={gamma})"),
            UtilityKind::Log => "log".into(),
            UtilityKind::Power { p } => format!("power(p={p})"),
            UtilityKind::GluedUnbounded => "glued_unbounded".into(),
            UtilityKind::SlowLoss => "slow_loss".into(),
            UtilityKind::Custom(c) => format!("custom({})", c.label),
        }
    }

    /// Whether the domain is the whole real line.
    pub fn whole_line(&self) -> bool {
        self.critical_wealth == F::neg_infinity()
    }

    /// `U(x)`; `−∞` at or left of the critical wealth.
    pub fn u(&self, x: F) -> F {
        if x <= self.critical_wealth {
            return F::neg_infinity();
        }
        let one = F::one();
        match &self.kind {
            UtilityKind::Exponential { gamma } => -(-*gamma * x).exp_m1() / *gamma,
            UtilityKind::Log => x.ln(),
            UtilityKind::Power { p } => x.powf(*p) / *p,
            UtilityKind::GluedUnbounded => {
                if x >= one {
                    F::lit(2.0) * x.sqrt()
                } else {
                    F::lit(3.0) - (one - x).exp()
                }
            }
            UtilityKind::SlowLoss => {
                let e = F::E();
                if x <= -e {
                    x * (-x).ln()
                } else {
                    -e - F::lit(2.0) * (-(x + e)).exp_m1()
                }
            }
            UtilityKind::Custom(c) => (c.u)(x),
        }
    }

    /// `U'(x)`; `+∞` at or left of the critical wealth.
    pub fn u_prime(&self, x: F) -> F {
        if x <= self.critical_wealth {
            return F::infinity();
        }
        let one = F::one();
        match &self.kind {
            UtilityKind::Exponential { gamma } => (-*gamma * x).exp(),
            UtilityKind::Log => one / x,
            UtilityKind::Power { p } => x.powf(*p - one),
            UtilityKind::GluedUnbounded => {
                if x >= one {
                    one / x.sqrt()
                } else {
                    (one - x).exp()
                }
            }
            UtilityKind::SlowLoss => {
                let e = F::E();
                if x <= -e {
                    (-x).ln() + one
                } else {
                    F::lit(2.0) * (-(x + e)).exp()
                }
            }
            UtilityKind::Custom(c) => (c.u_prime)(x),
        }
    }

    /// `x U'(x) / U(x)` evaluated in a form that stays finite far out on the
    /// negative axis. `None` when the ratio is undefined.
    pub fn elasticity(&self, x: F) -> Option<F> {
        let one = F::one();
        let r = match &self.kind {
            UtilityKind::Exponential { gamma } => {
                let gx = *gamma * x;
                gx / gx.exp_m1()
            }
            UtilityKind::GluedUnbounded if x < one => x / (F::lit(3.0) * (x - one).exp() - one),
            UtilityKind::SlowLoss if x <= -F::E() => one + one / (-x).ln(),
            _ => {
                let u = self.u(x);
                if u == F::zero() || !u.is_finite() {
                    return None;
                }
                x * self.u_prime(x) / u
            }
        };
        if r.is_finite() {
            Some(r)
        } else {
            None
        }
    }

    /// Checks the shape invariants on `grid` (sorted, inside the domain):
    /// strictly increasing, strictly concave by the midpoint test, and `U'`
    /// positive and strictly decreasing.
    pub fn check_shape(&self, grid: &[F]) -> Result<(), UtilityError> {
        for w in grid.windows(2) {
            let (x1, x2) = (w[0], w[1]);
            if !(x1 < x2) {
                return Err(UtilityError::Shape("grid must be strictly increasing".into()));
            }
            let (u1, u2) = (self.u(x1), self.u(x2));
            if !(u1 < u2) {
                return Err(UtilityError::Shape(format!("not increasing on [{x1}, {x2}]")));
            }
            let mid = self.u((x1 + x2) / F::lit(2.0));
            if !(mid > (u1 + u2) / F::lit(2.0)) {
                return Err(UtilityError::Shape(format!("not strictly concave on [{x1}, {x2}]")));
            }
            let (d1, d2) = (self.u_prime(x1), self.u_prime(x2));
            if !(d1 > F::zero() && d2 > F::zero()) {
                return Err(UtilityError::Shape(format!("U' not positive near {x1}")));
            }
            if !(d1 > d2) {
                return Err(UtilityError::Shape(format!(
                    "U' not strictly decreasing on [{x1}, {x2}]"
                )));
            }
        }
        Ok(())
    }

    /// `sup U`, the value of the conjugate at `0+`.
    pub fn sup(&self) -> F {
        match &self.kind {
            UtilityKind::Exponential { gamma } => F::one() / *gamma,
            UtilityKind::Log | UtilityKind::GluedUnbounded => F::infinity(),
            UtilityKind::Power { p } => {
                if *p > F::zero() {
                    F::infinity()
                } else {
                    F::zero()
                }
            }
            UtilityKind::SlowLoss => F::lit(2.0) - F::E(),
            UtilityKind::Custom(c) => c.sup.unwrap_or_else(|| self.estimate_sup()),
        }
    }

    /// Reads `U` along `x = 2^j`; a plateau to relative `1e-9` is taken as the
    /// supremum, anything else as unbounded.
    fn estimate_sup(&self) -> F {
        let two = F::lit(2.0);
        let a = self.u(two.powi(39));
        let b = self.u(two.powi(40));
        if a.is_finite() && b.is_finite() && (b - a).abs() <= F::lit(1e-9) * F::one().max(b.abs()) {
            b
        } else {
            F::infinity()
        }
    }
}

/// Utility file: `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub kind: KindTag,
    #[serde(default)]
    pub params: UtilityParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl UtilityConfig {
    pub fn build<F: Real>(&self) -> Result<UtilityFunction<F>, UtilityError> {
        if let Some(v) = self.schema_version {
            if v != 1 {
                return Err(UtilityError::SchemaVersion(v));
            }
        }
        let params = &self.params;
        let reject = |name: &str| {
            Err(UtilityError::InvalidParameter(format!(
                "`{name}` does not apply to {:?}",
                self.kind
            )))
        };
        match self.kind {
            KindTag::Exponential => {
                if params.p.is_some() {
                    return reject("p");
                }
                UtilityFunction::exponential_with(F::lit(params.gamma.unwrap_or(1.0)))
            }
            KindTag::Power => {
                if params.gamma.is_some() {
                    return reject("gamma");
                }
                let p = params
                    .p
                    .ok_or_else(|| UtilityError::InvalidParameter("power needs `p`".into()))?;
                UtilityFunction::power(F::lit(p))
            }
            KindTag::Log | KindTag::GluedUnbounded | KindTag::SlowLoss => {
                if params.gamma.is_some() {
                    return reject("gamma");
                }
                if params.p.is_some() {
                    return reject("p");
                }
                Ok(match self.kind {
                    KindTag::Log => UtilityFunction::log(),
                    KindTag::GluedUnbounded => UtilityFunction::glued_unbounded(),
                    _ => UtilityFunction::slow_loss(),
                })
            }
            KindTag::Custom => Err(UtilityError::InvalidParameter(
                "custom utilities are read from a CSV table".into(),
            )),
        }
    }
}

pub use tabulated::from_csv;
