use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MarketError;
use crate::scalar::Real;

/// A probability sequence indexed by `k = 1, 2, ...`, evaluated through its
/// logarithm so that tails far beyond `f64` underflow stay usable.
#[derive(Clone)]
pub enum Sequence<F> {
    /// `(1 - r) r^(k-1)`
    Geometric { r: F },
    /// `c k^(-s)` with `c = 1/ζ(s)`
    PowerLaw { s: F, c: F },
    Custom {
        label: String,
        ln_term: Arc<dyn Fn(usize) -> F + Send + Sync>,
    },
}

impl<F: Real> Sequence<F> {
    pub fn geometric(r: F) -> Result<Self, MarketError> {
        if !(r > F::zero() && r < F::one()) {
            return Err(MarketError::Countable(format!(
                "geometric ratio must lie in (0,1), got {r}"
            )));
        }
        Ok(Sequence::Geometric { r })
    }

    pub fn power_law(s: F) -> Result<Self, MarketError> {
        if !(s > F::one()) || !s.is_finite() {
            return Err(MarketError::Countable(format!(
                "power-law exponent must exceed 1, got {s}"
            )));
        }
        Ok(Sequence::PowerLaw {
            s,
            c: power_law_constant(s),
        })
    }

    pub fn custom(label: impl Into<String>, ln_term: impl Fn(usize) -> F + Send + Sync + 'static) -> Self {
        Sequence::Custom {
            label: label.into(),
            ln_term: Arc::new(ln_term),
        }
    }

    pub fn ln_term(&self, k: usize) -> F {
        debug_assert!(k >= 1);
        let kf = F::lit(k as f64);
        match self {
            Sequence::Geometric { r } => (F::one() - *r).ln() + (kf - F::one()) * r.ln(),
            Sequence::PowerLaw { s, c } => c.ln() - *s * kf.ln(),
            Sequence::Custom { ln_term, .. } => ln_term(k),
        }
    }

    pub fn term(&self, k: usize) -> F {
        self.ln_term(k).exp()
    }

    pub fn partial_sum(&self, n: usize) -> F {
        (1..=n).fold(F::zero(), |acc, k| acc + self.term(k))
    }

    pub fn label(&self) -> String {
        match self {
            Sequence::Geometric { r } => format!("geometric(r={r})"),
            Sequence::PowerLaw { s, .. } => format!("powerlaw(s={s})"),
            Sequence::Custom { label, .. } => label.clone(),
        }
    }
}

impl<F: fmt::Debug> fmt::Debug for Sequence<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Geometric { r } => write!(f, "geometric(r={r:?})"),
            Sequence::PowerLaw { s, .. } => write!(f, "powerlaw(s={s:?})"),
            Sequence::Custom { label, .. } => f.write_str(label),
        }
    }
}

/// `1/ζ(s)` for `s > 1`, by direct summation plus an Euler–Maclaurin tail.
pub fn power_law_constant<F: Real>(s: F) -> F {
    const N: usize = 1000;
    let head = (1..N).fold(F::zero(), |acc, k| acc + F::lit(k as f64).powf(-s));
    let n = F::lit(N as f64);
    let two = F::lit(2.0);
    let tail = n.powf(F::one() - s) / (s - F::one())
        + n.powf(-s) / two
        + s * n.powf(-s - F::one()) / F::lit(12.0)
        - s * (s + F::one()) * (s + two) * n.powf(-s - F::lit(3.0)) / F::lit(720.0);
    F::one() / (head + tail)
}

/// One-period countable-state model: reference weights `p_k` and a second
/// measure `q_k`, both indexed from `k = 1`.
#[derive(Debug, Clone)]
pub struct CountableModel<F> {
    pub p: Sequence<F>,
    pub q: Sequence<F>,
    pub truncation_default: usize,
}

impl<F: Real> CountableModel<F> {
    pub fn new(p: Sequence<F>, q: Sequence<F>, truncation_default: usize) -> Result<Self, MarketError> {
        let m = Self {
            p,
            q,
            truncation_default,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), MarketError> {
        let bound = F::one() + F::lit(1e-9);
        for (name, seq) in [("p", &self.p), ("q", &self.q)] {
            let mut sum = F::zero();
            for k in 1..=self.truncation_default {
                let t = seq.term(k);
                if !(t >= F::zero()) || !t.is_finite() {
                    return Err(MarketError::Countable(format!(
                        "{name}_{k} is not a finite nonnegative number"
                    )));
                }
                sum = sum + t;
            }
            if sum > bound {
                return Err(MarketError::Countable(format!(
                    "partial sum of {name} up to {} is {sum} > 1",
                    self.truncation_default
                )));
            }
        }
        Ok(())
    }

    /// `ln(q_k / p_k)`, the log-density of q with respect to p.
    pub fn ln_density(&self, k: usize) -> F {
        self.q.ln_term(k) - self.p.ln_term(k)
    }
}

/// File form of a catalog sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SequenceConfig {
    Geometric { r: f64 },
    Powerlaw { s: f64 },
}

impl SequenceConfig {
    pub fn build<F: Real>(&self) -> Result<Sequence<F>, MarketError> {
        match *self {
            SequenceConfig::Geometric { r } => Sequence::geometric(F::lit(r)),
            SequenceConfig::Powerlaw { s } => Sequence::power_law(F::lit(s)),
        }
    }
}
