//! Separating measures, entropy functionals and their classification.

mod entropy;
mod polytope;
mod series;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpError;
use crate::market::{CountableModel, MarketError, MarketModel, SequenceConfig};
use crate::scalar::{Real, Scalar};

pub use entropy::{
    classify_measure, full_entropy, loss_entropy, mhatv_minus_mv_witness, Classification, EntropyMethod,
    EntropyReport, Witness,
};
pub use polytope::{separating_polytope, MeasurePolytope, MAX_VERTEX_STATES};
pub use series::{classify_series, SeriesReport, Verdict};

pub(crate) use polytope::lex_cmp;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("no separating measure exists (the market admits arbitrage)")]
    NoMeasure,
    #[error("normalization failed: E[dQ/dP] = {sum}, expected 1")]
    Normalization { sum: f64 },
    #[error("density coordinate {index} is negative or not finite")]
    NegativeDensity { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("reference weights differ from the market's probabilities")]
    WeightMismatch,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// A measure `Q ≪ P` given by its density with respect to the reference
/// measure.
#[derive(Debug, Clone)]
pub enum MeasureDensity<F> {
    Finite { weights: Vec<F>, density: Vec<F> },
    Countable { model: CountableModel<F>, n_max: usize },
}

impl<F: Real> MeasureDensity<F> {
    /// Requires `density ≥ 0` and `Σ pᵢ zᵢ = 1` within `1e-9`.
    pub fn finite(weights: Vec<F>, density: Vec<F>) -> Result<Self, MeasureError> {
        if weights.len() != density.len() {
            return Err(MeasureError::Dimension {
                expected: weights.len(),
                found: density.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(*w > F::zero()) || !w.is_finite()) {
            return Err(MeasureError::Invalid(format!("reference weight {i} must be positive")));
        }
        if let Some(index) = density.iter().position(|z| !(*z >= F::zero()) || !z.is_finite()) {
            return Err(MeasureError::NegativeDensity { index });
        }
        let sum = weights
            .iter()
            .zip(&density)
            .fold(F::zero(), |s, (p, z)| s + *p * *z);
        if (sum - F::one()).abs().as_f64() > NORMALIZATION_TOL {
            return Err(MeasureError::Normalization { sum: sum.as_f64() });
        }
        Ok(MeasureDensity::Finite { weights, density })
    }

    /// Density of the probability vector `q` with respect to `weights`.
    pub fn from_probabilities(weights: Vec<F>, q: &[F]) -> Result<Self, MeasureError> {
        if weights.len() != q.len() {
            return Err(MeasureError::Dimension {
                expected: weights.len(),
                found: q.len(),
            });
        }
        let density = q.iter().zip(&weights).map(|(q, p)| *q / *p).collect();
        Self::finite(weights, density)
    }

    pub fn countable(model: CountableModel<F>, n_max: usize) -> Self {
        MeasureDensity::Countable { model, n_max }
    }

    /// `Q = P`.
    pub fn reference(weights: Vec<F>) -> Self {
        let n = weights.len();
        MeasureDensity::Finite {
            weights,
            density: vec![F::one(); n],
        }
    }

    /// Q-probabilities on a finite space.
    pub fn probabilities(&self) -> Option<Vec<F>> {
        match self {
            MeasureDensity::Finite { weights, density } => {
                Some(weights.iter().zip(density).map(|(p, z)| *p * *z).collect())
            }
            MeasureDensity::Countable { .. } => None,
        }
    }

    pub fn len(&self) -> Option<usize> {
        match self {
            MeasureDensity::Finite { density, .. } => Some(density.len()),
            MeasureDensity::Countable { .. } => None,
        }
    }
}

/// Both sequences of a countable measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountablePair {
    pub p: SequenceConfig,
    pub q: SequenceConfig,
}

/// File form of a measure: a finite density, optionally with its own
/// reference weights, or a countable pair of catalog sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub countable: Option<CountablePair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

pub const DEFAULT_N_MAX: usize = 1_000_000;

impl MeasureConfig {
    /// Reference weights come from `p`, else from `market`, else uniform.
    pub fn build<S: Scalar>(&self, market: Option<&MarketModel<S>>) -> Result<MeasureDensity<f64>, MeasureError> {
        if let Some(v) = self.schema_version {
            if v != 1 {
                return Err(MeasureError::SchemaVersion(v));
            }
        }
        match (&self.density, &self.countable) {
            (Some(density), None) => {
                let weights = match (&self.p, market) {
                    (Some(p), _) => p.clone(),
                    (None, Some(m)) => m.reference_probabilities().iter().map(|x| x.to_f64_lossy()).collect(),
                    (None, None) => vec![1.0 / density.len().max(1) as f64; density.len()],
                };
                if let Some(m) = market {
                    if density.len() != m.num_states() {
                        return Err(MeasureError::Dimension {
                            expected: m.num_states(),
                            found: density.len(),
                        });
                    }
                }
                MeasureDensity::finite(weights, density.clone())
            }
            (None, Some(pair)) => {
                if self.p.is_some() {
                    return Err(MeasureError::Invalid("`p` applies only to finite densities".into()));
                }
                let n_max = self.n_max.unwrap_or(DEFAULT_N_MAX);
                let model = CountableModel::new(pair.p.build()?, pair.q.build()?, n_max)?;
                Ok(MeasureDensity::countable(model, n_max))
            }
            _ => Err(MeasureError::Invalid(
                "exactly one of `density` and `countable` is required".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_checked() {
        let e = MeasureDensity::finite(vec![0.5, 0.5], vec![0.9, 0.9]).unwrap_err();
        assert!(e.to_string().contains("normalization"));
        assert!(MeasureDensity::finite(vec![0.5, 0.5], vec![-0.1, 2.1]).is_err());
        assert!(MeasureDensity::finite(vec![0.25, 0.75], vec![2.0, 2.0 / 3.0]).is_ok());
    }

    #[test]
    fn config_forms() {
        let c: MeasureConfig = serde_json::from_str(r#"{"density": [1.0, 1.0]}"#).unwrap();
        assert!(c.build::<f64>(None).is_ok());
        let c: MeasureConfig = serde_json::from_str(
            r#"{"countable": {"p": {"kind": "geometric", "r": 0.5}, "q": {"kind": "powerlaw", "s": 2.0}}, "n_max": 1000}"#,
        )
        .unwrap();
        assert!(matches!(c.build::<f64>(None).unwrap(), MeasureDensity::Countable { n_max: 1000, .. }));
        assert!(serde_json::from_str::<MeasureConfig>(r#"{"density": [1], "extra": 1}"#).is_err());
        let both: MeasureConfig = serde_json::from_str(r#"{}"#).unwrap();
        assert!(both.build::<f64>(None).is_err());
    }
}
