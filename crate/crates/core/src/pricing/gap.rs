//! Truncation study of a one-period countable market.
//!
//! The family: states `k = 1..N` with weights `∝ r^(k-1)`, one asset with
//! `S_0 = s0` and `S_1(k) = k`. The claim `−k` is unbounded below as `N`
//! grows; `(k − s0)⁺` is bounded below. The primal uses strategies whose
//! wealth stays above `−L`, the dual is the plain sup over the truncated
//! separating measures. This is an illustrative construction, not a
//! reproduction of any published example.

use serde::{Deserialize, Serialize};

use super::{suprep_dual, suprep_primal, ConeChoice, PricingError};
use crate::market::{MarketConfig, MarketModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationFamily {
    pub r: f64,
    pub s0: f64,
}

impl Default for TruncationFamily {
    fn default() -> Self {
        Self { r: 0.9, s0: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyClaim {
    /// `X_k = −k`
    UnboundedBelow,
    /// `X_k = (k − s0)⁺`
    BoundedBelow,
}

impl StudyClaim {
    fn payoff(self, k: usize, s0: f64) -> f64 {
        let k = k as f64;
        match self {
            StudyClaim::UnboundedBelow => -k,
            StudyClaim::BoundedBelow => (k - s0).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub claim: StudyClaim,
    pub lower_bound: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// The family truncated to `n` states, weights renormalized.
pub fn truncation_market(family: &TruncationFamily, n: usize) -> Result<MarketModel<f64>, PricingError> {
    if !(family.r > 0.0 && family.r < 1.0) || !family.s0.is_finite() {
        return Err(PricingError::Invalid(format!("bad family parameters {family:?}")));
    }
    if n == 0 {
        return Err(PricingError::Invalid("truncation level must be positive".into()));
    }
    let raw: Vec<f64> = (0..n).map(|i| family.r.powi(i as i32)).collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) || raw.iter().any(|w| !(*w > 0.0)) {
        return Err(PricingError::Invalid(format!("truncation at {n} states is not normalizable")));
    }
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let prices: Vec<f64> = (1..=n).map(|k| k as f64).collect();
    Ok(MarketModel::build(&MarketConfig::one_period(family.s0, &prices, &weights))?)
}

/// One row per (level, claim).
pub fn truncation_gap_study(
    family: &TruncationFamily,
    levels: &[usize],
    lower_bound: f64,
    claims: &[StudyClaim],
) -> Result<Vec<GapRow>, PricingError> {
    let mut rows = Vec::new();
    for &n in levels {
        let m = truncation_market(family, n)?;
        for &claim in claims {
            let x = m.claim((1..=n).map(|k| claim.payoff(k, family.s0)).collect())?;
            let (primal, _) = suprep_primal(&m, &x, &ConeChoice::KAdm { lower_bound })?;
            let (dual, _) = suprep_dual(&m, &x)?;
            rows.push(GapRow {
                n,
                claim,
                lower_bound,
                primal,
                dual,
                gap: primal - dual,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbounded_claim_keeps_a_gap() {
        let fam = TruncationFamily::default();
        let rows = truncation_gap_study(&fam, &[10, 100], 5.0, &[StudyClaim::UnboundedBelow]).unwrap();
        for row in &rows {
            // two-point bound: primal = −1 − 4/(N−1), dual = −2
            let expected = -1.0 - 4.0 / (row.n as f64 - 1.0);
            assert!((row.primal - expected).abs() < 1e-9, "{row:?}");
            assert!((row.dual + 2.0).abs() < 1e-9);
            assert!(row.gap > 0.5);
        }
    }

    #[test]
    fn bounded_claim_has_no_gap() {
        let fam = TruncationFamily::default();
        let rows = truncation_gap_study(&fam, &[10, 50], 5.0, &[StudyClaim::BoundedBelow]).unwrap();
        assert!(rows.iter().all(|r| r.gap.abs() <= 1e-7), "{rows:?}");
    }

    #[test]
    fn too_few_states_has_no_measure() {
        let fam = TruncationFamily::default();
        assert!(truncation_gap_study(&fam, &[1], 5.0, &[StudyClaim::UnboundedBelow]).is_err());
    }
}
