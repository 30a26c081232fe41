use serde::{Deserialize, Serialize};

use super::series::{classify_series, SeriesReport, Verdict};
use super::{MeasureDensity, MeasureError};
use crate::market::{CountableModel, MarketModel, Sequence};
use crate::scalar::{Real, Scalar};
use crate::utility::ConjugatePair;

const M1_TOL: f64 = 1e-9;
/// Countable `q` given by a custom sequence must sum to 1 within this at
/// the truncation level; catalog sequences are normalized analytically.
const COUNTABLE_MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    #[serde(rename = "in_M1")]
    pub in_m1: bool,
    #[serde(rename = "in_hatMV")]
    pub in_hat_mv: bool,
    #[serde(rename = "in_MV")]
    pub in_mv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyMethod {
    ExactSum,
    SeriesPartial {
        n_terms: usize,
        verdict: Verdict,
        full_verdict: Verdict,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    #[serde(with = "crate::extended")]
    pub loss_entropy: f64,
    #[serde(with = "crate::extended")]
    pub full_entropy: f64,
    pub b_used: f64,
    pub classification: Classification,
    pub method: EntropyMethod,
}

/// `E[V⁺(Z) 1{Z ≥ b}]` for a finite density. Countable densities go
/// through [`loss_series`].
fn finite_loss<F: Real>(weights: &[F], density: &[F], pair: &ConjugatePair<F>, b: F) -> F {
    weights
        .iter()
        .zip(density)
        .filter(|(_, z)| **z >= b)
        .fold(F::zero(), |s, (p, z)| s + *p * pair.v_plus(*z))
}

/// `E[V(Z)]` with `V(0) = sup U`.
fn finite_full<F: Real>(weights: &[F], density: &[F], pair: &ConjugatePair<F>) -> F {
    weights
        .iter()
        .zip(density)
        .fold(F::zero(), |s, (p, z)| s + *p * pair.v(*z))
}

/// Terms `p_k V⁺(z_k) 1{z_k ≥ b} = exp(ln q_k + ln(V⁺(z_k)/z_k))`.
fn loss_series<F: Real>(model: &CountableModel<F>, n_max: usize, pair: &ConjugatePair<F>, b: F) -> SeriesReport<F> {
    let ln_b = b.ln();
    classify_series(
        |k| {
            let lq = model.q.ln_term(k);
            if lq == F::neg_infinity() {
                return F::zero();
            }
            let t = lq - model.p.ln_term(k);
            if t < ln_b {
                F::zero()
            } else {
                (lq + pair.ln_v_plus_over_y(t)).exp()
            }
        },
        n_max,
    )
}

/// Classifies the positive part of `Σ p_k V(z_k)`; the negative part is
/// dominated by an affine function of `z` and always converges. The
/// returned partial sum is the signed one.
fn full_series<F: Real>(model: &CountableModel<F>, n_max: usize, pair: &ConjugatePair<F>) -> SeriesReport<F> {
    let v0 = pair.v_at_zero();
    let mut negative = F::zero();
    let mut report = classify_series(
        |k| {
            let lp = model.p.ln_term(k);
            let lq = model.q.ln_term(k);
            if lq == F::neg_infinity() {
                let pk = lp.exp();
                return if v0 > F::zero() { pk * v0 } else {
                    negative = negative - pk * v0;
                    F::zero()
                };
            }
            let t = lq - lp;
            let y = t.exp();
            if y.is_finite() && y > F::zero() {
                let v = pair.v(y);
                if v < F::zero() {
                    negative = negative - lp.exp() * v;
                    return F::zero();
                }
            }
            (lq + pair.ln_v_plus_over_y(t)).exp()
        },
        n_max,
    );
    report.partial_sum = report.partial_sum - negative;
    report
}

fn extended<F: Real>(r: &SeriesReport<F>) -> f64 {
    match r.verdict {
        Verdict::Infinite => f64::INFINITY,
        _ => r.partial_sum.as_f64(),
    }
}

/// Loss entropy `E[V⁺(dQ/dP) 1{dQ/dP ≥ b}]`; `+∞` when the series is
/// judged divergent. Unknown series verdicts return the partial sum.
pub fn loss_entropy<F: Real>(q: &MeasureDensity<F>, pair: &ConjugatePair<F>, b: F) -> f64 {
    match q {
        MeasureDensity::Finite { weights, density } => finite_loss(weights, density, pair, b).as_f64(),
        MeasureDensity::Countable { model, n_max } => extended(&loss_series(model, *n_max, pair, b)),
    }
}

/// Full entropy `E[V(dQ/dP)]`, extended-real.
pub fn full_entropy<F: Real>(q: &MeasureDensity<F>, pair: &ConjugatePair<F>) -> f64 {
    match q {
        MeasureDensity::Finite { weights, density } => finite_full(weights, density, pair).as_f64(),
        MeasureDensity::Countable { model, n_max } => extended(&full_series(model, *n_max, pair)),
    }
}

/// Membership of `q` in `M_1`, `M̂_V` and `M_V`.
///
/// With `m` given the density must match its terminal states, and `M_1`
/// additionally requires `|E_Q[g]| ≤ 1e-9` for every gains generator.
/// Without a market the gains space is `{0}`. An unknown series verdict
/// counts as not finite.
pub fn classify_measure<F: Real, S: Scalar>(
    q: &MeasureDensity<F>,
    pair: &ConjugatePair<F>,
    m: Option<&MarketModel<S>>,
    b: F,
) -> Result<EntropyReport, MeasureError> {
    if !(b > F::zero()) {
        return Err(MeasureError::Invalid(format!("b must be positive, got {b}")));
    }
    match q {
        MeasureDensity::Finite { weights, density } => {
            let mut in_m1 = true;
            if let Some(m) = m {
                if density.len() != m.num_states() {
                    return Err(MeasureError::Dimension {
                        expected: m.num_states(),
                        found: density.len(),
                    });
                }
                let reference = m.reference_probabilities();
                let mismatch = weights
                    .iter()
                    .zip(reference)
                    .any(|(w, r)| (w.as_f64() - r.to_f64_lossy()).abs() > M1_TOL);
                if mismatch {
                    return Err(MeasureError::WeightMismatch);
                }
                let probs: Vec<f64> = weights
                    .iter()
                    .zip(density)
                    .map(|(p, z)| (*p * *z).as_f64())
                    .collect();
                for g in m.gains_space().generators {
                    let e: f64 = g.iter().zip(&probs).map(|(g, q)| g.to_f64_lossy() * q).sum();
                    if e.abs() > M1_TOL {
                        in_m1 = false;
                    }
                }
            }
            let loss = finite_loss(weights, density, pair, b).as_f64();
            let full = finite_full(weights, density, pair).as_f64();
            let loss_ok = loss.is_finite();
            let full_ok = full.is_finite() || full == f64::NEG_INFINITY;
            Ok(EntropyReport {
                loss_entropy: loss,
                full_entropy: full,
                b_used: b.as_f64(),
                classification: Classification {
                    in_m1,
                    in_hat_mv: in_m1 && loss_ok,
                    in_mv: in_m1 && loss_ok && full_ok,
                },
                method: EntropyMethod::ExactSum,
            })
        }
        MeasureDensity::Countable { model, n_max } => {
            if m.is_some() {
                return Err(MeasureError::Invalid(
                    "countable densities are classified without a finite market".into(),
                ));
            }
            let normalized = match model.q {
                Sequence::Custom { .. } => {
                    (model.q.partial_sum(*n_max) - F::one()).abs().as_f64() <= COUNTABLE_MASS_TOL
                }
                _ => true,
            };
            let loss = loss_series(model, *n_max, pair, b);
            let full = full_series(model, *n_max, pair);
            let loss_ok = loss.verdict == Verdict::Finite;
            let full_ok = full.verdict == Verdict::Finite;
            Ok(EntropyReport {
                loss_entropy: extended(&loss),
                full_entropy: extended(&full),
                b_used: b.as_f64(),
                classification: Classification {
                    in_m1: normalized,
                    in_hat_mv: normalized && loss_ok,
                    in_mv: normalized && loss_ok && full_ok,
                },
                method: EntropyMethod::SeriesPartial {
                    n_terms: *n_max,
                    verdict: loss.verdict,
                    full_verdict: full.verdict,
                },
            })
        }
    }
}

/// A countable measure with finite loss entropy but infinite entropy.
#[derive(Debug, Clone)]
pub struct Witness<F> {
    pub density: MeasureDensity<F>,
    /// threshold at which the loss entropy vanishes identically
    pub b: F,
}

/// Truncation used for the witness series.
const WITNESS_N_MAX: usize = 1 << 16;

/// States `n = 1, 2, ...` with `p_n = 2^{-n}` and density `z_1 = 5/3`,
/// `z_n = 2^{-(n-1)}` for `n ≥ 2`. Densities stay below `b = 2`, so the
/// loss entropy is zero, while `p_n V(z_n) ≈ p_n / z_n = 1/2` for utilities
/// whose conjugate blows up like `1/y` at the origin.
///
/// Requires `U` on the whole line with `sup U = +∞`.
pub fn mhatv_minus_mv_witness<F: Real>(pair: &ConjugatePair<F>) -> Result<Witness<F>, MeasureError> {
    if !pair.source().whole_line() {
        return Err(MeasureError::Precondition(
            "utility must be defined on the whole real line".into(),
        ));
    }
    if pair.v_at_zero().is_finite() {
        return Err(MeasureError::Precondition(format!(
            "V(0+) = {} is finite",
            pair.v_at_zero()
        )));
    }
    let ln2 = F::LN_2();
    let p = Sequence::geometric(F::lit(0.5))?;
    let q = Sequence::custom("mhatv-witness", move |k: usize| {
        if k == 1 {
            F::lit(5.0 / 6.0).ln()
        } else {
            -F::lit((2 * k - 1) as f64) * ln2
        }
    });
    let model = CountableModel::new(p, q, WITNESS_N_MAX)?;
    Ok(Witness {
        density: MeasureDensity::countable(model, WITNESS_N_MAX),
        b: F::lit(2.0),
    })
}
