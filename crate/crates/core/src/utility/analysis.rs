//! Numeric checks of the standing assumptions on a utility.
//!
//! Limits are replaced by fixed geometric grids: `x = 2^j` or `x = a + 2^{-j}`
//! with `j ≤ 40`, and thresholds `1e6` / `1e-6` on marginal utility.

use serde::{Deserialize, Serialize};

use super::conjugate::{conjugate, ConjugatePair};
use super::{UtilityError, UtilityFunction};
use crate::scalar::{log_grid, Real};

const GRID_MAX_EXP: i32 = 40;
const INADA_HIGH: f64 = 1e6;
const INADA_LOW: f64 = 1e-6;
const RAE_MARGIN: f64 = 1e-6;
const GROWTH_GRID: usize = 10_000;
const GROWTH_Y_MAX: f64 = 1e8;
const GROWTH_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InadaReport {
    pub lower_limit_ok: bool,
    pub upper_limit_ok: bool,
    /// `U'` at the grid point closest to the critical wealth
    #[serde(with = "crate::extended")]
    pub lower_sample: f64,
    /// `U'` at `x = 2^40`
    #[serde(with = "crate::extended")]
    pub upper_sample: f64,
}

pub fn check_inada<F: Real>(u: &UtilityFunction<F>) -> InadaReport {
    let two = F::lit(2.0);
    let a = u.critical_wealth();
    let near_a = if a.is_finite() {
        a + two.powi(-GRID_MAX_EXP)
    } else {
        -two.powi(GRID_MAX_EXP)
    };
    let lower = u.u_prime(near_a).as_f64();
    let upper = u.u_prime(two.powi(GRID_MAX_EXP)).as_f64();
    InadaReport {
        lower_limit_ok: lower > INADA_HIGH,
        upper_limit_ok: upper < INADA_LOW,
        lower_sample: lower,
        upper_sample: upper,
    }
}

/// Verdict on reasonable asymptotic elasticity at `−∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "estimate", rename_all = "snake_case")]
pub enum Elasticity<F> {
    /// Half-line domain: the condition is not imposed.
    NotRequired,
    Holds(F),
    Fails(F),
}

impl<F> Elasticity<F> {
    pub fn holds(&self) -> bool {
        matches!(self, Elasticity::Holds(_))
    }
}

/// Estimates `liminf_{x→−∞} x U'(x)/U(x)` from the samples `x = −2^j`,
/// `j = 1..40`.
///
/// The estimate is the smaller of the running minimum over the tail half of
/// the grid and the intercept of a least-squares fit of the ratio against
/// `1/ln(−x)`. The fit catches ratios that creep down to their limit at
/// logarithmic speed, which the finite grid alone cannot reach.
pub fn asymptotic_elasticity_minus<F: Real>(
    u: &UtilityFunction<F>,
) -> Result<Elasticity<F>, UtilityError> {
    if !u.whole_line() {
        return Ok(Elasticity::NotRequired);
    }
    let samples = elasticity_samples(u, F::zero())
        .or_else(|_| elasticity_samples(u, F::lit(0.5)))?;
    let tail = &samples[samples.len() / 2..];
    let running_min = tail
        .iter()
        .map(|&(_, r)| r)
        .fold(F::infinity(), |m, r| m.min(r));

    // least squares r ≈ c0 + c1 s with s = 1/ln(-x)
    let n = F::lit(tail.len() as f64);
    let (mut ss, mut sr, mut sss, mut ssr) = (F::zero(), F::zero(), F::zero(), F::zero());
    for &(x, r) in tail {
        let s = F::one() / (-x).ln();
        ss = ss + s;
        sr = sr + r;
        sss = sss + s * s;
        ssr = ssr + s * r;
    }
    let denom = n * sss - ss * ss;
    let intercept = if denom.abs() > F::zero() {
        (sr * sss - ss * ssr) / denom
    } else {
        running_min
    };
    let estimate = if intercept.is_finite() {
        running_min.min(intercept)
    } else {
        running_min
    };
    Ok(if estimate > F::one() + F::lit(RAE_MARGIN) {
        Elasticity::Holds(estimate)
    } else {
        Elasticity::Fails(estimate)
    })
}

/// Samples `(x, ratio)` on the grid. A zero of `U` on the grid is a domain
/// error; points where `U` or `U'` overflow are skipped.
fn elasticity_samples<F: Real>(u: &UtilityFunction<F>, offset: F) -> Result<Vec<(F, F)>, UtilityError> {
    let two = F::lit(2.0);
    let mut out = Vec::new();
    for j in 1..=GRID_MAX_EXP {
        let x = -two.powf(F::lit(j as f64) + offset);
        if u.u(x) == F::zero() {
            return Err(UtilityError::Domain { x: x.as_f64() });
        }
        if let Some(r) = u.elasticity(x) {
            out.push((x, r));
        }
    }
    if out.len() < 4 {
        return Err(UtilityError::Domain {
            x: -two.powi(GRID_MAX_EXP).as_f64(),
        });
    }
    Ok(out)
}

/// Constants `(b, D)` with `V` positive and increasing beyond `b` and
/// `V(αy) ≤ D V(y)` for `y > b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate<F> {
    pub alpha: F,
    pub b: F,
    pub d_const: F,
    /// grid supremum of `V(αy)/V(y)` before the safety factor
    pub sup_ratio: F,
    pub verification_grid_size: usize,
}

/// Requires reasonable asymptotic elasticity at `−∞`. `b` is twice the
/// smallest search-grid point from which `V` and `V'` stay positive.
pub fn growth_constants<F: Real>(
    u: &UtilityFunction<F>,
    alpha: F,
) -> Result<GrowthCertificate<F>, UtilityError> {
    if !asymptotic_elasticity_minus(u)?.holds() {
        return Err(UtilityError::RaeRequired);
    }
    let pair = conjugate(u)?;
    let grid = log_grid(F::lit(1e-4), F::lit(GROWTH_Y_MAX), GROWTH_GRID);
    let mut start = None;
    for (i, &y) in grid.iter().enumerate().rev() {
        if pair.v(y) > F::zero() && pair.v_prime(y) > F::zero() {
            start = Some(i);
        } else {
            break;
        }
    }
    let b = start
        .map(|i| grid[i] * F::lit(2.0))
        .filter(|&b| b < F::lit(GROWTH_Y_MAX))
        .ok_or(UtilityError::NoPositiveRegion)?;
    growth_constants_with_b(&pair, alpha, b)
}

/// Growth constants for a caller-chosen `b`. The supremum is taken over a
/// `10^4`-point log grid on `[b, 1e8]`; the certificate is then checked on
/// the geometric midpoints of that grid, which it never saw.
pub fn growth_constants_with_b<F: Real>(
    pair: &ConjugatePair<F>,
    alpha: F,
    b: F,
) -> Result<GrowthCertificate<F>, UtilityError> {
    if !(alpha > F::one()) || !alpha.is_finite() {
        return Err(UtilityError::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(b > F::zero() && b < F::lit(GROWTH_Y_MAX)) {
        return Err(UtilityError::InvalidParameter(format!("b out of range: {b}")));
    }
    let grid = log_grid(b, F::lit(GROWTH_Y_MAX), GROWTH_GRID);
    let mut sup = F::zero();
    for &y in &grid {
        let vy = pair.v(y);
        if !(vy > F::zero()) {
            return Err(UtilityError::NoPositiveRegion);
        }
        let r = pair.v(alpha * y) / vy;
        if !r.is_finite() {
            return Err(UtilityError::CertificateRejected { y: y.as_f64() });
        }
        sup = sup.max(r);
    }
    let d_const = F::lit(GROWTH_SAFETY) * sup;

    let verify: Vec<F> = grid.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    if !(pair.v(b) > F::zero()) {
        return Err(UtilityError::CertificateRejected { y: b.as_f64() });
    }
    let mut prev = pair.v(b);
    for &y in &verify {
        let vy = pair.v(y);
        if !(vy > prev) || pair.v(alpha * y) > d_const * vy {
            return Err(UtilityError::CertificateRejected { y: y.as_f64() });
        }
        prev = vy;
    }
    Ok(GrowthCertificate {
        alpha,
        b,
        d_const,
        sup_ratio: sup,
        verification_grid_size: verify.len(),
    })
}
