use super::{UtilityError, UtilityFunction, UtilityKind};
use crate::scalar::{log_grid, Real};

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;
const BRACKET_DOUBLINGS: i32 = 64;

#[derive(Debug, Clone, Copy)]
enum Method {
    ClosedForm,
    /// Legendre transform by root-finding on `U'(x) = y`.
    Numeric,
}

/// `V(y) = sup_x {U(x) − x y}` on `(0, ∞)`, bundled with its source utility.
#[derive(Debug, Clone)]
pub struct ConjugatePair<F> {
    source: UtilityFunction<F>,
    method: Method,
}

/// Conjugate over the default working range `y ∈ [1e-4, 1e4]`.
pub fn conjugate<F: Real>(u: &UtilityFunction<F>) -> Result<ConjugatePair<F>, UtilityError> {
    conjugate_with_range(u, F::lit(1e-4), F::lit(1e4))
}

/// Catalog kinds get their closed form. Custom utilities are transformed
/// numerically, and every `y` on a 200-point log grid over `[lo, hi]` must be
/// bracketed by `U'` or the call fails with [`UtilityError::NonInada`].
pub fn conjugate_with_range<F: Real>(
    u: &UtilityFunction<F>,
    lo: F,
    hi: F,
) -> Result<ConjugatePair<F>, UtilityError> {
    match u.kind() {
        UtilityKind::Custom(_) => {
            for y in log_grid(lo, hi, 200) {
                maximizer(u, y).ok_or(UtilityError::NonInada { y: y.as_f64() })?;
            }
            Ok(ConjugatePair {
                source: u.clone(),
                method: Method::Numeric,
            })
        }
        _ => Ok(ConjugatePair {
            source: u.clone(),
            method: Method::ClosedForm,
        }),
    }
}

/// The unique `x` with `U'(x) = y`, or `None` when `U'` does not bracket `y`.
pub(crate) fn maximizer<F: Real>(u: &UtilityFunction<F>, y: F) -> Option<F> {
    if !(y > F::zero()) || !y.is_finite() {
        return None;
    }
    let a = u.critical_wealth();
    let one = F::one();
    let two = F::lit(2.0);
    let start = if a.is_finite() { a + one } else { F::zero() };

    // U' is decreasing: need lo with U'(lo) > y and hi with U'(hi) < y
    let mut hi = start;
    let mut step = one;
    let mut k = 0;
    while !(u.u_prime(hi) < y) {
        hi = start + step;
        step = step * two;
        k += 1;
        if k > BRACKET_DOUBLINGS {
            return None;
        }
    }
    let mut lo = start;
    let mut k = 0;
    let mut shrink = one;
    while !(u.u_prime(lo) > y) {
        if a.is_finite() {
            shrink = shrink / two;
            lo = a + (start - a) * shrink;
        } else {
            lo = start - shrink;
            shrink = shrink * two;
        }
        k += 1;
        if k > BRACKET_DOUBLINGS {
            return None;
        }
    }

    let tol = F::lit(ROOT_TOL) * one.max(y);
    let mut mid = (lo + hi) / two;
    for _ in 0..ROOT_MAX_ITER {
        mid = (lo + hi) / two;
        let d = u.u_prime(mid);
        if !d.is_finite() {
            return None;
        }
        if (d - y).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        if d > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(mid)
}

impl<F: Real> ConjugatePair<F> {
    pub fn source(&self) -> &UtilityFunction<F> {
        &self.source
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.method, Method::ClosedForm)
    }

    /// `V(y)` for `y > 0`; `V(0)` is `sup U`. NaN where the numeric
    /// transform cannot bracket `y`.
    pub fn v(&self, y: F) -> F {
        if y == F::zero() {
            return self.v_at_zero();
        }
        if y < F::zero() {
            return F::nan();
        }
        let one = F::one();
        let two = F::lit(2.0);
        match (self.method, self.source.kind()) {
            (Method::ClosedForm, UtilityKind::Exponential { gamma }) => {
                (one - y + y * y.ln()) / *gamma
            }
            (Method::ClosedForm, UtilityKind::Log) => -y.ln() - one,
            (Method::ClosedForm, UtilityKind::Power { p }) => {
                let q = *p / (*p - one);
                (one - *p) / *p * y.powf(q)
            }
            (Method::ClosedForm, UtilityKind::GluedUnbounded) => {
                if y <= one {
                    one / y
                } else {
                    F::lit(3.0) - two * y + y * y.ln()
                }
            }
            (Method::ClosedForm, UtilityKind::SlowLoss) => {
                let e = F::E();
                if y >= two {
                    (y - one).exp()
                } else {
                    two - e - y + e * y - y * (two / y).ln()
                }
            }
            _ => match maximizer(&self.source, y) {
                Some(x) => self.source.u(x) - x * y,
                None => F::nan(),
            },
        }
    }

    /// `V'(y)`, equal to minus the maximizing wealth.
    pub fn v_prime(&self, y: F) -> F {
        let one = F::one();
        let two = F::lit(2.0);
        match (self.method, self.source.kind()) {
            (Method::ClosedForm, UtilityKind::Exponential { gamma }) => y.ln() / *gamma,
            (Method::ClosedForm, UtilityKind::Log) => -one / y,
            (Method::ClosedForm, UtilityKind::Power { p }) => -y.powf(one / (*p - one)),
            (Method::ClosedForm, UtilityKind::GluedUnbounded) => {
                if y <= one {
                    -one / (y * y)
                } else {
                    y.ln() - one
                }
            }
            (Method::ClosedForm, UtilityKind::SlowLoss) => {
                if y >= two {
                    (y - one).exp()
                } else {
                    F::E() + (y / two).ln()
                }
            }
            _ => match maximizer(&self.source, y) {
                Some(x) => -x,
                None => F::nan(),
            },
        }
    }

    /// `max(V(y), 0)`.
    pub fn v_plus(&self, y: F) -> F {
        let v = self.v(y);
        if v > F::zero() {
            v
        } else {
            F::zero()
        }
    }

    /// `lim_{y↓0} V(y) = sup U`, possibly `+∞`.
    pub fn v_at_zero(&self) -> F {
        self.source.sup()
    }

    /// `ln(V⁺(y)/y)` as a function of `t = ln y`, `−∞` where `V(y) ≤ 0`.
    /// Used for series terms `p·V⁺(q/p) = exp(ln q + ln(V⁺(z)/z))` whose
    /// factors individually over- or underflow.
    pub fn ln_v_plus_over_y(&self, t: F) -> F {
        let one = F::one();
        let two = F::lit(2.0);
        let ln_pos = |x: F| if x > F::zero() { x.ln() } else { F::neg_infinity() };
        match (self.method, self.source.kind()) {
            (Method::ClosedForm, UtilityKind::Exponential { gamma }) => {
                // V(y)/y = (e^{-t} - 1 + t)/γ
                let s = if t < F::lit(-30.0) {
                    return -t + ((t - one) * t.exp()).ln_1p() - gamma.ln();
                } else {
                    (-t).exp_m1() + t
                };
                ln_pos(s / *gamma)
            }
            (Method::ClosedForm, UtilityKind::Log) => {
                // (-t - 1) e^{-t}
                ln_pos(-t - one) - t
            }
            (Method::ClosedForm, UtilityKind::Power { p }) => {
                let c = (one - *p) / *p;
                if c > F::zero() {
                    c.ln() + (*p / (*p - one) - one) * t
                } else {
                    F::neg_infinity()
                }
            }
            (Method::ClosedForm, UtilityKind::GluedUnbounded) => {
                if t <= F::zero() {
                    -two * t
                } else {
                    ln_pos(F::lit(3.0) * (-t).exp() - two + t)
                }
            }
            (Method::ClosedForm, UtilityKind::SlowLoss) if t >= two.ln() => t.exp() - one - t,
            _ => {
                let y = t.exp();
                ln_pos(self.v(y) / y)
            }
        }
    }
}
