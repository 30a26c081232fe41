use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Number of trailing dyadic windows inspected.
const WINDOWS: usize = 4;
const DECAY_RATIO: f64 = 0.95;
/// Slack on "nondecreasing" and on "ratios not creeping upward".
const DRIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Infinite,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport<F> {
    pub verdict: Verdict,
    pub partial_sum: F,
    pub n_terms: usize,
}

/// Heuristic convergence verdict for `Σ_{k≥1} t_k` from the terms up to
/// `n_max`.
///
/// Terms are grouped into dyadic windows `W_j = Σ_{2^j ≤ k < 2^{j+1}} t_k`;
/// only complete windows count. Over the last four windows:
///
/// * finite: every ratio `W_{j+1}/W_j` is at most 0.95 and the ratios do not
///   rise by more than `1e-3` from one window to the next;
/// * infinite: every window is positive and `W_{j+1} ≥ (1 − 1e-3) W_j`;
/// * unknown otherwise.
///
/// A ratio `0/0` counts as `0`. The upward-drift guard keeps series such as
/// `1/(k ln²k)`, whose ratios `j/(j+2)` approach 1 slowly, out of the finite
/// bucket; the relaxed monotonicity lets `1/k`, whose windows decrease
/// toward `ln 2`, register as divergent.
pub fn classify_series<F: Real>(mut terms: impl FnMut(usize) -> F, n_max: usize) -> SeriesReport<F> {
    let mut windows: Vec<F> = Vec::new();
    let mut partial = F::zero();
    let mut current = F::zero();
    let mut next_edge = 2usize;
    for k in 1..=n_max {
        let t = terms(k);
        partial = partial + t;
        current = current + t;
        if k + 1 == next_edge {
            windows.push(current);
            current = F::zero();
            next_edge = next_edge.saturating_mul(2);
        }
    }
    let verdict = if !partial.is_finite() && partial > F::zero() {
        Verdict::Infinite
    } else {
        window_verdict(&windows)
    };
    SeriesReport {
        verdict,
        partial_sum: partial,
        n_terms: n_max,
    }
}

fn window_verdict<F: Real>(windows: &[F]) -> Verdict {
    if windows.len() < WINDOWS {
        return Verdict::Unknown;
    }
    let tail = &windows[windows.len() - WINDOWS..];
    let ratios: Vec<F> = tail
        .windows(2)
        .map(|w| {
            if w[0] == F::zero() && w[1] == F::zero() {
                F::zero()
            } else {
                w[1] / w[0]
            }
        })
        .collect();
    let decays = ratios.iter().all(|&r| r <= F::lit(DECAY_RATIO));
    let steady = ratios.windows(2).all(|r| r[1] <= r[0] + F::lit(DRIFT));
    if decays && steady {
        return Verdict::Finite;
    }
    let grows = tail.iter().all(|&w| w > F::zero())
        && tail.windows(2).all(|w| w[1] >= (F::one() - F::lit(DRIFT)) * w[0]);
    if grows {
        Verdict::Infinite
    } else {
        Verdict::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_is_finite() {
        let r = classify_series(|k| 0.5_f64.powi(k as i32), 1_000);
        assert_eq!(r.verdict, Verdict::Finite);
        assert!((r.partial_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_is_infinite() {
        let r = classify_series(|k| 1.0 / k as f64, 1_000_000);
        assert_eq!(r.verdict, Verdict::Infinite);
    }

    #[test]
    fn slowly_convergent_is_unknown() {
        let t = |k: usize| {
            if k < 2 {
                0.0
            } else {
                let k = k as f64;
                1.0 / (k * k.ln().powi(2))
            }
        };
        assert_eq!(classify_series(t, 1_000_000).verdict, Verdict::Unknown);
    }

    #[test]
    fn all_zero_is_finite() {
        let r = classify_series(|_| 0.0_f64, 100);
        assert_eq!(r.verdict, Verdict::Finite);
        assert_eq!(r.partial_sum, 0.0);
    }

    #[test]
    fn too_short_is_unknown() {
        assert_eq!(classify_series(|_| 1.0_f64, 10).verdict, Verdict::Unknown);
    }
}
