//! Super-replication prices: the primal minimal-capital LP, the dual
//! supremum over separating measures, and the gap between them.

mod gap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::market::{Claim, MarketError, MarketModel};
use crate::measures::{lex_cmp, separating_polytope, MeasureError, MeasurePolytope};
use crate::scalar::Scalar;

pub use gap::{truncation_gap_study, truncation_market, GapRow, StudyClaim, TruncationFamily};

/// Strong-duality acceptance threshold for `|primal − dual|`.
pub const GAP_TOL: f64 = 1e-7;
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("primal LP is unbounded: the market admits arbitrage")]
    Unbounded,
    #[error("the set of separating measures is empty")]
    EmptyMeasureSet,
    #[error("duality gap {gap} exceeds tolerance (primal {primal}, dual {dual})")]
    DualityGap { primal: f64, dual: f64, gap: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lp(LpError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Measure(MeasureError),
}

impl From<MeasureError> for PricingError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::NoMeasure => PricingError::EmptyMeasureSet,
            other => PricingError::Measure(other),
        }
    }
}

impl From<LpError> for PricingError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Unbounded => PricingError::Unbounded,
            other => PricingError::Lp(other),
        }
    }
}

/// Which cone the hedging error must fall into.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeChoice<S> {
    /// closure of `K_U`; identical LP to `Ku` on finite trees
    Cu,
    Ku,
    /// strategies whose running wealth stays above `−lower_bound`
    KAdm { lower_bound: S },
}

/// `X ≤ capital + Σ θ g` with `slack = capital + Σ θ g − X ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalCertificate<S> {
    pub capital: S,
    /// one coefficient per gains generator, in generator order
    pub strategy: Vec<S>,
    pub slack: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate<S> {
    /// Q-probabilities
    pub measure: Vec<S>,
    pub density: Vec<S>,
}

fn check_dim<S: Scalar>(m: &MarketModel<S>, x: &Claim<S>) -> Result<(), PricingError> {
    if x.payoff.len() != m.num_states() {
        return Err(PricingError::Dimension {
            expected: m.num_states(),
            found: x.payoff.len(),
        });
    }
    Ok(())
}

/// Coefficients of the running gains at `node` in terms of the strategy
/// vector, following the path `path` from the root.
fn partial_gains<S: Scalar>(m: &MarketModel<S>, path: &[usize], index: &[(usize, usize)]) -> Vec<S> {
    let mut coeffs = vec![S::zero(); index.len()];
    let nodes = m.nodes();
    for step in path.windows(2) {
        let (from, to) = (step[0], step[1]);
        for (j, &(node, asset)) in index.iter().enumerate() {
            if node == from {
                coeffs[j] = nodes[to].prices[asset].clone() - nodes[from].prices[asset].clone();
            }
        }
    }
    coeffs
}

/// `inf {x : X ≤ x + Y, Y in the chosen cone}` by LP over `(x, θ)`.
///
/// The capital is shifted by an upper bound `c` of every right-hand side so
/// that all rows read `−x' − Gθ ≤ c − b` with nonnegative right side and the
/// slack basis is feasible from the start.
pub fn suprep_primal<S: Scalar>(
    m: &MarketModel<S>,
    x: &Claim<S>,
    cone: &ConeChoice<S>,
) -> Result<(S, PrimalCertificate<S>), PricingError> {
    check_dim(m, x)?;
    let gains = m.gains_space();
    let k = gains.len();
    let n = m.num_states();
    let floor = match cone {
        ConeChoice::KAdm { lower_bound } => {
            if !(*lower_bound > S::zero()) {
                return Err(PricingError::Invalid("admissibility bound must be positive".into()));
            }
            Some(-lower_bound.clone())
        }
        _ => None,
    };
    let leaf_rhs: Vec<S> = x
        .payoff
        .iter()
        .map(|v| match &floor {
            Some(f) if *f > *v => f.clone(),
            _ => v.clone(),
        })
        .collect();
    let mut c = leaf_rhs.iter().cloned().fold(S::zero(), |a, b| if b > a { b } else { a });
    if let Some(f) = &floor {
        if *f > c {
            c = f.clone();
        }
    }

    let mut lp = LinearProgram::new(k + 1, Sense::Minimize);
    for j in 0..=k {
        lp.set_free(j);
    }
    lp.set_objective_coeff(0, S::one());
    let mut add_row = |coeffs: &[S], b: &S| {
        let mut row = vec![-S::one()];
        row.extend(coeffs.iter().map(|g| -g.clone()));
        lp.add_constraint(row, Relation::Le, c.clone() - b.clone());
    };
    for (w, b) in leaf_rhs.iter().enumerate() {
        let coeffs: Vec<S> = gains.generators.iter().map(|g| g[w].clone()).collect();
        add_row(&coeffs, b);
    }
    if let Some(f) = &floor {
        add_row(&vec![S::zero(); k], f);
        let leaves = m.terminal_states();
        for node in m.non_terminal_nodes() {
            if node == m.root() {
                continue;
            }
            let leaf = (0..n)
                .find(|&s| m.path(s).contains(&node))
                .expect("every internal node has a leaf below it");
            debug_assert!(leaves.len() == n);
            let path = m.path(leaf);
            let upto = path.iter().position(|&v| v == node).expect("node on path");
            add_row(&partial_gains(m, &path[..=upto], &gains.sources), f);
        }
    }

    let sol = lp.solve()?;
    let capital = c + sol.values[0].clone();
    let strategy = sol.values[1..].to_vec();
    let wealth = gains.wealth(&strategy, n);
    let slack = wealth
        .iter()
        .zip(&x.payoff)
        .map(|(w, xv)| capital.clone() + w.clone() - xv.clone())
        .collect();
    Ok((
        capital.clone(),
        PrimalCertificate {
            capital,
            strategy,
            slack,
        },
    ))
}

/// `sup E_Q[X]` over the separating measures by LP; see
/// [`suprep_dual_with`].
pub fn suprep_dual<S: Scalar>(m: &MarketModel<S>, x: &Claim<S>) -> Result<(S, DualCertificate<S>), PricingError> {
    let poly = separating_polytope(m)?;
    suprep_dual_with(&poly, x)
}

/// Dual price over a precomputed polytope. When vertices are available the
/// certificate is the optimal vertex with the lexicographically smallest
/// density.
pub fn suprep_dual_with<S: Scalar>(
    poly: &MeasurePolytope<S>,
    x: &Claim<S>,
) -> Result<(S, DualCertificate<S>), PricingError> {
    let n = poly.dim();
    if x.payoff.len() != n {
        return Err(PricingError::Dimension {
            expected: n,
            found: x.payoff.len(),
        });
    }
    let mut lp = LinearProgram::new(n, Sense::Maximize);
    lp.set_objective(x.payoff.clone());
    for g in poly.equalities() {
        lp.add_constraint(g.clone(), Relation::Eq, S::zero());
    }
    lp.add_constraint(vec![S::one(); n], Relation::Eq, S::one());
    let sol = match lp.solve() {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Err(PricingError::EmptyMeasureSet),
        Err(e) => return Err(e.into()),
    };
    let value = sol.objective.clone();
    let mut measure = sol.values;
    if let Some(vertices) = poly.vertices() {
        let tie = if S::is_exact() {
            S::zero()
        } else {
            let scale = if value.abs() > S::one() { value.abs() } else { S::one() };
            S::from_f64_lossy(TIE_TOL) * scale
        };
        let best = vertices
            .iter()
            .filter(|q| crate::linalg::dot(q, &x.payoff) >= value.clone() - tie.clone())
            .map(|q| (poly.density_of(q), q))
            .min_by(|a, b| lex_cmp(&a.0, &b.0));
        if let Some((_, q)) = best {
            measure = q.clone();
        }
    }
    let density = poly.density_of(&measure);
    Ok((value, DualCertificate { measure, density }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceReport<S> {
    pub primal: S,
    pub dual: S,
    pub gap: S,
    pub primal_certificate: PrimalCertificate<S>,
    pub dual_certificate: DualCertificate<S>,
}

impl<S: Scalar> PriceReport<S> {
    pub fn summary(&self) -> PriceSummary {
        let f = |v: &[S]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
        PriceSummary {
            schema_version: 1,
            primal: self.primal.to_f64_lossy(),
            dual: self.dual.to_f64_lossy(),
            gap: self.gap.to_f64_lossy(),
            dual_vertex: f(&self.dual_certificate.measure),
            strategy: f(&self.primal_certificate.strategy),
            slack: f(&self.primal_certificate.slack),
        }
    }
}

/// JSON form of a [`PriceReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSummary {
    pub schema_version: u32,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub dual_vertex: Vec<f64>,
    pub strategy: Vec<f64>,
    pub slack: Vec<f64>,
}

/// Both sides of the price and their gap. Fails with
/// [`PricingError::DualityGap`] when `|gap| > 1e-7`.
pub fn price_report<S: Scalar>(m: &MarketModel<S>, x: &Claim<S>) -> Result<PriceReport<S>, PricingError> {
    let poly = separating_polytope(m)?;
    price_report_with(m, &poly, x)
}

pub fn price_report_with<S: Scalar>(
    m: &MarketModel<S>,
    poly: &MeasurePolytope<S>,
    x: &Claim<S>,
) -> Result<PriceReport<S>, PricingError> {
    let (primal, primal_certificate) = suprep_primal(m, x, &ConeChoice::Cu)?;
    let (dual, dual_certificate) = suprep_dual_with(poly, x)?;
    let gap = primal.clone() - dual.clone();
    if gap.abs().to_f64_lossy() > GAP_TOL {
        return Err(PricingError::DualityGap {
            primal: primal.to_f64_lossy(),
            dual: dual.to_f64_lossy(),
            gap: gap.to_f64_lossy(),
        });
    }
    Ok(PriceReport {
        primal,
        dual,
        gap,
        primal_certificate,
        dual_certificate,
    })
}
