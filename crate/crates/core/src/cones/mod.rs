//! Polyhedral cones under the P-weighted pairing `⟨X, h⟩ = Σ pᵢ Xᵢ hᵢ`.
//!
//! With this pairing a halfspace normal is a density: `{X : ⟨X, z⟩ ≤ 0}` is
//! `{X : E_Q[X] ≤ 0}` for `z = dQ/dP`.

mod dd;
mod market;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hadamard, normalize_inf, weighted_dot};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::measures::MeasureError;
use crate::scalar::Scalar;

pub use dd::{double_description, MAX_DD_DIM};
pub use market::{
    build_cu, build_ku, verify_duality_chain, verify_representation, ChainCheck, ClaimRepresentation, CuBuild,
    DualityReport, ProjectionCheck, RepresentationReport,
};

/// Uniform membership tolerance for float cones.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("dimension {dim} exceeds the conversion limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("the set of separating measures is empty")]
    EmptyMeasureSet,
    #[error("vertex enumeration unavailable for {0} states")]
    NoVertices(usize),
    #[error("invalid cone: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A finitely generated convex cone in `R^n`, optionally with a halfspace
/// description. Generators flagged linear contribute both signs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCone<S> {
    dim: usize,
    weights: Vec<S>,
    generators: Vec<Vec<S>>,
    linear: Vec<bool>,
    /// normals `h` of `{x : ⟨h, x⟩ ≤ 0}`
    halfspaces: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> PolyCone<S> {
    /// The cone generated by `generators`; `linear[i]` marks a two-sided
    /// generator. Weights must be positive.
    pub fn from_generators(weights: Vec<S>, generators: Vec<Vec<S>>, linear: Vec<bool>) -> Result<Self, ConeError> {
        let dim = weights.len();
        if weights.iter().any(|w| !(*w > S::zero())) {
            return Err(ConeError::Invalid("weights must be positive".into()));
        }
        if linear.len() != generators.len() {
            return Err(ConeError::Dimension {
                expected: generators.len(),
                found: linear.len(),
            });
        }
        for g in &generators {
            if g.len() != dim {
                return Err(ConeError::Dimension {
                    expected: dim,
                    found: g.len(),
                });
            }
        }
        Ok(Self {
            dim,
            weights,
            generators,
            linear,
            halfspaces: None,
        })
    }

    /// `{x : ⟨h, x⟩ ≤ 0 for every h}`, with generators by double description.
    pub fn from_halfspaces(weights: Vec<S>, halfspaces: Vec<Vec<S>>) -> Result<Self, ConeError> {
        let dim = weights.len();
        let rows: Vec<Vec<S>> = halfspaces
            .iter()
            .map(|h| {
                if h.len() != dim {
                    Err(ConeError::Dimension {
                        expected: dim,
                        found: h.len(),
                    })
                } else {
                    Ok(hadamard(&weights, h))
                }
            })
            .collect::<Result<_, _>>()?;
        let (lineality, rays) = double_description(&rows, dim)?;
        let linear = lineality
            .iter()
            .map(|_| true)
            .chain(rays.iter().map(|_| false))
            .collect();
        let generators = lineality.into_iter().chain(rays).collect();
        let mut cone = Self::from_generators(weights, generators, linear)?;
        cone.halfspaces = Some(halfspaces);
        Ok(cone)
    }

    /// Uniform weights `1/n`.
    pub fn uniform_weights(dim: usize) -> Vec<S> {
        let n = S::from_usize(dim.max(1)).expect("dimension fits the scalar");
        vec![S::one() / n; dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn generators(&self) -> &[Vec<S>] {
        &self.generators
    }

    pub fn linear(&self) -> &[bool] {
        &self.linear
    }

    pub fn halfspaces(&self) -> Option<&[Vec<S>]> {
        self.halfspaces.as_deref()
    }

    /// Generators with linear ones expanded into both signs.
    pub fn signed_generators(&self) -> Vec<Vec<S>> {
        let mut out = Vec::new();
        for (g, &lin) in self.generators.iter().zip(&self.linear) {
            out.push(g.clone());
            if lin {
                out.push(g.iter().map(|x| -x.clone()).collect());
            }
        }
        out
    }

    /// The polar cone `{h : ⟨x, h⟩ ≤ 0 for all x in self}`. Its halfspaces
    /// are the signed generators of `self`.
    pub fn polar(&self) -> Result<PolyCone<S>, ConeError> {
        PolyCone::from_halfspaces(self.weights.clone(), self.signed_generators())
    }

    /// The same cone with redundant generators appended: pairwise sums of
    /// consecutive generators and the sum of all of them.
    pub fn with_redundant_combinations(&self) -> PolyCone<S> {
        let signed = self.signed_generators();
        let mut extra = Vec::new();
        for w in signed.windows(2) {
            extra.push(w[0].iter().zip(&w[1]).map(|(a, b)| a.clone() + b.clone()).collect::<Vec<S>>());
        }
        if !signed.is_empty() {
            let mut total = vec![S::zero(); self.dim];
            for g in &signed {
                for (t, x) in total.iter_mut().zip(g) {
                    *t = t.clone() + x.clone();
                }
            }
            extra.push(total);
        }
        let mut generators = self.generators.clone();
        let mut linear = self.linear.clone();
        for e in extra {
            generators.push(e);
            linear.push(false);
        }
        PolyCone {
            dim: self.dim,
            weights: self.weights.clone(),
            generators,
            linear,
            halfspaces: None,
        }
    }

    /// Distance-like residual of `x` from the cone: the minimal L1 norm of
    /// `x̂ − Σ λ g` over admissible coefficients, with `x̂ = x / ‖x‖_∞`.
    pub fn membership_residual(&self, x: &[S]) -> Result<S, ConeError> {
        if x.len() != self.dim {
            return Err(ConeError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let target = normalize_inf(x);
        if target.iter().all(|v| v.is_zero()) {
            return Ok(S::zero());
        }
        let k = self.generators.len();
        let n = self.dim;
        // variables: λ (k), s⁺ (n), s⁻ (n)
        let mut lp = LinearProgram::new(k + 2 * n, Sense::Minimize);
        for (j, &lin) in self.linear.iter().enumerate() {
            if lin {
                lp.set_free(j);
            }
        }
        let mut obj = vec![S::zero(); k];
        obj.extend(std::iter::repeat_n(S::one(), 2 * n));
        lp.set_objective(obj);
        for i in 0..n {
            let mut row: Vec<S> = self.generators.iter().map(|g| g[i].clone()).collect();
            row.extend((0..n).map(|t| if t == i { S::one() } else { S::zero() }));
            row.extend((0..n).map(|t| if t == i { -S::one() } else { S::zero() }));
            lp.add_constraint(row, Relation::Eq, target[i].clone());
        }
        Ok(lp.solve()?.objective)
    }

    /// Generator-side membership at [`MEMBERSHIP_TOL`] (exact for rationals).
    pub fn contains(&self, x: &[S]) -> Result<bool, ConeError> {
        Ok(self.membership_residual(x)? <= membership_tol::<S>())
    }

    /// Largest `⟨h, x̂⟩` over the halfspaces, `x̂ = x/‖x‖_∞`, halfspaces
    /// scaled to unit max-norm; `None` without an H-representation.
    pub fn halfspace_violation(&self, x: &[S]) -> Option<S> {
        let hs = self.halfspaces.as_ref()?;
        let xn = normalize_inf(x);
        let mut worst = S::zero();
        for h in hs {
            let v = weighted_dot(&self.weights, &normalize_inf(h), &xn);
            if v > worst {
                worst = v;
            }
        }
        Some(worst)
    }

    pub fn contains_h(&self, x: &[S]) -> Option<bool> {
        self.halfspace_violation(x).map(|v| v <= membership_tol::<S>())
    }

    /// Largest residual of a signed generator of `self` inside `other`.
    pub fn inclusion_violation(&self, other: &PolyCone<S>) -> Result<S, ConeError> {
        let mut worst = S::zero();
        for g in self.signed_generators() {
            let r = other.membership_residual(&g)?;
            if r > worst {
                worst = r;
            }
        }
        Ok(worst)
    }

    /// Mutual-inclusion violation; the cones agree when it is within
    /// tolerance.
    pub fn equality_violation(&self, other: &PolyCone<S>) -> Result<S, ConeError> {
        let a = self.inclusion_violation(other)?;
        let b = other.inclusion_violation(self)?;
        Ok(if a > b { a } else { b })
    }
}

pub(crate) fn membership_tol<S: Scalar>() -> S {
    if S::is_exact() {
        S::zero()
    } else {
        S::from_f64_lossy(MEMBERSHIP_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipolarReport {
    pub holds: bool,
    /// mutual-inclusion violation of `A◁◁` against `cone(A)`
    pub bipolar_violation: f64,
    /// mutual-inclusion violation of `cone(A)◁` against `A◁`
    pub hull_polar_violation: f64,
}

/// Checks `A◁◁ = cone(A)` and `cone(A)◁ = A◁`, where the conic hull is
/// represented with redundant nonnegative combinations added.
pub fn bipolar_report<S: Scalar>(c: &PolyCone<S>) -> Result<BipolarReport, ConeError> {
    let polar = c.polar()?;
    let bipolar = polar.polar()?;
    let bv = bipolar.equality_violation(c)?;
    let hull_polar = c.with_redundant_combinations().polar()?;
    let hv = hull_polar.equality_violation(&polar)?;
    let tol = membership_tol::<S>();
    Ok(BipolarReport {
        holds: bv <= tol && hv <= tol,
        bipolar_violation: bv.to_f64_lossy(),
        hull_polar_violation: hv.to_f64_lossy(),
    })
}

pub fn bipolar_check<S: Scalar>(c: &PolyCone<S>) -> Result<bool, ConeError> {
    Ok(bipolar_report(c)?.holds)
}

/// File form: `{"dim", "generators", "linear", "p"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub dim: usize,
    pub generators: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

impl ConeConfig {
    pub fn build<S: Scalar>(&self) -> Result<PolyCone<S>, ConeError> {
        if let Some(v) = self.schema_version {
            if v != 1 {
                return Err(ConeError::Invalid(format!("unsupported schema_version {v}")));
            }
        }
        let weights = match &self.p {
            Some(p) => {
                if p.len() != self.dim {
                    return Err(ConeError::Dimension {
                        expected: self.dim,
                        found: p.len(),
                    });
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(ConeError::Invalid(format!("weights sum to {s}, expected 1")));
                }
                p.iter().map(|&x| S::from_f64_lossy(x)).collect()
            }
            None => PolyCone::<S>::uniform_weights(self.dim),
        };
        if self.generators.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ConeError::Invalid("non-finite generator entry".into()));
        }
        let generators = self
            .generators
            .iter()
            .map(|g| g.iter().map(|&x| S::from_f64_lossy(x)).collect())
            .collect();
        let linear = self.linear.clone().unwrap_or_else(|| vec![false; self.generators.len()]);
        PolyCone::from_generators(weights, generators, linear)
    }

    /// The file form of `c`, generators only.
    pub fn from_cone<S: Scalar>(c: &PolyCone<S>) -> Self {
        ConeConfig {
            schema_version: Some(1),
            dim: c.dim(),
            generators: c
                .generators()
                .iter()
                .map(|g| g.iter().map(|x| x.to_f64_lossy()).collect())
                .collect(),
            linear: Some(c.linear().to_vec()),
            p: Some(c.weights().iter().map(|x| x.to_f64_lossy()).collect()),
        }
    }
}
