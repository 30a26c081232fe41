use crate::linalg::{dot, rref, solve};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::market::MarketModel;
use crate::scalar::Scalar;

use super::MeasureError;

/// Vertex enumeration is exhaustive over bases, so it is only attempted up
/// to this many terminal states.
pub const MAX_VERTEX_STATES: usize = 12;

const VERTEX_FEAS_TOL: f64 = 1e-9;
const VERTEX_DISTINCT_TOL: f64 = 1e-8;

/// The set of probability vectors `q` on the terminal states with
/// `Σ qᵢ gᵢ = 0` for every gains generator `g`.
///
/// Entries are Q-probabilities; divide by the reference weights for
/// densities.
#[derive(Debug, Clone)]
pub struct MeasurePolytope<S> {
    weights: Vec<S>,
    equalities: Vec<Vec<S>>,
    vertices: Option<Vec<Vec<S>>>,
}

/// Builds the polytope of separating measures of `m`. Fails with
/// [`MeasureError::NoMeasure`] when the tree admits arbitrage.
pub fn separating_polytope<S: Scalar>(m: &MarketModel<S>) -> Result<MeasurePolytope<S>, MeasureError> {
    let n = m.num_states();
    let equalities: Vec<Vec<S>> = m
        .gains_space()
        .generators
        .into_iter()
        .filter(|g| !g.iter().all(|x| x.is_zero()))
        .collect();

    let mut lp = LinearProgram::new(n, Sense::Minimize);
    for g in &equalities {
        lp.add_constraint(g.clone(), Relation::Eq, S::zero());
    }
    lp.add_constraint(vec![S::one(); n], Relation::Eq, S::one());
    match lp.solve() {
        Ok(_) => {}
        Err(LpError::Infeasible) => return Err(MeasureError::NoMeasure),
        Err(e) => return Err(MeasureError::Lp(e)),
    }

    let vertices = if n <= MAX_VERTEX_STATES {
        Some(enumerate_vertices(&equalities, n))
    } else {
        None
    };
    Ok(MeasurePolytope {
        weights: m.reference_probabilities().to_vec(),
        equalities,
        vertices,
    })
}

/// Basic feasible solutions of `{q ≥ 0, E q = 0, 1ᵀq = 1}`.
fn enumerate_vertices<S: Scalar>(equalities: &[Vec<S>], n: usize) -> Vec<Vec<S>> {
    let mut rows: Vec<Vec<S>> = equalities
        .iter()
        .map(|g| {
            let mut r = g.clone();
            r.push(S::zero());
            r
        })
        .collect();
    let mut ones = vec![S::one(); n];
    ones.push(S::one());
    rows.push(ones);
    rref(&mut rows, n);
    let rank = rows.len();
    let a: Vec<Vec<S>> = rows.iter().map(|r| r[..n].to_vec()).collect();
    let b: Vec<S> = rows.iter().map(|r| r[n].clone()).collect();

    let feas = S::from_f64_lossy(VERTEX_FEAS_TOL);
    let mut found: Vec<Vec<S>> = Vec::new();
    for support in combinations(n, rank) {
        let sub: Vec<Vec<S>> = a
            .iter()
            .map(|r| support.iter().map(|&j| r[j].clone()).collect())
            .collect();
        let Some(x) = solve(&sub, &b) else { continue };
        if x.iter().any(|v| *v < -feas.clone()) {
            continue;
        }
        let mut q = vec![S::zero(); n];
        for (&j, v) in support.iter().zip(x) {
            q[j] = if v < S::zero() { S::zero() } else { v };
        }
        let distinct = S::from_f64_lossy(VERTEX_DISTINCT_TOL);
        let dup = found.iter().any(|f| {
            f.iter()
                .zip(&q)
                .all(|(a, b)| (a.clone() - b.clone()).abs() <= distinct)
        });
        if !dup {
            found.push(q);
        }
    }
    found.sort_by(|a, b| lex_cmp(a, b));
    found
}

pub(crate) fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl<S: Scalar> MeasurePolytope<S> {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Rows `g` of the constraints `E_Q[g] = 0`.
    pub fn equalities(&self) -> &[Vec<S>] {
        &self.equalities
    }

    /// Vertices as Q-probability vectors, lexicographically sorted; `None`
    /// above [`MAX_VERTEX_STATES`] states.
    pub fn vertices(&self) -> Option<&[Vec<S>]> {
        self.vertices.as_deref()
    }

    pub fn density_of(&self, q: &[S]) -> Vec<S> {
        q.iter()
            .zip(&self.weights)
            .map(|(qi, pi)| qi.clone() / pi.clone())
            .collect()
    }

    /// Vertex densities `dQ/dP`.
    pub fn vertex_densities(&self) -> Option<Vec<Vec<S>>> {
        self.vertices
            .as_ref()
            .map(|vs| vs.iter().map(|q| self.density_of(q)).collect())
    }

    /// Mean of the vertices, a point in the relative interior.
    pub fn barycenter(&self) -> Option<Vec<S>> {
        let vs = self.vertices.as_ref()?;
        let k = S::from_usize(vs.len())?;
        let mut c = vec![S::zero(); self.dim()];
        for v in vs {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci = ci.clone() + vi.clone();
            }
        }
        Some(c.into_iter().map(|x| x / k.clone()).collect())
    }

    /// Largest constraint violation of the probability vector `q`.
    pub fn violation(&self, q: &[S]) -> S {
        let mut worst = S::zero();
        let mut bump = |v: S| {
            if v > worst {
                worst = v;
            }
        };
        for g in &self.equalities {
            bump(dot(g, q).abs());
        }
        let total = q.iter().cloned().fold(S::zero(), |a, b| a + b);
        bump((total - S::one()).abs());
        for x in q {
            bump(-x.clone());
        }
        worst
    }
}
