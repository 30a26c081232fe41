//! The cones `K_U` and `C_U` of a finite market and the duality checks that
//! tie them to the separating measures.

use serde::{Deserialize, Serialize};

use super::{membership_tol, ConeError, PolyCone};
use crate::linalg::{dot, normalize_inf, weighted_dot};
use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::market::{Claim, MarketModel};
use crate::measures::{separating_polytope, MeasureError, MeasurePolytope};
use crate::scalar::Scalar;

/// `K_U = K − R₊ⁿ`: the gains generators as linear directions plus `−eᵢ`.
pub fn build_ku<S: Scalar>(m: &MarketModel<S>) -> PolyCone<S> {
    let n = m.num_states();
    let mut generators = Vec::new();
    let mut linear = Vec::new();
    for g in m.gains_space().generators {
        if g.iter().any(|x| !x.is_zero()) {
            generators.push(g);
            linear.push(true);
        }
    }
    for i in 0..n {
        let mut e = vec![S::zero(); n];
        e[i] = -S::one();
        generators.push(e);
        linear.push(false);
    }
    PolyCone::from_generators(m.reference_probabilities().to_vec(), generators, linear)
        .expect("market dimensions are consistent")
}

/// `C_U` both as the closure of `K_U` (already closed) and as the polar of
/// the cone over the vertex densities.
#[derive(Debug, Clone)]
pub struct CuBuild<S> {
    /// polar of `cone(vertex densities)`
    pub cone: PolyCone<S>,
    /// closure of `K_U`
    pub closure_ku: PolyCone<S>,
    pub agreement_violation: S,
    pub agree: bool,
}

fn vertex_cone<S: Scalar>(m: &MarketModel<S>, poly: &MeasurePolytope<S>) -> Result<PolyCone<S>, ConeError> {
    let densities = poly.vertex_densities().ok_or(ConeError::NoVertices(m.num_states()))?;
    if densities.is_empty() {
        return Err(ConeError::EmptyMeasureSet);
    }
    let k = densities.len();
    PolyCone::from_generators(m.reference_probabilities().to_vec(), densities, vec![false; k])
}

pub fn build_cu<S: Scalar>(m: &MarketModel<S>, poly: &MeasurePolytope<S>) -> Result<CuBuild<S>, ConeError> {
    let via_measures = vertex_cone(m, poly)?.polar()?;
    let closure_ku = build_ku(m);
    let v = via_measures.equality_violation(&closure_ku)?;
    Ok(CuBuild {
        agree: v <= membership_tol::<S>(),
        cone: via_measures,
        closure_ku,
        agreement_violation: v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub name: String,
    pub holds: bool,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub chain_equalities: Vec<ChainCheck>,
    /// number of generator-membership tests performed
    pub claims_checked: usize,
}

impl DualityReport {
    pub fn all_hold(&self) -> bool {
        self.chain_equalities.iter().all(|c| c.holds)
    }
}

fn polytope_or_empty<S: Scalar>(m: &MarketModel<S>) -> Result<MeasurePolytope<S>, ConeError> {
    match separating_polytope(m) {
        Ok(p) => Ok(p),
        Err(MeasureError::NoMeasure) => Err(ConeError::EmptyMeasureSet),
        Err(e) => Err(e.into()),
    }
}

fn check(name: &str, violation: f64, tol: f64) -> ChainCheck {
    ChainCheck {
        name: name.into(),
        holds: violation <= tol,
        max_violation: violation,
    }
}

/// Verifies `cone(M̂_V) = K_U◁ = C_U◁` and `C_U = (M̂_V)◁` at `1e-8` by
/// mutual generator membership.
pub fn verify_duality_chain<S: Scalar>(m: &MarketModel<S>) -> Result<DualityReport, ConeError> {
    let tol = super::MEMBERSHIP_TOL;
    let poly = polytope_or_empty(m)?;
    let ku = build_ku(m);
    let ku_polar = ku.polar()?;
    let vcone = vertex_cone(m, &poly)?;
    let cu = build_cu(m, &poly)?;
    let cu_polar = cu.cone.polar()?;
    let mut tests = 0;
    let mut count = |a: &PolyCone<S>, b: &PolyCone<S>| {
        tests += a.signed_generators().len() + b.signed_generators().len();
    };

    let v1 = ku_polar.equality_violation(&vcone)?;
    count(&ku_polar, &vcone);
    let v2 = cu_polar.equality_violation(&ku_polar)?;
    count(&cu_polar, &ku_polar);
    count(&cu.cone, &cu.closure_ku);

    // sandwich: every element of K_U◁ is nonnegative and orthogonal to K
    let gains = m.gains_space().generators;
    let w = m.reference_probabilities();
    let mut v3 = 0.0_f64;
    for h in ku_polar.signed_generators() {
        let h = normalize_inf(&h);
        for x in &h {
            v3 = v3.max((-x.clone()).to_f64_lossy());
        }
        for g in &gains {
            v3 = v3.max(weighted_dot(w, &h, g).to_f64_lossy().abs());
        }
        tests += 1;
    }

    Ok(DualityReport {
        chain_equalities: vec![
            check("K_U_polar = cone(M1 vertices)", v1.to_f64_lossy(), tol),
            check("C_U_polar = K_U_polar", v2.to_f64_lossy(), tol),
            check("K_U_polar within nonnegative orthant and K-orthogonal", v3, tol),
            check(
                "C_U: closure(K_U) = polar(cone(M1 vertices))",
                cu.agreement_violation.to_f64_lossy(),
                tol,
            ),
            // on a finite space every density is bounded, so the integrability
            // restriction removes nothing
            check("L_V+ cap cone(M1) = cone(hatM_V)", 0.0, tol),
        ],
        claims_checked: tests,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCheck {
    pub measure: usize,
    pub passed: bool,
    /// minimal `t` with `X ≤ t + Gθ` on `supp(Q)`; `None` when unbounded below
    pub t_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRepresentation {
    pub in_cu: bool,
    pub projections_pass: bool,
    pub projections: Vec<ProjectionCheck>,
    /// vertex maximizing `E_Q[X]` and its value, for claims outside `C_U`
    pub separating_vertex: Option<Vec<f64>>,
    pub separating_value: Option<f64>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub claims: Vec<ClaimRepresentation>,
    pub measures_sampled: usize,
    pub all_consistent: bool,
}

/// `min t` subject to `X_i ≤ t + (Gθ)_i` on the coordinates in `support`.
fn projected_suprep<S: Scalar>(gains: &[Vec<S>], x: &[S], support: &[usize]) -> Result<Option<S>, ConeError> {
    let k = gains.len();
    let mut lp = LinearProgram::new(k + 1, Sense::Minimize);
    for j in 0..=k {
        lp.set_free(j);
    }
    lp.set_objective_coeff(k, S::one());
    for &i in support {
        let mut row: Vec<S> = gains.iter().map(|g| g[i].clone()).collect();
        row.push(S::one());
        lp.add_constraint(row, Relation::Ge, x[i].clone());
    }
    match lp.solve() {
        Ok(s) => Ok(Some(s.objective)),
        Err(LpError::Unbounded) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Compares membership in `C_U` with the projection test over the sampled
/// measures (vertices plus barycenter when `measures` is empty), and exhibits
/// a separating vertex for every rejected claim.
pub fn verify_representation<S: Scalar>(
    m: &MarketModel<S>,
    claims: &[Claim<S>],
    measures: &[Vec<S>],
) -> Result<RepresentationReport, ConeError> {
    let poly = polytope_or_empty(m)?;
    let vertices = poly
        .vertices()
        .ok_or(ConeError::NoVertices(m.num_states()))?
        .to_vec();
    let sampled: Vec<Vec<S>> = if measures.is_empty() {
        let mut s = vertices.clone();
        s.extend(poly.barycenter());
        s
    } else {
        measures.to_vec()
    };
    let cu = build_ku(m);
    let gains: Vec<Vec<S>> = m.gains_space().generators;
    let tol = membership_tol::<S>();
    let mut out = Vec::new();
    for claim in claims {
        let x = &claim.payoff;
        if x.len() != m.num_states() {
            return Err(ConeError::Dimension {
                expected: m.num_states(),
                found: x.len(),
            });
        }
        let in_cu = cu.contains(x)?;
        let mut projections = Vec::new();
        for (qi, q) in sampled.iter().enumerate() {
            let support: Vec<usize> = (0..q.len()).filter(|&i| q[i].is_positive_tol()).collect();
            let t = projected_suprep(&gains, x, &support)?;
            let passed = match &t {
                None => true,
                Some(t) => *t <= tol,
            };
            projections.push(ProjectionCheck {
                measure: qi,
                passed,
                t_star: t.map(|t| t.to_f64_lossy()),
            });
        }
        let projections_pass = projections.iter().all(|p| p.passed);
        let (mut separating_vertex, mut separating_value) = (None, None);
        if !in_cu {
            let best = vertices
                .iter()
                .map(|q| (dot(q, x), q))
                .fold(None::<(S, &Vec<S>)>, |acc, (v, q)| match acc {
                    Some((bv, bq)) if bv >= v => Some((bv, bq)),
                    _ => Some((v, q)),
                });
            if let Some((v, q)) = best {
                separating_value = Some(v.to_f64_lossy());
                separating_vertex = Some(q.iter().map(|x| x.to_f64_lossy()).collect());
            }
        }
        let separated = in_cu || separating_value.is_some_and(|v| v > tol.to_f64_lossy());
        out.push(ClaimRepresentation {
            in_cu,
            projections_pass,
            consistent: in_cu == projections_pass && separated,
            projections,
            separating_vertex,
            separating_value,
        });
    }
    Ok(RepresentationReport {
        all_consistent: out.iter().all(|c| c.consistent),
        measures_sampled: sampled.len(),
        claims: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MarketConfig;
    use crate::scalar::Rational;

    fn tri() -> MarketModel<Rational> {
        MarketModel::build(&MarketConfig::trinomial()).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn trinomial_ku_generators() {
        let ku = build_ku(&tri());
        assert_eq!(ku.generators()[0], vec![r(1, 1), r(0, 1), r(-1, 2)]);
        assert_eq!(ku.linear(), &[true, false, false, false]);
    }

    #[test]
    fn trinomial_chain_exact() {
        let rep = verify_duality_chain(&tri()).unwrap();
        assert!(rep.all_hold(), "{rep:?}");
        for c in &rep.chain_equalities {
            assert_eq!(c.max_violation, 0.0, "{}", c.name);
        }
    }

    #[test]
    fn trinomial_cu_halfspaces_are_vertices() {
        let m = tri();
        let poly = separating_polytope(&m).unwrap();
        let cu = build_cu(&m, &poly).unwrap();
        assert!(cu.agree);
        // E_Q[X] ≤ 0 for both vertices
        assert!(cu.cone.contains(&[r(-1, 1), r(0, 1), r(1, 2)]).unwrap());
        assert!(!cu.cone.contains(&[r(1, 1), r(0, 1), r(0, 1)]).unwrap());
    }

    #[test]
    fn arbitrage_is_empty_measure_set() {
        let cfg = MarketConfig::one_period(1.0, &[2.0, 1.5], &[0.5, 0.5]);
        let m = MarketModel::<f64>::build(&cfg).unwrap();
        assert_eq!(verify_duality_chain(&m).unwrap_err(), ConeError::EmptyMeasureSet);
    }

    #[test]
    fn representation_examples() {
        let m = tri();
        let claims = vec![
            m.claim(vec![r(-1, 1); 3]).unwrap(),
            m.claim(vec![r(1, 1), r(0, 1), r(0, 1)]).unwrap(),
            m.claim(vec![r(1, 1), r(0, 1), r(-1, 2)]).unwrap(),
        ];
        let rep = verify_representation(&m, &claims, &[]).unwrap();
        assert!(rep.all_consistent);
        assert!(rep.claims[0].in_cu && rep.claims[0].projections_pass);
        assert!(!rep.claims[1].in_cu);
        assert_eq!(rep.claims[1].separating_value, Some(1.0 / 3.0));
        assert_eq!(rep.claims[1].separating_vertex, Some(vec![1.0 / 3.0, 0.0, 2.0 / 3.0]));
        assert!(rep.claims[2].in_cu);
        assert_eq!(rep.measures_sampled, 3);
    }
}
