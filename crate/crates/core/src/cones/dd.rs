//! H→V conversion by the double description method.
//!
//! Input rows `a` describe `{x : a·x ≤ 0}` in plain Euclidean coordinates.
//! The output is a lineality basis and the extreme rays of the pointed part.

use crate::linalg::{dot, normalize_inf, rref, solve};
use crate::scalar::Scalar;

use super::ConeError;

/// Ambient dimension limit for the conversion.
pub const MAX_DD_DIM: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn is_subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

fn sign<S: Scalar>(x: &S, tol: &S) -> i8 {
    if *x > tol.clone() {
        1
    } else if *x < -tol.clone() {
        -1
    } else {
        0
    }
}

fn axpy<S: Scalar>(a: &S, x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(xi, yi)| a.clone() * xi.clone() + yi.clone()).collect()
}

/// `(lineality, rays)` with `{x : A x ≤ 0} = span(lineality) + cone(rays)`.
///
/// Rays are scaled to unit max-norm and sorted lexicographically. Float
/// inputs use a relative zero tolerance; exact scalars use none.
pub fn double_description<S: Scalar>(rows: &[Vec<S>], dim: usize) -> Result<(Vec<Vec<S>>, Vec<Vec<S>>), ConeError> {
    if dim > MAX_DD_DIM {
        return Err(ConeError::TooLarge { dim, max: MAX_DD_DIM });
    }
    let tol = if S::is_exact() {
        S::zero()
    } else {
        S::from_f64_lossy(1e-9)
    };
    let rows: Vec<Vec<S>> = rows
        .iter()
        .map(|r| {
            if r.len() != dim {
                Err(ConeError::Dimension {
                    expected: dim,
                    found: r.len(),
                })
            } else {
                Ok(normalize_inf(r))
            }
        })
        .collect::<Result<_, _>>()?;

    let mut lineality: Vec<Vec<S>> = (0..dim)
        .map(|i| {
            let mut e = vec![S::zero(); dim];
            e[i] = S::one();
            e
        })
        .collect();
    let mut rays: Vec<Vec<S>> = Vec::new();

    for (ri, a) in rows.iter().enumerate() {
        if a.iter().all(|x| sign(x, &tol) == 0) {
            continue;
        }
        let pivot = lineality
            .iter()
            .enumerate()
            .filter(|(_, l)| sign(&dot(a, l), &tol) != 0)
            .max_by(|(_, x), (_, y)| {
                dot(a, x)
                    .abs()
                    .partial_cmp(&dot(a, y).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i);
        if let Some(pi) = pivot {
            // the constraint cuts the lineality space: one direction becomes a ray
            let l = lineality.remove(pi);
            let al = dot(a, &l);
            let reduce = |v: &Vec<S>| -> Vec<S> {
                let c = -(dot(a, v) / al.clone());
                axpy(&c, &l, v)
            };
            lineality = lineality.iter().map(reduce).collect();
            rays = rays.iter().map(|r| normalize_inf(&reduce(r))).collect();
            let dir = if al > S::zero() {
                l.iter().map(|x| -x.clone()).collect::<Vec<_>>()
            } else {
                l
            };
            rays.push(normalize_inf(&dir));
            continue;
        }

        let processed = &rows[..=ri];
        let zero_set = |r: &Vec<S>| {
            let mut b = Bits::new(processed.len());
            for (i, h) in processed.iter().enumerate() {
                if sign(&dot(h, r), &tol) == 0 {
                    b.set(i);
                }
            }
            b
        };
        let vals: Vec<S> = rays.iter().map(|r| dot(a, r)).collect();
        let zs: Vec<Bits> = rays.iter().map(zero_set).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| sign(&vals[i], &tol) > 0).collect();
        if pos.is_empty() {
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| sign(&vals[i], &tol) < 0).collect();
        // adjacency needs at least (pointed dimension − 2) common tight rows
        let needed = (dim - lineality.len()).saturating_sub(2);
        let mut next: Vec<Vec<S>> = (0..rays.len())
            .filter(|&i| sign(&vals[i], &tol) <= 0)
            .map(|i| rays[i].clone())
            .collect();
        for &i in &pos {
            for &j in &neg {
                let common = zs[i].and(&zs[j]);
                if common.count() < needed {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .filter(|&k| k != i && k != j)
                    .all(|k| !common.is_subset_of(&zs[k]));
                if !adjacent {
                    continue;
                }
                // vals[i] r_j − vals[j] r_i lies on a·x = 0
                let combo: Vec<S> = rays[j]
                    .iter()
                    .zip(&rays[i])
                    .map(|(rj, ri)| vals[i].clone() * rj.clone() - vals[j].clone() * ri.clone())
                    .collect();
                next.push(normalize_inf(&combo));
            }
        }
        rays = next;
    }

    // canonical form: lineality in reduced row echelon form, rays projected
    // onto its orthogonal complement
    let lineality = canonical_basis(lineality, dim);
    let rays: Vec<Vec<S>> = rays
        .iter()
        .map(|r| normalize_inf(&project_out(r, &lineality)))
        .filter(|r| r.iter().any(|x| sign(x, &tol) != 0))
        .collect();
    let mut out: Vec<Vec<S>> = Vec::new();
    for r in rays {
        let dup = out
            .iter()
            .any(|o| o.iter().zip(&r).all(|(a, b)| sign(&(a.clone() - b.clone()), &tol) == 0));
        if !dup {
            out.push(r);
        }
    }
    out.sort_by(|a, b| crate::measures::lex_cmp(a, b));
    Ok((lineality, out))
}

fn canonical_basis<S: Scalar>(mut basis: Vec<Vec<S>>, dim: usize) -> Vec<Vec<S>> {
    if basis.is_empty() {
        return basis;
    }
    rref(&mut basis, dim);
    basis.iter().map(|b| normalize_inf(b)).collect()
}

/// `r − Π r` with `Π` the orthogonal projector onto `span(basis)`.
fn project_out<S: Scalar>(r: &[S], basis: &[Vec<S>]) -> Vec<S> {
    if basis.is_empty() {
        return r.to_vec();
    }
    let gram: Vec<Vec<S>> = basis
        .iter()
        .map(|a| basis.iter().map(|b| dot(a, b)).collect())
        .collect();
    let rhs: Vec<S> = basis.iter().map(|b| dot(b, r)).collect();
    let Some(c) = solve(&gram, &rhs) else {
        return r.to_vec();
    };
    let mut out = r.to_vec();
    for (ci, b) in c.iter().zip(basis) {
        out = axpy(&(-ci.clone()), b, &out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_traits::Signed;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    #[test]
    fn halfplane_has_lineality() {
        // x1 + x2 ≤ 0 in R²
        let (lin, rays) = double_description(&[vec![r(1), r(1)]], 2).unwrap();
        assert_eq!(lin.len(), 1);
        assert_eq!(rays.len(), 1);
        assert_eq!(rays[0], vec![r(-1), r(-1)]);
    }

    #[test]
    fn orthant() {
        let rows = vec![vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]];
        let (lin, rays) = double_description(&rows, 3).unwrap();
        assert!(lin.is_empty());
        assert_eq!(rays, vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]);
    }

    #[test]
    fn square_pyramid_has_four_rays() {
        // |x1| ≤ x3, |x2| ≤ x3
        let rows: Vec<Vec<Rational>> = vec![
            vec![r(1), r(0), r(-1)],
            vec![r(-1), r(0), r(-1)],
            vec![r(0), r(1), r(-1)],
            vec![r(0), r(-1), r(-1)],
        ];
        let (lin, rays) = double_description(&rows, 3).unwrap();
        assert!(lin.is_empty());
        assert_eq!(rays.len(), 4);
        for ray in &rays {
            assert_eq!(ray[2], r(1));
            assert_eq!(ray[0].abs(), r(1));
            assert_eq!(ray[1].abs(), r(1));
        }
    }

    #[test]
    fn no_rows_is_whole_space() {
        let (lin, rays) = double_description::<f64>(&[], 3).unwrap();
        assert_eq!(lin.len(), 3);
        assert!(rays.is_empty());
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(
            double_description::<f64>(&[], 13),
            Err(ConeError::TooLarge { .. })
        ));
    }
}
