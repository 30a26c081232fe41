//! Small dense helpers over [`Scalar`].

use crate::scalar::Scalar;

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// `Σ wᵢ aᵢ bᵢ`, the pairing between claims and densities.
pub fn weighted_dot<S: Scalar>(w: &[S], a: &[S], b: &[S]) -> S {
    w.iter()
        .zip(a.iter().zip(b))
        .fold(S::zero(), |acc, (w, (x, y))| {
            acc + w.clone() * x.clone() * y.clone()
        })
}

pub fn max_abs<S: Scalar>(v: &[S]) -> S {
    v.iter()
        .map(|x| x.abs())
        .fold(S::zero(), |m, x| if x > m { x } else { m })
}

/// Scales `v` to unit max-norm. Zero vectors are returned unchanged.
pub fn normalize_inf<S: Scalar>(v: &[S]) -> Vec<S> {
    let m = max_abs(v);
    if m.is_zero() {
        return v.to_vec();
    }
    v.iter().map(|x| x.clone() / m.clone()).collect()
}

pub fn hadamard<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()).collect()
}

pub fn is_zero_vec<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| x.is_negligible())
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref<S: Scalar>(rows: &mut Vec<Vec<S>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let mut best = r;
        for i in r + 1..rows.len() {
            if rows[i][c].abs() > rows[best][c].abs() {
                best = i;
            }
        }
        if rows[best][c].is_negligible() {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x = x.clone() / p.clone();
        }
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for k in 0..rows[i].len() {
                let delta = f.clone() * rows[r][k].clone();
                rows[i][k] = rows[i][k].clone() - delta;
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Solves the square system `a x = b`; `None` when singular.
pub fn solve<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let n = a.len();
    let mut aug: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, n);
    if pivots.len() < n {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n].clone()).collect())
}
