//! Independent oracles shared by the integration tests. None of these call
//! into the solver code they check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// `sup_x {U(x) − x y}` by a geometric grid scan followed by golden-section
/// refinement around the best grid point. `a` is the left end of the domain.
pub fn legendre_oracle(u: &dyn Fn(f64) -> f64, a: f64, y: f64) -> f64 {
    let mut xs: Vec<f64> = Vec::new();
    let steps = 4.0;
    if a.is_finite() {
        let mut j = -60.0;
        while j <= 60.0 {
            xs.push(a + 2f64.powf(j));
            j += 1.0 / steps;
        }
    } else {
        let mut j = -40.0;
        while j <= 1023.0 {
            let x = 2f64.powf(j);
            xs.push(x);
            xs.push(-x);
            j += 1.0 / steps;
        }
        xs.push(0.0);
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let f = |x: f64| {
        let v = u(x) - x * y;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (best, &fbest) = vals
        .iter()
        .enumerate()
        .max_by(|p, q| p.1.partial_cmp(q.1).unwrap())
        .unwrap();
    if fbest == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut lo = xs[best.saturating_sub(1)];
    let mut hi = xs[(best + 1).min(xs.len() - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    fbest.max(fc).max(fd)
}

fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .filter(|&&s| s > 1e-9 * smax.max(1.0))
        .count()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Vertices of `{q ≥ 0 : Σq = 1, Σ q_i g_i = 0 for every g}` by trying every
/// column basis of the equality system.
pub fn vertex_oracle(gains: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let rows = gains.len() + 1;
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for (r, g) in gains.iter().enumerate() {
        for i in 0..n {
            a[(r, i)] = g[i];
        }
    }
    for i in 0..n {
        a[(rows - 1, i)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(rows);
    b[rows - 1] = 1.0;
    let r = rank(&a);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for cols in subsets(n, r) {
        let sub = a.select_columns(cols.iter());
        if rank(&sub) < r {
            continue;
        }
        let normal = sub.transpose() * &sub;
        let Some(sol) = normal.lu().solve(&(sub.transpose() * &b)) else {
            continue;
        };
        let mut q = vec![0.0; n];
        for (k, &c) in cols.iter().enumerate() {
            q[c] = sol[k];
        }
        let qv = DVector::from_vec(q.clone());
        if (&a * &qv - &b).amax() > 1e-9 || q.iter().any(|&x| x < -1e-10) {
            continue;
        }
        let q: Vec<f64> = q.iter().map(|&x| if x.abs() < 1e-12 { 0.0 } else { x }).collect();
        if !out.iter().any(|o| max_diff(o, &q) < 1e-8) {
            out.push(q);
        }
    }
    out.sort_by(|p, q| lex(p, q));
    out
}

/// `max_Q E_Q[X]` over the oracle vertices.
pub fn dual_price_oracle(gains: &[Vec<f64>], x: &[f64]) -> f64 {
    vertex_oracle(gains, x.len())
        .iter()
        .map(|q| q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Extreme rays of the pointed cone `{x : A x ≤ 0}`: directions spanning the
/// null space of `d − 1` independent rows that satisfy every row. Returns
/// `None` when the cone has a lineality space.
pub fn ray_oracle(rows: &[Vec<f64>], d: usize) -> Option<Vec<Vec<f64>>> {
    let a = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    if rank(&a) < d {
        return None;
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for sel in subsets(rows.len(), d - 1) {
        let sub = a.select_rows(sel.iter());
        if rank(&sub) != d - 1 {
            continue;
        }
        let svd = (sub.transpose() * &sub).svd(false, true);
        let vt = svd.v_t.unwrap();
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|p, q| p.1.partial_cmp(q.1).unwrap())
            .unwrap();
        let dir: Vec<f64> = (0..d).map(|j| vt[(imin, j)]).collect();
        for sign in [1.0, -1.0] {
            let r: Vec<f64> = dir.iter().map(|x| sign * x).collect();
            let ok = rows
                .iter()
                .all(|row| row.iter().zip(&r).map(|(p, q)| p * q).sum::<f64>() <= 1e-9);
            if ok {
                let r = inf_normalize(&r);
                if !out.iter().any(|o| max_diff(o, &r) < 1e-7) {
                    out.push(r);
                }
            }
        }
    }
    out.sort_by(|p, q| lex(p, q));
    Some(out)
}

pub fn inf_normalize(v: &[f64]) -> Vec<f64> {
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / m).collect()
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x.partial_cmp(y).unwrap();
        }
    }
    std::cmp::Ordering::Equal
}

/// Same set of vectors up to `tol`, order ignored.
pub fn same_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| max_diff(x, y) <= tol))
        && b.iter().all(|y| a.iter().any(|x| max_diff(x, y) <= tol))
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn schema(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"))
}
