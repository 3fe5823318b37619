//! Small dense linear algebra helpers.
//!
//! Everything here works on tiny matrices (dimensions up to a few hundred),
//! so plain row-major loops with partial or column pivoting are enough.

use crate::model::Matrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let diff = x - y;
            diff * diff
        })
        .sum()
}

/// y += a * x
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Invert a square matrix by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` when a pivot falls below `pivot_tol` times the largest
/// absolute entry of the input.
pub fn invert(a: &Matrix, pivot_tol: f64) -> Option<Matrix> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "invert requires a square matrix");
    let scale = a.data().iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let threshold = pivot_tol * scale;

    let mut work = a.clone();
    let mut inv = Matrix::identity(n);
    let mut pivot_work = vec![0.0; n];
    let mut pivot_inv = vec![0.0; n];
    for col in 0..n {
        // partial pivot: largest |entry| in this column at or below the diagonal
        let mut pivot_row = col;
        let mut best = work.get(col, col).abs();
        for r in col + 1..n {
            let v = work.get(r, col).abs();
            if v > best {
                best = v;
                pivot_row = r;
            }
        }
        if best <= threshold {
            return None;
        }
        work.swap_rows(col, pivot_row);
        inv.swap_rows(col, pivot_row);

        let p = work.get(col, col);
        let inv_p = 1.0 / p;
        for x in work.row_mut(col) {
            *x *= inv_p;
        }
        for x in inv.row_mut(col) {
            *x *= inv_p;
        }
        pivot_work.copy_from_slice(work.row(col));
        pivot_inv.copy_from_slice(inv.row(col));
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work.get(r, col);
            if f == 0.0 {
                continue;
            }
            for (x, &pw) in work.row_mut(r).iter_mut().zip(&pivot_work) {
                *x -= f * pw;
            }
            for (x, &pi) in inv.row_mut(r).iter_mut().zip(&pivot_inv) {
                *x -= f * pi;
            }
        }
    }
    Some(inv)
}

/// Minimize ||a x - b||_2 with a rank-revealing column-pivoted Householder QR.
/// Free variables of a rank-deficient system are set to zero, which keeps the
/// solution deterministic.
pub fn lstsq_cpqr(a: &Matrix, b: &[f64], rank_tol: f64) -> Vec<f64> {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m, "rhs length must match row count");
    if n == 0 {
        return Vec::new();
    }

    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    let steps = m.min(n);
    let mut rank = 0;
    let mut first_pivot = 0.0f64;
    for k in 0..steps {
        // column pivot: remaining column with the largest norm below row k
        let mut best_col = k;
        let mut best_norm = 0.0;
        for c in k..n {
            let mut s = 0.0;
            for row in k..m {
                let v = r.get(row, c);
                s += v * v;
            }
            if s > best_norm {
                best_norm = s;
                best_col = c;
            }
        }
        let col_norm = best_norm.sqrt();
        if k == 0 {
            first_pivot = col_norm;
        }
        if col_norm <= rank_tol * first_pivot.max(1e-300) {
            break;
        }
        if best_col != k {
            r.swap_cols(k, best_col);
            perm.swap(k, best_col);
        }

        // Householder vector for column k
        let mut v = vec![0.0; m - k];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = r.get(k + i, k);
        }
        let alpha = if v[0] >= 0.0 { -col_norm } else { col_norm };
        v[0] -= alpha;
        let vnorm_sq = norm_sq(&v);
        if vnorm_sq > 0.0 {
            // apply H = I - 2 v v^T / (v^T v) to remaining columns and rhs
            for c in k..n {
                let mut proj = 0.0;
                for i in 0..m - k {
                    proj += v[i] * r.get(k + i, c);
                }
                let f = 2.0 * proj / vnorm_sq;
                for i in 0..m - k {
                    *r.get_mut(k + i, c) -= f * v[i];
                }
            }
            let mut proj = 0.0;
            for i in 0..m - k {
                proj += v[i] * rhs[k + i];
            }
            let f = 2.0 * proj / vnorm_sq;
            for i in 0..m - k {
                rhs[k + i] -= f * v[i];
            }
        }
        *r.get_mut(k, k) = alpha;
        for row in k + 1..m {
            *r.get_mut(row, k) = 0.0;
        }
        rank = k + 1;
    }

    // back-substitute on the leading rank x rank triangle
    let mut x_perm = vec![0.0; n];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s -= r.get(i, j) * x_perm[j];
        }
        x_perm[i] = s / r.get(i, i);
    }

    let mut x = vec![0.0; n];
    for (k, &orig) in perm.iter().enumerate() {
        x[orig] = x_perm[k];
    }
    x
}

/// Find a nonzero null vector of `a` (more columns than effective rank) by
/// column-pivoted Gaussian elimination. Returns `None` when every column is
/// pivotal at the given tolerance.
pub fn null_vector(a: &Matrix, pivot_tol: f64) -> Option<Vec<f64>> {
    let m = a.rows();
    let n = a.cols();
    let scale = a.data().iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let threshold = pivot_tol * scale.max(1e-300);

    let mut work = a.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut rank = 0;
    for k in 0..steps {
        // column pivot: column whose largest |entry| in rows >= k is maximal
        let mut best_col = k;
        let mut best = 0.0;
        for c in k..n {
            for row in k..m {
                let v = work.get(row, c).abs();
                if v > best {
                    best = v;
                    best_col = c;
                }
            }
        }
        if best <= threshold {
            break;
        }
        if best_col != k {
            work.swap_cols(k, best_col);
            col_perm.swap(k, best_col);
        }
        // row pivot within the chosen column
        let mut pivot_row = k;
        let mut best_row_val = work.get(k, k).abs();
        for row in k + 1..m {
            let v = work.get(row, k).abs();
            if v > best_row_val {
                best_row_val = v;
                pivot_row = row;
            }
        }
        work.swap_rows(k, pivot_row);

        let p = work.get(k, k);
        for row in k + 1..m {
            let f = work.get(row, k) / p;
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                let w = work.get(k, c);
                *work.get_mut(row, c) -= f * w;
            }
        }
        rank = k + 1;
    }
    if rank == n {
        return None;
    }

    // free column: the non-pivot column with the smallest original index
    let free_slot = (rank..n)
        .min_by_key(|&slot| col_perm[slot])
        .expect("rank < n");

    // solve the triangular system R[0..rank,0..rank] y = -R[0..rank,free]
    let mut y = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = -work.get(i, free_slot);
        for j in i + 1..rank {
            s -= work.get(i, j) * y[j];
        }
        y[i] = s / work.get(i, i);
    }

    let mut out = vec![0.0; n];
    for (slot, &yi) in y.iter().enumerate() {
        out[col_perm[slot]] = yi;
    }
    out[col_perm[free_slot]] = 1.0;
    Some(out)
}
