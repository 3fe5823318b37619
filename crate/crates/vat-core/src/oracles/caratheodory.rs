//! Convex-combination reduction: rewrite sum(alpha_i v_i) as a convex
//! combination of at most d+1 value vectors.
//!
//! Any point in the convex hull of points in R^d admits such a support, and
//! each elimination step follows an affine dependence among the current
//! support until a coefficient hits zero. The production path streams points
//! through a maintained (d+1)-point affinely-independent basis, pivoting one
//! point in and one out per step with an explicit basis-inverse update; a
//! from-scratch null-vector path backs it up for degenerate geometry.

use crate::error::{Error, Result};
use crate::linalg::{axpy, invert, norm, null_vector, sq_dist};
use crate::model::{Distribution, Matrix, SimplexCombination};

const PIVOT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 256;

/// Reduce `alpha` over the value rows to a convex combination with support
/// size at most d+1 representing the same point.
pub fn caratheodory_reduce(alpha: &Distribution, values: &Matrix) -> Result<SimplexCombination> {
    let l = values.rows();
    let d = values.cols();
    if alpha.len() != l {
        return Err(Error::ShapeMismatch(format!(
            "distribution has {} weights, values have {l} rows",
            alpha.len()
        )));
    }

    let support: Vec<usize> = (0..l).filter(|&i| alpha.get(i) > 0.0).collect();
    let weights: Vec<f64> = support.iter().map(|&i| alpha.get(i)).collect();
    if support.is_empty() {
        return Err(Error::InvalidDistribution(
            "distribution has no positive weight".into(),
        ));
    }
    if support.len() <= d + 1 {
        return SimplexCombination::new(support, weights);
    }

    // target point, used only to verify the reduction
    let mut target = vec![0.0; d];
    for (&i, &w) in support.iter().zip(&weights) {
        axpy(&mut target, w, values.row(i));
    }
    let tol = 1e-8 * (1.0 + norm(&target));

    if let Some(comb) = reduce_streaming(&support, &weights, values) {
        if sq_dist(&comb.combine(values), &target) <= tol * tol {
            return Ok(comb);
        }
    }
    // degenerate geometry or accumulated drift: redo with from-scratch
    // dependence finding
    let comb = reduce_by_null_vectors(&support, &weights, values)?;
    if sq_dist(&comb.combine(values), &target) > tol * tol {
        return Err(Error::CaratheodoryFailure {
            support: comb.support().to_vec(),
            reason: "reduced combination does not reproduce the target point".into(),
        });
    }
    Ok(comb)
}

/// coords = inv * [point; 1]
fn basis_coords(inv: &Matrix, point: &[f64], coords: &mut [f64]) {
    let d = point.len();
    for (r, coord) in coords.iter_mut().enumerate() {
        let row = inv.row(r);
        let mut s = row[d];
        for (a, b) in row[..d].iter().zip(point) {
            s += a * b;
        }
        *coord = s;
    }
}

fn lifted_basis(values: &Matrix, members: &[usize]) -> Matrix {
    let d = values.cols();
    let mut b = Matrix::zeros(d + 1, members.len());
    for (col, &i) in members.iter().enumerate() {
        for r in 0..d {
            *b.get_mut(r, col) = values.get(i, r);
        }
        *b.get_mut(d, col) = 1.0;
    }
    b
}

/// Streaming reduction. Maintains a basis of d+1 affinely independent points
/// with positive weights and the explicit inverse of its lifted matrix. Each
/// incoming point is expressed in basis coordinates; the min-ratio step along
/// that dependence zeroes one basis weight, and the incoming point replaces
/// it. Returns `None` when the geometry defeats the pivoting (caller falls
/// back).
fn reduce_streaming(
    support: &[usize],
    weights: &[f64],
    values: &Matrix,
) -> Option<SimplexCombination> {
    let d = values.cols();
    let k = d + 1;

    let mut members: Vec<usize> = support[..k].to_vec();
    let mut u: Vec<f64> = weights[..k].to_vec();
    let mut inv = invert(&lifted_basis(values, &members), PIVOT_TOL)?;
    let mut since_refactor = 0usize;

    let mut coords = vec![0.0; k];
    let mut pivot_row = vec![0.0; k];
    for (&p, &w_p) in support[k..].iter().zip(&weights[k..]) {
        // coordinates of the incoming point in the current basis
        let point = values.row(p);
        basis_coords(&inv, point, &mut coords);
        let coord_sum: f64 = coords.iter().sum();
        if (coord_sum - 1.0).abs() > 1e-6 {
            // inverse has drifted; rebuild once and recompute
            inv = invert(&lifted_basis(values, &members), PIVOT_TOL)?;
            since_refactor = 0;
            basis_coords(&inv, point, &mut coords);
        }

        // min-ratio over positive coordinates; ties to the lowest value index
        let mut theta = f64::INFINITY;
        let mut slot = usize::MAX;
        for (s, &x) in coords.iter().enumerate() {
            if x > 0.0 {
                let t = u[s] / x;
                if t < theta || (t == theta && slot != usize::MAX && members[s] < members[slot]) {
                    theta = t;
                    slot = s;
                }
            }
        }
        if slot == usize::MAX {
            return None; // coordinates sum to 1, so this is numerical failure
        }

        let pivot = coords[slot];
        for (s, &x) in coords.iter().enumerate() {
            u[s] = (u[s] - theta * x).max(0.0);
        }
        u[slot] = w_p + theta;
        members[slot] = p;

        // basis exchange on the explicit inverse (Gauss-Jordan pivot row)
        let inv_pivot = 1.0 / pivot;
        for x in inv.row_mut(slot) {
            *x *= inv_pivot;
        }
        pivot_row.copy_from_slice(inv.row(slot));
        for (r, &f) in coords.iter().enumerate() {
            if r == slot || f == 0.0 {
                continue;
            }
            for (x, &pr) in inv.row_mut(r).iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
        }
        since_refactor += 1;
        if since_refactor >= REFACTOR_EVERY {
            inv = invert(&lifted_basis(values, &members), PIVOT_TOL)?;
            since_refactor = 0;
        }
    }

    finalize(members, u)
}

/// Spec-literal reduction: while the support exceeds d+1, find a null vector
/// of the lifted support matrix and walk the weights along it.
fn reduce_by_null_vectors(
    support: &[usize],
    weights: &[f64],
    values: &Matrix,
) -> Result<SimplexCombination> {
    let d = values.cols();
    let mut members = support.to_vec();
    let mut u = weights.to_vec();

    while members.len() > d + 1 {
        let lifted = lifted_basis(values, &members);
        let mut gamma = null_vector(&lifted, PIVOT_TOL).ok_or_else(|| {
            Error::CaratheodoryFailure {
                support: members.clone(),
                reason: "no affine dependence found although support exceeds d+1".into(),
            }
        })?;
        let max_pos = gamma.iter().fold(0.0f64, |a, &b| a.max(b));
        let max_neg = gamma.iter().fold(0.0f64, |a, &b| a.max(-b));
        if max_pos < max_neg {
            for g in gamma.iter_mut() {
                *g = -*g;
            }
        }
        if gamma.iter().fold(0.0f64, |a, &b| a.max(b)) <= 0.0 {
            return Err(Error::CaratheodoryFailure {
                support: members.clone(),
                reason: "degenerate dependence direction".into(),
            });
        }

        let mut theta = f64::INFINITY;
        let mut drop_slot = usize::MAX;
        for (s, &g) in gamma.iter().enumerate() {
            if g > 0.0 {
                let t = u[s] / g;
                if t < theta
                    || (t == theta && drop_slot != usize::MAX && members[s] < members[drop_slot])
                {
                    theta = t;
                    drop_slot = s;
                }
            }
        }
        for (s, &g) in gamma.iter().enumerate() {
            u[s] = (u[s] - theta * g).max(0.0);
        }
        u.remove(drop_slot);
        members.remove(drop_slot);
    }

    finalize(members, u).ok_or_else(|| Error::CaratheodoryFailure {
        support: support.to_vec(),
        reason: "reduced weights lost all mass".into(),
    })
}

/// Strip zero weights, renormalize the tiny drift in the total mass, and
/// return the combination sorted by value index.
fn finalize(members: Vec<usize>, u: Vec<f64>) -> Option<SimplexCombination> {
    let mut pairs: Vec<(usize, f64)> = members
        .into_iter()
        .zip(u)
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_unstable_by_key(|&(i, _)| i);
    let total: f64 = pairs.iter().map(|&(_, w)| w).sum();
    let support: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
    let beta: Vec<f64> = pairs.iter().map(|&(_, w)| w / total).collect();
    SimplexCombination::new(support, beta).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, RngStream};

    fn reconstruction_error(
        alpha: &Distribution,
        values: &Matrix,
        comb: &SimplexCombination,
    ) -> f64 {
        let d = values.cols();
        let mut target = vec![0.0; d];
        for (i, &w) in alpha.weights().iter().enumerate() {
            axpy(&mut target, w, values.row(i));
        }
        sq_dist(&target, &comb.combine(values)).sqrt()
    }

    #[test]
    fn small_support_is_returned_unchanged() {
        let values = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let alpha = Distribution::new(vec![0.3, 0.7]).unwrap();
        let comb = caratheodory_reduce(&alpha, &values).unwrap();
        assert_eq!(comb.support(), &[0, 1]);
        assert_eq!(comb.beta(), &[0.3, 0.7]);
    }

    #[test]
    fn collinear_points_reduce_to_two() {
        // d = 1, points 0, 1, 2 with uniform weight; target is 1
        let values = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let third = 1.0 / 3.0;
        let alpha = Distribution::new(vec![third, third, third]).unwrap();
        let comb = caratheodory_reduce(&alpha, &values).unwrap();
        assert!(comb.support_size() <= 2);
        let point = comb.combine(&values);
        assert!((point[0] - 1.0).abs() < 1e-12);
        let sum: f64 = comb.beta().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_random_instance_reduces() {
        let mut rng = RngStream::new(101, 0);
        let l = 512;
        let d = 8;
        let values = gaussian_matrix(&mut rng, l, d);
        let raw: Vec<f64> = (0..l).map(|_| rng.uniform() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let alpha = Distribution::new(raw.iter().map(|x| x / s).collect()).unwrap();

        let comb = caratheodory_reduce(&alpha, &values).unwrap();
        assert!(comb.support_size() <= d + 1, "support {}", comb.support_size());
        let err = reconstruction_error(&alpha, &values, &comb);
        assert!(err <= 1e-8, "reconstruction error {err}");
    }

    #[test]
    fn duplicate_value_rows_still_reduce() {
        // repeated rows make the leading basis singular, forcing the
        // null-vector path
        let mut rng = RngStream::new(103, 0);
        let d = 3;
        let base = gaussian_matrix(&mut rng, 4, d);
        let mut rows = Vec::new();
        for r in 0..12 {
            rows.push(base.row(r % 4).to_vec());
        }
        let values = Matrix::from_rows(&rows).unwrap();
        let alpha = Distribution::uniform(12);
        let comb = caratheodory_reduce(&alpha, &values).unwrap();
        assert!(comb.support_size() <= d + 1);
        assert!(reconstruction_error(&alpha, &values, &comb) <= 1e-8);
    }

    #[test]
    fn null_vector_path_agrees_with_streaming() {
        let mut rng = RngStream::new(107, 0);
        let l = 40;
        let d = 4;
        let values = gaussian_matrix(&mut rng, l, d);
        let raw: Vec<f64> = (0..l).map(|_| rng.uniform() + 0.01).collect();
        let s: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let support: Vec<usize> = (0..l).collect();

        let slow = reduce_by_null_vectors(&support, &weights, &values).unwrap();
        assert!(slow.support_size() <= d + 1);
        let alpha = Distribution::new(weights).unwrap();
        assert!(reconstruction_error(&alpha, &values, &slow) <= 1e-8);

        let fast = caratheodory_reduce(&alpha, &values).unwrap();
        assert!(reconstruction_error(&alpha, &values, &fast) <= 1e-8);
    }

    #[test]
    fn causal_zero_weights_stay_excluded() {
        let mut rng = RngStream::new(109, 0);
        let values = gaussian_matrix(&mut rng, 10, 2);
        let mut w = vec![0.0; 10];
        for (i, wi) in w.iter_mut().enumerate().take(6) {
            *wi = (i + 1) as f64;
        }
        let s: f64 = w.iter().sum();
        for wi in w.iter_mut() {
            *wi /= s;
        }
        let alpha = Distribution::new(w).unwrap();
        let comb = caratheodory_reduce(&alpha, &values).unwrap();
        assert!(comb.support().iter().all(|&i| i < 6));
        assert!(comb.support_size() <= 3);
        assert!(reconstruction_error(&alpha, &values, &comb) <= 1e-10);
    }
}
