//! Least squares over the unit simplex.
//!
//! Minimizes ||o - sum_i beta_i v_i||^2 subject to beta >= 0 and
//! sum(beta) = 1 with a primal active-set method. Pivot selection always
//! breaks ties toward the lowest index, so the solve is deterministic.

use crate::error::{Error, Result};
use crate::linalg::{axpy, lstsq_cpqr, norm_sq};
use crate::model::{Matrix, SimplexCombination};

const KKT_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-12;

/// Solve the fixed-support subproblem: the closest point to `o` among convex
/// combinations of the rows of `support_rows`.
///
/// The returned combination indexes the rows of `support_rows` (0..m); zero
/// coefficients are kept so the support echoes the input.
pub fn simplex_lsq(o: &[f64], support_rows: &Matrix) -> Result<SimplexCombination> {
    let m = support_rows.rows();
    let d = support_rows.cols();
    if m == 0 {
        return Err(Error::InvalidSimplex("no support rows".into()));
    }
    if o.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "target has dimension {}, support rows have {d}",
            o.len()
        )));
    }
    if m == 1 {
        return SimplexCombination::new(vec![0], vec![1.0]);
    }

    // gradient scale for the KKT threshold
    let row_scale = (0..m)
        .map(|i| norm_sq(support_rows.row(i)))
        .fold(0.0f64, f64::max);
    let tol = KKT_TOL * (1.0 + row_scale);

    let max_iters = 10 * m * m;
    let mut beta = vec![0.0; m];
    beta[0] = 1.0;
    let mut working: Vec<usize> = vec![0];

    for _ in 0..max_iters {
        let target = solve_equality_subproblem(o, support_rows, &working);

        let min_target = target.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min_target >= -1e-12 {
            // feasible subproblem optimum: accept it, then check optimality
            for (slot, &i) in working.iter().enumerate() {
                beta[i] = target[slot].max(0.0);
            }
            let point = combine(support_rows, &beta);
            // common gradient value over the working set
            let lambda = grad(support_rows, &point, o, working[0]);

            let mut enter: Option<usize> = None;
            let mut most_negative = -tol;
            for i in 0..m {
                if working.contains(&i) {
                    continue;
                }
                let reduced = grad(support_rows, &point, o, i) - lambda;
                if reduced < most_negative {
                    most_negative = reduced;
                    enter = Some(i);
                }
            }
            match enter {
                None => return finish(beta),
                Some(i) => {
                    working.push(i);
                    working.sort_unstable();
                }
            }
        } else {
            // step toward the subproblem solution until a coefficient hits 0
            let mut theta = 1.0f64;
            let mut blocker = None;
            for (slot, &i) in working.iter().enumerate() {
                if target[slot] < 0.0 {
                    let t = beta[i] / (beta[i] - target[slot]);
                    if t < theta {
                        theta = t;
                        blocker = Some(slot);
                    }
                }
            }
            let slot = blocker.expect("some target coefficient is negative");
            for (s, &i) in working.iter().enumerate() {
                beta[i] += theta * (target[s] - beta[i]);
            }
            let dropped = working.remove(slot);
            beta[dropped] = 0.0;
        }
    }
    Err(Error::SolverFailure { max_iters })
}

/// Minimize ||o - sum_{i in working} beta_i v_i||^2 subject only to the
/// coefficients summing to 1, by eliminating the first working index.
fn solve_equality_subproblem(o: &[f64], rows: &Matrix, working: &[usize]) -> Vec<f64> {
    let k = working.len();
    if k == 1 {
        return vec![1.0];
    }
    let d = rows.cols();
    let base = rows.row(working[0]);
    let mut c = vec![0.0; d];
    for (j, cj) in c.iter_mut().enumerate() {
        *cj = o[j] - base[j];
    }
    let mut dirs = Matrix::zeros(d, k - 1);
    for (col, &i) in working[1..].iter().enumerate() {
        let row = rows.row(i);
        for j in 0..d {
            *dirs.get_mut(j, col) = row[j] - base[j];
        }
    }
    let z = lstsq_cpqr(&dirs, &c, RANK_TOL);
    let mut out = Vec::with_capacity(k);
    out.push(1.0 - z.iter().sum::<f64>());
    out.extend_from_slice(&z);
    out
}

fn combine(rows: &Matrix, beta: &[f64]) -> Vec<f64> {
    let mut point = vec![0.0; rows.cols()];
    for (i, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            axpy(&mut point, b, rows.row(i));
        }
    }
    point
}

/// d/d(beta_i) of 0.5 ||o - point||^2, namely <v_i, point - o>.
fn grad(rows: &Matrix, point: &[f64], o: &[f64], i: usize) -> f64 {
    let row = rows.row(i);
    let mut s = 0.0;
    for j in 0..row.len() {
        s += row[j] * (point[j] - o[j]);
    }
    s
}

fn finish(mut beta: Vec<f64>) -> Result<SimplexCombination> {
    for b in beta.iter_mut() {
        if *b < 0.0 {
            *b = 0.0;
        }
    }
    let sum: f64 = beta.iter().sum();
    for b in beta.iter_mut() {
        *b /= sum;
    }
    SimplexCombination::new((0..beta.len()).collect(), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sq_dist;
    use crate::rng::{gaussian_matrix, RngStream};
    use proptest::prelude::*;

    fn achieved_error(o: &[f64], rows: &Matrix, comb: &SimplexCombination) -> f64 {
        sq_dist(o, &comb.combine(rows))
    }

    /// Largest KKT violation: spread of gradients over the support plus any
    /// negative reduced cost off the support.
    fn kkt_violation(o: &[f64], rows: &Matrix, comb: &SimplexCombination) -> f64 {
        let point = comb.combine(rows);
        let grads: Vec<f64> = (0..rows.rows())
            .map(|i| grad(rows, &point, o, i))
            .collect();
        let active: Vec<usize> = comb
            .beta()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b > 1e-12)
            .map(|(i, _)| i)
            .collect();
        let lambda = grads[active[0]];
        let mut worst = 0.0f64;
        for &i in &active {
            worst = worst.max((grads[i] - lambda).abs());
        }
        for (i, &g) in grads.iter().enumerate() {
            if !active.contains(&i) {
                worst = worst.max((lambda - g).max(0.0));
            }
        }
        worst
    }

    /// Independent oracle: long projected-gradient descent with exact
    /// Euclidean projection onto the simplex.
    fn pgd_objective(o: &[f64], rows: &Matrix, iters: usize) -> f64 {
        let m = rows.rows();
        let mut beta = vec![1.0 / m as f64; m];
        let lipschitz: f64 = (0..m).map(|i| norm_sq(rows.row(i))).sum::<f64>() + 1.0;
        let step = 1.0 / lipschitz;
        for _ in 0..iters {
            let point = combine(rows, &beta);
            for i in 0..m {
                beta[i] -= step * grad(rows, &point, o, i);
            }
            beta = project_simplex(&beta);
        }
        sq_dist(o, &combine(rows, &beta))
    }

    fn project_simplex(y: &[f64]) -> Vec<f64> {
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumsum = 0.0;
        let mut rho = 0;
        for (k, &v) in sorted.iter().enumerate() {
            cumsum += v;
            let t = (cumsum - 1.0) / (k + 1) as f64;
            if v - t > 0.0 {
                rho = k;
            }
        }
        let cutoff: f64 = (sorted[..=rho].iter().sum::<f64>() - 1.0) / (rho + 1) as f64;
        y.iter().map(|&v| (v - cutoff).max(0.0)).collect()
    }

    #[test]
    fn single_row_is_forced() {
        let rows = Matrix::from_rows(&[vec![3.0, -1.0]]).unwrap();
        let comb = simplex_lsq(&[0.0, 0.0], &rows).unwrap();
        assert_eq!(comb.beta(), &[1.0]);
        assert_eq!(comb.support(), &[0]);
    }

    #[test]
    fn segment_projection_splits_evenly() {
        let rows = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let o = [0.0, 0.0];
        let comb = simplex_lsq(&o, &rows).unwrap();
        assert!((comb.beta()[0] - 0.5).abs() < 1e-12);
        assert!((comb.beta()[1] - 0.5).abs() < 1e-12);
        let err = achieved_error(&o, &rows, &comb);
        assert!((err - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interior_point_is_recovered_exactly() {
        let mut rng = RngStream::new(71, 0);
        for trial in 0..20 {
            let m = 2 + trial % 4;
            let d = 2 + trial % 3;
            let rows = gaussian_matrix(&mut rng, m, d);
            // random simplex point by normalizing positive draws
            let raw: Vec<f64> = (0..m).map(|_| rng.uniform() + 0.05).collect();
            let s: f64 = raw.iter().sum();
            let beta_star: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let o = combine(&rows, &beta_star);
            let comb = simplex_lsq(&o, &rows).unwrap();
            let err = achieved_error(&o, &rows, &comb);
            assert!(err <= 1e-12, "trial {trial}: error {err}");
        }
    }

    #[test]
    fn matches_projected_gradient_oracle() {
        let mut rng = RngStream::new(72, 0);
        for trial in 0..30 {
            let m = 2 + trial % 5;
            let d = 1 + trial % 4;
            let rows = gaussian_matrix(&mut rng, m, d);
            let o: Vec<f64> = (0..d).map(|_| 2.0 * rng.normal()).collect();
            let comb = simplex_lsq(&o, &rows).unwrap();
            let active_err = achieved_error(&o, &rows, &comb);
            let pgd_err = pgd_objective(&o, &rows, 20_000);
            assert!(
                active_err <= pgd_err + 1e-8,
                "trial {trial}: active-set {active_err} vs pgd {pgd_err}"
            );
        }
    }

    #[test]
    fn duplicate_rows_are_handled() {
        let rows =
            Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let o = [0.2, 0.8];
        let comb = simplex_lsq(&o, &rows).unwrap();
        assert!(achieved_error(&o, &rows, &comb) < 1e-20);
    }

    proptest! {
        #[test]
        fn kkt_conditions_hold(seed in 0u64..200) {
            let mut rng = RngStream::new(seed, 9);
            let m = 1 + (seed as usize % 7);
            let d = 1 + (seed as usize % 4);
            let rows = gaussian_matrix(&mut rng, m, d);
            let o: Vec<f64> = (0..d).map(|_| 3.0 * rng.normal()).collect();
            let comb = simplex_lsq(&o, &rows).unwrap();
            let viol = kkt_violation(&o, &rows, &comb);
            let scale = 1.0 + (0..m).map(|i| norm_sq(rows.row(i))).fold(0.0f64, f64::max);
            prop_assert!(viol <= 1e-8 * scale, "violation {viol}");
        }
    }
}
