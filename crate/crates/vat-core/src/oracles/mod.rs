//! Optimal sparse-approximation oracles.
//!
//! The value-oblivious oracle keeps the r keys with the largest attention
//! weights. The value-aware oracle instead finds the point closest to the
//! true attention output among convex combinations of at most r value
//! vectors: a nearest-vector scan at r = 1, an exact convex reduction at
//! r >= d+1, and exhaustive support search in between on small instances.

mod caratheodory;
mod simplex;

pub use caratheodory::caratheodory_reduce;
pub use simplex::simplex_lsq;

use itertools::Itertools;

use crate::attention::{exact_attention, sparse_attention, EngineOutput};
use crate::error::{Error, Result};
use crate::kernels::attention_weights;
use crate::linalg::{dot, norm_sq, sq_dist};
use crate::model::{AttentionInstance, Distribution, KernelSpec, Matrix, SelectionPlan};

/// Supports of size up to this many subsets may be enumerated exhaustively.
const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// The indices of the r largest weights, sorted ascending. Only strictly
/// positive weights are eligible (causally masked keys carry weight zero),
/// and ties break toward the lower index.
pub fn top_r_selection(alpha: &Distribution, r: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..alpha.len()).filter(|&i| alpha.get(i) > 0.0).collect();
    order.sort_by(|&a, &b| {
        alpha
            .get(b)
            .partial_cmp(&alpha.get(a))
            .expect("weights are finite")
            .then(a.cmp(&b))
    });
    order.truncate(r.min(order.len()));
    order.sort_unstable();
    order
}

/// Sparse attention over the per-query top-r selection.
pub fn optimal_v_oblivious(
    spec: &KernelSpec,
    inst: &AttentionInstance,
    r: usize,
) -> Result<EngineOutput> {
    if r == 0 {
        return Err(Error::InvalidSelection("top-r selection needs r >= 1".into()));
    }
    spec.validate()?;
    let l = inst.len();
    let all: Vec<usize> = (0..l).collect();
    let mut sets = Vec::with_capacity(l);
    for t in 0..l {
        let allowed = &all[..inst.allowed_len(t)];
        let ws = attention_weights(spec, inst.queries().row(t), inst.keys(), allowed)?;
        sets.push(top_r_selection(&ws.dist, r));
    }
    let plan = SelectionPlan::new(sets, l, inst.causal())?;
    sparse_attention(spec, inst, &plan)
}

/// The single-vector ranking objective ||v_i||^2 (1/2 - alpha_i) -
/// sum_{j != i} alpha_j <v_i, v_j>.
///
/// Minimizing it over i is equivalent to minimizing the squared distance
/// ||o - v_i||^2 to the attention output o = sum alpha_j v_j; the two differ
/// by the i-independent constant ||o||^2 / 2 after halving.
pub fn value_aware_objective(i: usize, alpha: &Distribution, values: &Matrix) -> f64 {
    let v_i = values.row(i);
    let mut cross = 0.0;
    for j in 0..values.rows() {
        if j != i {
            let a = alpha.get(j);
            if a != 0.0 {
                cross += a * dot(v_i, values.row(j));
            }
        }
    }
    norm_sq(v_i) * (0.5 - alpha.get(i)) - cross
}

/// Nearest value row to `o` over `allowed`, ties to the lower index. Returns
/// the winning index and a copy of its row.
pub fn optimal_v_aware_1(o: &[f64], values: &Matrix, allowed: &[usize]) -> (usize, Vec<f64>) {
    assert!(!allowed.is_empty(), "allowed set must be nonempty");
    let mut best = allowed[0];
    let mut best_d = sq_dist(o, values.row(best));
    for &i in &allowed[1..] {
        let d2 = sq_dist(o, values.row(i));
        if d2 < best_d {
            best_d = d2;
            best = i;
        }
    }
    (best, values.row(best).to_vec())
}

fn binomial(n: usize, k: usize) -> u128 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if out > BRUTE_FORCE_LIMIT {
            return u128::MAX;
        }
    }
    out
}

/// The optimal value-aware approximation at rank r.
///
/// r = 1 scans for the nearest value row per query; r >= d+1 reproduces the
/// exact output through a convex reduction (zero error up to numerics); any
/// other r is solved by exhaustive search over supports of size r when
/// C(L, r) stays within the brute-force budget.
pub fn optimal_v_aware(
    spec: &KernelSpec,
    inst: &AttentionInstance,
    r: usize,
) -> Result<EngineOutput> {
    spec.validate()?;
    let l = inst.len();
    let d = inst.dim();
    if r == 0 {
        return Err(Error::UnsupportedRank {
            r,
            l,
            d,
            hint: "rank must be at least 1".into(),
        });
    }
    if r > 1 && r < d + 1 && binomial(l, r.min(l)) > BRUTE_FORCE_LIMIT {
        return Err(Error::UnsupportedRank {
            r,
            l,
            d,
            hint: format!(
                "exhaustive search over C({l}, {r}) supports exceeds the 10^6 budget; \
                 use r = 1 or r >= d+1 = {}",
                d + 1
            ),
        });
    }

    let exact = exact_attention(spec, inst)?;
    let all: Vec<usize> = (0..l).collect();
    let mut output = Matrix::zeros(l, d);
    let flags = exact.flags.clone();

    for t in 0..l {
        let allowed = &all[..inst.allowed_len(t)];
        let o_t = exact.output.row(t);
        if r == 1 {
            let (_, row) = optimal_v_aware_1(o_t, inst.values(), allowed);
            output.row_mut(t).copy_from_slice(&row);
        } else if r > d {
            let ws = attention_weights(spec, inst.queries().row(t), inst.keys(), allowed)?;
            let comb = caratheodory_reduce(&ws.dist, inst.values())?;
            output.row_mut(t).copy_from_slice(&comb.combine(inst.values()));
        } else {
            let row = brute_force_best(o_t, inst.values(), allowed, r)?;
            output.row_mut(t).copy_from_slice(&row);
        }
    }
    Ok(EngineOutput { output, flags })
}

/// Best point over all supports of size min(r, |allowed|). Smaller supports
/// are covered because they embed in larger ones with zero coefficients.
/// Ties go to the lexicographically smallest support.
fn brute_force_best(o: &[f64], values: &Matrix, allowed: &[usize], r: usize) -> Result<Vec<f64>> {
    let size = r.min(allowed.len());
    let mut best_err = f64::INFINITY;
    let mut best_point: Option<Vec<f64>> = None;
    for support in allowed.iter().copied().combinations(size) {
        let rows: Vec<Vec<f64>> = support.iter().map(|&i| values.row(i).to_vec()).collect();
        let sub = Matrix::from_rows(&rows)?;
        let comb = simplex_lsq(o, &sub)?;
        let err = sq_dist(o, &comb.combine(&sub));
        if err < best_err {
            best_err = err;
            best_point = Some(comb.combine(&sub));
        }
    }
    Ok(best_point.expect("at least one support was evaluated"))
}

/// Rank orders over the value indices compared in the single-vector setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingComparison {
    /// By attention weight, descending.
    pub by_weight: Vec<usize>,
    /// By alpha_i * ||v_i||, descending.
    pub by_weight_norm: Vec<usize>,
    /// By the single-vector ranking objective, ascending.
    pub by_objective: Vec<usize>,
    /// By squared distance to the attention output, ascending.
    pub by_distance: Vec<usize>,
}

/// The four rank orders; ties always break toward the lower index. The
/// objective and distance orders coincide analytically.
pub fn ranking_compare(
    o: &[f64],
    alpha: &Distribution,
    values: &Matrix,
) -> RankingComparison {
    let l = values.rows();
    let weight_key: Vec<f64> = (0..l).map(|i| alpha.get(i)).collect();
    let weight_norm_key: Vec<f64> = (0..l)
        .map(|i| alpha.get(i) * norm_sq(values.row(i)).sqrt())
        .collect();
    let objective_key: Vec<f64> = (0..l)
        .map(|i| value_aware_objective(i, alpha, values))
        .collect();
    let distance_key: Vec<f64> = (0..l).map(|i| sq_dist(o, values.row(i))).collect();

    RankingComparison {
        by_weight: order_desc(&weight_key),
        by_weight_norm: order_desc(&weight_norm_key),
        by_objective: order_asc(&objective_key),
        by_distance: order_asc(&distance_key),
    }
}

fn order_desc(key: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[b].partial_cmp(&key[a]).unwrap().then(a.cmp(&b)));
    idx
}

fn order_asc(key: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[a].partial_cmp(&key[b]).unwrap().then(a.cmp(&b)));
    idx
}
