//! Domain types: matrices, attention instances, kernel choices, attention
//! distributions, sparse selections, and convex combinations.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so they can be shared freely across threads.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major f64 matrix.
///
/// Rows with zero dimensions are allowed (the tensor file format needs them);
/// attention instances enforce L >= 1 and d >= 1 on top of this.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            *m.get_mut(i, i) = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {rows}x{cols} = {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (a, b) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(b * self.cols);
        head[a * self.cols..(a + 1) * self.cols].swap_with_slice(&mut tail[..self.cols]);
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// Index of the first non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|x| !x.is_finite())
            .map(|p| (p / self.cols.max(1), p % self.cols.max(1)))
    }
}

/// One sequence worth of queries, keys, and values, plus the causal flag.
///
/// When `causal` is set, the query at position t may only attend to keys at
/// positions <= t; this restriction applies uniformly to every operation
/// consuming the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionInstance {
    queries: Matrix,
    keys: Matrix,
    values: Matrix,
    causal: bool,
}

impl AttentionInstance {
    pub fn new(queries: Matrix, keys: Matrix, values: Matrix, causal: bool) -> Result<Self> {
        let l = queries.rows();
        let d = queries.cols();
        if l == 0 || d == 0 {
            return Err(Error::ShapeMismatch(format!(
                "Q must be at least 1x1, got {l}x{d}"
            )));
        }
        for (name, m) in [("K", &keys), ("V", &values)] {
            if m.rows() != l || m.cols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "{name} is {}x{}, expected {l}x{d} to match Q",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        for (name, m) in [("Q", &queries), ("K", &keys), ("V", &values)] {
            if let Some((r, c)) = m.find_non_finite() {
                return Err(Error::NonFinite {
                    tensor: name.to_string(),
                    row: r,
                    col: c,
                });
            }
        }
        Ok(AttentionInstance {
            queries,
            keys,
            values,
            causal,
        })
    }

    pub fn queries(&self) -> &Matrix {
        &self.queries
    }

    pub fn keys(&self) -> &Matrix {
        &self.keys
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn causal(&self) -> bool {
        self.causal
    }

    /// Sequence length L.
    pub fn len(&self) -> usize {
        self.queries.rows()
    }

    pub fn is_empty(&self) -> bool {
        false // L >= 1 by construction
    }

    /// Vector dimension d.
    pub fn dim(&self) -> usize {
        self.queries.cols()
    }

    /// Number of keys the query at position `t` may attend to.
    pub fn allowed_len(&self, t: usize) -> usize {
        if self.causal {
            t + 1
        } else {
            self.len()
        }
    }
}

/// Validated construction of an [`AttentionInstance`].
pub fn make_instance(
    queries: Matrix,
    keys: Matrix,
    values: Matrix,
    causal: bool,
) -> Result<AttentionInstance> {
    AttentionInstance::new(queries, keys, values, causal)
}

/// Similarity kernel choice.
///
/// `temperature_scaling` divides both inputs by d^(1/4) before scoring and
/// applies to the exponential family only. Odd polynomial degrees are
/// rejected at scoring time because they can produce negative scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Exponential {
        #[serde(default)]
        temperature_scaling: bool,
    },
    Polynomial {
        degree: u32,
    },
    Elu,
}

impl KernelSpec {
    pub fn exponential() -> Self {
        KernelSpec::Exponential {
            temperature_scaling: false,
        }
    }

    pub fn exponential_scaled() -> Self {
        KernelSpec::Exponential {
            temperature_scaling: true,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        KernelSpec::Polynomial { degree }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree } if degree % 2 != 0 => {
                Err(Error::OddPolynomialDegree(degree))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Exponential {
                temperature_scaling: false,
            } => write!(f, "exponential"),
            KernelSpec::Exponential {
                temperature_scaling: true,
            } => write!(f, "exponential(temperature)"),
            KernelSpec::Polynomial { degree } => write!(f, "polynomial({degree})"),
            KernelSpec::Elu => write!(f, "elu"),
        }
    }
}

/// A probability distribution over the L key positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    const SUM_TOL: f64 = 1e-6;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {} at index {i} is negative or non-finite",
                weights[i]
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum}, expected 1 within {}",
                Self::SUM_TOL
            )));
        }
        Ok(Distribution { weights })
    }

    pub fn uniform(len: usize) -> Self {
        Distribution {
            weights: vec![1.0 / len as f64; len],
        }
    }

    /// Uniform over `allowed`, zero elsewhere.
    pub fn uniform_over(len: usize, allowed: &[usize]) -> Self {
        let mut weights = vec![0.0; len];
        let w = 1.0 / allowed.len() as f64;
        for &i in allowed {
            weights[i] = w;
        }
        Distribution { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Per-query attended index sets (the sparsity pattern of sparse attention).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPlan {
    sets: Vec<Vec<usize>>,
}

impl SelectionPlan {
    /// Build a plan for a length-`l` instance. Each set is sorted; duplicate
    /// or out-of-range indices are rejected, as are causal violations when
    /// `causal` is set.
    pub fn new(mut sets: Vec<Vec<usize>>, l: usize, causal: bool) -> Result<Self> {
        if sets.len() != l {
            return Err(Error::InvalidSelection(format!(
                "plan has {} sets, expected {l}",
                sets.len()
            )));
        }
        for (t, set) in sets.iter_mut().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidSelection(format!(
                    "selection for query {t} is empty"
                )));
            }
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidSelection(format!(
                    "selection for query {t} contains duplicate indices"
                )));
            }
            let max = *set.last().expect("nonempty");
            if max >= l {
                return Err(Error::InvalidSelection(format!(
                    "selection for query {t} references key {max}, but L = {l}"
                )));
            }
            if causal && max > t {
                return Err(Error::InvalidSelection(format!(
                    "causal violation: query {t} selects key {max}"
                )));
            }
        }
        Ok(SelectionPlan { sets })
    }

    /// The dense plan where every query attends to all L keys (or its prefix
    /// when causal).
    pub fn full(l: usize, causal: bool) -> Self {
        let sets = (0..l)
            .map(|t| {
                let hi = if causal { t + 1 } else { l };
                (0..hi).collect()
            })
            .collect();
        SelectionPlan { sets }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, t: usize) -> &[usize] {
        &self.sets[t]
    }
}

/// Support indices plus convex coefficients: a point in the polytope of the
/// value vectors expressed over an explicit support.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexCombination {
    support: Vec<usize>,
    beta: Vec<f64>,
}

impl SimplexCombination {
    const SUM_TOL: f64 = 1e-8;

    pub fn new(support: Vec<usize>, beta: Vec<f64>) -> Result<Self> {
        if support.len() != beta.len() {
            return Err(Error::InvalidSimplex(format!(
                "support has {} indices but beta has {} coefficients",
                support.len(),
                beta.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidSimplex("empty support".into()));
        }
        let mut seen = support.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSimplex("duplicate support index".into()));
        }
        if let Some(i) = beta.iter().position(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::InvalidSimplex(format!(
                "coefficient {} at position {i} is negative or non-finite",
                beta[i]
            )));
        }
        let sum: f64 = beta.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidSimplex(format!(
                "coefficients sum to {sum}, expected 1 within {}",
                Self::SUM_TOL
            )));
        }
        Ok(SimplexCombination { support, beta })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// The represented point: sum of beta_i * values[support_i].
    pub fn combine(&self, values: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; values.cols()];
        for (&i, &b) in self.support.iter().zip(&self.beta) {
            crate::linalg::axpy(&mut out, b, values.row(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn validation_is_total(seed in 0u64..300) {
            // finite random instances always construct; a single injected NaN
            // anywhere always rejects
            let mut rng = crate::rng::RngStream::new(seed, 0);
            let l = 1 + rng.index(10);
            let d = 1 + rng.index(6);
            let q = crate::rng::gaussian_matrix(&mut rng, l, d);
            let k = crate::rng::gaussian_matrix(&mut rng, l, d);
            let v = crate::rng::gaussian_matrix(&mut rng, l, d);
            let inst = make_instance(q.clone(), k.clone(), v.clone(), seed % 2 == 0);
            prop_assert!(inst.is_ok());

            let bad_row = rng.index(l);
            let bad_col = rng.index(d);
            let mut vq = q.clone();
            *vq.get_mut(bad_row, bad_col) = f64::NAN;
            prop_assert!(make_instance(vq, k.clone(), v.clone(), false).is_err());
            let mut vk = k.clone();
            *vk.get_mut(bad_row, bad_col) = f64::INFINITY;
            prop_assert!(make_instance(q.clone(), vk, v.clone(), false).is_err());
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        let z = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        let inst = make_instance(z.clone(), z.clone(), z, false).unwrap();
        assert_eq!(inst.len(), 1);
        assert_eq!(inst.dim(), 1);
    }

    #[test]
    fn shape_mismatch_names_tensor() {
        let q = Matrix::zeros(2, 3);
        let k = Matrix::zeros(2, 2);
        let v = Matrix::zeros(2, 3);
        let err = make_instance(q, k, v, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('K'), "diagnostic should name K: {msg}");
    }

    #[test]
    fn non_finite_value_rejected() {
        let q = Matrix::zeros(2, 2);
        let k = Matrix::zeros(2, 2);
        let mut v = Matrix::zeros(2, 2);
        *v.get_mut(1, 0) = f64::NAN;
        let err = make_instance(q, k, v, false).unwrap_err();
        match err {
            Error::NonFinite { tensor, row, col } => {
                assert_eq!(tensor, "V");
                assert_eq!((row, col), (1, 0));
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn kernel_spec_rejects_odd_degree() {
        assert!(KernelSpec::polynomial(3).validate().is_err());
        assert!(KernelSpec::polynomial(2).validate().is_ok());
        assert!(KernelSpec::polynomial(0).validate().is_ok());
    }

    #[test]
    fn distribution_validates_sum() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn selection_plan_checks_causality() {
        let ok = SelectionPlan::new(vec![vec![0], vec![0, 1]], 2, true);
        assert!(ok.is_ok());
        let bad = SelectionPlan::new(vec![vec![1], vec![0, 1]], 2, true);
        assert!(bad.is_err());
    }

    #[test]
    fn selection_plan_rejects_duplicates_and_empty() {
        assert!(SelectionPlan::new(vec![vec![0, 0]], 1, false).is_err());
        assert!(SelectionPlan::new(vec![vec![]], 1, false).is_err());
    }

    #[test]
    fn simplex_combination_validates() {
        assert!(SimplexCombination::new(vec![0, 2], vec![0.5, 0.5]).is_ok());
        assert!(SimplexCombination::new(vec![0], vec![0.9]).is_err());
        assert!(SimplexCombination::new(vec![0, 0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn combine_reconstructs_point() {
        let v = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = SimplexCombination::new(vec![0, 1], vec![0.25, 0.75]).unwrap();
        assert_eq!(c.combine(&v), vec![0.25, 0.75]);
    }
}
