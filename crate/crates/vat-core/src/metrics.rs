//! Error and diagnostic measurements comparing an approximate output against
//! exact attention.

use serde::Serialize;

use crate::approximators::ApproximatorSpec;
use crate::attention::{exact_attention, QueryFlag};
use crate::error::{Error, Result};
use crate::kernels::{attention_weights, skew_stats};
use crate::linalg::{norm_sq, sq_dist};
use crate::model::{AttentionInstance, KernelSpec, Matrix};

const REL_EPS: f64 = 1e-12;

/// Per-query and aggregate approximation errors.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorStats {
    pub per_query_sq_error: Vec<f64>,
    pub mean_sq_error: f64,
    pub per_query_relative_error: Vec<f64>,
    pub mean_relative_error: f64,
}

/// Squared Euclidean error per query row, plus relative errors normalized by
/// the exact row norm.
pub fn compare(exact: &Matrix, approx: &Matrix) -> Result<ErrorStats> {
    if exact.rows() != approx.rows() || exact.cols() != approx.cols() {
        return Err(Error::ShapeMismatch(format!(
            "exact is {}x{}, approx is {}x{}",
            exact.rows(),
            exact.cols(),
            approx.rows(),
            approx.cols()
        )));
    }
    let l = exact.rows();
    let mut per_query_sq_error = Vec::with_capacity(l);
    let mut per_query_relative_error = Vec::with_capacity(l);
    for t in 0..l {
        let sq = sq_dist(exact.row(t), approx.row(t));
        per_query_sq_error.push(sq);
        per_query_relative_error.push(sq.sqrt() / (norm_sq(exact.row(t)).sqrt() + REL_EPS));
    }
    let mean_sq_error = per_query_sq_error.iter().sum::<f64>() / l as f64;
    let mean_relative_error = per_query_relative_error.iter().sum::<f64>() / l as f64;
    Ok(ErrorStats {
        per_query_sq_error,
        mean_sq_error,
        per_query_relative_error,
        mean_relative_error,
    })
}

/// Mean entropy and mean max-weight of the exact attention distributions of
/// an instance under a kernel.
pub fn skew_summary(spec: &KernelSpec, inst: &AttentionInstance) -> Result<(f64, f64)> {
    spec.validate()?;
    let l = inst.len();
    let all: Vec<usize> = (0..l).collect();
    let mut entropy_sum = 0.0;
    let mut max_sum = 0.0;
    for t in 0..l {
        let allowed = &all[..inst.allowed_len(t)];
        let ws = attention_weights(spec, inst.queries().row(t), inst.keys(), allowed)?;
        let stats = skew_stats(&ws.dist);
        entropy_sum += stats.entropy;
        max_sum += stats.max_weight;
    }
    Ok((entropy_sum / l as f64, max_sum / l as f64))
}

/// One (kernel, approximator, r) measurement.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximationReport {
    pub approximator: String,
    pub kernel: String,
    pub r: usize,
    pub per_query_sq_error: Vec<f64>,
    pub mean_sq_error: f64,
    pub mean_relative_error: f64,
    pub skew_entropy_mean: f64,
    pub skew_max_mean: f64,
    pub flags: Vec<QueryFlag>,
}

/// Assemble a report row from a finished comparison.
pub fn build_report(
    approximator: &ApproximatorSpec,
    kernel: &KernelSpec,
    r: usize,
    stats: &ErrorStats,
    skew: (f64, f64),
    flags: Vec<QueryFlag>,
) -> ApproximationReport {
    ApproximationReport {
        approximator: approximator.label(),
        kernel: kernel.to_string(),
        r,
        per_query_sq_error: stats.per_query_sq_error.clone(),
        mean_sq_error: stats.mean_sq_error,
        mean_relative_error: stats.mean_relative_error,
        skew_entropy_mean: skew.0,
        skew_max_mean: skew.1,
        flags,
    }
}

/// Mean squared error of one approximator family across a list of ranks,
/// against exact attention computed once.
pub fn error_curve(
    spec: &KernelSpec,
    inst: &AttentionInstance,
    approximator: &ApproximatorSpec,
    r_values: &[usize],
    default_seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let exact = exact_attention(spec, inst)?;
    let mut curve = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let out = approximator.apply(spec, inst, r, default_seed)?;
        let stats = compare(&exact.output, &out.output)?;
        curve.push((r, stats.mean_sq_error));
    }
    Ok(curve)
}
