//! Kernel similarity scoring, normalization into attention distributions,
//! explicit feature maps, and skewness statistics.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{Distribution, KernelSpec, Matrix};

/// Skewness summary of an attention distribution: natural-log entropy and the
/// largest single weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewStats {
    pub entropy: f64,
    pub max_weight: f64,
}

/// Attention weights for one query plus a marker for the degenerate
/// all-zero-score fallback (possible for the polynomial and elu families).
#[derive(Debug, Clone)]
pub struct WeightedScores {
    pub dist: Distribution,
    pub degenerate: bool,
}

/// All scores at or below this are treated as an all-zero denominator.
pub(crate) const DEGENERATE_EPS: f64 = 1e-300;

/// Elementwise x -> x + 1 for x > 0, e^x otherwise (ELU with unit alpha,
/// shifted up by one, so every coordinate is strictly positive).
pub(crate) fn elu_feature(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| if v > 0.0 { v + 1.0 } else { v.exp() })
        .collect()
}

fn logit_scale(spec: &KernelSpec, dim: usize) -> f64 {
    match *spec {
        KernelSpec::Exponential {
            temperature_scaling: true,
        } => 1.0 / (dim as f64).sqrt(),
        _ => 1.0,
    }
}

/// Similarity score kappa(q, k) >= 0.
///
/// Exponential: exp(<q, k>), with both inputs divided by d^(1/4) first when
/// temperature scaling is on. Polynomial: <q, k>^C for even C. Elu: the inner
/// product of the shifted-ELU feature maps.
pub fn kernel_score(spec: &KernelSpec, q: &[f64], k: &[f64]) -> Result<f64> {
    spec.validate()?;
    if q.len() != k.len() {
        return Err(Error::ShapeMismatch(format!(
            "query has dimension {}, key has {}",
            q.len(),
            k.len()
        )));
    }
    Ok(score_validated(spec, q, k))
}

/// Scoring core; assumes the spec has been validated and dimensions match.
pub(crate) fn score_validated(spec: &KernelSpec, q: &[f64], k: &[f64]) -> f64 {
    match *spec {
        KernelSpec::Exponential { .. } => (dot(q, k) * logit_scale(spec, q.len())).exp(),
        KernelSpec::Polynomial { degree } => dot(q, k).powi(degree as i32),
        KernelSpec::Elu => dot(&elu_feature(q), &elu_feature(k)),
    }
}

/// Normalized attention weights of one query over `allowed` key indices;
/// zero everywhere else.
///
/// The exponential family subtracts the maximum logit before exponentiating,
/// which leaves the normalized distribution unchanged but never overflows.
/// If every score underflows to zero (possible for polynomial/elu), falls
/// back to the uniform distribution over `allowed` and reports it.
pub fn attention_weights(
    spec: &KernelSpec,
    q: &[f64],
    keys: &Matrix,
    allowed: &[usize],
) -> Result<WeightedScores> {
    spec.validate()?;
    if allowed.is_empty() {
        return Err(Error::InvalidSelection("allowed set is empty".into()));
    }
    if q.len() != keys.cols() {
        return Err(Error::ShapeMismatch(format!(
            "query has dimension {}, keys have {}",
            q.len(),
            keys.cols()
        )));
    }
    let l = keys.rows();
    let mut weights = vec![0.0; l];

    match *spec {
        KernelSpec::Exponential { .. } => {
            let scale = logit_scale(spec, q.len());
            let mut logits = Vec::with_capacity(allowed.len());
            let mut max_logit = f64::NEG_INFINITY;
            for &i in allowed {
                let logit = dot(q, keys.row(i)) * scale;
                if logit > max_logit {
                    max_logit = logit;
                }
                logits.push(logit);
            }
            let mut sum = 0.0;
            for (&i, &logit) in allowed.iter().zip(&logits) {
                let w = (logit - max_logit).exp();
                weights[i] = w;
                sum += w;
            }
            for &i in allowed {
                weights[i] /= sum;
            }
            Ok(WeightedScores {
                dist: dist_from_normalized(weights),
                degenerate: false,
            })
        }
        KernelSpec::Polynomial { .. } | KernelSpec::Elu => {
            let phi_q = match *spec {
                KernelSpec::Elu => Some(elu_feature(q)),
                _ => None,
            };
            let mut sum = 0.0;
            for &i in allowed {
                let s = match (&phi_q, *spec) {
                    (Some(pq), _) => dot(pq, &elu_feature(keys.row(i))),
                    (None, KernelSpec::Polynomial { degree }) => {
                        dot(q, keys.row(i)).powi(degree as i32)
                    }
                    _ => unreachable!(),
                };
                weights[i] = s;
                sum += s;
            }
            if sum <= DEGENERATE_EPS {
                Ok(WeightedScores {
                    dist: Distribution::uniform_over(l, allowed),
                    degenerate: true,
                })
            } else {
                for &i in allowed {
                    weights[i] /= sum;
                }
                Ok(WeightedScores {
                    dist: dist_from_normalized(weights),
                    degenerate: false,
                })
            }
        }
    }
}

fn dist_from_normalized(weights: Vec<f64>) -> Distribution {
    debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    Distribution::new(weights).expect("normalized weights form a distribution")
}

/// Explicit finite feature map.
///
/// Supported: elu (the d-vector phi(x)) and polynomial degree 2 (the d^2
/// vector of pairwise products, whose self inner product is <x, y>^2). The
/// exponential kernel has no finite exact map; use the random-feature
/// approximator instead.
pub fn feature_map(spec: &KernelSpec, x: &[f64]) -> Result<Vec<f64>> {
    match *spec {
        KernelSpec::Elu => Ok(elu_feature(x)),
        KernelSpec::Polynomial { degree: 2 } => {
            let d = x.len();
            let mut out = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    out.push(x[a] * x[b]);
                }
            }
            Ok(out)
        }
        KernelSpec::Polynomial { degree } => Err(Error::UnsupportedFeatureMap(format!(
            "polynomial degree {degree} (only degree 2 has an explicit map here)"
        ))),
        KernelSpec::Exponential { .. } => {
            Err(Error::UnsupportedFeatureMap("the exponential kernel".into()))
        }
    }
}

/// Entropy (natural log, with 0 ln 0 := 0) and maximum weight of a
/// distribution.
pub fn skew_stats(alpha: &Distribution) -> SkewStats {
    let mut entropy = 0.0;
    let mut max_weight = 0.0f64;
    for &w in alpha.weights() {
        if w > 0.0 {
            entropy -= w * w.ln();
        }
        max_weight = max_weight.max(w);
    }
    SkewStats {
        entropy: entropy.max(0.0),
        max_weight,
    }
}
