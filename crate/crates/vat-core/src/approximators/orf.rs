//! Random-feature estimation of the exponential kernel.
//!
//! With w a row of standard gaussians, E[exp(<w,q> - |q|^2/2) *
//! exp(<w,k> - |k|^2/2)] = exp(<q,k>), so inner products of the randomized
//! feature maps estimate the exponential kernel without bias. Inputs are
//! divided by d^(1/4) first, matching the temperature-scaled kernel. Feature
//! values are shifted by max-based stabilizers before exponentiation; the
//! shifts cancel in the normalized attention output.

use serde::{Deserialize, Serialize};

use crate::attention::{EngineOutput, FlagEvent, QueryFlag};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq};
use crate::model::{AttentionInstance, Matrix};
use crate::rng::{gaussian_matrix, RngStream};

/// How the F x d projection matrix is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrfMode {
    /// All entries i.i.d. standard normal. The unbiasedness argument applies
    /// exactly.
    IidGaussian,
    /// Stacked orthonormal blocks with each row rescaled by an independent
    /// chi(d) norm, restoring the gaussian row marginal while keeping rows
    /// orthogonal.
    OrthogonalChi,
    /// Plain stacked orthonormal blocks.
    Orthonormal,
}

impl std::fmt::Display for OrfMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrfMode::IidGaussian => write!(f, "iid_gaussian"),
            OrfMode::OrthogonalChi => write!(f, "orthogonal_chi"),
            OrfMode::Orthonormal => write!(f, "orthonormal"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrfConfig {
    pub features: usize,
    pub mode: OrfMode,
    pub seed: u64,
}

impl OrfConfig {
    pub fn new(features: usize, mode: OrfMode, seed: u64) -> Self {
        OrfConfig {
            features,
            mode,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features == 0 {
            return Err(Error::InvalidOrfConfig("need at least one feature".into()));
        }
        Ok(())
    }
}

/// The stabilized feature map (1/sqrt(F)) exp(Rx - |x|^2/2 - stabilizer),
/// applied elementwise. `x` is expected to be pre-scaled by d^(1/4).
pub fn orf_features(projection: &Matrix, x: &[f64], stabilizer: f64) -> Vec<f64> {
    let f = projection.rows();
    let inv_sqrt_f = 1.0 / (f as f64).sqrt();
    let half_norm = norm_sq(x) / 2.0;
    (0..f)
        .map(|i| inv_sqrt_f * (dot(projection.row(i), x) - half_norm - stabilizer).exp())
        .collect()
}

/// Draw the F x d projection matrix for a config. Stream 0 feeds the
/// gaussian entries, stream 1 the chi rescaling draws.
pub fn orf_projection(cfg: &OrfConfig, dim: usize) -> Matrix {
    let mut gauss = RngStream::new(cfg.seed, 0);
    match cfg.mode {
        OrfMode::IidGaussian => gaussian_matrix(&mut gauss, cfg.features, dim),
        OrfMode::OrthogonalChi | OrfMode::Orthonormal => {
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.features);
            while rows.len() < cfg.features {
                let block = orthonormal_block(&mut gauss, dim);
                for row in block {
                    if rows.len() < cfg.features {
                        rows.push(row);
                    }
                }
            }
            if cfg.mode == OrfMode::OrthogonalChi {
                let mut chi = RngStream::new(cfg.seed, 1);
                for row in rows.iter_mut() {
                    let norm = chi.chi(dim);
                    for x in row.iter_mut() {
                        *x *= norm;
                    }
                }
            }
            Matrix::from_rows(&rows).expect("rows share the dimension")
        }
    }
}

/// Orthonormalize the rows of a fresh d x d gaussian draw by modified
/// Gram-Schmidt, redrawing in the (probability-zero) degenerate case.
fn orthonormal_block(rng: &mut RngStream, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let raw = gaussian_matrix(rng, dim, dim);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut ok = true;
        for i in 0..dim {
            let mut v = raw.row(i).to_vec();
            for prev in &rows {
                let proj = dot(&v, prev);
                axpy(&mut v, -proj, prev);
            }
            let n = norm_sq(&v).sqrt();
            if n < 1e-12 {
                ok = false;
                break;
            }
            for x in v.iter_mut() {
                *x /= n;
            }
            rows.push(v);
        }
        if ok {
            return rows;
        }
    }
}

pub fn orf_attention(inst: &AttentionInstance, cfg: &OrfConfig) -> Result<EngineOutput> {
    cfg.validate()?;
    if inst.causal() {
        return Err(Error::CausalUnsupported("orf_attention"));
    }
    orf_attention_with_offset(inst, cfg, 0.0)
}

/// Body of [`orf_attention`] with an extra constant added to both
/// stabilizers; the normalized output must not depend on it.
pub(crate) fn orf_attention_with_offset(
    inst: &AttentionInstance,
    cfg: &OrfConfig,
    offset: f64,
) -> Result<EngineOutput> {
    let l = inst.len();
    let d = inst.dim();
    let projection = orf_projection(cfg, d);
    let root4 = (d as f64).powf(0.25);

    let scaled = |row: &[f64]| -> Vec<f64> { row.iter().map(|x| x / root4).collect() };

    // key-side stabilizer: the global max over all key projections
    let keys_scaled: Vec<Vec<f64>> = (0..l).map(|i| scaled(inst.keys().row(i))).collect();
    let mut key_stab = f64::NEG_INFINITY;
    let mut key_proj: Vec<Vec<f64>> = Vec::with_capacity(l);
    for k in &keys_scaled {
        let p: Vec<f64> = (0..cfg.features)
            .map(|i| dot(projection.row(i), k))
            .collect();
        for &x in &p {
            key_stab = key_stab.max(x);
        }
        key_proj.push(p);
    }
    key_stab += offset;

    let inv_sqrt_f = 1.0 / (cfg.features as f64).sqrt();
    let key_features: Vec<Vec<f64>> = keys_scaled
        .iter()
        .zip(&key_proj)
        .map(|(k, p)| {
            let half = norm_sq(k) / 2.0;
            p.iter()
                .map(|&x| inv_sqrt_f * (x - half - key_stab).exp())
                .collect()
        })
        .collect();

    let mut output = Matrix::zeros(l, d);
    let mut flags = Vec::new();
    for t in 0..l {
        let q = scaled(inst.queries().row(t));
        let proj: Vec<f64> = (0..cfg.features)
            .map(|i| dot(projection.row(i), &q))
            .collect();
        // query-side stabilizer: this query's own max projection
        let q_stab = proj.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) + offset;
        let half = norm_sq(&q) / 2.0;
        let q_features: Vec<f64> = proj
            .iter()
            .map(|&x| inv_sqrt_f * (x - half - q_stab).exp())
            .collect();

        let scores: Vec<f64> = key_features.iter().map(|kf| dot(&q_features, kf)).collect();
        let denom: f64 = scores.iter().sum();
        let row = output.row_mut(t);
        if denom <= 1e-300 {
            let w = 1.0 / l as f64;
            for i in 0..l {
                axpy(row, w, inst.values().row(i));
            }
            flags.push(QueryFlag {
                query: t,
                event: FlagEvent::DegenerateDenominator,
            });
        } else {
            for (i, &s) in scores.iter().enumerate() {
                if s != 0.0 {
                    axpy(row, s / denom, inst.values().row(i));
                }
            }
        }
    }
    Ok(EngineOutput { output, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_instance;

    #[test]
    fn zero_vector_features_are_uniform() {
        let proj = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 0.25]]).unwrap();
        let phi = orf_features(&proj, &[0.0, 0.0], 0.0);
        let expect = 1.0 / (2.0f64).sqrt();
        assert_eq!(phi, vec![expect, expect]);
        assert!((dot(&phi, &phi) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn features_match_direct_formula() {
        let mut rng = RngStream::new(120, 0);
        let f = 64;
        let d = 6;
        let proj = gaussian_matrix(&mut rng, f, d);
        let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let stab = 1.75;
        let phi = orf_features(&proj, &x, stab);
        let half = norm_sq(&x) / 2.0;
        for i in 0..f {
            let want = (dot(proj.row(i), &x) - half - stab).exp() / (f as f64).sqrt();
            assert!((phi[i] - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn stabilizer_shift_rescales_features() {
        let proj = Matrix::from_rows(&[vec![0.3, -0.7], vec![1.1, 0.0]]).unwrap();
        let x = [0.4, -0.9];
        let base = orf_features(&proj, &x, 0.0);
        let shifted = orf_features(&proj, &x, 2.5);
        let factor = (-2.5f64).exp();
        for (b, s) in base.iter().zip(&shifted) {
            assert!((b * factor - s).abs() < 1e-15 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn identical_inputs_yield_value_mean() {
        // all queries equal and all keys equal: every score matches, so the
        // output is the plain mean of the value rows regardless of the draw
        let l = 6;
        let d = 4;
        let q = Matrix::from_rows(&vec![vec![0.3, -0.1, 0.2, 0.05]; l]).unwrap();
        let k = Matrix::from_rows(&vec![vec![-0.2, 0.4, 0.1, 0.3]; l]).unwrap();
        let mut rng = RngStream::new(121, 0);
        let v = gaussian_matrix(&mut rng, l, d);
        let inst = make_instance(q, k, v, false).unwrap();
        let cfg = OrfConfig::new(32, OrfMode::IidGaussian, 5);
        let out = orf_attention(&inst, &cfg).unwrap();
        for t in 0..l {
            for c in 0..d {
                let mean: f64 = (0..l).map(|i| inst.values().get(i, c)).sum::<f64>() / l as f64;
                assert!((out.output.get(t, c) - mean).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stabilizer_offset_leaves_output_unchanged() {
        let mut rng = RngStream::new(122, 0);
        let inst = make_instance(
            gaussian_matrix(&mut rng, 8, 4),
            gaussian_matrix(&mut rng, 8, 4),
            gaussian_matrix(&mut rng, 8, 4),
            false,
        )
        .unwrap();
        let cfg = OrfConfig::new(16, OrfMode::OrthogonalChi, 3);
        let base = orf_attention_with_offset(&inst, &cfg, 0.0).unwrap();
        let moved = orf_attention_with_offset(&inst, &cfg, 4.5).unwrap();
        for t in 0..8 {
            for c in 0..4 {
                assert!((base.output.get(t, c) - moved.output.get(t, c)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn causal_instances_are_rejected() {
        let mut rng = RngStream::new(123, 0);
        let inst = make_instance(
            gaussian_matrix(&mut rng, 4, 2),
            gaussian_matrix(&mut rng, 4, 2),
            gaussian_matrix(&mut rng, 4, 2),
            true,
        )
        .unwrap();
        let cfg = OrfConfig::new(8, OrfMode::IidGaussian, 1);
        assert!(matches!(
            orf_attention(&inst, &cfg),
            Err(Error::CausalUnsupported(_))
        ));
    }

    #[test]
    fn orthonormal_modes_have_orthonormal_blocks() {
        let d = 8;
        for mode in [OrfMode::Orthonormal, OrfMode::OrthogonalChi] {
            let cfg = OrfConfig::new(2 * d, mode, 17);
            let r = orf_projection(&cfg, d);
            assert_eq!(r.rows(), 2 * d);
            for block in 0..2 {
                for i in 0..d {
                    for j in 0..d {
                        let a = r.row(block * d + i);
                        let b = r.row(block * d + j);
                        let got = dot(a, b);
                        if mode == OrfMode::Orthonormal {
                            let want = if i == j { 1.0 } else { 0.0 };
                            assert!((got - want).abs() < 1e-10);
                        } else if i != j {
                            assert!(got.abs() < 1e-6 * (1.0 + norm_sq(a).sqrt() * norm_sq(b).sqrt()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_feature_estimator_is_nearly_unbiased() {
        // <q,k> = 0.5 with unit norms: the mean estimated score over many
        // independent single-feature draws approaches e^0.5
        let d = 8;
        let mut q = vec![0.0; d];
        q[0] = 1.0;
        let mut k = vec![0.0; d];
        k[0] = 0.5;
        k[1] = (1.0f64 - 0.25).sqrt();
        let target = 0.5f64.exp();

        let mut rng = RngStream::new(2024, 0);
        let draws = 10_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let fq = (dot(&w, &q) - 0.5).exp();
            let fk = (dot(&w, &k) - 0.5).exp();
            sum += fq * fk;
        }
        let mean = sum / draws as f64;
        assert!(
            (mean - target).abs() / target < 0.05,
            "mean {mean} vs {target}"
        );
    }
}
