//! Synthetic attention instances.
//!
//! Gaussian queries/keys give mildly skewed attention; clustered ones place
//! each vector near a shared random center and concentrate attention within
//! clusters. Heavy-tailed value norms (Pareto) stress value-awareness: a few
//! huge value vectors dominate the output error when selection ignores them.

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use vat_core::{gaussian_matrix, make_instance, AttentionInstance, Matrix, RngStream};

/// Query/key generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QkDist {
    Gaussian { scale: f64 },
    Clustered { n_clusters: usize, intra_scale: f64 },
}

/// Value generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VDist {
    Gaussian { scale: f64 },
    /// Uniformly random directions with Pareto(shape) norms (scale 1).
    HeavyTailed { shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub l: usize,
    pub d: usize,
    pub qk: QkDist,
    pub v: VDist,
    #[serde(default)]
    pub causal: bool,
    pub seed: u64,
}

// stream ids within the spec seed
const STREAM_CENTERS: u64 = 0;
const STREAM_ASSIGN: u64 = 1;
const STREAM_Q: u64 = 2;
const STREAM_K: u64 = 3;
const STREAM_V: u64 = 4;
const STREAM_V_NORMS: u64 = 5;

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.d == 0 {
            return Err(BenchError::InvalidSpec(format!(
                "need L >= 1 and d >= 1, got L={}, d={}",
                self.l, self.d
            )));
        }
        match self.qk {
            QkDist::Gaussian { scale } if scale <= 0.0 => {
                return Err(BenchError::InvalidSpec(format!("Q/K scale {scale} <= 0")));
            }
            QkDist::Clustered {
                n_clusters,
                intra_scale,
            } => {
                if n_clusters == 0 {
                    return Err(BenchError::InvalidSpec("need n_clusters >= 1".into()));
                }
                if intra_scale <= 0.0 {
                    return Err(BenchError::InvalidSpec(format!(
                        "intra-cluster scale {intra_scale} <= 0"
                    )));
                }
            }
            _ => {}
        }
        match self.v {
            VDist::Gaussian { scale } if scale <= 0.0 => {
                return Err(BenchError::InvalidSpec(format!("V scale {scale} <= 0")));
            }
            VDist::HeavyTailed { shape } if shape <= 0.0 => {
                return Err(BenchError::InvalidSpec(format!("Pareto shape {shape} <= 0")));
            }
            _ => {}
        }
        Ok(())
    }
}

fn scaled_gaussian(seed: u64, stream: u64, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut rng = RngStream::new(seed, stream);
    let mut m = gaussian_matrix(&mut rng, rows, cols);
    if scale != 1.0 {
        for r in 0..rows {
            for x in m.row_mut(r) {
                *x *= scale;
            }
        }
    }
    m
}

fn clustered(
    seed: u64,
    stream: u64,
    centers: &Matrix,
    assignments: &[usize],
    intra_scale: f64,
) -> Matrix {
    let d = centers.cols();
    let mut rng = RngStream::new(seed, stream);
    let rows: Vec<Vec<f64>> = assignments
        .iter()
        .map(|&c| {
            (0..d)
                .map(|j| centers.get(c, j) + intra_scale * rng.normal())
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows).expect("rows share dimension")
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<AttentionInstance> {
    spec.validate()?;
    let (l, d, seed) = (spec.l, spec.d, spec.seed);

    let (q, k) = match spec.qk {
        QkDist::Gaussian { scale } => (
            scaled_gaussian(seed, STREAM_Q, l, d, scale),
            scaled_gaussian(seed, STREAM_K, l, d, scale),
        ),
        QkDist::Clustered {
            n_clusters,
            intra_scale,
        } => {
            let mut centers_rng = RngStream::new(seed, STREAM_CENTERS);
            let centers = gaussian_matrix(&mut centers_rng, n_clusters, d);
            let mut assign_rng = RngStream::new(seed, STREAM_ASSIGN);
            let q_assign: Vec<usize> = (0..l).map(|_| assign_rng.index(n_clusters)).collect();
            let k_assign: Vec<usize> = (0..l).map(|_| assign_rng.index(n_clusters)).collect();
            (
                clustered(seed, STREAM_Q, &centers, &q_assign, intra_scale),
                clustered(seed, STREAM_K, &centers, &k_assign, intra_scale),
            )
        }
    };

    let v = match spec.v {
        VDist::Gaussian { scale } => scaled_gaussian(seed, STREAM_V, l, d, scale),
        VDist::HeavyTailed { shape } => {
            let mut dir_rng = RngStream::new(seed, STREAM_V);
            let mut norm_rng = RngStream::new(seed, STREAM_V_NORMS);
            let rows: Vec<Vec<f64>> = (0..l)
                .map(|_| {
                    let mut dir: Vec<f64> = (0..d).map(|_| dir_rng.normal()).collect();
                    let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                    let target = norm_rng.pareto(shape);
                    for x in dir.iter_mut() {
                        *x *= target / n;
                    }
                    dir
                })
                .collect();
            Matrix::from_rows(&rows).expect("rows share dimension")
        }
    };

    Ok(make_instance(q, k, v, spec.causal)?)
}
