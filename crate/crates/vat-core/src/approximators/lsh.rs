//! Multi-round LSH attention.
//!
//! Each round hashes queries and keys with signed random projections, sorts
//! both sides stably by (bucket, original position), chunks them into blocks
//! of B = r/2, and scores each query against the keys of its own and the
//! previous block. Unnormalized exponential scores accumulate across rounds
//! (with multiplicity, unless deduplication is requested) and are normalized
//! once at the end. Overflow is avoided with a per-query two-pass max shift.

use serde::{Deserialize, Serialize};

use crate::attention::{EngineOutput, FlagEvent, QueryFlag};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::model::{AttentionInstance, Matrix};
use crate::rng::{gaussian_matrix, RngStream};

/// LSH attention parameters. `keys_per_round` is r = 2B where B is the block
/// size; `buckets` defaults to 4L/r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LshConfig {
    pub keys_per_round: usize,
    pub rounds: usize,
    #[serde(default)]
    pub buckets: Option<usize>,
    pub seed: u64,
    /// Accumulate each (query, key) pair once even if several rounds produce
    /// it. Off by default: repeated pairs contribute once per round.
    #[serde(default)]
    pub dedup_pairs: bool,
    /// Divide queries and keys by d^(1/4) before scoring, matching the
    /// exponential kernel's temperature flag.
    #[serde(default)]
    pub temperature_scaling: bool,
}

impl LshConfig {
    pub fn new(keys_per_round: usize, rounds: usize, seed: u64) -> Self {
        LshConfig {
            keys_per_round,
            rounds,
            buckets: None,
            seed,
            dedup_pairs: false,
            temperature_scaling: false,
        }
    }

    /// Block size B = r/2.
    pub fn block_size(&self) -> usize {
        self.keys_per_round / 2
    }

    /// Bucket count C, defaulting to 4L/r.
    pub fn bucket_count(&self, l: usize) -> usize {
        self.buckets
            .unwrap_or_else(|| 4 * l / self.keys_per_round.max(1))
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        if self.keys_per_round < 2 || !self.keys_per_round.is_multiple_of(2) {
            return Err(Error::InvalidLshConfig(format!(
                "keys per round must be even and >= 2, got {}",
                self.keys_per_round
            )));
        }
        let b = self.block_size();
        if b > l || !l.is_multiple_of(b) {
            return Err(Error::InvalidLshConfig(format!(
                "block size B = {b} must divide L = {l}"
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidLshConfig("rounds must be >= 1".into()));
        }
        let c = self.bucket_count(l);
        if c < 2 || !c.is_multiple_of(2) {
            return Err(Error::InvalidLshConfig(format!(
                "bucket count must be even and >= 2, got {c}"
            )));
        }
        Ok(())
    }
}

/// Signed-projection hash: the index of the largest entry of (-Rx; Rx),
/// in 0..C, ties to the lowest index.
pub fn lsh_hash(projection: &Matrix, x: &[f64]) -> usize {
    let half = projection.rows();
    let mut best = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..2 * half {
        let p = dot(projection.row(i % half), x);
        let val = if i < half { -p } else { p };
        if val > best_val {
            best_val = val;
            best = i;
        }
    }
    best
}

/// Stable order by (bucket, original position).
fn sorted_by_bucket(buckets: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..buckets.len()).collect();
    order.sort_by_key(|&i| (buckets[i], i));
    order
}

pub fn lsh_attention(inst: &AttentionInstance, cfg: &LshConfig) -> Result<EngineOutput> {
    let l = inst.len();
    let d = inst.dim();
    cfg.validate(l)?;
    let b = cfg.block_size();
    let c = cfg.bucket_count(l);
    let scale = if cfg.temperature_scaling {
        1.0 / (d as f64).sqrt()
    } else {
        1.0
    };

    // (key, logit) candidates accumulated across rounds, plus the raw
    // first-round candidate lists for the all-masked fallback
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); l];
    let mut first_round_candidates: Vec<Vec<usize>> = vec![Vec::new(); l];

    for round in 0..cfg.rounds {
        let mut rng = RngStream::new(cfg.seed, round as u64);
        let projection = gaussian_matrix(&mut rng, c / 2, d);
        let q_buckets: Vec<usize> = (0..l)
            .map(|t| lsh_hash(&projection, inst.queries().row(t)))
            .collect();
        let k_buckets: Vec<usize> = (0..l)
            .map(|i| lsh_hash(&projection, inst.keys().row(i)))
            .collect();
        let q_order = sorted_by_bucket(&q_buckets);
        let k_order = sorted_by_bucket(&k_buckets);

        for (pos, &t) in q_order.iter().enumerate() {
            let block = pos / b;
            let lo = if block == 0 { 0 } else { (block - 1) * b };
            let hi = (block + 1) * b;
            for &ki in &k_order[lo..hi] {
                if round == 0 {
                    first_round_candidates[t].push(ki);
                }
                if inst.causal() && ki > t {
                    continue;
                }
                let logit = dot(inst.queries().row(t), inst.keys().row(ki)) * scale;
                entries[t].push((ki, logit));
            }
        }
    }

    let mut output = Matrix::zeros(l, d);
    let mut flags = Vec::new();
    for t in 0..l {
        let list = &mut entries[t];
        if list.is_empty() {
            // every candidate was causally masked
            let cands = &first_round_candidates[t];
            let w = 1.0 / cands.len() as f64;
            let row = output.row_mut(t);
            for &ki in cands {
                axpy(row, w, inst.values().row(ki));
            }
            flags.push(QueryFlag {
                query: t,
                event: FlagEvent::LshZeroScore,
            });
            continue;
        }
        if cfg.dedup_pairs {
            // the logit of a repeated pair is identical, so key-dedup suffices
            list.sort_by_key(|&(ki, _)| ki);
            list.dedup_by_key(|&mut (ki, _)| ki);
        }
        let max_logit = list
            .iter()
            .map(|&(_, logit)| logit)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        let row = output.row_mut(t);
        for &(ki, logit) in list.iter() {
            let w = (logit - max_logit).exp();
            denom += w;
            axpy(row, w, inst.values().row(ki));
        }
        for x in row.iter_mut() {
            *x /= denom;
        }
    }
    Ok(EngineOutput { output, flags })
}
