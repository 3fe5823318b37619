//! Practical approximation schemes and the oracle baselines they chase,
//! behind a single dispatchable spec.

mod lsh;
mod orf;
mod window;

pub use lsh::{lsh_attention, lsh_hash, LshConfig};
pub use orf::{orf_attention, orf_features, orf_projection, OrfConfig, OrfMode};
pub use window::{sliding_window_attention, sliding_window_plan};

use serde::{Deserialize, Serialize};

use crate::attention::EngineOutput;
use crate::error::{Error, Result};
use crate::model::{AttentionInstance, KernelSpec};
use crate::oracles::{optimal_v_aware, optimal_v_oblivious};

/// A named approximator with its fixed parameters. The rank r (keys attended
/// per query, or feature count for the random-feature scheme) stays a free
/// variable so one spec can be swept over r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ApproximatorSpec {
    OptimalVOblivious,
    OptimalVAware,
    SlidingWindow,
    Lsh {
        rounds: usize,
        #[serde(default)]
        buckets: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        dedup_pairs: bool,
    },
    Orf {
        mode: OrfMode,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl ApproximatorSpec {
    /// Human-readable label used in report tables.
    pub fn label(&self) -> String {
        match self {
            ApproximatorSpec::OptimalVOblivious => "optimal_v_oblivious".into(),
            ApproximatorSpec::OptimalVAware => "optimal_v_aware".into(),
            ApproximatorSpec::SlidingWindow => "sliding_window".into(),
            ApproximatorSpec::Lsh { rounds, .. } => format!("lsh(rounds={rounds})"),
            ApproximatorSpec::Orf { mode, .. } => format!("orf({mode})"),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn lsh_config(
        &self,
        rounds: usize,
        buckets: Option<usize>,
        seed: Option<u64>,
        dedup: bool,
        kernel: &KernelSpec,
        r: usize,
        default_seed: u64,
    ) -> LshConfig {
        let temperature = matches!(
            kernel,
            KernelSpec::Exponential {
                temperature_scaling: true
            }
        );
        LshConfig {
            keys_per_round: r,
            rounds,
            buckets,
            seed: seed.unwrap_or(default_seed),
            dedup_pairs: dedup,
            temperature_scaling: temperature,
        }
    }

    /// Check parameters against the instance, kernel, and rank before any
    /// computation starts.
    pub fn validate(
        &self,
        kernel: &KernelSpec,
        inst: &AttentionInstance,
        r: usize,
        default_seed: u64,
    ) -> Result<()> {
        kernel.validate()?;
        match *self {
            ApproximatorSpec::OptimalVOblivious => {
                if r == 0 {
                    return Err(Error::InvalidSelection("top-r selection needs r >= 1".into()));
                }
                Ok(())
            }
            ApproximatorSpec::OptimalVAware => {
                let l = inst.len();
                let d = inst.dim();
                if r == 0 || (r > 1 && r < d + 1 && !brute_force_feasible(l, r)) {
                    return Err(Error::UnsupportedRank {
                        r,
                        l,
                        d,
                        hint: "supported: r = 1, r >= d+1, or small instances".into(),
                    });
                }
                Ok(())
            }
            ApproximatorSpec::SlidingWindow => {
                if r < 2 || !r.is_multiple_of(2) {
                    return Err(Error::InvalidWindow(r));
                }
                Ok(())
            }
            ApproximatorSpec::Lsh {
                rounds,
                buckets,
                seed,
                dedup_pairs,
            } => {
                if !matches!(kernel, KernelSpec::Exponential { .. }) {
                    return Err(Error::InvalidLshConfig(
                        "lsh attention implements the exponential kernel only".into(),
                    ));
                }
                self.lsh_config(rounds, buckets, seed, dedup_pairs, kernel, r, default_seed)
                    .validate(inst.len())
            }
            ApproximatorSpec::Orf { .. } => {
                if !matches!(
                    kernel,
                    KernelSpec::Exponential {
                        temperature_scaling: true
                    }
                ) {
                    return Err(Error::InvalidOrfConfig(
                        "orf estimates the temperature-scaled exponential kernel; \
                         set the kernel's temperature_scaling flag"
                            .into(),
                    ));
                }
                if inst.causal() {
                    return Err(Error::CausalUnsupported("orf_attention"));
                }
                if r == 0 {
                    return Err(Error::InvalidOrfConfig("need at least one feature".into()));
                }
                Ok(())
            }
        }
    }

    /// Run the approximator at rank (or feature count) `r`.
    pub fn apply(
        &self,
        kernel: &KernelSpec,
        inst: &AttentionInstance,
        r: usize,
        default_seed: u64,
    ) -> Result<EngineOutput> {
        match *self {
            ApproximatorSpec::OptimalVOblivious => optimal_v_oblivious(kernel, inst, r),
            ApproximatorSpec::OptimalVAware => optimal_v_aware(kernel, inst, r),
            ApproximatorSpec::SlidingWindow => sliding_window_attention(kernel, inst, r),
            ApproximatorSpec::Lsh {
                rounds,
                buckets,
                seed,
                dedup_pairs,
            } => {
                if !matches!(kernel, KernelSpec::Exponential { .. }) {
                    return Err(Error::InvalidLshConfig(
                        "lsh attention implements the exponential kernel only".into(),
                    ));
                }
                let cfg =
                    self.lsh_config(rounds, buckets, seed, dedup_pairs, kernel, r, default_seed);
                lsh_attention(inst, &cfg)
            }
            ApproximatorSpec::Orf { mode, seed } => {
                self.validate(kernel, inst, r, default_seed)?;
                let cfg = OrfConfig::new(r, mode, seed.unwrap_or(default_seed));
                orf_attention(inst, &cfg)
            }
        }
    }
}

fn brute_force_feasible(l: usize, r: usize) -> bool {
    let k = r.min(l);
    let k = k.min(l - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out.saturating_mul((l - i) as u128) / (i as u128 + 1);
        if out > 1_000_000 {
            return false;
        }
    }
    true
}
