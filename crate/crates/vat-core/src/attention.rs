//! Exact generalized attention and sparse attention over an explicit
//! selection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::attention_weights;
use crate::linalg::axpy;
use crate::model::{AttentionInstance, KernelSpec, Matrix, SelectionPlan};

/// Per-query events surfaced in run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagEvent {
    /// Every kernel score in the allowed set underflowed to zero; the query
    /// fell back to the uniform distribution.
    DegenerateDenominator,
    /// An LSH query ended up with no unmasked candidate pairs and fell back
    /// to averaging its first-round candidates.
    LshZeroScore,
}

impl std::fmt::Display for FlagEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlagEvent::DegenerateDenominator => write!(f, "degenerate_denominator"),
            FlagEvent::LshZeroScore => write!(f, "lsh_zero_score"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryFlag {
    pub query: usize,
    pub event: FlagEvent,
}

/// An L x d output matrix plus any per-query fallback flags raised while
/// computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineOutput {
    pub output: Matrix,
    pub flags: Vec<QueryFlag>,
}

/// Full attention: row t is the alpha-weighted average of the allowed value
/// rows, with alpha the normalized kernel scores of query t.
pub fn exact_attention(spec: &KernelSpec, inst: &AttentionInstance) -> Result<EngineOutput> {
    spec.validate()?;
    let l = inst.len();
    let all: Vec<usize> = (0..l).collect();
    let mut output = Matrix::zeros(l, inst.dim());
    let mut flags = Vec::new();
    for t in 0..l {
        let allowed = &all[..inst.allowed_len(t)];
        let ws = attention_weights(spec, inst.queries().row(t), inst.keys(), allowed)?;
        if ws.degenerate {
            flags.push(QueryFlag {
                query: t,
                event: FlagEvent::DegenerateDenominator,
            });
        }
        let row = output.row_mut(t);
        for &i in allowed {
            let w = ws.dist.get(i);
            if w != 0.0 {
                axpy(row, w, inst.values().row(i));
            }
        }
    }
    Ok(EngineOutput { output, flags })
}

/// Sparse attention: row t renormalizes the kernel scores over the plan's
/// index set S_t, with the same stabilization and degenerate-denominator
/// policy as full attention restricted to S_t.
pub fn sparse_attention(
    spec: &KernelSpec,
    inst: &AttentionInstance,
    plan: &SelectionPlan,
) -> Result<EngineOutput> {
    spec.validate()?;
    let l = inst.len();
    if plan.len() != l {
        return Err(Error::InvalidSelection(format!(
            "plan covers {} queries, instance has {l}",
            plan.len()
        )));
    }
    let mut output = Matrix::zeros(l, inst.dim());
    let mut flags = Vec::new();
    for t in 0..l {
        let allowed = plan.set(t);
        let max = *allowed.last().expect("plan sets are nonempty");
        if max >= l {
            return Err(Error::InvalidSelection(format!(
                "selection for query {t} references key {max}, but L = {l}"
            )));
        }
        if inst.causal() && max > t {
            return Err(Error::InvalidSelection(format!(
                "causal violation: query {t} selects key {max}"
            )));
        }
        let ws = attention_weights(spec, inst.queries().row(t), inst.keys(), allowed)?;
        if ws.degenerate {
            flags.push(QueryFlag {
                query: t,
                event: FlagEvent::DegenerateDenominator,
            });
        }
        let row = output.row_mut(t);
        for &i in allowed {
            let w = ws.dist.get(i);
            if w != 0.0 {
                axpy(row, w, inst.values().row(i));
            }
        }
    }
    Ok(EngineOutput { output, flags })
}
