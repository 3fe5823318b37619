//! Sliding-window attention: each position attends to r/2 neighbors on each
//! side (clamped at the boundaries), always including itself.

use crate::attention::{sparse_attention, EngineOutput};
use crate::error::{Error, Result};
use crate::model::{AttentionInstance, KernelSpec, SelectionPlan};

/// The window selection for a length-`l` instance: position t attends to
/// positions max(0, t - r/2) ..= min(l-1, t + r/2), intersected with the
/// causal prefix when `causal` is set.
pub fn sliding_window_plan(l: usize, r: usize, causal: bool) -> Result<SelectionPlan> {
    if r < 2 || !r.is_multiple_of(2) {
        return Err(Error::InvalidWindow(r));
    }
    let half = r / 2;
    let sets: Vec<Vec<usize>> = (0..l)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = if causal { t } else { (t + half).min(l - 1) };
            (lo..=hi).collect()
        })
        .collect();
    SelectionPlan::new(sets, l, causal)
}

pub fn sliding_window_attention(
    spec: &KernelSpec,
    inst: &AttentionInstance,
    r: usize,
) -> Result<EngineOutput> {
    let plan = sliding_window_plan(inst.len(), r, inst.causal())?;
    sparse_attention(spec, inst, &plan)
}
