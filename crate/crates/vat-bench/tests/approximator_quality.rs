//! Statistical quality checks for the practical approximators on synthetic
//! instances: window growth helps, and a small random-feature budget leaves
//! large error on long skewed sequences.

use vat_bench::{generate_synthetic, QkDist, SyntheticSpec, VDist};
use vat_core::linalg::{norm_sq, sq_dist};
use vat_core::{
    compare, exact_attention, orf_attention, sliding_window_attention, KernelSpec, OrfConfig,
    OrfMode,
};

fn clustered_spec(seed: u64, l: usize, d: usize) -> SyntheticSpec {
    SyntheticSpec {
        l,
        d,
        qk: QkDist::Clustered {
            n_clusters: l / 8,
            intra_scale: 0.05,
        },
        v: VDist::Gaussian { scale: 1.0 },
        causal: false,
        seed,
    }
}

#[test]
fn doubling_the_window_rarely_hurts() {
    // skewed instances, 20 seeds: mean error at 2r is at most the error at r
    // on at least 90% of seeds
    let spec = KernelSpec::exponential();
    let r = 8;
    let mut wins = 0;
    let seeds = 20u64;
    for seed in 0..seeds {
        let inst = generate_synthetic(&clustered_spec(8000 + seed, 64, 8)).unwrap();
        let exact = exact_attention(&spec, &inst).unwrap();
        let err = |width: usize| {
            let out = sliding_window_attention(&spec, &inst, width).unwrap();
            compare(&exact.output, &out.output).unwrap().mean_sq_error
        };
        if err(2 * r) <= err(r) {
            wins += 1;
        }
    }
    assert!(wins >= 18, "doubling helped on only {wins}/{seeds} seeds");
}

#[test]
fn small_feature_budget_fails_on_long_skewed_sequences() {
    // 256 random features cannot track a 4096-long skewed instance: the
    // mean relative error stays far above the 5% "good approximation" level
    let spec = SyntheticSpec {
        l: 4096,
        d: 16,
        qk: QkDist::Clustered {
            n_clusters: 256,
            intra_scale: 0.05,
        },
        v: VDist::Gaussian { scale: 1.0 },
        causal: false,
        seed: 4242,
    };
    let inst = generate_synthetic(&spec).unwrap();
    let kernel = KernelSpec::exponential_scaled();
    let exact = exact_attention(&kernel, &inst).unwrap();
    let out = orf_attention(&inst, &OrfConfig::new(256, OrfMode::OrthogonalChi, 7)).unwrap();

    let l = inst.len();
    let mean_rel = (0..l)
        .map(|t| {
            sq_dist(out.output.row(t), exact.output.row(t)).sqrt()
                / (norm_sq(exact.output.row(t)).sqrt() + 1e-12)
        })
        .sum::<f64>()
        / l as f64;
    assert!(
        mean_rel > 0.05,
        "expected high error from 256 features, got mean relative error {mean_rel}"
    );
}
