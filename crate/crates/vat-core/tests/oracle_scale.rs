//! Scale checks for the oracle paths: the convex reduction must hold its
//! zero-error guarantee on long sequences at realistic head dimensions.

use vat_core::{
    caratheodory_reduce, exact_attention, gaussian_matrix, linalg, make_instance,
    attention_weights, KernelSpec, RngStream,
};

#[test]
fn zero_error_reduction_at_scale() {
    let spec = KernelSpec::exponential();
    for (seed, d) in [(1u64, 8usize), (2, 16), (3, 64)] {
        let l = 512;
        let mut rng = RngStream::new(seed, 0);
        let q = gaussian_matrix(&mut rng, l, d);
        let k = gaussian_matrix(&mut rng, l, d);
        let v = gaussian_matrix(&mut rng, l, d);
        let inst = make_instance(q, k, v, false).unwrap();
        let exact = exact_attention(&spec, &inst).unwrap();

        let all: Vec<usize> = (0..l).collect();
        for t in (0..l).step_by(97) {
            let ws = attention_weights(&spec, inst.queries().row(t), inst.keys(), &all).unwrap();
            let comb = caratheodory_reduce(&ws.dist, inst.values()).unwrap();
            assert!(comb.support_size() <= d + 1);
            let err = linalg::sq_dist(&comb.combine(inst.values()), exact.output.row(t));
            let scale = 1.0 + linalg::norm_sq(exact.output.row(t));
            assert!(err <= 1e-8 * scale, "d={d} t={t}: {err}");
        }
    }
}
