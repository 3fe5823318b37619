//! Property tests for the VAT1 container.

use proptest::prelude::*;
use vat_bench::{decode_tensors, encode_tensors, NamedTensor};

fn tensor_strategy() -> impl Strategy<Value = NamedTensor> {
    let name = "[a-zA-Z][a-zA-Z0-9_]{0,12}";
    let dims = prop::collection::vec(0u64..5, 0..4);
    (name, dims).prop_flat_map(|(name, dims)| {
        let len: usize = dims.iter().product::<u64>() as usize;
        prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), len)
            .prop_map(move |values| NamedTensor::new(name.clone(), dims.clone(), values))
    })
}

proptest! {
    #[test]
    fn round_trip_is_bit_exact(tensors in prop::collection::vec(tensor_strategy(), 0..5)) {
        // make names unique by suffixing the index
        let tensors: Vec<NamedTensor> = tensors
            .into_iter()
            .enumerate()
            .map(|(i, mut t)| {
                t.name = format!("{}_{i}", t.name);
                t
            })
            .collect();
        let bytes = encode_tensors(&tensors).unwrap();
        let back = decode_tensors(&bytes).unwrap();
        prop_assert_eq!(&tensors, &back);
        let bytes2 = encode_tensors(&back).unwrap();
        prop_assert_eq!(bytes, bytes2);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode_tensors(&bytes);
    }
}
