use p6_core::frame::{decode_binary, encode_binary, DataFrame};
use p6_core::testkit::random_frame;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn frame(seed: u64, max_rows: usize) -> DataFrame {
    random_frame(&mut ChaCha8Rng::seed_from_u64(seed), max_rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn frames_round_trip_bit_exactly(seed in any::<u64>()) {
        let f = frame(seed, 2_000);
        let bytes = encode_binary(&f);
        let back = decode_binary(&bytes).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(encode_binary(&back), bytes);
    }

    #[test]
    fn truncated_input_is_an_error(seed in any::<u64>(), cut in 0.0f64..1.0) {
        let bytes = encode_binary(&frame(seed, 50));
        let at = ((bytes.len() as f64) * cut) as usize;
        prop_assert!(decode_binary(&bytes[..at]).is_err());
    }

    #[test]
    fn take_keeps_cells(seed in any::<u64>(), picks in proptest::collection::vec(0usize..1000, 0..40)) {
        let f = frame(seed, 60);
        if f.row_count() > 0 {
            let idx: Vec<usize> = picks.iter().map(|p| p % f.row_count()).collect();
            let t = f.take(&idx);
            for (c, tc) in f.columns().iter().zip(t.columns()) {
                for (j, &i) in idx.iter().enumerate() {
                    let (a, b) = (c.get(i), tc.get(j));
                    match (a.as_f64(), b.as_f64()) {
                        (Some(x), Some(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                        _ => prop_assert_eq!(a, b),
                    }
                }
            }
        }
    }
}

#[test]
fn large_frame_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let f = (0..20).map(|_| random_frame(&mut rng, 100_000)).max_by_key(DataFrame::row_count).unwrap();
    assert!(f.row_count() > 10_000);
    assert_eq!(decode_binary(&encode_binary(&f)).unwrap(), f);
}
