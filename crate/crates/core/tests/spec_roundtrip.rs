use p6_core::spec::{parse_pipeline, pipeline_from_value, pipeline_to_value, serialize_pipeline};
use p6_core::testkit::{random_pipeline_doc, shuffle_blocks};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let doc = random_pipeline_doc(&mut rng);
        let spec = pipeline_from_value(&doc).map_err(|e| TestCaseError::fail(format!("{e}\n{doc:#}")))?;
        let text = serialize_pipeline(&spec);
        prop_assert_eq!(&parse_pipeline(&text).unwrap(), &spec);
        prop_assert_eq!(serialize_pipeline(&parse_pipeline(&text).unwrap()), text);
        prop_assert_eq!(pipeline_from_value(&pipeline_to_value(&spec)).unwrap(), spec);
    }

    #[test]
    fn block_order_is_irrelevant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let doc = random_pipeline_doc(&mut rng);
        let a = pipeline_from_value(&doc).unwrap();
        let b = parse_pipeline(&shuffle_blocks(&mut rng, &doc).to_string()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn empty_document_reports_missing_data() {
    let err = parse_pipeline("{}").unwrap_err();
    assert_eq!(err.to_string(), "/data missing");
}
