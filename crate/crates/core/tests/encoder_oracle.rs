mod common;

use common::*;
use hyperbmc_core::{check_bounded, Unrolling};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn encoding_agrees_with_enumeration(seed: u64, sem in 0usize..5, k in 0usize..=3, literal: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, &APS);
        let models = random_models(&mut rng, &f, &APS, false);
        let un = Unrolling::new(k, USER_SEMANTICS[sem]).paper_literal(literal);
        let expected = check_bounded(&models, &f, un).unwrap();
        prop_assert_eq!(encoded_value(&models, &f, un), expected, "{} at k={} {:?}", f, k, un);
    }
}
