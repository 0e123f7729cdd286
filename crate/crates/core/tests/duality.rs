mod common;

use common::*;
use hyperbmc_core::{check_bounded, negate, Unrolling};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn negation_flips_value_under_dual_semantics(seed: u64, sem in 0usize..5, k in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, &APS);
        let models = random_models(&mut rng, &f, &APS, false);
        let sem = USER_SEMANTICS[sem];
        let un = Unrolling::new(k, sem);
        let dual = Unrolling::new(k, sem.dual());
        let g = negate(&f);
        let direct = check_bounded(&models, &f, un).unwrap();
        prop_assert_eq!(check_bounded(&models, &g, dual).unwrap(), !direct);
        prop_assert_eq!(encoded_value(&models, &g, dual), !direct);
    }
}
