mod support;

use proptest::prelude::*;
use support::random_slab_check;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn decomposition_conserves_free_volume(seed in any::<u64>()) {
        if let Some(c) = random_slab_check(seed) {
            prop_assert!(c.ok(), "{c:?}");
        }
    }
}
