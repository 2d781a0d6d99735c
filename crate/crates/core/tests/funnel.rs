mod support;

use proptest::prelude::*;
use support::{check_corridors, random_planar_instance};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn funnel_is_no_longer_than_dense_dp(seed in any::<u64>()) {
        let (map, g) = random_planar_instance(seed);
        for c in check_corridors(&map, &g, 4, 64) {
            prop_assert!(c.ok(), "{c:?}");
        }
    }
}
