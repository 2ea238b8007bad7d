mod common;

use ponzi_radar_core::cluster::build_clusters;
use ponzi_radar_core::features::{build_cluster_ledger, build_ledger, cluster_features, extract_features};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn totals_and_counts_are_consistent(seed in any::<u64>(), n in 1usize..200) {
        let log = common::random_log(seed, n, 50);
        let clusters = build_clusters(&log);
        let features = cluster_features(&log, &clusters);
        for (c, f) in features.iter().enumerate() {
            let ledger = build_cluster_ledger(&log, &clusters, c);
            prop_assert_eq!(f.sum_in, ledger.incoming.iter().map(|e| e.amount).sum::<u64>());
            prop_assert_eq!(f.sum_out, ledger.outgoing.iter().map(|e| e.amount).sum::<u64>());
            prop_assert!(f.count_in + f.count_out >= f.max_daily_tx);
            prop_assert!(f.values().iter().all(|v| v.is_finite()));
        }
        prop_assert_eq!(cluster_features(&log, &clusters), features);
    }

    #[test]
    fn singleton_cluster_equals_its_address(seed in any::<u64>(), n in 1usize..200) {
        let log = common::random_log(seed, n, 50);
        let clusters = build_clusters(&log);
        let features = cluster_features(&log, &clusters);
        for c in (0..clusters.len()).filter(|&c| clusters.size(c) == 1) {
            let addr = clusters.representative(c);
            let direct = extract_features(&build_ledger(&log, [addr]), 1);
            prop_assert_eq!(&direct, &features[c]);
        }
    }
}
