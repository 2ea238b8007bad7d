mod common;

use std::collections::HashMap;

use ponzi_radar_core::chain::TxLog;
use ponzi_radar_core::cluster::{build_clusters, ClusterSet};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn representatives(clusters: &ClusterSet) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for c in 0..clusters.len() {
        let rep = clusters.representative(c).to_string();
        for a in clusters.members(c) {
            out.insert(a.to_string(), rep.clone());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_connected_components(seed in any::<u64>(), n in 1usize..1000, pool in 5usize..400) {
        let log = common::random_log(seed, n, pool);
        prop_assert_eq!(representatives(&build_clusters(&log)), common::bfs_components(&log));
    }

    #[test]
    fn transaction_order_is_irrelevant(seed in any::<u64>(), n in 1usize..300) {
        let log = common::random_log(seed, n, 60);
        let mut txs = log.transactions().to_vec();
        txs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        // equal timestamps force the index to fall back on txid order
        for t in &mut txs {
            t.timestamp = 0;
        }
        let shuffled = TxLog::from_transactions(txs).unwrap();
        prop_assert_eq!(build_clusters(&shuffled), build_clusters(&log));
    }

    #[test]
    fn adding_a_transaction_never_splits(seed in any::<u64>(), n in 2usize..300) {
        let log = common::random_log(seed, n, 60);
        let prefix = TxLog::from_transactions(log.transactions()[..n - 1].to_vec()).unwrap();
        let before = build_clusters(&prefix);
        let after = build_clusters(&log);
        for c in 0..before.len() {
            let mut members = before.members(c);
            let first = after.cluster_of(members.next().unwrap()).unwrap();
            for a in members {
                prop_assert_eq!(after.cluster_of(a).unwrap(), first);
            }
        }
    }
}
