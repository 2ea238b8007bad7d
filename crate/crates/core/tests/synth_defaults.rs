use ponzi_radar_core::cluster::build_clusters;
use ponzi_radar_core::features::cluster_features;
use ponzi_radar_core::synth::{generate, SynthParams};
use ponzi_radar_core::Label;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn default_schemes_look_like_ponzis() {
    let out = generate(&SynthParams::default()).unwrap();
    assert!(out.log.validate().ok());
    let clusters = build_clusters(&out.log);
    assert_eq!(clusters.len(), 6030);
    let features = cluster_features(&out.log, &clusters);
    let mut background_share = Vec::new();
    let mut schemes = Vec::new();
    for (address, label) in &out.labels {
        let f = &features[clusters.cluster_of(address).unwrap()];
        match label {
            Label::P => schemes.push(f.clone()),
            Label::NP => background_share.push(f.in_share),
        }
    }
    let median_share = median(background_share);
    for f in &schemes {
        assert!(f.in_share > median_share, "{:?}", f);
        assert!(f.paid_back_addrs > 0, "{:?}", f);
    }
}
