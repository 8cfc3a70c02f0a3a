use trajmode::classify::{fit_forest, fit_tree, DecisionTreeConfig, ModelConfig, RandomForestConfig};
use trajmode::dataset::FeatureSet;
use trajmode::eval::{accuracy_by_segment, assign_folds, cross_validate, CvMode, NoiseStep};
use trajmode::ingest::{ingest_dataset, read_segments, write_segments};
use trajmode::noise::GroundTruthBounds;
use trajmode::point_features::BearingDelta;
use trajmode::synth;
use trajmode::traj_features::build_feature_set;

#[test]
fn forest_is_never_much_worse_than_a_tree() {
    for seed in 0..20 {
        let train = synth::separable_blobs(150, 6, 2 * seed);
        let test = synth::separable_blobs(150, 6, 2 * seed + 1);
        let tree = fit_tree(&train, &DecisionTreeConfig::default()).unwrap();
        let forest = fit_forest(&train, &RandomForestConfig { rng_seed: seed, ..Default::default() }).unwrap();
        let t = accuracy_by_segment(&tree.predict(&test).unwrap(), &test.labels()).unwrap();
        let f = accuracy_by_segment(&forest.predict(&test).unwrap(), &test.labels()).unwrap();
        assert!(f >= t - 0.02, "seed {seed}: forest {f} tree {t}");
    }
}

#[test]
fn mini_dataset_end_to_end() {
    let dir = std::env::temp_dir().join(format!("trajmode-pipeline-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    synth::write_mini_geolife(&dir, 6, 3, 10).unwrap();
    let (segments, report) = ingest_dataset(&dir).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(report.segments, 72);

    let mut store = Vec::new();
    write_segments(&mut store, &segments).unwrap();
    let back = read_segments(&store[..]).unwrap();
    assert_eq!(back, segments);

    let set = build_feature_set(&segments, BearingDelta::Raw).unwrap();
    let mut csv = Vec::new();
    set.write_csv(&mut csv).unwrap();
    let reread = FeatureSet::read_csv(&csv[..]).unwrap();
    assert_eq!(reread.matrix(), set.matrix());

    let gt = NoiseStep::GroundTruth { bounds: GroundTruthBounds::geolife(), apply_to_test: false };
    for mode in [CvMode::Random, CvMode::UserOriented] {
        let folds = assign_folds(&set.user_ids(), 5, mode, 10).unwrap();
        let rep = cross_validate(&set, &ModelConfig::default(), &folds, Some(&gt), None).unwrap();
        assert_eq!(rep.mean_accuracy_by_segment, 1.0, "{mode}");
        assert_eq!(rep.mean_accuracy_by_distance, Some(1.0));
    }
}
