use rfm_core::burgers::{generate_burgers, BurgersDataSpec, FourierFeatureSpec, FourierFeatures};
use rfm_core::darcy::{generate_darcy, DarcyDataSpec, PredictorCorrectorFeatures, PredictorCorrectorSpec};
use rfm_core::engine::{expected_relative_test_error, train, FeatureFamily, TrainedModel};
use rfm_core::field::{Boundary, Grid};

#[test]
fn burgers_model_survives_save_and_transfers() {
    let master = Grid::periodic(257).unwrap();
    let spec = BurgersDataSpec::defaults(1.0);
    let train_set = generate_burgers(&spec, &master, 1, 0, 64, 1).unwrap().dataset(0).unwrap();
    let test_set = generate_burgers(&spec, &master, 2, 0, 16, 1).unwrap().dataset(0).unwrap();
    let family = FeatureFamily::new(FourierFeatures::sample(&FourierFeatureSpec::burgers_defaults(), 128, 3).unwrap());
    let model = train(&family, &train_set.subsample(65).unwrap(), 0.0).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rfm");
    model.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();
    assert_eq!(loaded.coeffs(), model.coeffs());

    let mut errs = Vec::new();
    for k in [65, 129, 257] {
        let t = test_set.subsample(k).unwrap();
        let e = expected_relative_test_error(&loaded, &t).unwrap();
        assert_eq!(e, expected_relative_test_error(&model, &t).unwrap());
        errs.push(e);
    }
    assert!(errs[0] < 0.3, "{errs:?}");
    let (hi, lo) = (errs.iter().cloned().fold(0.0, f64::max), errs.iter().cloned().fold(1.0, f64::min));
    assert!(hi / lo < 1.1, "{errs:?}");
}

#[test]
fn darcy_model_learns_and_transfers() {
    let master = Grid::square(33, Boundary::Dirichlet).unwrap();
    let spec = DarcyDataSpec::default();
    let train_set = generate_darcy(&spec, &master, 1, 0, 32).unwrap();
    let test_set = generate_darcy(&spec, &master, 2, 0, 8).unwrap();
    let mut fs = PredictorCorrectorSpec::darcy_defaults();
    fs.theta_measure.truncation = Some(16);
    let family = FeatureFamily::new(PredictorCorrectorFeatures::sample(&fs, 32, 4).unwrap());
    let model = train(&family, &train_set.subsample(17).unwrap(), 1e-8).unwrap();
    let coarse = expected_relative_test_error(&model, &test_set.subsample(17).unwrap()).unwrap();
    let fine = expected_relative_test_error(&model, &test_set).unwrap();
    assert!(coarse < 0.2 && fine < 0.2, "{coarse} {fine}");
}
