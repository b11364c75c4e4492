use naap_core::dataset::{generate_naap_like_with_schemes, make_split, SplitKind, SplitMode};
use naap_core::featsel::{hill_climb, FeatureMask, SearchConfig};
use naap_core::metrics::{self, CostFunction, EvalResult};
use naap_core::regressors::{fit, predict, Activation, RegressorSpec};
use naap_core::scheme::{scheme_feature_vector, LayerDescription, StageRule};
use naap_core::{ArchitectureScheme, SchemeFeatures};

fn layer(out_width: u32, kernel: u32, stride: u32, skip: bool) -> LayerDescription {
    LayerDescription {
        in_width: None,
        out_width,
        kernel,
        stride,
        skip,
    }
}

#[test]
fn scheme_features_match_hand_count() {
    let scheme = ArchitectureScheme::from_descriptions(
        "hand",
        (32, 32, 3),
        &[
            layer(16, 3, 1, true), // widths differ, skip dropped
            layer(16, 3, 1, true),
            layer(32, 1, 2, false),
            layer(32, 3, 1, true),
            layer(64, 3, 2, false),
        ],
    )
    .unwrap();
    // params: 448 + 2320 + 544 + 9248 + 18496
    // MACs:   432·32² + 2304·32² + 512·16² + 9216·16² + 18432·8²
    let expected = SchemeFeatures {
        depth: 5,
        num_stages: 3,
        first_width: 16,
        last_width: 64,
        num_params: 31_056,
        num_macs: 6_471_680,
        num_skip_connections: 2,
        num_lost_rf_layers: 1,
    };
    assert_eq!(
        scheme_feature_vector(&scheme, StageRule::Downsampling),
        expected
    );
}

#[test]
fn generated_records_agree_with_their_schemes() {
    let (ds, schemes) = generate_naap_like_with_schemes(440, 2);
    assert_eq!(schemes.len(), ds.len());
    for (record, scheme) in ds.records().iter().zip(&schemes) {
        assert_eq!(record.id, scheme.name());
        assert_eq!(
            record.scheme,
            scheme_feature_vector(scheme, StageRule::Downsampling)
        );
    }
}

#[test]
fn split_fit_search_round() {
    let (ds, _) = generate_naap_like_with_schemes(440, 3);
    let split = make_split(&ds.targets(), SplitKind::Uniform, SplitMode::Strict, 40).unwrap();
    let (x, y) = ds.feature_matrix(3).unwrap();
    assert_eq!(x.cols(), 17);
    let x_train = x.select_rows(&split.train_idx);
    let x_test = x.select_rows(&split.test_idx);
    let y_train: Vec<f64> = split.train_idx.iter().map(|&i| y[i]).collect();
    let y_test: Vec<f64> = split.test_idx.iter().map(|&i| y[i]).collect();
    let spec = RegressorSpec::linear(Activation::PowQuarter);

    let evaluate = |mask: FeatureMask| -> Result<EvalResult, String> {
        let cols = mask.indices();
        let model = fit(&spec, &x_train.select_cols(&cols), &y_train).map_err(|e| e.to_string())?;
        let pred = predict(&model, &x_test.select_cols(&cols)).map_err(|e| e.to_string())?;
        metrics::evaluate(&pred, &y_test, CostFunction::SqrtRounded).map_err(|e| e.to_string())
    };
    let config = SearchConfig {
        seed: 9,
        ..SearchConfig::default()
    };
    let trace = hill_climb(&evaluate, 17, &config).unwrap();
    let again = hill_climb(&evaluate, 17, &config).unwrap();
    assert_eq!(trace, again);

    let full = trace.full_mask_result().unwrap();
    assert_eq!(full.mask, FeatureMask::full(17).unwrap());
    let best = trace.best.unwrap();
    assert!(best.result.cost <= full.result.cost);
    assert!(trace.steps.len() <= config.max_steps(17));
    assert!(trace.evaluations.len() <= config.evaluation_budget(17));
    assert!(trace
        .evaluations
        .iter()
        .all(|e| e.result.cost >= best.result.cost));
}
