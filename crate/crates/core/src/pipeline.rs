//! Dataset-level training and prediction built from the lower-level modules.

use crate::ann::{self, init_params, NetworkParams, TrainConfig, TrainResult, HIDDEN_LAYERS};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::features::{build_features, fit_normalization, FeatureSpec};
use crate::model::ModelBundle;

/// Builds features, fits normalization on `train` only, initializes with
/// `config.seed` and trains.
pub fn fit_model(
    train: &Dataset,
    spec: &FeatureSpec,
    hidden_sizes: [usize; HIDDEN_LAYERS],
    config: &TrainConfig,
) -> Result<(ModelBundle, TrainResult)> {
    config.validate()?;
    let raw = build_features(train, spec)?;
    let normalization = fit_normalization(&raw)?;
    let normalized = normalization.apply(&raw)?;
    let init = init_params(raw.n_cols(), hidden_sizes, config.init_scheme, config.seed)?;
    let result = ann::train(&init, &normalized, config)?;
    let bundle = ModelBundle {
        network: result.params.clone(),
        normalization,
        spec: spec.clone(),
        train_config: config.clone(),
    };
    Ok((bundle, result))
}

/// Wraps already-trained parameters.
pub fn bundle_from(
    network: NetworkParams,
    train: &Dataset,
    spec: &FeatureSpec,
    config: &TrainConfig,
) -> Result<ModelBundle> {
    let normalization = fit_normalization(&build_features(train, spec)?)?;
    Ok(ModelBundle {
        network,
        normalization,
        spec: spec.clone(),
        train_config: config.clone(),
    })
}

/// Predictions in kWh, one per record of `dataset`.
pub fn predict_dataset(bundle: &ModelBundle, dataset: &Dataset) -> Result<Vec<f64>> {
    let raw = build_features(dataset, &bundle.spec)?;
    let normalized = bundle.normalization.apply(&raw)?;
    ann::predict(&bundle.network, &normalized, &bundle.normalization)
}
