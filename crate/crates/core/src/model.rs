//! JSON model documents.
//!
//! A document carries everything needed to reproduce predictions: network
//! weights, the feature selection with its reference temperature, the
//! min-max state and the optimizer settings used for training. Numbers are
//! written as shortest round-trip decimals, so save/load is bit-exact.

use serde::{Deserialize, Serialize};

use crate::ann::{LayerParams, NetworkParams, TrainConfig, HIDDEN_LAYERS};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, NormalizationParams};

pub const MODEL_VERSION: u32 = 1;
pub const SUPPORTED_VERSIONS: [u32; 1] = [MODEL_VERSION];

/// A trained network together with its input pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub network: NetworkParams,
    pub normalization: NormalizationParams,
    pub spec: FeatureSpec,
    pub train_config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    input_dim: usize,
    hidden_sizes: Vec<usize>,
    feature_spec: FeatureSpec,
    normalization: NormalizationParams,
    layers: Vec<LayerDoc>,
    train_config: TrainConfig,
}

pub fn save_model(bundle: &ModelBundle) -> String {
    let net = &bundle.network;
    let doc = ModelDoc {
        version: MODEL_VERSION,
        input_dim: net.input_dim(),
        hidden_sizes: net.hidden_sizes().to_vec(),
        feature_spec: bundle.spec.clone(),
        normalization: bundle.normalization.clone(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                weights: (0..l.out_dim()).map(|o| l.weight_row(o).to_vec()).collect(),
                biases: l.biases().to_vec(),
            })
            .collect(),
        train_config: bundle.train_config.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
    text.push('\n');
    text
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn load_model(text: &str) -> Result<ModelBundle> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format_err(format!("not a JSON document: {e}")))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| format_err("missing integer `version` field"))?;
    if !SUPPORTED_VERSIONS.iter().any(|&v| u64::from(v) == version) {
        return Err(format_err(format!(
            "unsupported model version {version}; supported versions: {SUPPORTED_VERSIONS:?}"
        )));
    }
    let doc: ModelDoc = serde_json::from_value(value).map_err(|e| format_err(e.to_string()))?;

    let hidden: [usize; HIDDEN_LAYERS] = doc.hidden_sizes.as_slice().try_into().map_err(|_| {
        format_err(format!(
            "expected {HIDDEN_LAYERS} hidden sizes, got {}",
            doc.hidden_sizes.len()
        ))
    })?;
    let layers = doc
        .layers
        .into_iter()
        .enumerate()
        .map(|(l, layer)| {
            let out_dim = layer.weights.len();
            let in_dim = layer.weights.first().map_or(0, Vec::len);
            if layer.weights.iter().any(|row| row.len() != in_dim) {
                return Err(format_err(format!("layer {l} has ragged weight rows")));
            }
            LayerParams::new(in_dim, out_dim, layer.weights.concat(), layer.biases)
                .map_err(|e| format_err(format!("layer {l}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let network = NetworkParams::new(doc.input_dim, hidden, layers).map_err(|e| format_err(e.to_string()))?;

    doc.feature_spec
        .validate()
        .map_err(|e| format_err(format!("feature spec: {e}")))?;
    let names = doc.feature_spec.names();
    if names.len() != doc.input_dim {
        return Err(format_err(format!(
            "{} features selected but input_dim is {}",
            names.len(),
            doc.input_dim
        )));
    }
    let norm = &doc.normalization;
    if norm.columns != names || norm.features.len() != names.len() {
        return Err(format_err("normalization columns do not match the feature spec"));
    }
    let ranges = norm.features.iter().chain(std::iter::once(&norm.target));
    if ranges
        .into_iter()
        .any(|r| !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max))
    {
        return Err(format_err("normalization ranges must be finite with min <= max"));
    }
    doc.train_config
        .validate()
        .map_err(|e| format_err(format!("train config: {e}")))?;

    Ok(ModelBundle {
        network,
        normalization: doc.normalization,
        spec: doc.feature_spec,
        train_config: doc.train_config,
    })
}
