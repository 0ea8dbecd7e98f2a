use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::ScalingCircuit;
use crate::error::{Error, Result};
use crate::models::Model;

/// One entry of the shipped parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub model: Model,
    #[serde(rename = "D")]
    pub depth: usize,
    pub theta: Vec<f64>,
}

const BUNDLE_JSON: &str = include_str!("../../data/parameters.json");

pub fn bundled_parameters() -> &'static [BundleEntry] {
    static BUNDLE: OnceLock<Vec<BundleEntry>> = OnceLock::new();
    BUNDLE.get_or_init(|| serde_json::from_str(BUNDLE_JSON).expect("shipped parameter file parses"))
}

pub fn load_bundled_parameters(model: Model, depth: usize) -> Result<ScalingCircuit> {
    bundled_parameters()
        .iter()
        .find(|e| e.model == model && e.depth == depth)
        .ok_or_else(|| Error::UnknownBundle {
            model: model.to_string(),
            depth,
        })
        .and_then(|e| ScalingCircuit::new(e.theta.clone()))
}
