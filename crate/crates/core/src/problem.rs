//! JSON problem-file schema: network weights, input region, half-space
//! directions, and solver options.

use crate::linalg::Mat;
use crate::network::{InputSet, Layer, NetworkError, ReluNetwork, SafetySpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
}

impl From<NetworkError> for ProblemError {
    fn from(e: NetworkError) -> Self {
        ProblemError::Schema(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerFile {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InputSetFile {
    Interval { lo: f64, hi: f64 },
    Rectangle { center: Vec<f64>, radii: Vec<f64> },
    Ellipsoid { center: Vec<f64>, radius: f64 },
}

/// Options carried inside a problem file; command-line flags take
/// precedence over these.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptionsFile {
    #[serde(default)]
    pub cuts: Option<bool>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub rank_tol: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub network: NetworkFile,
    pub input_set: InputSetFile,
    pub directions: Vec<Vec<f64>>,
    #[serde(default)]
    pub options: Option<OptionsFile>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile, ProblemError> {
        serde_json::from_str(text).map_err(|e| ProblemError::Parse(e.to_string()))
    }

    pub fn to_domain(&self) -> Result<(ReluNetwork, InputSet, SafetySpec), ProblemError> {
        let mut layers = Vec::with_capacity(self.network.layers.len());
        for (k, lf) in self.network.layers.iter().enumerate() {
            if lf.w.is_empty() {
                return Err(ProblemError::Schema(format!("layer {k} has empty W")));
            }
            let cols = lf.w[0].len();
            if lf.w.iter().any(|row| row.len() != cols) {
                return Err(ProblemError::Schema(format!("layer {k} has ragged W rows")));
            }
            layers.push(Layer::new(Mat::from_rows(&lf.w), lf.b.clone())?);
        }
        let net = ReluNetwork::new(layers)?;
        let input = match &self.input_set {
            InputSetFile::Interval { lo, hi } => InputSet::Interval { lo: *lo, hi: *hi },
            InputSetFile::Rectangle { center, radii } => InputSet::Rectangle {
                center: center.clone(),
                radii: radii.clone(),
            },
            InputSetFile::Ellipsoid { center, radius } => InputSet::Ellipsoid {
                center: center.clone(),
                radius: *radius,
            },
        };
        input.validate(net.input_dim())?;
        for (i, c) in self.directions.iter().enumerate() {
            if c.len() != net.output_dim() {
                return Err(ProblemError::Schema(format!(
                    "direction {i} has length {}, expected {}",
                    c.len(),
                    net.output_dim()
                )));
            }
        }
        let spec = SafetySpec::new(self.directions.clone())?;
        Ok((net, input, spec))
    }
}
