//! Feed-forward ReLU network data model with exact forward semantics,
//! input regions (interval, rectangle, ellipsoid), polytope safety
//! directions, and the structural assumption checks behind each
//! tightness case.

use crate::linalg::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("not reducible: {0}")]
    NotReducible(String),
}

/// One affine layer y = Wx + b.
#[derive(Debug, Clone)]
pub struct Layer {
    pub w: Mat,
    pub b: Vec<f64>,
}

impl Layer {
    pub fn new(w: Mat, b: Vec<f64>) -> Result<Self, NetworkError> {
        if w.rows() != b.len() {
            return Err(NetworkError::InvalidInput(format!(
                "bias length {} does not match weight rows {}",
                b.len(),
                w.rows()
            )));
        }
        Ok(Layer { w, b })
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }
}

/// An (L+1)-layer affine stack with ReLU after each of the first L layers:
///
/// ```text
/// x^{k+1} = max(0, W^k x^k + b^k),  k = 0..L-1
/// f(x^0)  = W^L x^L + b^L
/// ```
#[derive(Debug, Clone)]
pub struct ReluNetwork {
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NetworkError> {
        if layers.len() < 2 {
            return Err(NetworkError::InvalidInput(
                "a network needs at least one activation layer and one output layer".into(),
            ));
        }
        for k in 0..layers.len() - 1 {
            if layers[k].out_dim() != layers[k + 1].in_dim() {
                return Err(NetworkError::InvalidInput(format!(
                    "layer {} outputs {} but layer {} consumes {}",
                    k,
                    layers[k].out_dim(),
                    k + 1,
                    layers[k + 1].in_dim()
                )));
            }
        }
        Ok(ReluNetwork { layers })
    }

    /// Convenience constructor for the scalar network y = W¹·max(0, x + b⁰).
    pub fn single_neuron(b0: f64) -> ReluNetwork {
        ReluNetwork::new(vec![
            Layer::new(Mat::from_rows(&[vec![1.0]]), vec![b0]).unwrap(),
            Layer::new(Mat::from_rows(&[vec![1.0]]), vec![0.0]).unwrap(),
        ])
        .unwrap()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of activation layers L.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Width of activation layer k (the dimension of x^{k+1}), k < L.
    pub fn hidden_dim(&self, k: usize) -> usize {
        self.layers[k].out_dim()
    }

    /// Total neuron count N = Σ_{k=1..L} n_k.
    pub fn total_neurons(&self) -> usize {
        (0..self.depth()).map(|k| self.hidden_dim(k)).sum()
    }

    pub fn forward(&self, x0: &[f64]) -> Result<Vec<f64>, NetworkError> {
        if x0.len() != self.input_dim() {
            return Err(NetworkError::InvalidInput(format!(
                "input length {} does not match n0 = {}",
                x0.len(),
                self.input_dim()
            )));
        }
        let mut x = x0.to_vec();
        for k in 0..self.depth() {
            let w = self.layers[k].w.matvec(&x);
            x = w
                .iter()
                .zip(&self.layers[k].b)
                .map(|(wi, bi)| (wi + bi).max(0.0))
                .collect();
        }
        let last = self.layers.last().unwrap();
        let mut y = last.w.matvec(&x);
        for (yi, bi) in y.iter_mut().zip(&last.b) {
            *yi += bi;
        }
        Ok(y)
    }

    /// Forward pass keeping every pre-activation and activation, stacked in
    /// layer order. Used to lift sample points into the relaxation space.
    pub fn forward_trace(&self, x0: &[f64]) -> Result<ForwardTrace, NetworkError> {
        if x0.len() != self.input_dim() {
            return Err(NetworkError::InvalidInput("input length mismatch".into()));
        }
        let mut pre = Vec::new();
        let mut act = Vec::new();
        let mut x = x0.to_vec();
        for k in 0..self.depth() {
            let mut w = self.layers[k].w.matvec(&x);
            for (wi, bi) in w.iter_mut().zip(&self.layers[k].b) {
                *wi += bi;
            }
            x = w.iter().map(|v| v.max(0.0)).collect();
            pre.extend_from_slice(&w);
            act.extend_from_slice(&x);
        }
        let last = self.layers.last().unwrap();
        let mut y = last.w.matvec(&x);
        for (yi, bi) in y.iter_mut().zip(&last.b) {
            *yi += bi;
        }
        Ok(ForwardTrace {
            input: x0.to_vec(),
            pre_activations: pre,
            activations: act,
            output: y,
        })
    }

    /// True when the final affine layer is y = x (identity weight, zero bias).
    pub fn last_layer_is_identity(&self, tol: f64) -> bool {
        let last = self.layers.last().unwrap();
        if last.w.rows() != last.w.cols() {
            return false;
        }
        let n = last.w.rows();
        for i in 0..n {
            if last.b[i].abs() > tol {
                return false;
            }
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                if (last.w.get(i, j) - want).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn first_layer_is_identity(&self, tol: f64) -> bool {
        let first = &self.layers[0];
        if first.w.rows() != first.w.cols() {
            return false;
        }
        let n = first.w.rows();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let want = if i == j { 1.0 } else { 0.0 };
                (first.w.get(i, j) - want).abs() <= tol
            })
        })
    }
}

/// All intermediate values of one forward pass, with pre-activations and
/// activations stacked across layers (length N each).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub pre_activations: Vec<f64>,
    pub activations: Vec<f64>,
    pub output: Vec<f64>,
}

/// Input region X.
#[derive(Debug, Clone)]
pub enum InputSet {
    /// 1-D closed interval (n0 must equal 1).
    Interval { lo: f64, hi: f64 },
    /// Axis-aligned box: |x_j − center_j| ≤ radii_j.
    Rectangle { center: Vec<f64>, radii: Vec<f64> },
    /// Euclidean ball: ‖x − center‖₂ ≤ radius.
    Ellipsoid { center: Vec<f64>, radius: f64 },
}

impl InputSet {
    pub fn dim(&self) -> usize {
        match self {
            InputSet::Interval { .. } => 1,
            InputSet::Rectangle { center, .. } => center.len(),
            InputSet::Ellipsoid { center, .. } => center.len(),
        }
    }

    pub fn validate(&self, n0: usize) -> Result<(), NetworkError> {
        match self {
            InputSet::Interval { lo, hi } => {
                if n0 != 1 {
                    return Err(NetworkError::InvalidInput(
                        "interval input requires n0 = 1".into(),
                    ));
                }
                if !(lo <= hi) {
                    return Err(NetworkError::InvalidInput("interval needs lo ≤ hi".into()));
                }
            }
            InputSet::Rectangle { center, radii } => {
                if center.len() != n0 || radii.len() != n0 {
                    return Err(NetworkError::InvalidInput(
                        "rectangle dimension mismatch".into(),
                    ));
                }
                if radii.iter().any(|&r| !(r > 0.0)) {
                    return Err(NetworkError::InvalidInput(
                        "rectangle radii must be positive".into(),
                    ));
                }
            }
            InputSet::Ellipsoid { center, radius } => {
                if center.len() != n0 {
                    return Err(NetworkError::InvalidInput(
                        "ellipsoid dimension mismatch".into(),
                    ));
                }
                if !(radius > &0.0) {
                    return Err(NetworkError::InvalidInput(
                        "ellipsoid radius must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            InputSet::Interval { lo, hi } => x.len() == 1 && x[0] >= lo - tol && x[0] <= hi + tol,
            InputSet::Rectangle { center, radii } => {
                x.len() == center.len()
                    && x.iter()
                        .zip(center)
                        .zip(radii)
                        .all(|((xi, ci), ri)| (xi - ci).abs() <= ri + tol)
            }
            InputSet::Ellipsoid { center, radius } => {
                x.len() == center.len() && {
                    let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2.sqrt() <= radius + tol
                }
            }
        }
    }

    /// 1-D interval ⇄ rectangle converters.
    pub fn to_rectangle(&self) -> InputSet {
        match self {
            InputSet::Interval { lo, hi } => InputSet::Rectangle {
                center: vec![0.5 * (lo + hi)],
                radii: vec![0.5 * (hi - lo)],
            },
            other => other.clone(),
        }
    }

    pub fn to_interval(&self) -> Option<InputSet> {
        match self {
            InputSet::Interval { .. } => Some(self.clone()),
            InputSet::Rectangle { center, radii } if center.len() == 1 => {
                Some(InputSet::Interval {
                    lo: center[0] - radii[0],
                    hi: center[0] + radii[0],
                })
            }
            _ => None,
        }
    }

    /// Draws a uniform sample from the region.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            InputSet::Interval { lo, hi } => vec![rng.gen_range(*lo..=*hi)],
            InputSet::Rectangle { center, radii } => center
                .iter()
                .zip(radii)
                .map(|(c, r)| c + r * rng.gen_range(-1.0..=1.0))
                .collect(),
            InputSet::Ellipsoid { center, radius } => {
                let n = center.len();
                // direction from normal deviates, radius via u^{1/n}
                let mut dir: Vec<f64> = (0..n)
                    .map(|_| {
                        // Box-Muller from two uniforms
                        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                        let u2: f64 = rng.gen_range(0.0..1.0);
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                    })
                    .collect();
                let nrm = crate::linalg::norm2(&dir).max(1e-300);
                dir.iter_mut().for_each(|v| *v /= nrm);
                let u: f64 = rng.gen_range(0.0..=1.0);
                let r = radius * u.powf(1.0 / n as f64);
                dir.iter().zip(center).map(|(d, c)| c + r * d).collect()
            }
        }
    }
}

/// Polytope safety specification: directions c^ℓ whose solved offsets d_ℓ
/// carve the half-spaces {y | c^ℓᵀ y ≥ d_ℓ}.
#[derive(Debug, Clone)]
pub struct SafetySpec {
    pub directions: Vec<Vec<f64>>,
    pub offsets: Vec<Option<f64>>,
}

impl SafetySpec {
    pub fn new(directions: Vec<Vec<f64>>) -> Result<Self, NetworkError> {
        for (i, c) in directions.iter().enumerate() {
            if c.iter().all(|v| *v == 0.0) {
                return Err(NetworkError::InvalidInput(format!(
                    "direction {i} is the zero vector"
                )));
            }
        }
        let offsets = vec![None; directions.len()];
        Ok(SafetySpec {
            directions,
            offsets,
        })
    }
}

/// Which tightness case is being analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TightnessCase {
    SingleNeuron,
    Ellipsoid,
    Rectangle,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub id: String,
    pub holds: bool,
    pub detail: String,
}

fn check(id: &str, holds: bool, detail: impl Into<String>) -> AssumptionCheck {
    AssumptionCheck {
        id: id.to_string(),
        holds,
        detail: detail.into(),
    }
}

/// Evaluates the structural assumptions behind the selected tightness case.
/// The no-cuts assumption is a property of the formulation options, so it
/// arrives as `cuts_enabled`.
pub fn check_assumptions(
    net: &ReluNetwork,
    input: &InputSet,
    spec: &SafetySpec,
    case: TightnessCase,
    cuts_enabled: bool,
) -> Vec<AssumptionCheck> {
    let tol = 1e-12;
    let mut out = Vec::new();
    let polytope = check(
        "safety_set_polytope",
        !spec.directions.is_empty(),
        if spec.directions.is_empty() {
            "no half-space directions given"
        } else {
            "safety set is an intersection of half-spaces"
        },
    );
    match case {
        TightnessCase::SingleNeuron => {
            let structural = net.depth() == 1
                && net.input_dim() == 1
                && net.hidden_dim(0) == 1
                && (net.layers[0].w.get(0, 0) - 1.0).abs() <= tol
                && net.last_layer_is_identity(tol);
            out.push(check(
                "single_neuron_structure",
                structural,
                if structural {
                    "f(x) = max(0, x + b0)".to_string()
                } else {
                    "network is not the scalar form max(0, x + b0)".to_string()
                },
            ));
            out.push(check(
                "input_closed_interval",
                matches!(input, InputSet::Interval { .. }),
                match input {
                    InputSet::Interval { .. } => "input set is a closed interval",
                    _ => "input set is not an interval",
                },
            ));
            out.push(polytope);
        }
        TightnessCase::Ellipsoid => {
            out.push(polytope);
            let ident = net.last_layer_is_identity(tol);
            out.push(check(
                "last_layer_identity",
                ident,
                if ident {
                    "last layer is the identity"
                } else {
                    "last layer not identity"
                },
            ));
            out.push(check(
                "no_repeated_nonlinearity_cuts",
                !cuts_enabled,
                if cuts_enabled {
                    "pairwise neuron cuts are enabled"
                } else {
                    "formulation carries no pairwise neuron cuts"
                },
            ));
            out.push(check(
                "input_ellipsoid",
                matches!(input, InputSet::Ellipsoid { .. }),
                "ellipsoid case expects a ball input set",
            ));
        }
        TightnessCase::Rectangle => {
            out.push(polytope);
            let ident = net.last_layer_is_identity(tol);
            out.push(check(
                "last_layer_identity",
                ident,
                if ident {
                    "last layer is the identity"
                } else {
                    "last layer not identity"
                },
            ));
            out.push(check(
                "no_repeated_nonlinearity_cuts",
                !cuts_enabled,
                if cuts_enabled {
                    "pairwise neuron cuts are enabled"
                } else {
                    "formulation carries no pairwise neuron cuts"
                },
            ));
            let fid = net.first_layer_is_identity(tol);
            out.push(check(
                "first_layer_identity",
                fid,
                if fid {
                    "first weight matrix is the identity"
                } else {
                    "first weight matrix is not the identity"
                },
            ));
            out.push(check(
                "input_rectangle",
                matches!(
                    input,
                    InputSet::Rectangle { .. } | InputSet::Interval { .. }
                ),
                "rectangle case expects a box input set",
            ));
        }
    }
    out
}

/// Rescales a single-layer network with nonsingular diagonal first weight
/// so the first layer becomes the identity, transforming the rectangle
/// accordingly (x' = W⁰x). The forward image is unchanged.
pub fn normalize_diagonal_weight(
    net: &ReluNetwork,
    input: &InputSet,
) -> Result<(ReluNetwork, InputSet), NetworkError> {
    if net.depth() != 1 {
        return Err(NetworkError::NotReducible(
            "reduction applies to single-layer networks".into(),
        ));
    }
    let (center, radii) = match input {
        InputSet::Rectangle { center, radii } => (center.clone(), radii.clone()),
        InputSet::Interval { lo, hi } => (vec![0.5 * (lo + hi)], vec![0.5 * (hi - lo)]),
        _ => {
            return Err(NetworkError::NotReducible(
                "reduction applies to rectangle inputs".into(),
            ))
        }
    };
    let w0 = &net.layers[0].w;
    if w0.rows() != w0.cols() {
        return Err(NetworkError::NotReducible(
            "first layer is not square".into(),
        ));
    }
    let n = w0.rows();
    for i in 0..n {
        for j in 0..n {
            if i != j && w0.get(i, j) != 0.0 {
                return Err(NetworkError::NotReducible(
                    "first weight matrix is not diagonal".into(),
                ));
            }
        }
        if w0.get(i, i) == 0.0 {
            return Err(NetworkError::NotReducible(format!(
                "zero diagonal entry at {i}"
            )));
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| w0.get(i, i)).collect();
    let new_center: Vec<f64> = center.iter().zip(&diag).map(|(c, d)| c * d).collect();
    let new_radii: Vec<f64> = radii.iter().zip(&diag).map(|(r, d)| r * d.abs()).collect();
    let new_first = Layer::new(Mat::identity(n), net.layers[0].b.clone())?;
    let mut layers = vec![new_first];
    layers.extend(net.layers[1..].iter().cloned());
    Ok((
        ReluNetwork::new(layers)?,
        InputSet::Rectangle {
            center: new_center,
            radii: new_radii,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_clips_negative() {
        let net = ReluNetwork::single_neuron(0.0);
        assert_eq!(net.forward(&[-2.0]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn forward_two_input_single_neuron() {
        // W0 = [1, −1], identity last layer: φ(2 − 5) = 0
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::from_rows(&[vec![1.0, -1.0]]), vec![0.0]).unwrap(),
            Layer::new(Mat::from_rows(&[vec![1.0]]), vec![0.0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(net.forward(&[2.0, 5.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_rejects_bad_dims() {
        let net = ReluNetwork::single_neuron(0.0);
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn neuron_count_spans_layers() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::zeros(3, 2), vec![0.0; 3]).unwrap(),
            Layer::new(Mat::zeros(2, 3), vec![0.0; 2]).unwrap(),
            Layer::new(Mat::identity(2), vec![0.0; 2]).unwrap(),
        ])
        .unwrap();
        assert_eq!(net.depth(), 2);
        assert_eq!(net.total_neurons(), 5);
    }

    #[test]
    fn assumptions_all_hold_for_identity_rectangle() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![0.0, 0.0],
            radii: vec![1.0, 1.0],
        };
        let spec = SafetySpec::new(vec![vec![1.0, 0.0]]).unwrap();
        let checks = check_assumptions(&net, &input, &spec, TightnessCase::Rectangle, false);
        assert!(checks.iter().all(|c| c.holds), "{checks:?}");
    }

    #[test]
    fn assumption_detects_non_identity_last_layer() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
            Layer::new(
                Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]),
                vec![0.0, 0.0],
            )
            .unwrap(),
        ])
        .unwrap();
        let input = InputSet::Ellipsoid {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let spec = SafetySpec::new(vec![vec![1.0, 0.0]]).unwrap();
        let checks = check_assumptions(&net, &input, &spec, TightnessCase::Ellipsoid, false);
        let c = checks
            .iter()
            .find(|c| c.id == "last_layer_identity")
            .unwrap();
        assert!(!c.holds);
        assert!(c.detail.contains("not identity"));
    }

    #[test]
    fn assumption_detects_non_identity_first_layer() {
        let net = ReluNetwork::new(vec![
            Layer::new(
                Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]),
                vec![0.0, 0.0],
            )
            .unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![0.0, 0.0],
            radii: vec![1.0, 1.0],
        };
        let spec = SafetySpec::new(vec![vec![1.0, 0.0]]).unwrap();
        let checks = check_assumptions(&net, &input, &spec, TightnessCase::Rectangle, false);
        let c = checks
            .iter()
            .find(|c| c.id == "first_layer_identity")
            .unwrap();
        assert!(!c.holds);
    }

    #[test]
    fn diagonal_normalization_scales_rectangle() {
        let net = ReluNetwork::new(vec![
            Layer::new(
                Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, -1.0]]),
                vec![0.1, -0.2],
            )
            .unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![1.0, 1.0],
            radii: vec![1.0, 2.0],
        };
        let (net2, input2) = normalize_diagonal_weight(&net, &input).unwrap();
        assert!(net2.first_layer_is_identity(0.0));
        match &input2 {
            InputSet::Rectangle { center, radii } => {
                assert_eq!(center, &vec![2.0, -1.0]);
                assert_eq!(radii, &vec![2.0, 2.0]);
            }
            _ => panic!("expected rectangle"),
        }
        // output sets match pointwise under x ↦ W⁰x
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = input.sample(&mut rng);
            let mapped = vec![2.0 * x[0], -x[1]];
            assert_eq!(net.forward(&x).unwrap(), net2.forward(&mapped).unwrap());
        }
    }

    #[test]
    fn identity_weight_normalization_is_identity() {
        let net = ReluNetwork::new(vec![
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![0.5, -0.5],
            radii: vec![1.0, 1.0],
        };
        let (net2, input2) = normalize_diagonal_weight(&net, &input).unwrap();
        assert!(net2.first_layer_is_identity(0.0));
        match input2 {
            InputSet::Rectangle { center, radii } => {
                assert_eq!(center, vec![0.5, -0.5]);
                assert_eq!(radii, vec![1.0, 1.0]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn singular_diagonal_is_not_reducible() {
        let net = ReluNetwork::new(vec![
            Layer::new(
                Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
                vec![0.0, 0.0],
            )
            .unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let input = InputSet::Rectangle {
            center: vec![0.0, 0.0],
            radii: vec![1.0, 1.0],
        };
        assert!(matches!(
            normalize_diagonal_weight(&net, &input),
            Err(NetworkError::NotReducible(_))
        ));
    }

    #[test]
    fn samples_stay_inside_and_forward_never_fails() {
        let net = ReluNetwork::new(vec![
            Layer::new(
                Mat::from_rows(&[vec![0.3, -0.7], vec![0.9, 0.2]]),
                vec![0.1, 0.0],
            )
            .unwrap(),
            Layer::new(Mat::identity(2), vec![0.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let sets = [
            InputSet::Rectangle {
                center: vec![0.0, 1.0],
                radii: vec![0.5, 2.0],
            },
            InputSet::Ellipsoid {
                center: vec![-1.0, 0.5],
                radius: 1.5,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for set in &sets {
            for _ in 0..1000 {
                let x = set.sample(&mut rng);
                assert!(set.contains(&x, 1e-12));
                let y = net.forward(&x).unwrap();
                assert_eq!(y.len(), 2);
            }
        }
    }

    #[test]
    fn interval_rectangle_roundtrip() {
        let iv = InputSet::Interval { lo: -1.0, hi: 3.0 };
        let rect = iv.to_rectangle();
        match &rect {
            InputSet::Rectangle { center, radii } => {
                assert_eq!(center, &vec![1.0]);
                assert_eq!(radii, &vec![2.0]);
            }
            _ => panic!(),
        }
        match rect.to_interval().unwrap() {
            InputSet::Interval { lo, hi } => {
                assert_eq!(lo, -1.0);
                assert_eq!(hi, 3.0);
            }
            _ => panic!(),
        }
    }
}
