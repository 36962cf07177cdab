//! Feed-forward network representation and exact full/partial forward passes.
//!
//! A [`Network`] is a fixed-weight stack of dense layers. Layer indices are
//! 1-based to match the usual "layer k" convention; index 0 denotes the raw
//! input vector and is never backed by an actual layer.

use serde::Deserialize;
use thiserror::Error;

/// Elementwise activation functions.
///
/// Every variant is monotone nondecreasing; the bounds module relies on this
/// to push interval endpoints through a layer exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
        }
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("network has no layers")]
    EmptyLayers,
    #[error("input_dim must be at least 1")]
    ZeroInputDim,
    #[error("layer {layer}: weight matrix has {got} columns, expected {expected}")]
    ColumnMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("layer {layer}: bias has length {got}, expected {expected} (one per row)")]
    BiasMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("layer {layer}: weight matrix is empty or ragged")]
    BadWeightMatrix { layer: usize },
    #[error("layer {layer}: non-finite weight or bias value")]
    NonFinite { layer: usize },
    #[error("layer index {k} out of range 1..={n}")]
    InvalidLayer { k: usize, n: usize },
    #[error("invalid layer range {from}..={to} (network has {n} layers)")]
    InvalidLayerRange { from: usize, to: usize, n: usize },
    #[error("input has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One dense layer: `y = act(W x + b)` with `W` of shape `d_k x d_{k-1}`.
#[derive(Clone, Debug)]
pub struct Layer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    /// Validates rectangularity, bias length and finiteness. `layer` is the
    /// 1-based index used in error messages.
    pub fn new(
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        activation: Activation,
        layer: usize,
    ) -> Result<Self, NetworkError> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(NetworkError::BadWeightMatrix { layer });
        }
        let cols = weights[0].len();
        if weights.iter().any(|row| row.len() != cols) {
            return Err(NetworkError::BadWeightMatrix { layer });
        }
        if bias.len() != weights.len() {
            return Err(NetworkError::BiasMismatch {
                layer,
                expected: weights.len(),
                got: bias.len(),
            });
        }
        let finite = weights
            .iter()
            .flat_map(|row| row.iter())
            .chain(bias.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(NetworkError::NonFinite { layer });
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Applies the layer to `input`. Accumulation starts at the bias and adds
    /// weight terms in ascending column order; the bounds module mirrors the
    /// exact same order so degenerate intervals stay bitwise equal.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_dim());
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, &b)| {
                let mut acc = b;
                for (w, x) in row.iter().zip(input) {
                    acc += w * x;
                }
                self.activation.apply(acc)
            })
            .collect()
    }
}

/// The output of a (partial) forward pass: the values of layer `layer`.
/// `layer` 0 stands for the network input itself.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationVector {
    pub values: Vec<f64>,
    pub layer: usize,
}

/// A trained feed-forward network with fixed weights.
///
/// Immutable after construction; forward passes are pure and safe to call
/// from any number of threads.
#[derive(Clone, Debug)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct NetworkFile {
    input_dim: usize,
    layers: Vec<LayerFile>,
}

#[derive(Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        if input_dim == 0 {
            return Err(NetworkError::ZeroInputDim);
        }
        if layers.is_empty() {
            return Err(NetworkError::EmptyLayers);
        }
        let mut expected = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.input_dim() != expected {
                return Err(NetworkError::ColumnMismatch {
                    layer: i + 1,
                    expected,
                    got: layer.input_dim(),
                });
            }
            expected = layer.output_dim();
        }
        Ok(Network { input_dim, layers })
    }

    /// Parses the JSON network format (see README). JSON cannot express NaN,
    /// but oversized literals parse to infinity, so finiteness is re-checked.
    pub fn from_slice(bytes: &[u8]) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_slice(bytes)?;
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| Layer::new(l.weights, l.bias, l.activation, i + 1))
            .collect::<Result<Vec<_>, _>>()?;
        Network::new(file.input_dim, layers)
    }

    pub fn from_json_str(text: &str) -> Result<Self, NetworkError> {
        Network::from_slice(text.as_bytes())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of layers, the `n` in layer indices 1..=n.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Output dimension `d_k` of layer `k`; `dim(0)` is the input dimension.
    pub fn dim(&self, k: usize) -> usize {
        if k == 0 {
            self.input_dim
        } else {
            self.layers[k - 1].output_dim()
        }
    }

    /// The layer computing values at index `k` (1-based).
    pub fn layer(&self, k: usize) -> &Layer {
        &self.layers[k - 1]
    }

    /// Computes the layer-`k` activation vector for input `v`.
    pub fn forward(&self, v: &[f64], k: usize) -> Result<ActivationVector, NetworkError> {
        if k == 0 || k > self.depth() {
            return Err(NetworkError::InvalidLayer { k, n: self.depth() });
        }
        if v.len() != self.input_dim {
            return Err(NetworkError::DimensionMismatch {
                expected: self.input_dim,
                got: v.len(),
            });
        }
        let mut values = v.to_vec();
        for layer in &self.layers[..k] {
            values = layer.apply(&values);
        }
        Ok(ActivationVector { values, layer: k })
    }

    /// Applies layers `from..=to` to `z`, a vector of layer `from - 1` values.
    /// `forward_partial(v, 1, k)` reproduces `forward(v, k)` bit for bit.
    pub fn forward_partial(
        &self,
        z: &[f64],
        from: usize,
        to: usize,
    ) -> Result<ActivationVector, NetworkError> {
        if from == 0 || from > to || to > self.depth() {
            return Err(NetworkError::InvalidLayerRange {
                from,
                to,
                n: self.depth(),
            });
        }
        let expected = self.dim(from - 1);
        if z.len() != expected {
            return Err(NetworkError::DimensionMismatch {
                expected,
                got: z.len(),
            });
        }
        let mut values = z.to_vec();
        for layer in &self.layers[from - 1..to] {
            values = layer.apply(&values);
        }
        Ok(ActivationVector { values, layer: to })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn relu_net() -> Network {
        // y = relu(x0 - x1)
        Network::from_json_str(
            r#"{"input_dim": 2,
                "layers": [{"weights": [[1, -1]], "bias": [0], "activation": "relu"}]}"#,
        )
        .unwrap()
    }

    fn random_net(rng: &mut Xoshiro256PlusPlus, widths: &[usize]) -> Network {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (d_in, d_out) = (w[0], w[1]);
                let weights = (0..d_out)
                    .map(|_| (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                let bias = (0..d_out).map(|_| rng.gen_range(-0.5..0.5)).collect();
                Layer::new(weights, bias, Activation::Relu, i + 1).unwrap()
            })
            .collect();
        Network::new(widths[0], layers).unwrap()
    }

    #[test]
    fn load_minimal_file() {
        let net = relu_net();
        assert_eq!(net.depth(), 1);
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.dim(1), 1);
    }

    #[test]
    fn load_rejects_dimension_mismatch() {
        let err = Network::from_json_str(
            r#"{"input_dim": 2,
                "layers": [{"weights": [[1, -1]], "bias": [0], "activation": "relu"},
                           {"weights": [[1, 2]], "bias": [0], "activation": "relu"}]}"#,
        )
        .unwrap_err();
        match err {
            NetworkError::ColumnMismatch {
                layer,
                expected,
                got,
            } => assert_eq!((layer, expected, got), (2, 1, 2)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_rejects_empty_layer_list() {
        let err = Network::from_json_str(r#"{"input_dim": 2, "layers": []}"#).unwrap_err();
        assert!(matches!(err, NetworkError::EmptyLayers));
    }

    #[test]
    fn load_rejects_non_finite() {
        // Oversized literals are refused by the JSON parser itself.
        let err = Network::from_json_str(
            r#"{"input_dim": 1,
                "layers": [{"weights": [[1e999]], "bias": [0], "activation": "relu"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::Parse(_)));
        // The programmatic path re-checks finiteness.
        let err =
            Layer::new(vec![vec![f64::INFINITY]], vec![0.0], Activation::Relu, 1).unwrap_err();
        assert!(matches!(err, NetworkError::NonFinite { layer: 1 }));
    }

    #[test]
    fn forward_hand_cases() {
        let net = relu_net();
        assert_eq!(net.forward(&[3.0, 1.0], 1).unwrap().values, vec![2.0]);
        assert_eq!(net.forward(&[1.0, 3.0], 1).unwrap().values, vec![0.0]);
    }

    #[test]
    fn forward_identity_layer() {
        let net = Network::from_json_str(
            r#"{"input_dim": 2,
                "layers": [{"weights": [[1, 0], [0, 1]], "bias": [0, 0],
                            "activation": "identity"}]}"#,
        )
        .unwrap();
        let v = [0.25, -7.5];
        assert_eq!(net.forward(&v, 1).unwrap().values, v.to_vec());
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = relu_net();
        assert!(matches!(
            net.forward(&[1.0], 1),
            Err(NetworkError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            net.forward(&[1.0, 2.0], 2),
            Err(NetworkError::InvalidLayer { .. })
        ));
        assert!(matches!(
            net.forward(&[1.0, 2.0], 0),
            Err(NetworkError::InvalidLayer { .. })
        ));
    }

    #[test]
    fn partial_single_layer_and_full_pass() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let net = random_net(&mut rng, &[3, 5, 4, 2]);
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let full = net.forward(&v, 3).unwrap();
        // l = 1, k = n reproduces the full pass.
        assert_eq!(net.forward_partial(&v, 1, 3).unwrap(), full);
        // l = k applies exactly one layer.
        let first = net.forward(&v, 1).unwrap();
        assert_eq!(net.forward_partial(&v, 1, 1).unwrap().values, first.values);
    }

    #[test]
    fn partial_composes_with_forward() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let net = random_net(&mut rng, &[4, 6, 5, 3]);
        for _ in 0..100 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            for j in 1..3 {
                let mid = net.forward(&v, j).unwrap();
                let glued = net.forward_partial(&mid.values, j + 1, 3).unwrap();
                assert_eq!(glued, net.forward(&v, 3).unwrap());
            }
        }
    }

    #[test]
    fn partial_rejects_bad_range() {
        let net = relu_net();
        assert!(matches!(
            net.forward_partial(&[1.0], 2, 1),
            Err(NetworkError::InvalidLayerRange { .. })
        ));
        assert!(matches!(
            net.forward_partial(&[1.0, 2.0], 1, 5),
            Err(NetworkError::InvalidLayerRange { .. })
        ));
    }

    #[test]
    fn relu_outputs_nonnegative() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let net = random_net(&mut rng, &[4, 8, 8, 4]);
        for _ in 0..50 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
            for k in 1..=3 {
                assert!(net.forward(&v, k).unwrap().values.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let net = random_net(&mut rng, &[4, 7, 3]);
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert_eq!(net.forward(&v, 2).unwrap(), net.forward(&v, 2).unwrap());
    }
}
