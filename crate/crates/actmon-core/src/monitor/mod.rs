//! Monitor construction, evaluation and persistence.
//!
//! Two monitor families share one build loop: per training sample, compute a
//! perturbation estimate at the monitored layer, abstract it, and join it
//! into the monitor. Min-max monitors keep a per-neuron envelope; pattern
//! monitors keep a BDD over discretized activation codes. With `delta = 0`
//! the perturbation estimate degenerates to the exact activations and both
//! families coincide with their classic non-robust constructions.
//!
//! Per-sample estimates are pure and may run concurrently; joins and cube
//! insertions must be applied single-writer (they commute, so any order
//! yields the same monitor). Finished monitors are immutable and safe to
//! evaluate from many threads.

mod coding;
mod minmax;
mod pattern;
mod persist;

pub use coding::{
    code_of, code_range_of, encode_word, resolve_thresholds, Threshold, ThresholdScheme,
};
pub use minmax::MinMaxMonitor;
pub use pattern::PatternMonitor;
pub use persist::{content_fingerprint, load_monitor, save_monitor, LoadedMonitor};

use crate::bdd::BddError;
use crate::bounds::BoundsError;
use crate::data::Dataset;
use crate::network::{Network, NetworkError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("invalid layer pair k_p={k_p}, k={k} (network has {n} layers)")]
    BadLayerPair { k_p: usize, k: usize, n: usize },
    #[error("delta must be nonnegative and finite, got {0}")]
    BadDelta(f64),
    #[error("bits_per_neuron must be in 1..=16, got {0}")]
    BadBits(u32),
    #[error("neuron_indices must be non-empty and strictly increasing")]
    BadNeuronShape,
    #[error("neuron index out of range for layer of dimension {dim}")]
    BadNeuronIndices { dim: usize },
    #[error("neuron {neuron}: expected {expected} thresholds, got {got}")]
    ThresholdCount {
        neuron: usize,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected} threshold lists (one per monitored neuron), got {got}")]
    ThresholdArity { expected: usize, got: usize },
    #[error("neuron {neuron}: thresholds are not strictly increasing")]
    ThresholdsNotIncreasing { neuron: usize },
    #[error("neuron {neuron}: non-finite threshold value")]
    NonFiniteThreshold { neuron: usize },
    #[error("the zero threshold scheme requires bits_per_neuron = 1, got {bits}")]
    ZeroSchemeNeedsOneBit { bits: u32 },
    #[error("expected {expected} quantile probabilities, got {got}")]
    QuantileCount { expected: usize, got: usize },
    #[error("quantile probabilities must be strictly increasing inside (0, 1): {0:?}")]
    BadQuantiles(Vec<f64>),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset rows have dimension {got}, expected {expected}")]
    DataDimension { expected: usize, got: usize },
    #[error("activation vector has length {got}, need at least {expected}")]
    ActivationLength { expected: usize, got: usize },
    #[error("payload has {got} entries, expected {expected}")]
    PayloadArity { expected: usize, got: usize },
    #[error("unsupported monitor file format version {0}")]
    BadFormatVersion(u32),
    #[error("unknown monitor type {0:?}")]
    BadMonitorType(String),
    #[error("bad threshold entry {0:?} (expected a number, \"-inf\" or \"inf\")")]
    BadThresholdEntry(String),
    #[error("monitor file parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

/// Everything needed to build one monitor: where to watch, how much
/// feature-space perturbation to absorb, and how to discretize.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorConfig {
    /// Monitored layer `k`, 1-based.
    pub layer_k: usize,
    /// Perturbation layer `k_p` with `0 <= k_p < k`; 0 is the input.
    pub layer_kp: usize,
    /// L-infinity perturbation radius at layer `k_p`.
    pub delta: f64,
    /// Monitored neurons as 0-based positions in layer `k`, strictly
    /// increasing.
    pub neuron_indices: Vec<usize>,
    /// Code width for pattern monitors; min-max monitors ignore it.
    pub bits_per_neuron: u32,
    /// Threshold scheme for pattern monitors; min-max monitors ignore it.
    pub thresholds: ThresholdScheme,
}

impl MonitorConfig {
    /// Convenience constructor monitoring every neuron of layer `k`.
    pub fn all_neurons(
        net: &Network,
        layer_k: usize,
        layer_kp: usize,
        delta: f64,
        bits_per_neuron: u32,
        thresholds: ThresholdScheme,
    ) -> Self {
        // An out-of-range layer yields an empty subset here; validate()
        // reports it as a bad layer pair at build time.
        let dim = if layer_k <= net.depth() {
            net.dim(layer_k)
        } else {
            0
        };
        MonitorConfig {
            layer_k,
            layer_kp,
            delta,
            neuron_indices: (0..dim).collect(),
            bits_per_neuron,
            thresholds,
        }
    }

    /// Thresholds per neuron implied by the bit width: `2^B - 1`.
    pub fn threshold_count(&self) -> usize {
        (1usize << self.bits_per_neuron.min(16)) - 1
    }

    /// Structural checks against a concrete network. Threshold contents are
    /// validated separately when they are resolved.
    pub fn validate(&self, net: &Network) -> Result<(), MonitorError> {
        if self.layer_k == 0 || self.layer_k > net.depth() || self.layer_kp >= self.layer_k {
            return Err(MonitorError::BadLayerPair {
                k_p: self.layer_kp,
                k: self.layer_k,
                n: net.depth(),
            });
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(MonitorError::BadDelta(self.delta));
        }
        if self.bits_per_neuron == 0 || self.bits_per_neuron > 16 {
            return Err(MonitorError::BadBits(self.bits_per_neuron));
        }
        let dim = net.dim(self.layer_k);
        if self.neuron_indices.iter().any(|&i| i >= dim) {
            return Err(MonitorError::BadNeuronIndices { dim });
        }
        self.check_neuron_shape()
    }

    /// The network-independent part of the neuron subset invariant, also
    /// enforced when a monitor is reassembled from a file.
    pub(crate) fn check_neuron_shape(&self) -> Result<(), MonitorError> {
        let sorted = self.neuron_indices.windows(2).all(|w| w[0] < w[1]);
        if self.neuron_indices.is_empty() || !sorted {
            return Err(MonitorError::BadNeuronShape);
        }
        Ok(())
    }

    fn check_dataset(&self, net: &Network, data: &Dataset) -> Result<(), MonitorError> {
        if data.dim() != net.input_dim() {
            return Err(MonitorError::DataDimension {
                expected: net.input_dim(),
                got: data.dim(),
            });
        }
        Ok(())
    }
}

/// Outcome of evaluating one input against a monitor.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub warning: bool,
    /// Monitored neurons whose activation left the envelope (min-max only).
    pub violating_neurons: Vec<usize>,
    /// Observed per-neuron codes (pattern only).
    pub observed_codes: Option<Vec<u32>>,
}

/// Either monitor family behind one interface.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Monitor {
    MinMax(MinMaxMonitor),
    Pattern(PatternMonitor),
}

impl Monitor {
    pub fn eval(&self, net: &Network, v_op: &[f64]) -> Result<Verdict, MonitorError> {
        match self {
            Monitor::MinMax(m) => m.eval(net, v_op),
            Monitor::Pattern(m) => m.eval(net, v_op),
        }
    }

    /// Evaluates directly on a full layer-`k` activation vector.
    pub fn eval_activations(&self, layer_values: &[f64]) -> Result<Verdict, MonitorError> {
        match self {
            Monitor::MinMax(m) => m.eval_activations(layer_values),
            Monitor::Pattern(m) => m.eval_activations(layer_values),
        }
    }

    /// Continues the build loop over more data; building on `A` then
    /// extending with `B` equals building on the concatenation, with the
    /// thresholds resolved at original build time kept frozen.
    pub fn extend(&mut self, net: &Network, more_data: &Dataset) -> Result<(), MonitorError> {
        match self {
            Monitor::MinMax(m) => m.extend(net, more_data),
            Monitor::Pattern(m) => m.extend(net, more_data),
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        match self {
            Monitor::MinMax(m) => m.config(),
            Monitor::Pattern(m) => m.config(),
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Monitor::MinMax(_) => "minmax",
            Monitor::Pattern(_) => "pattern",
        }
    }
}
