//! Runtime monitors built from a network's training-time activation
//! patterns.
//!
//! The toolkit builds monitors from the neuron activations a fixed
//! feed-forward network produces on its training data, and evaluates fresh
//! inputs against them. A robust monitor is built from sound per-neuron
//! bounds (interval bound propagation) over an L-infinity perturbation ball
//! in feature space, so by construction no input whose layer-`k_p` features
//! lie within `delta` of a training point's features ever raises a warning.
//!
//! Modules:
//! - [`network`]: dense feed-forward networks and exact (partial) forward
//!   passes.
//! - [`bounds`]: interval arithmetic and the perturbation estimate.
//! - [`bdd`]: reduced ordered BDDs storing sets of activation code words.
//! - [`monitor`]: the min-max and pattern monitor families, their build
//!   loops and file format.
//! - [`data`]: dataset I/O and synthetic cluster generation.

pub mod bdd;
pub mod bounds;
pub mod data;
pub mod monitor;
pub mod network;

pub use bdd::{Bdd, BddError, CodeCube, CodeRange, NodeRef};
pub use bounds::{
    activation_bounds, affine_bounds, interval_join, perturbation_estimate, widen, BoundsError,
    BoundsVector, Interval,
};
pub use data::{
    generate, load_dataset, save_csv, save_raw_f32, ClusterSpec, DataError, DataFormat, Dataset,
    SyntheticSpec,
};
pub use monitor::{
    code_of, code_range_of, content_fingerprint, encode_word, load_monitor, resolve_thresholds,
    save_monitor, LoadedMonitor, MinMaxMonitor, Monitor, MonitorConfig, MonitorError,
    PatternMonitor, Threshold, ThresholdScheme, Verdict,
};
pub use network::{Activation, ActivationVector, Layer, Network, NetworkError};
