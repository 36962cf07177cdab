//! Deterministic fixtures shared by the criterion benchmarks.

use actmon_core::{Activation, Dataset, Layer, MonitorConfig, Network, ThresholdScheme};

/// Dense network with the given layer widths and a fixed weight pattern, so
/// benchmark inputs are identical from run to run without dragging in an RNG.
pub fn demo_network(widths: &[usize]) -> Network {
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let (d_in, d_out) = (w[0], w[1]);
            let weights = (0..d_out)
                .map(|i| {
                    (0..d_in)
                        .map(|j| ((i * 31 + j * 17 + l * 7) % 13) as f64 / 13.0 - 0.5)
                        .collect()
                })
                .collect();
            let bias = (0..d_out).map(|i| (i % 5) as f64 * 0.05 - 0.1).collect();
            Layer::new(weights, bias, Activation::Relu, l + 1).unwrap()
        })
        .collect();
    Network::new(widths[0], layers).unwrap()
}

/// Low-discrepancy point cloud of `n` rows in `dim` dimensions.
pub fn demo_dataset(n: usize, dim: usize) -> Dataset {
    let rows = (0..n)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    let t = (r * dim + c) as f64;
                    (t * 0.6180339887498949).fract() * 2.0 - 1.0
                })
                .collect()
        })
        .collect();
    Dataset::new(dim, rows).unwrap()
}

/// Sign-threshold pattern config over every neuron of `layer_k`.
pub fn on_off_config(net: &Network, layer_k: usize, delta: f64) -> MonitorConfig {
    MonitorConfig::all_neurons(net, layer_k, 0, delta, 1, ThresholdScheme::Zero)
}
