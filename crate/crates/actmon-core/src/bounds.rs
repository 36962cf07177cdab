//! Interval arithmetic and boxed-abstraction propagation.
//!
//! [`perturbation_estimate`] computes, for an input `v`, a per-neuron box
//! guaranteed to contain every layer-`k` activation reachable when the
//! layer-`k_p` features of `v` are perturbed by at most `delta` in each
//! dimension (an L-infinity ball). Propagation alternates an exact affine
//! interval rule with monotone elementwise activation images; no outward
//! rounding of interval endpoints is performed.

use crate::network::{Activation, Network, NetworkError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("delta must be nonnegative and finite, got {0}")]
    BadDelta(f64),
    #[error("interval endpoints must be finite with lo <= hi, got [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid layer pair k_p={k_p}, k={k} (network has {n} layers)")]
    InvalidLayerPair { k_p: usize, k: usize, n: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A closed real interval `[lo, hi]` with finite endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, BoundsError> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(BoundsError::BadInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when `other` lies inside `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Per-neuron interval bounds for the values of one network layer.
/// `layer` 0 refers to the network input.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsVector {
    intervals: Vec<Interval>,
    layer: usize,
}

impl BoundsVector {
    pub fn new(intervals: Vec<Interval>, layer: usize) -> Self {
        BoundsVector { intervals, layer }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn get(&self, i: usize) -> &Interval {
        &self.intervals[i]
    }

    /// Keeps only the listed coordinates, in the given order.
    pub fn project(&self, indices: &[usize]) -> BoundsVector {
        BoundsVector {
            intervals: indices.iter().map(|&i| self.intervals[i]).collect(),
            layer: self.layer,
        }
    }
}

/// Widens each coordinate of `values` (living at layer `layer`) into the
/// interval `[v_j - delta, v_j + delta]`.
pub fn widen(values: &[f64], delta: f64, layer: usize) -> Result<BoundsVector, BoundsError> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(BoundsError::BadDelta(delta));
    }
    let intervals = values
        .iter()
        .map(|&v| Interval::new(v - delta, v + delta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundsVector { intervals, layer })
}

/// Exact interval image of `W x + b` over the input box: per output row,
/// `[b + sum_i min(w*lo_i, w*hi_i), b + sum_i max(w*lo_i, w*hi_i)]`.
/// Accumulation order matches `Layer::apply` (bias first, ascending column),
/// so degenerate inputs reproduce the forward pass bit for bit.
pub fn affine_bounds(
    weights: &[Vec<f64>],
    bias: &[f64],
    input: &BoundsVector,
) -> Result<BoundsVector, BoundsError> {
    let cols = weights.first().map_or(0, |row| row.len());
    if cols != input.len() {
        return Err(BoundsError::DimensionMismatch {
            expected: cols,
            got: input.len(),
        });
    }
    let intervals = weights
        .iter()
        .zip(bias)
        .map(|(row, &b)| {
            let mut lo = b;
            let mut hi = b;
            for (w, itv) in row.iter().zip(&input.intervals) {
                let a = w * itv.lo;
                let c = w * itv.hi;
                lo += a.min(c);
                hi += a.max(c);
            }
            Interval::new(lo, hi)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundsVector {
        intervals,
        layer: input.layer + 1,
    })
}

/// Image of a box under a monotone elementwise activation: endpoints map
/// straight through.
pub fn activation_bounds(act: Activation, input: &BoundsVector) -> BoundsVector {
    let intervals = input
        .intervals
        .iter()
        .map(|itv| Interval {
            lo: act.apply(itv.lo),
            hi: act.apply(itv.hi),
        })
        .collect();
    BoundsVector {
        intervals,
        layer: input.layer,
    }
}

/// Sound per-neuron bounds on layer-`k` values when the layer-`k_p` features
/// of `v` are perturbed by at most `delta` per dimension.
///
/// The layer-`k_p` features are computed exactly (for `k_p = 0` they are `v`
/// itself), widened by `delta`, and propagated through layers
/// `k_p+1 ..= k`. At `delta = 0` the result is degenerate and equal to
/// `forward(net, v, k)`; there is deliberately no special case for it.
pub fn perturbation_estimate(
    net: &Network,
    v: &[f64],
    k: usize,
    k_p: usize,
    delta: f64,
) -> Result<BoundsVector, BoundsError> {
    if k_p >= k || k > net.depth() {
        return Err(BoundsError::InvalidLayerPair {
            k_p,
            k,
            n: net.depth(),
        });
    }
    if v.len() != net.input_dim() {
        return Err(BoundsError::DimensionMismatch {
            expected: net.input_dim(),
            got: v.len(),
        });
    }
    let features = if k_p == 0 {
        v.to_vec()
    } else {
        net.forward(v, k_p)?.values
    };
    let mut bounds = widen(&features, delta, k_p)?;
    for idx in k_p + 1..=k {
        let layer = net.layer(idx);
        bounds = affine_bounds(layer.weights(), layer.bias(), &bounds)?;
        bounds = activation_bounds(layer.activation(), &bounds);
    }
    Ok(bounds)
}

/// Coordinatewise interval hull of two bounds vectors of equal length.
pub fn interval_join(a: &BoundsVector, b: &BoundsVector) -> Result<BoundsVector, BoundsError> {
    if a.len() != b.len() {
        return Err(BoundsError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    debug_assert_eq!(a.layer, b.layer);
    let intervals = a
        .intervals
        .iter()
        .zip(&b.intervals)
        .map(|(x, y)| x.hull(y))
        .collect();
    Ok(BoundsVector {
        intervals,
        layer: a.layer,
    })
}
