//! Threshold grids and the value/interval-to-code abstraction.
//!
//! A neuron monitored with `B` bits carries `2^B - 1` strictly increasing
//! thresholds `c_1 < ... < c_m` that split the reals into intervals
//! `(-inf, c_1], (c_1, c_2], ..., (c_m, +inf)`. The code of a value is the
//! index of the interval containing it, emitted as a big-endian `B`-bit
//! word. The boundary rule is uniform: a value strictly greater than a
//! threshold moves the code up, so for one bit this is exactly "1 iff the
//! value exceeds the threshold".

use super::{MonitorConfig, MonitorError};
use crate::bdd::CodeRange;
use crate::bounds::Interval;
use crate::data::Dataset;
use crate::network::Network;

/// One threshold. The unbounded markers exist so a grid can express "no
/// constraint on this side"; they never enter floating-point arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    NegInf,
    Value(f64),
    PosInf,
}

impl Threshold {
    /// True when `v` lies strictly above the threshold.
    pub fn exceeded_by(self, v: f64) -> bool {
        match self {
            Threshold::NegInf => true,
            Threshold::Value(c) => v > c,
            Threshold::PosInf => false,
        }
    }

    fn lt(self, other: Threshold) -> bool {
        use Threshold::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) | (PosInf, NegInf) | (Value(_), NegInf) => false,
            (NegInf, _) | (_, PosInf) => true,
            (Value(a), Value(b)) => a < b,
            (PosInf, Value(_)) => false,
        }
    }
}

/// How per-neuron thresholds are obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum ThresholdScheme {
    /// Caller-supplied grid, one list per monitored neuron.
    Explicit(Vec<Vec<Threshold>>),
    /// Sign of the neuron value; only meaningful for one-bit monitors.
    Zero,
    /// Per-neuron empirical quantiles of the unperturbed training
    /// activations, by the nearest-rank method.
    Quantile(Vec<f64>),
}

pub(crate) fn validate_threshold_list(
    thresholds: &[Threshold],
    neuron: usize,
) -> Result<(), MonitorError> {
    if thresholds.is_empty() {
        return Err(MonitorError::ThresholdCount {
            neuron,
            expected: 1,
            got: 0,
        });
    }
    for t in thresholds {
        if let Threshold::Value(v) = t {
            if !v.is_finite() {
                return Err(MonitorError::NonFiniteThreshold { neuron });
            }
        }
    }
    if !thresholds.windows(2).all(|w| w[0].lt(w[1])) {
        return Err(MonitorError::ThresholdsNotIncreasing { neuron });
    }
    Ok(())
}

/// Index of the threshold interval containing `value`, in `0..=m` for `m`
/// thresholds.
pub fn code_of(value: f64, thresholds: &[Threshold]) -> Result<u32, MonitorError> {
    validate_threshold_list(thresholds, 0)?;
    // Strict increase makes "exceeded" a prefix of the list.
    Ok(thresholds
        .iter()
        .take_while(|t| t.exceeded_by(value))
        .count() as u32)
}

/// Codes of every threshold interval intersected by the bound. Intervals
/// intersecting `[lo, hi]` are consecutive, so the result is exactly
/// `[code_of(lo), code_of(hi)]`.
pub fn code_range_of(
    bound: &Interval,
    thresholds: &[Threshold],
) -> Result<CodeRange, MonitorError> {
    Ok(CodeRange::new(
        code_of(bound.lo(), thresholds)?,
        code_of(bound.hi(), thresholds)?,
    ))
}

/// Concatenates per-neuron codes into one BDD word, most significant bit of
/// each code first.
pub fn encode_word(codes: &[u32], bits_per_neuron: u32) -> Vec<bool> {
    let mut word = Vec::with_capacity(codes.len() * bits_per_neuron as usize);
    for &code in codes {
        for b in (0..bits_per_neuron).rev() {
            word.push(code >> b & 1 == 1);
        }
    }
    word
}

/// Materializes the per-neuron threshold lists for `config`.
///
/// The quantile scheme works on the unperturbed (`delta = 0`) training
/// activations of the monitored layer. Colliding quantiles are nudged up by
/// the smallest representable step to restore strict increase.
pub fn resolve_thresholds(
    net: &Network,
    data: &Dataset,
    config: &MonitorConfig,
) -> Result<Vec<Vec<Threshold>>, MonitorError> {
    let count = config.threshold_count();
    let neurons = config.neuron_indices.len();
    match &config.thresholds {
        ThresholdScheme::Explicit(lists) => {
            if lists.len() != neurons {
                return Err(MonitorError::ThresholdArity {
                    expected: neurons,
                    got: lists.len(),
                });
            }
            for (j, list) in lists.iter().enumerate() {
                if list.len() != count {
                    return Err(MonitorError::ThresholdCount {
                        neuron: j,
                        expected: count,
                        got: list.len(),
                    });
                }
                validate_threshold_list(list, j)?;
            }
            Ok(lists.clone())
        }
        ThresholdScheme::Zero => {
            if config.bits_per_neuron != 1 {
                return Err(MonitorError::ZeroSchemeNeedsOneBit {
                    bits: config.bits_per_neuron,
                });
            }
            Ok(vec![vec![Threshold::Value(0.0)]; neurons])
        }
        ThresholdScheme::Quantile(ps) => {
            if ps.len() != count {
                return Err(MonitorError::QuantileCount {
                    expected: count,
                    got: ps.len(),
                });
            }
            let increasing = ps.windows(2).all(|w| w[0] < w[1]);
            if !increasing || ps.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                return Err(MonitorError::BadQuantiles(ps.clone()));
            }
            if data.is_empty() {
                return Err(MonitorError::EmptyDataset);
            }
            let mut per_neuron: Vec<Vec<f64>> = vec![Vec::with_capacity(data.len()); neurons];
            for row in data.rows() {
                let act = net.forward(row, config.layer_k)?;
                for (col, &idx) in config.neuron_indices.iter().enumerate() {
                    per_neuron[col].push(act.values[idx]);
                }
            }
            let n = data.len();
            Ok(per_neuron
                .into_iter()
                .map(|mut values| {
                    values.sort_by(|a, b| a.partial_cmp(b).expect("activations are finite"));
                    let mut grid: Vec<f64> = ps
                        .iter()
                        .map(|&p| {
                            let rank = (p * n as f64).ceil().max(1.0) as usize;
                            values[rank.min(n) - 1]
                        })
                        .collect();
                    for i in 1..grid.len() {
                        if grid[i] <= grid[i - 1] {
                            grid[i] = grid[i - 1].next_up();
                        }
                    }
                    grid.into_iter().map(Threshold::Value).collect()
                })
                .collect())
        }
    }
}
