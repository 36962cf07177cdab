//! Min-max envelope monitors.

use super::{MonitorConfig, MonitorError, Verdict};
use crate::bounds::{interval_join, perturbation_estimate, BoundsVector, Interval};
use crate::data::Dataset;
use crate::network::Network;

/// Per-neuron `(L_j, U_j)` envelope over all training perturbation
/// estimates. Warns when an observed activation falls strictly outside its
/// envelope; boundary values do not warn.
#[derive(Clone, Debug)]
pub struct MinMaxMonitor {
    config: MonitorConfig,
    envelope: Vec<Interval>,
}

impl MinMaxMonitor {
    /// Builds the envelope by joining the perturbation estimate of every
    /// sample, restricted to the monitored neurons. With `delta = 0` this is
    /// the plain coordinatewise min/max of the visited activations.
    pub fn build(
        net: &Network,
        data: &Dataset,
        config: MonitorConfig,
    ) -> Result<Self, MonitorError> {
        config.validate(net)?;
        if data.is_empty() {
            return Err(MonitorError::EmptyDataset);
        }
        config.check_dataset(net, data)?;
        let mut monitor = MinMaxMonitor {
            config,
            envelope: Vec::new(),
        };
        monitor.absorb(net, data)?;
        Ok(monitor)
    }

    /// Reassembles a monitor from stored parts (deserialization path).
    pub fn from_parts(
        config: MonitorConfig,
        envelope: Vec<Interval>,
    ) -> Result<Self, MonitorError> {
        config.check_neuron_shape()?;
        if envelope.len() != config.neuron_indices.len() {
            return Err(MonitorError::PayloadArity {
                expected: config.neuron_indices.len(),
                got: envelope.len(),
            });
        }
        Ok(MinMaxMonitor { config, envelope })
    }

    fn absorb(&mut self, net: &Network, data: &Dataset) -> Result<(), MonitorError> {
        for row in data.rows() {
            let bounds = perturbation_estimate(
                net,
                row,
                self.config.layer_k,
                self.config.layer_kp,
                self.config.delta,
            )?
            .project(&self.config.neuron_indices);
            if self.envelope.is_empty() {
                self.envelope = bounds.intervals().to_vec();
            } else {
                let joined = interval_join(
                    &BoundsVector::new(self.envelope.clone(), self.config.layer_k),
                    &bounds,
                )?;
                self.envelope = joined.intervals().to_vec();
            }
        }
        Ok(())
    }

    pub fn eval(&self, net: &Network, v_op: &[f64]) -> Result<Verdict, MonitorError> {
        let act = net.forward(v_op, self.config.layer_k)?;
        self.eval_activations(&act.values)
    }

    /// Verdict for a full layer-`k` activation vector.
    pub fn eval_activations(&self, layer_values: &[f64]) -> Result<Verdict, MonitorError> {
        let needed = self.config.neuron_indices.last().copied().unwrap_or(0) + 1;
        if layer_values.len() < needed {
            return Err(MonitorError::ActivationLength {
                expected: needed,
                got: layer_values.len(),
            });
        }
        let violating: Vec<usize> = self
            .config
            .neuron_indices
            .iter()
            .zip(&self.envelope)
            .filter(|(&idx, itv)| {
                let x = layer_values[idx];
                x < itv.lo() || x > itv.hi()
            })
            .map(|(&idx, _)| idx)
            .collect();
        Ok(Verdict {
            warning: !violating.is_empty(),
            violating_neurons: violating,
            observed_codes: None,
        })
    }

    /// Joins in the estimates of additional samples; an empty dataset is a
    /// no-op.
    pub fn extend(&mut self, net: &Network, more_data: &Dataset) -> Result<(), MonitorError> {
        self.config.validate(net)?;
        if more_data.is_empty() {
            return Ok(());
        }
        self.config.check_dataset(net, more_data)?;
        self.absorb(net, more_data)
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    /// Envelope intervals, parallel to `config().neuron_indices`.
    pub fn envelope(&self) -> &[Interval] {
        &self.envelope
    }
}
