//! Evaluation reports as scriptable key-value text.

use actmon_core::Monitor;
use std::fmt::Write as _;

/// Summary of evaluating one dataset against one monitor. The warning rate
/// is exactly `warnings / total_inputs` and is rendered with six decimal
/// places.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub monitor_type: String,
    pub layer_k: usize,
    pub layer_kp: usize,
    pub delta: f64,
    pub neurons: usize,
    pub bits_per_neuron: u32,
    /// Admissible word count (pattern monitors).
    pub pattern_words: Option<u128>,
    /// (min, mean, max) envelope width (min-max monitors).
    pub envelope_width: Option<(f64, f64, f64)>,
    pub total_inputs: usize,
    pub warnings: usize,
}

impl Report {
    pub fn new(monitor: &Monitor, total_inputs: usize, warnings: usize) -> Self {
        let config = monitor.config();
        let (pattern_words, envelope_width) = match monitor {
            Monitor::Pattern(m) => (Some(m.word_count()), None),
            Monitor::MinMax(m) => {
                let widths: Vec<f64> = m.envelope().iter().map(|i| i.width()).collect();
                let min = widths.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = widths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mean = widths.iter().sum::<f64>() / widths.len() as f64;
                (None, Some((min, mean, max)))
            }
        };
        Report {
            monitor_type: monitor.type_name().to_string(),
            layer_k: config.layer_k,
            layer_kp: config.layer_kp,
            delta: config.delta,
            neurons: config.neuron_indices.len(),
            bits_per_neuron: config.bits_per_neuron,
            pattern_words,
            envelope_width,
            total_inputs,
            warnings,
        }
    }

    pub fn warning_rate(&self) -> f64 {
        self.warnings as f64 / self.total_inputs as f64
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "monitor_type: {}", self.monitor_type);
        let _ = writeln!(out, "layer_k: {}", self.layer_k);
        let _ = writeln!(out, "layer_kp: {}", self.layer_kp);
        let _ = writeln!(out, "delta: {}", self.delta);
        let _ = writeln!(out, "neurons: {}", self.neurons);
        if let Some(words) = self.pattern_words {
            let _ = writeln!(out, "bits_per_neuron: {}", self.bits_per_neuron);
            let _ = writeln!(out, "pattern_words: {words}");
        }
        if let Some((min, mean, max)) = self.envelope_width {
            let _ = writeln!(out, "envelope_width_min: {min:.6}");
            let _ = writeln!(out, "envelope_width_mean: {mean:.6}");
            let _ = writeln!(out, "envelope_width_max: {max:.6}");
        }
        let _ = writeln!(out, "total_inputs: {}", self.total_inputs);
        let _ = writeln!(out, "warnings: {}", self.warnings);
        let _ = writeln!(out, "warning_rate: {:.6}", self.warning_rate());
        out
    }
}
