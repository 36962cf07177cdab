//! Monitor file serialization.
//!
//! Monitors are stored as JSON: format version, monitor type, a fingerprint
//! of the network file the monitor was built against, the configuration with
//! fully resolved thresholds, and a payload of envelope pairs (min-max) or
//! cube ranges (pattern). Pattern sets are stored as their cube list, never
//! as raw BDD node tables; loading reinserts the cubes in order, which
//! rebuilds the identical diagram.

use super::coding::{Threshold, ThresholdScheme};
use super::{MinMaxMonitor, Monitor, MonitorConfig, MonitorError, PatternMonitor};
use crate::bdd::{CodeCube, CodeRange};
use crate::bounds::Interval;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};

const FORMAT_VERSION: u32 = 1;

/// SHA-256 of a file's raw bytes, as lowercase hex. Used to pin a monitor to
/// the exact network file it was built from.
pub fn content_fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[derive(Serialize, Deserialize)]
struct MonitorFile {
    format_version: u32,
    monitor_type: String,
    network_fingerprint: String,
    config: ConfigRepr,
    payload: PayloadRepr,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    layer_k: usize,
    layer_kp: usize,
    delta: f64,
    neuron_indices: Vec<usize>,
    bits_per_neuron: u32,
    thresholds: Vec<Vec<ThresholdRepr>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Num(f64),
    Named(String),
}

#[derive(Serialize, Deserialize)]
struct PayloadRepr {
    #[serde(skip_serializing_if = "Option::is_none")]
    envelope: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cubes: Option<Vec<Vec<(u32, u32)>>>,
}

fn threshold_to_repr(t: &Threshold) -> ThresholdRepr {
    match t {
        Threshold::Value(v) => ThresholdRepr::Num(*v),
        Threshold::NegInf => ThresholdRepr::Named("-inf".to_string()),
        Threshold::PosInf => ThresholdRepr::Named("inf".to_string()),
    }
}

fn threshold_from_repr(r: &ThresholdRepr, neuron: usize) -> Result<Threshold, MonitorError> {
    match r {
        ThresholdRepr::Num(v) => {
            if !v.is_finite() {
                return Err(MonitorError::NonFiniteThreshold { neuron });
            }
            Ok(Threshold::Value(*v))
        }
        ThresholdRepr::Named(s) => match s.as_str() {
            "-inf" => Ok(Threshold::NegInf),
            "inf" => Ok(Threshold::PosInf),
            other => Err(MonitorError::BadThresholdEntry(other.to_string())),
        },
    }
}

/// A monitor read back from a file, together with the fingerprint of the
/// network it was built against.
pub struct LoadedMonitor {
    pub monitor: Monitor,
    pub network_fingerprint: String,
}

/// Writes `monitor` in the monitor file format. The output is byte-for-byte
/// deterministic for a given monitor.
pub fn save_monitor<W: Write>(
    mut writer: W,
    monitor: &Monitor,
    network_fingerprint: &str,
) -> Result<(), MonitorError> {
    let (thresholds, payload) = match monitor {
        Monitor::MinMax(m) => (
            Vec::new(),
            PayloadRepr {
                envelope: Some(m.envelope().iter().map(|i| (i.lo(), i.hi())).collect()),
                cubes: None,
            },
        ),
        Monitor::Pattern(m) => (
            m.thresholds()
                .iter()
                .map(|list| list.iter().map(threshold_to_repr).collect())
                .collect(),
            PayloadRepr {
                envelope: None,
                cubes: Some(
                    m.cubes()
                        .iter()
                        .map(|c| c.ranges().iter().map(|r| (r.lo, r.hi)).collect())
                        .collect(),
                ),
            },
        ),
    };
    let config = monitor.config();
    let file = MonitorFile {
        format_version: FORMAT_VERSION,
        monitor_type: monitor.type_name().to_string(),
        network_fingerprint: network_fingerprint.to_string(),
        config: ConfigRepr {
            layer_k: config.layer_k,
            layer_kp: config.layer_kp,
            delta: config.delta,
            neuron_indices: config.neuron_indices.clone(),
            bits_per_neuron: config.bits_per_neuron,
            thresholds,
        },
        payload,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    writer.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a monitor file and rebuilds the monitor. Verdicts of the rebuilt
/// monitor are identical to the saved one on every input.
pub fn load_monitor<R: Read>(mut reader: R) -> Result<LoadedMonitor, MonitorError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let file: MonitorFile = serde_json::from_slice(&bytes)?;
    if file.format_version != FORMAT_VERSION {
        return Err(MonitorError::BadFormatVersion(file.format_version));
    }
    let thresholds = file
        .config
        .thresholds
        .iter()
        .enumerate()
        .map(|(j, list)| {
            list.iter()
                .map(|r| threshold_from_repr(r, j))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let config = MonitorConfig {
        layer_k: file.config.layer_k,
        layer_kp: file.config.layer_kp,
        delta: file.config.delta,
        neuron_indices: file.config.neuron_indices,
        bits_per_neuron: file.config.bits_per_neuron,
        thresholds: ThresholdScheme::Explicit(thresholds.clone()),
    };
    let monitor = match file.monitor_type.as_str() {
        "minmax" => {
            let pairs = file
                .payload
                .envelope
                .ok_or_else(|| MonitorError::BadMonitorType("minmax without envelope".into()))?;
            let envelope = pairs
                .into_iter()
                .map(|(lo, hi)| Interval::new(lo, hi))
                .collect::<Result<Vec<_>, _>>()?;
            Monitor::MinMax(MinMaxMonitor::from_parts(config, envelope)?)
        }
        "pattern" => {
            let raw = file
                .payload
                .cubes
                .ok_or_else(|| MonitorError::BadMonitorType("pattern without cubes".into()))?;
            let cubes = raw
                .into_iter()
                .map(|ranges| {
                    CodeCube::new(
                        ranges
                            .into_iter()
                            .map(|(lo, hi)| CodeRange::new(lo, hi))
                            .collect(),
                    )
                })
                .collect();
            Monitor::Pattern(PatternMonitor::from_cubes(config, thresholds, cubes)?)
        }
        other => return Err(MonitorError::BadMonitorType(other.to_string())),
    };
    Ok(LoadedMonitor {
        monitor,
        network_fingerprint: file.network_fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::network::{Activation, Layer, Network};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn small_net() -> Network {
        let l1 = Layer::new(
            vec![vec![0.8, -0.4], vec![0.3, 0.9], vec![-0.5, 0.2]],
            vec![0.1, -0.2, 0.0],
            Activation::Relu,
            1,
        )
        .unwrap();
        let l2 = Layer::new(
            vec![vec![0.5, -0.6, 0.2], vec![0.1, 0.4, -0.9]],
            vec![0.05, 0.15],
            Activation::Tanh,
            2,
        )
        .unwrap();
        Network::new(2, vec![l1, l2]).unwrap()
    }

    fn sample_data(rng: &mut Xoshiro256PlusPlus, n: usize) -> Dataset {
        Dataset::new(
            2,
            (0..n)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_verdicts() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let net = small_net();
        let data = sample_data(&mut rng, 40);
        let config = MonitorConfig::all_neurons(
            &net,
            2,
            0,
            0.1,
            2,
            ThresholdScheme::Quantile(vec![0.25, 0.5, 0.75]),
        );
        let monitors = [
            Monitor::MinMax(MinMaxMonitor::build(&net, &data, config.clone()).unwrap()),
            Monitor::Pattern(PatternMonitor::build(&net, &data, config).unwrap()),
        ];
        for monitor in &monitors {
            let mut buf = Vec::new();
            save_monitor(&mut buf, monitor, "fp").unwrap();
            let loaded = load_monitor(buf.as_slice()).unwrap();
            assert_eq!(loaded.network_fingerprint, "fp");
            for _ in 0..200 {
                let v = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                assert_eq!(
                    monitor.eval(&net, &v).unwrap(),
                    loaded.monitor.eval(&net, &v).unwrap()
                );
            }
        }
    }

    #[test]
    fn save_is_deterministic() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let net = small_net();
        let data = sample_data(&mut rng, 25);
        let config = MonitorConfig::all_neurons(&net, 1, 0, 0.2, 1, ThresholdScheme::Zero);
        let m = Monitor::Pattern(PatternMonitor::build(&net, &data, config).unwrap());
        let mut a = Vec::new();
        let mut b = Vec::new();
        save_monitor(&mut a, &m, "fp").unwrap();
        save_monitor(&mut b, &m, "fp").unwrap();
        assert_eq!(a, b);
        // Saving the loaded monitor reproduces the original bytes.
        let loaded = load_monitor(a.as_slice()).unwrap();
        let mut c = Vec::new();
        save_monitor(&mut c, &loaded.monitor, "fp").unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn sentinel_thresholds_survive_round_trip() {
        let config = MonitorConfig {
            layer_k: 1,
            layer_kp: 0,
            delta: 0.0,
            neuron_indices: vec![0],
            bits_per_neuron: 2,
            thresholds: ThresholdScheme::Explicit(Vec::new()),
        };
        let grids = vec![vec![
            Threshold::NegInf,
            Threshold::Value(0.5),
            Threshold::PosInf,
        ]];
        let m = Monitor::Pattern(
            PatternMonitor::from_cubes(
                config,
                grids.clone(),
                vec![CodeCube::new(vec![CodeRange::new(2, 2)])],
            )
            .unwrap(),
        );
        let mut buf = Vec::new();
        save_monitor(&mut buf, &m, "fp").unwrap();
        let loaded = load_monitor(buf.as_slice()).unwrap();
        match loaded.monitor {
            Monitor::Pattern(p) => assert_eq!(p.thresholds(), &grids[..]),
            _ => panic!("expected pattern monitor"),
        }
    }

    #[test]
    fn rejects_unknown_version_and_type() {
        let text = r#"{"format_version": 9, "monitor_type": "minmax",
                       "network_fingerprint": "", "config": {"layer_k": 1,
                       "layer_kp": 0, "delta": 0.0, "neuron_indices": [0],
                       "bits_per_neuron": 1, "thresholds": []},
                       "payload": {"envelope": [[0.0, 1.0]]}}"#;
        assert!(matches!(
            load_monitor(text.as_bytes()),
            Err(MonitorError::BadFormatVersion(9))
        ));
        let text = text.replace("\"format_version\": 9", "\"format_version\": 1");
        let text = text.replace("minmax", "median");
        assert!(matches!(
            load_monitor(text.as_bytes()),
            Err(MonitorError::BadMonitorType(_))
        ));
    }

    #[test]
    fn fingerprint_is_stable_hex() {
        let fp = content_fingerprint(b"hello");
        assert_eq!(fp.len(), 64);
        assert_eq!(fp, content_fingerprint(b"hello"));
        assert_ne!(fp, content_fingerprint(b"hell"));
    }
}
