//! Pattern monitors: BDD-backed sets of admissible activation code words.

use super::coding::{code_of, code_range_of, encode_word, resolve_thresholds, Threshold};
use super::{MonitorConfig, MonitorError, Verdict};
use crate::bdd::{Bdd, CodeCube, NodeRef};
use crate::bounds::perturbation_estimate;
use crate::data::Dataset;
use crate::network::Network;
use std::collections::HashSet;

/// Stores the set of admissible activation patterns as a BDD over
/// `|neurons| * bits_per_neuron` variables, plus the deduplicated cube list
/// the set was built from (the serialization payload).
#[derive(Clone, Debug)]
pub struct PatternMonitor {
    config: MonitorConfig,
    thresholds: Vec<Vec<Threshold>>,
    bdd: Bdd,
    root: NodeRef,
    cubes: Vec<CodeCube>,
    seen: HashSet<CodeCube>,
}

impl PatternMonitor {
    /// Builds the pattern set: per sample, the perturbation estimate is
    /// mapped neuron-wise through `code_range_of` and the resulting cube is
    /// unioned into the BDD. With `delta = 0` and one bit per neuron this is
    /// the classic on-off pattern monitor.
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
        let thresholds = resolve_thresholds(net, data, &config)?;
        let mut monitor = PatternMonitor::from_cubes(config, thresholds, Vec::new())?;
        monitor.absorb(net, data)?;
        Ok(monitor)
    }

    /// Reassembles a monitor from a stored cube list. The BDD is rebuilt by
    /// inserting the cubes in order, which is deterministic.
    pub fn from_cubes(
        config: MonitorConfig,
        thresholds: Vec<Vec<Threshold>>,
        cubes: Vec<CodeCube>,
    ) -> Result<Self, MonitorError> {
        if config.bits_per_neuron == 0 || config.bits_per_neuron > 16 {
            return Err(MonitorError::BadBits(config.bits_per_neuron));
        }
        config.check_neuron_shape()?;
        let neurons = config.neuron_indices.len();
        if thresholds.len() != neurons {
            return Err(MonitorError::ThresholdArity {
                expected: neurons,
                got: thresholds.len(),
            });
        }
        for (j, list) in thresholds.iter().enumerate() {
            if list.len() != config.threshold_count() {
                return Err(MonitorError::ThresholdCount {
                    neuron: j,
                    expected: config.threshold_count(),
                    got: list.len(),
                });
            }
            super::coding::validate_threshold_list(list, j)?;
        }
        let vars = neurons * config.bits_per_neuron as usize;
        let mut monitor = PatternMonitor {
            config,
            thresholds,
            bdd: Bdd::new(vars),
            root: Bdd::FALSE,
            cubes: Vec::new(),
            seen: HashSet::new(),
        };
        for cube in cubes {
            monitor.insert(cube)?;
        }
        Ok(monitor)
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
            let ranges = bounds
                .intervals()
                .iter()
                .zip(&self.thresholds)
                .map(|(itv, grid)| code_range_of(itv, grid))
                .collect::<Result<Vec<_>, _>>()?;
            self.insert(CodeCube::new(ranges))?;
        }
        Ok(())
    }

    /// Unions one cube into the pattern set, skipping exact duplicates.
    fn insert(&mut self, cube: CodeCube) -> Result<(), MonitorError> {
        if self.seen.contains(&cube) {
            return Ok(());
        }
        self.root = self
            .bdd
            .insert_cube(self.root, &cube, self.config.bits_per_neuron)?;
        self.seen.insert(cube.clone());
        self.cubes.push(cube);
        Ok(())
    }

    pub fn eval(&self, net: &Network, v_op: &[f64]) -> Result<Verdict, MonitorError> {
        let act = net.forward(v_op, self.config.layer_k)?;
        self.eval_activations(&act.values)
    }

    /// Verdict for a full layer-`k` activation vector: discretize each
    /// monitored neuron, concatenate the codes and test membership.
    pub fn eval_activations(&self, layer_values: &[f64]) -> Result<Verdict, MonitorError> {
        let needed = self.config.neuron_indices.last().copied().unwrap_or(0) + 1;
        if layer_values.len() < needed {
            return Err(MonitorError::ActivationLength {
                expected: needed,
                got: layer_values.len(),
            });
        }
        let codes = self
            .config
            .neuron_indices
            .iter()
            .zip(&self.thresholds)
            .map(|(&idx, grid)| code_of(layer_values[idx], grid))
            .collect::<Result<Vec<_>, _>>()?;
        let word = encode_word(&codes, self.config.bits_per_neuron);
        let known = self.bdd.contains(self.root, &word)?;
        Ok(Verdict {
            warning: !known,
            violating_neurons: Vec::new(),
            observed_codes: Some(codes),
        })
    }

    /// Continues the build loop over more data with the thresholds frozen at
    /// their original resolution; an empty dataset is a no-op.
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

    /// Resolved threshold grids, parallel to `config().neuron_indices`.
    pub fn thresholds(&self) -> &[Vec<Threshold>] {
        &self.thresholds
    }

    /// Deduplicated cubes in insertion order.
    pub fn cubes(&self) -> &[CodeCube] {
        &self.cubes
    }

    pub fn bdd(&self) -> &Bdd {
        &self.bdd
    }

    pub fn root(&self) -> NodeRef {
        self.root
    }

    /// Number of distinct admissible code words.
    pub fn word_count(&self) -> u128 {
        self.bdd.count_words(self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdd::CodeRange;
    use crate::monitor::ThresholdScheme;
    use crate::network::{Activation, Layer};

    fn identity_net(dim: usize) -> Network {
        let eye: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let layer = Layer::new(eye, vec![0.0; dim], Activation::Identity, 1).unwrap();
        Network::new(dim, vec![layer]).unwrap()
    }

    fn on_off_config(net: &Network, delta: f64) -> MonitorConfig {
        MonitorConfig::all_neurons(net, 1, 0, delta, 1, ThresholdScheme::Zero)
    }

    #[test]
    fn sign_abstraction_single_word() {
        let net = identity_net(2);
        let data = Dataset::new(2, vec![vec![0.5, -0.3]]).unwrap();
        let m = PatternMonitor::build(&net, &data, on_off_config(&net, 0.0)).unwrap();
        assert_eq!(m.cubes().len(), 1);
        assert_eq!(
            m.cubes()[0].ranges(),
            &[CodeRange::new(1, 1), CodeRange::new(0, 0)]
        );
        assert_eq!(m.word_count(), 1);
        // The observed word 10 is admissible, its complement is not.
        assert!(!m.eval(&net, &[0.5, -0.3]).unwrap().warning);
        assert!(m.eval(&net, &[-0.5, 0.3]).unwrap().warning);
    }

    #[test]
    fn straddling_bounds_become_dont_cares() {
        // Neuron 0 strictly positive, neuron 3 strictly nonpositive, neurons
        // 1 and 2 straddle zero: the cube is (1, -, -, 0) with 4 words.
        let net = identity_net(4);
        let data = Dataset::new(4, vec![vec![1.0, 0.05, -0.05, -1.0]]).unwrap();
        let m = PatternMonitor::build(&net, &data, on_off_config(&net, 0.1)).unwrap();
        assert_eq!(
            m.cubes()[0].ranges(),
            &[
                CodeRange::new(1, 1),
                CodeRange::new(0, 1),
                CodeRange::new(0, 1),
                CodeRange::new(0, 0)
            ]
        );
        assert_eq!(m.word_count(), 4);
    }

    #[test]
    fn empty_monitor_warns_on_everything() {
        let net = identity_net(2);
        let config = on_off_config(&net, 0.0);
        let thresholds = vec![vec![Threshold::Value(0.0)]; 2];
        let m = PatternMonitor::from_cubes(config, thresholds, Vec::new()).unwrap();
        for v in [[0.0, 0.0], [1.0, 1.0], [-1.0, 1.0]] {
            assert!(m.eval(&net, &v).unwrap().warning);
        }
    }

    #[test]
    fn training_samples_never_warn_at_zero_delta() {
        let net = identity_net(3);
        let rows = vec![
            vec![0.5, -0.2, 1.0],
            vec![-0.1, -0.4, 2.0],
            vec![0.3, 0.3, -0.7],
        ];
        let data = Dataset::new(3, rows.clone()).unwrap();
        let m = PatternMonitor::build(&net, &data, on_off_config(&net, 0.0)).unwrap();
        for row in rows {
            assert!(!m.eval(&net, &row).unwrap().warning);
        }
    }

    #[test]
    fn two_bit_build_matches_formula_oracle() {
        // One sample whose bounds produce the ranges {00,01}, {01,10,11},
        // {10}: boxes of radius 0.6 around (0, 1.5, 1.5) against per-neuron
        // grids (0,1,2), (0,1,2), (0,0.5,2.5).
        let net = identity_net(3);
        let data = Dataset::new(3, vec![vec![0.0, 1.5, 1.5]]).unwrap();
        let grid = |a: f64, b: f64, c: f64| {
            vec![
                Threshold::Value(a),
                Threshold::Value(b),
                Threshold::Value(c),
            ]
        };
        let config = MonitorConfig {
            layer_k: 1,
            layer_kp: 0,
            delta: 0.6,
            neuron_indices: vec![0, 1, 2],
            bits_per_neuron: 2,
            thresholds: ThresholdScheme::Explicit(vec![
                grid(0.0, 1.0, 2.0),
                grid(0.0, 1.0, 2.0),
                grid(0.0, 0.5, 2.5),
            ]),
        };
        let m = PatternMonitor::build(&net, &data, config).unwrap();
        assert_eq!(
            m.cubes()[0].ranges(),
            &[
                CodeRange::new(0, 1),
                CodeRange::new(1, 3),
                CodeRange::new(2, 2)
            ]
        );
        // Independent route: (!b10) & (b20 | b21) & (b30 & !b31).
        let mut oracle = Bdd::new(6);
        let b10 = oracle.literal(0, true);
        let nb10 = oracle.not(b10);
        let b20 = oracle.literal(2, true);
        let b21 = oracle.literal(3, true);
        let or2 = oracle.or(b20, b21);
        let b30 = oracle.literal(4, true);
        let b31 = oracle.literal(5, true);
        let nb31 = oracle.not(b31);
        let and3 = oracle.and(b30, nb31);
        let conj = oracle.and(nb10, or2);
        let expected = oracle.and(conj, and3);
        assert!(m.bdd().same_function(m.root(), &oracle, expected));
    }

    #[test]
    fn extend_matches_concatenated_build() {
        let net = identity_net(2);
        let a = Dataset::new(2, vec![vec![0.5, 0.5], vec![-0.5, 0.5]]).unwrap();
        let b = Dataset::new(2, vec![vec![0.5, -0.5], vec![0.7, 0.7]]).unwrap();
        let config = on_off_config(&net, 0.05);
        let mut extended = PatternMonitor::build(&net, &a, config.clone()).unwrap();
        extended.extend(&net, &b).unwrap();
        let concat = a.concat(&b).unwrap();
        let full = PatternMonitor::build(&net, &concat, config).unwrap();
        assert_eq!(extended.cubes(), full.cubes());
        assert!(extended
            .bdd()
            .same_function(extended.root(), full.bdd(), full.root()));

        // Idempotence and the empty no-op.
        let root = extended.root();
        let cube_count = extended.cubes().len();
        extended.extend(&net, &a).unwrap();
        extended.extend(&net, &Dataset::empty(2)).unwrap();
        assert_eq!(extended.root(), root);
        assert_eq!(extended.cubes().len(), cube_count);
    }

    #[test]
    fn duplicate_cubes_are_stored_once() {
        let net = identity_net(1);
        let data = Dataset::new(1, vec![vec![0.4], vec![0.4], vec![0.6]]).unwrap();
        let m = PatternMonitor::build(&net, &data, on_off_config(&net, 0.0)).unwrap();
        // All three samples are strictly positive: one cube.
        assert_eq!(m.cubes().len(), 1);
    }

    #[test]
    fn neuron_subset_matches_projection() {
        let net = identity_net(3);
        let data = Dataset::new(3, vec![vec![0.5, 99.0, -0.5], vec![-0.5, -99.0, 0.5]]).unwrap();
        let config = MonitorConfig {
            neuron_indices: vec![0, 2],
            ..on_off_config(&net, 0.0)
        };
        let m = PatternMonitor::build(&net, &data, config).unwrap();
        // Projected to neurons {0, 2}, the patterns are 10 and 01.
        assert!(!m.eval(&net, &[0.5, 0.0, -0.5]).unwrap().warning);
        assert!(!m.eval(&net, &[-0.5, 12.0, 0.5]).unwrap().warning);
        assert!(m.eval(&net, &[0.5, 0.0, 0.5]).unwrap().warning);
        let v = m.eval(&net, &[0.5, 0.0, -0.5]).unwrap();
        assert_eq!(v.observed_codes, Some(vec![1, 0]));
    }
}
