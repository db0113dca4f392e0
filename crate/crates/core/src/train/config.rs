use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memnet::MemoryReadout;
use crate::tensor::AdamConfig;

/// Hyper-parameters shared by every training method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs_per_phase: usize,
    /// Upper bound on alternation rounds after initialization.
    pub max_rounds: usize,
    /// Absolute number of pseudo-labels taken per network per round;
    /// overrides `top_k_fraction` when set.
    pub top_k: Option<usize>,
    /// Share of the current unlabeled pool taken per network per round,
    /// rounded up.
    pub top_k_fraction: f64,
    /// Stop once a round adds fewer labels than this; defaults to
    /// `max(1, floor(min_new_fraction · |original pool|))`.
    pub min_new_labels: Option<usize>,
    pub min_new_fraction: f64,
    pub gnn_hidden: usize,
    pub gnn_layers: usize,
    pub gnn_layer_dropout: bool,
    /// Normalize GIN node states after every layer.
    pub gnn_batch_norm: bool,
    pub memnet_hidden: usize,
    pub hops: usize,
    /// Dropout on the memory readout before its head.
    pub memnet_dropout: f64,
    pub memnet_readout: MemoryReadout,
    pub wl_iterations: usize,
    /// Divide each WL count vector by the graph's node count.
    pub scale_wl_by_size: bool,
    pub dropout: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Train on the teacher's full distribution instead of its arg-max.
    pub soft_targets: bool,
    /// Fresh Adam moments at the start of every phase.
    pub reset_optimizer: bool,
    /// Put promoted graphs into the memory bank as well.
    pub bank_includes_augmented: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            batch_size: 32,
            epochs_per_phase: 20,
            max_rounds: 10,
            top_k: None,
            top_k_fraction: 0.1,
            min_new_labels: None,
            min_new_fraction: 0.01,
            gnn_hidden: 32,
            gnn_layers: 3,
            gnn_layer_dropout: false,
            gnn_batch_norm: true,
            memnet_hidden: 32,
            hops: 3,
            memnet_dropout: 0.0,
            memnet_readout: MemoryReadout::Output,
            wl_iterations: 3,
            scale_wl_by_size: true,
            dropout: 0.5,
            learning_rate: adam.learning_rate,
            weight_decay: adam.weight_decay,
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_epsilon: adam.epsilon,
            soft_targets: false,
            reset_optimizer: true,
            bank_includes_augmented: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("gnn_hidden", self.gnn_hidden),
            ("gnn_layers", self.gnn_layers),
            ("memnet_hidden", self.memnet_hidden),
            ("hops", self.hops),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let unit = [
            ("top_k_fraction", self.top_k_fraction),
            ("min_new_fraction", self.min_new_fraction),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [("dropout", self.dropout), ("memnet_dropout", self.memnet_dropout)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1)")));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate = {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight_decay = {}", self.weight_decay)));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, 1)")));
            }
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::Config("adam_epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.adam_epsilon,
        }
    }

    /// Pseudo-labels to take from a pool of `pool` graphs.
    pub fn k_for(&self, pool: usize) -> usize {
        match self.top_k {
            Some(k) => k.min(pool),
            None => ((self.top_k_fraction * pool as f64).ceil() as usize).min(pool),
        }
    }

    /// Convergence threshold for an original pool of `pool` graphs.
    pub fn min_new_for(&self, pool: usize) -> usize {
        self.min_new_labels
            .unwrap_or_else(|| ((self.min_new_fraction * pool as f64).floor() as usize).max(1))
    }
}
