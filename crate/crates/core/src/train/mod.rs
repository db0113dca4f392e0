//! Alternating training of the GNN `p` and the memory network `q`, plus the
//! single-network and ensemble variants it is compared against.
//!
//! Every method starts from a supervised phase on TRAIN-L. A round of the
//! joint method is:
//!
//! 1. E-step: `p` annotates the unlabeled pool once; `q` trains on the
//!    labeled set plus `p`'s `k` most confident annotations.
//! 2. M-step: the same with the roles swapped.
//! 3. Both networks annotate the pool again; graphs in both top-k lists with
//!    the same label leave the pool and join the labeled set.
//!
//! Each network keeps the parameters that scored best on VAL.

mod config;
mod data;
mod em;
mod learner;
mod pool;
mod pseudo;
mod selftrain;
mod trace;

use std::fmt;
use std::str::FromStr;

pub use config::TrainConfig;
pub use data::TrainingData;
pub use em::{co_train, e_step, em_loop, m_step, Agreement, EmOutcome};
pub use learner::{examples, Example, Learner, Target};
pub use pool::PoolState;
pub use pseudo::{annotate, intersect_consistent, select_topk, PseudoLabel, PseudoLabelBatch, Source};
pub use selftrain::{self_train, SelfTrained};
pub use trace::{NetworkRound, PhaseRecord, RoundRecord, Trace};

use crate::classifier::Classifier;
use crate::ensemble::{EnsembleConfig, EnsembleModel};
use crate::error::{Error, Result};
use crate::gnn::{GnnConfig, GnnModel};
use crate::memnet::{MemNetConfig, MemNetModel, MemoryBank};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Kgnn,
    KgnnSep,
    GnnSup,
    MemnnSup,
    GnnSelf,
    EnsembleSelf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Kgnn,
        Method::KgnnSep,
        Method::GnnSup,
        Method::MemnnSup,
        Method::GnnSelf,
        Method::EnsembleSelf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Kgnn => "kgnn",
            Method::KgnnSep => "kgnn-sep",
            Method::GnnSup => "gnn-sup",
            Method::MemnnSup => "memnn-sup",
            Method::GnnSelf => "gnn-self",
            Method::EnsembleSelf => "ensemble-self",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method `{s}`; expected one of {}", names.join(", "))
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::try_from(s.to_string()).map_err(Error::Config)
    }
}

/// Models produced by one training run.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub method: Method,
    pub gnn: Option<GnnModel>,
    pub memnet: Option<MemNetModel>,
    pub ensemble: Option<EnsembleModel>,
    pub bank: Option<MemoryBank>,
    pub trace: Trace,
}

impl TrainedModels {
    /// The classifier whose accuracy the method reports: the GNN for every
    /// method that trains one, otherwise the memory network or ensemble.
    pub fn primary(&self) -> &dyn Classifier {
        if let Some(m) = &self.gnn {
            m
        } else if let Some(m) = &self.memnet {
            m
        } else {
            self.ensemble.as_ref().expect("every method yields a model")
        }
    }

    pub fn accuracy(&self, data: &TrainingData<'_>, items: &[usize]) -> Result<f64> {
        self.primary()
            .accuracy(&data.view(self.bank.as_ref()), items, data.labels())
    }

    pub fn test_accuracy(&self, data: &TrainingData<'_>) -> Result<f64> {
        self.accuracy(data, &data.split.test)
    }

    /// Accuracy of the memory network, when the method has one.
    pub fn memnet_accuracy(&self, data: &TrainingData<'_>, items: &[usize]) -> Result<Option<f64>> {
        match &self.memnet {
            Some(m) => Ok(Some(m.accuracy(
                &data.view(self.bank.as_ref()),
                items,
                data.labels(),
            )?)),
            None => Ok(None),
        }
    }
}

pub fn gnn_config(data: &TrainingData<'_>, config: &TrainConfig) -> GnnConfig {
    GnnConfig {
        num_layers: config.gnn_layers,
        dropout: config.dropout,
        layer_dropout: config.gnn_layer_dropout,
        batch_norm: config.gnn_batch_norm,
        ..GnnConfig::new(
            data.dataset.feature_dim(),
            config.gnn_hidden,
            data.dataset.num_classes(),
        )
    }
}

pub fn memnet_config(data: &TrainingData<'_>, config: &TrainConfig) -> MemNetConfig {
    MemNetConfig {
        hops: config.hops,
        dropout: config.memnet_dropout,
        readout: config.memnet_readout,
        ..MemNetConfig::new(data.wl_dim, config.memnet_hidden, data.dataset.num_classes())
    }
}

pub fn gnn_model(data: &TrainingData<'_>, config: &TrainConfig) -> GnnModel {
    GnnModel::new(gnn_config(data, config), &mut rng_for(config.seed, "gnn"))
}

pub fn memnet_model(data: &TrainingData<'_>, config: &TrainConfig) -> MemNetModel {
    MemNetModel::new(memnet_config(data, config), &mut rng_for(config.seed, "memnet"))
}

pub fn ensemble_model(data: &TrainingData<'_>, config: &TrainConfig) -> Result<EnsembleModel> {
    let c = EnsembleConfig {
        gnn: gnn_config(data, config),
        memnet: memnet_config(data, config),
    };
    EnsembleModel::new(c, &mut rng_for(config.seed, "ensemble"))
}

pub(crate) fn check_labeled_classes(data: &TrainingData<'_>) -> Result<()> {
    let labels = data.labels();
    let mut seen = vec![false; data.dataset.num_classes()];
    for &i in &data.split.train_labeled {
        seen[labels[i]] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(c) => Err(Error::Training(format!("class {c} has no labeled training graph"))),
        None => Ok(()),
    }
}

/// `p` after `epochs_per_phase` supervised epochs on TRAIN-L.
pub fn init_theta(data: &TrainingData<'_>, config: &TrainConfig) -> Result<GnnModel> {
    config.validate()?;
    check_labeled_classes(data)?;
    let labels = data.labels();
    let labeled: Vec<(usize, usize)> = data.split.train_labeled.iter().map(|&i| (i, labels[i])).collect();
    let mut p = Learner::new(gnn_model(data, config), Source::Gnn, config);
    p.fit(
        data,
        None,
        &examples(&labeled, &Default::default(), false),
        &labeled,
        config,
        0,
    )?;
    Ok(p.model)
}

/// Train with `method` and return its best-on-VAL models.
pub fn run(method: Method, data: &TrainingData<'_>, config: &TrainConfig) -> Result<TrainedModels> {
    let empty = TrainedModels {
        method,
        gnn: None,
        memnet: None,
        ensemble: None,
        bank: None,
        trace: Trace::default(),
    };
    Ok(match method {
        Method::Kgnn | Method::KgnnSep => {
            let agreement = if method == Method::Kgnn {
                Agreement::Intersect
            } else {
                Agreement::Separate
            };
            let out = co_train(data, config, agreement)?;
            TrainedModels {
                gnn: Some(out.gnn),
                memnet: Some(out.memnet),
                bank: Some(out.bank),
                trace: out.trace,
                ..empty
            }
        }
        Method::GnnSup | Method::GnnSelf => {
            let learner = Learner::new(gnn_model(data, config), Source::Gnn, config);
            let out = self_train(data, config, learner, false, method == Method::GnnSelf)?;
            TrainedModels {
                gnn: Some(out.model),
                trace: out.trace,
                ..empty
            }
        }
        Method::MemnnSup => {
            let learner = Learner::new(memnet_model(data, config), Source::Kernel, config);
            let out = self_train(data, config, learner, true, false)?;
            TrainedModels {
                memnet: Some(out.model),
                bank: out.bank,
                trace: out.trace,
                ..empty
            }
        }
        Method::EnsembleSelf => {
            let learner = Learner::new(ensemble_model(data, config)?, Source::Joint, config);
            let out = self_train(data, config, learner, true, true)?;
            TrainedModels {
                ensemble: Some(out.model),
                bank: out.bank,
                trace: out.trace,
                ..empty
            }
        }
    })
}
