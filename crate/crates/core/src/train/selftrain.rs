use crate::classifier::Classifier;
use crate::error::Result;
use crate::memnet::MemoryBank;

use super::em::network_round;
use super::learner::{examples, Learner};
use super::pool::PoolState;
use super::pseudo::{annotate, select_topk};
use super::trace::{RoundRecord, Trace};
use super::{check_labeled_classes, TrainConfig, TrainingData};

pub struct SelfTrained<M> {
    pub model: M,
    pub bank: Option<MemoryBank>,
    pub pool: PoolState,
    pub trace: Trace,
}

/// Supervised initialization, then rounds in which the model's own top-k
/// annotations join the labeled set for good before another phase.
///
/// With `pseudo_labels` off no graph is ever promoted, so the run ends
/// after one extra supervised phase.
pub fn self_train<M: Classifier>(
    data: &TrainingData<'_>,
    config: &TrainConfig,
    mut learner: Learner<M>,
    uses_bank: bool,
    pseudo_labels: bool,
) -> Result<SelfTrained<M>> {
    config.validate()?;
    check_labeled_classes(data)?;
    let labels = data.labels();
    let labeled: Vec<(usize, usize)> = data.split.train_labeled.iter().map(|&i| (i, labels[i])).collect();
    let mut pool = PoolState::new(labeled.clone(), data.split.train_unlabeled.clone())?;
    let min_new = config.min_new_for(data.split.train_unlabeled.len());
    let make_bank = |pool: &PoolState| -> Result<Option<MemoryBank>> {
        if !uses_bank {
            return Ok(None);
        }
        let entries = if config.bank_includes_augmented {
            pool.training_set()
        } else {
            pool.labeled().to_vec()
        };
        data.bank(&entries).map(Some)
    };
    let mut bank = make_bank(&pool)?;
    let mut trace = Trace::default();

    let none = Default::default();
    let r = learner.fit(
        data,
        bank.as_ref(),
        &examples(&labeled, &none, false),
        &labeled,
        config,
        0,
    )?;
    trace.rounds.push(RoundRecord {
        round: 0,
        added: 0,
        networks: vec![network_round(&r, &pool)],
    });
    trace.phases.push(r);

    for round in 1..=config.max_rounds {
        let k = if pseudo_labels {
            config.k_for(pool.unlabeled().len())
        } else {
            0
        };
        let added = if k == 0 {
            0
        } else {
            let own = annotate(
                &learner.model,
                &data.view(bank.as_ref()),
                pool.unlabeled(),
                learner.source,
            )?;
            pool.promote(&select_topk(&own, k).assignments())?
        };
        pool.check()?;
        if config.bank_includes_augmented {
            bank = make_bank(&pool)?;
        }
        let ex = examples(&pool.training_set(), &none, false);
        let r = learner.fit(data, bank.as_ref(), &ex, pool.labeled(), config, round)?;
        trace.rounds.push(RoundRecord {
            round,
            added,
            networks: vec![network_round(&r, &pool)],
        });
        trace.phases.push(r);
        if pool.unlabeled().is_empty() || added < min_new {
            break;
        }
    }

    let (model, best_bank) = learner.into_best()?;
    Ok(SelfTrained {
        model,
        bank: best_bank.or(bank),
        pool,
        trace,
    })
}
