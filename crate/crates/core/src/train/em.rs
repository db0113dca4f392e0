use crate::error::Result;
use crate::gnn::GnnModel;
use crate::memnet::{MemNetModel, MemoryBank};

use super::learner::{examples, Learner};
use super::pool::PoolState;
use super::pseudo::{annotate, intersect_consistent, select_topk, Source};
use super::trace::{NetworkRound, PhaseRecord, RoundRecord, Trace};
use super::{check_labeled_classes, gnn_model, memnet_model, TrainConfig, TrainingData};

/// How the two networks' annotations become permanent labels at the end
/// of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    /// Only graphs both networks label the same way, shared by both.
    Intersect,
    /// Each network adopts the other's top-k directly into its own pool.
    Separate,
}

#[derive(Debug, Clone)]
pub struct EmOutcome {
    pub gnn: GnnModel,
    pub memnet: MemNetModel,
    /// Bank the returned memory network was selected with.
    pub bank: MemoryBank,
    pub gnn_pool: PoolState,
    pub kernel_pool: PoolState,
    pub trace: Trace,
}

/// Train `q` on the labeled set plus the top-k of `p`'s annotations of
/// `pool`, with `p` frozen for the whole phase.
pub fn e_step(
    data: &TrainingData<'_>,
    config: &TrainConfig,
    round: usize,
    p: &GnnModel,
    q: &mut Learner<MemNetModel>,
    bank: &MemoryBank,
    pool: &PoolState,
) -> Result<PhaseRecord> {
    let k = config.k_for(pool.unlabeled().len());
    let teacher = annotate(p, &data.view(None), pool.unlabeled(), Source::Gnn)?;
    let pseudo = select_topk(&teacher, k);
    let ex = examples(&pool.training_set(), &pseudo, config.soft_targets);
    q.fit(data, Some(bank), &ex, pool.labeled(), config, round)
}

/// Train `p` on the labeled set plus the top-k of `q`'s annotations of
/// `pool`, with `q` frozen for the whole phase.
pub fn m_step(
    data: &TrainingData<'_>,
    config: &TrainConfig,
    round: usize,
    q: &MemNetModel,
    bank: &MemoryBank,
    p: &mut Learner<GnnModel>,
    pool: &PoolState,
) -> Result<PhaseRecord> {
    let k = config.k_for(pool.unlabeled().len());
    let teacher = annotate(q, &data.view(Some(bank)), pool.unlabeled(), Source::Kernel)?;
    let pseudo = select_topk(&teacher, k);
    let ex = examples(&pool.training_set(), &pseudo, config.soft_targets);
    p.fit(data, None, &ex, pool.labeled(), config, round)
}

pub(super) fn network_round(phase: &PhaseRecord, pool: &PoolState) -> NetworkRound {
    NetworkRound {
        network: phase.network,
        loss: phase.final_loss(),
        val_accuracy: phase.val_accuracy,
        labeled: pool.labeled().len(),
        unlabeled: pool.unlabeled().len(),
        augmented: pool.augmented().len(),
    }
}

fn bank_for(data: &TrainingData<'_>, config: &TrainConfig, pool: &PoolState) -> Result<MemoryBank> {
    if config.bank_includes_augmented {
        data.bank(&pool.training_set())
    } else {
        data.bank(pool.labeled())
    }
}

/// Supervised initialization of both networks, then alternating E and M
/// steps until the unlabeled pool is used up, a round promotes fewer than
/// the configured minimum, or `max_rounds` is reached.
pub fn em_loop(data: &TrainingData<'_>, config: &TrainConfig) -> Result<EmOutcome> {
    co_train(data, config, Agreement::Intersect)
}

pub fn co_train(data: &TrainingData<'_>, config: &TrainConfig, agreement: Agreement) -> Result<EmOutcome> {
    config.validate()?;
    check_labeled_classes(data)?;
    let labels = data.labels();
    let labeled: Vec<(usize, usize)> = data.split.train_labeled.iter().map(|&i| (i, labels[i])).collect();
    let mut gnn_pool = PoolState::new(labeled.clone(), data.split.train_unlabeled.clone())?;
    let mut kernel_pool = gnn_pool.clone();
    let min_new = config.min_new_for(data.split.train_unlabeled.len());
    let mut bank = bank_for(data, config, &kernel_pool)?;

    let mut p = Learner::new(gnn_model(data, config), Source::Gnn, config);
    let mut q = Learner::new(memnet_model(data, config), Source::Kernel, config);
    let mut trace = Trace::default();

    let none = Default::default();
    let rp = p.fit(data, None, &examples(&labeled, &none, false), &labeled, config, 0)?;
    let rq = q.fit(
        data,
        Some(&bank),
        &examples(&labeled, &none, false),
        &labeled,
        config,
        0,
    )?;
    trace.rounds.push(RoundRecord {
        round: 0,
        added: 0,
        networks: vec![network_round(&rp, &gnn_pool), network_round(&rq, &kernel_pool)],
    });
    trace.phases.extend([rp, rq]);

    for round in 1..=config.max_rounds {
        let rq = e_step(data, config, round, &p.model, &mut q, &bank, &kernel_pool)?;
        let rp = m_step(data, config, round, &q.model, &bank, &mut p, &gnn_pool)?;

        let gnn_view = data.view(None);
        let kernel_view = data.view(Some(&bank));
        let added = match agreement {
            Agreement::Intersect => {
                let k = config.k_for(gnn_pool.unlabeled().len());
                let from_p = select_topk(&annotate(&p.model, &gnn_view, gnn_pool.unlabeled(), Source::Gnn)?, k);
                let from_q = select_topk(
                    &annotate(&q.model, &kernel_view, kernel_pool.unlabeled(), Source::Kernel)?,
                    k,
                );
                let delta = intersect_consistent(&from_p, &from_q);
                gnn_pool.promote(&delta)?;
                kernel_pool.promote(&delta)?
            }
            Agreement::Separate => {
                let to_q = select_topk(
                    &annotate(&p.model, &gnn_view, kernel_pool.unlabeled(), Source::Gnn)?,
                    config.k_for(kernel_pool.unlabeled().len()),
                );
                let to_p = select_topk(
                    &annotate(&q.model, &kernel_view, gnn_pool.unlabeled(), Source::Kernel)?,
                    config.k_for(gnn_pool.unlabeled().len()),
                );
                let into_q = kernel_pool.promote(&to_q.assignments())?;
                let into_p = gnn_pool.promote(&to_p.assignments())?;
                into_p.max(into_q)
            }
        };
        gnn_pool.check()?;
        kernel_pool.check()?;
        if config.bank_includes_augmented {
            bank = bank_for(data, config, &kernel_pool)?;
        }

        trace.rounds.push(RoundRecord {
            round,
            added,
            networks: vec![network_round(&rp, &gnn_pool), network_round(&rq, &kernel_pool)],
        });
        trace.phases.extend([rq, rp]);

        let exhausted = gnn_pool.unlabeled().is_empty() && kernel_pool.unlabeled().is_empty();
        if exhausted || added < min_new {
            break;
        }
    }

    let (gnn, _) = p.into_best()?;
    let (memnet, best_bank) = q.into_best()?;
    Ok(EmOutcome {
        gnn,
        memnet,
        bank: best_bank.unwrap_or(bank),
        gnn_pool,
        kernel_pool,
        trace,
    })
}
