use rand::seq::SliceRandom;

use crate::classifier::Classifier;
use crate::error::Result;
use crate::memnet::MemoryBank;
use crate::rng::{rng_for, Rng};
use crate::tensor::{Adam, Params, Tape, Targets, Tensor};

use super::pseudo::{PseudoLabelBatch, Source};
use super::trace::PhaseRecord;
use super::{TrainConfig, TrainingData};

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(usize),
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub index: usize,
    pub target: Target,
}

/// Labeled graphs followed by pseudo-labeled ones.
pub fn examples(labeled: &[(usize, usize)], pseudo: &PseudoLabelBatch, soft: bool) -> Vec<Example> {
    let hard = labeled.iter().map(|&(index, y)| Example {
        index,
        target: Target::Class(y),
    });
    let pseudo = pseudo.entries().iter().map(|e| Example {
        index: e.index,
        target: if soft {
            Target::Distribution(e.distribution.clone())
        } else {
            Target::Class(e.label)
        },
    });
    hard.chain(pseudo).collect()
}

fn targets(examples: &[&Example], classes: usize) -> Result<Targets> {
    if examples.iter().all(|e| matches!(e.target, Target::Class(_))) {
        return Ok(Targets::Hard(
            examples
                .iter()
                .map(|e| match e.target {
                    Target::Class(y) => y,
                    Target::Distribution(_) => unreachable!(),
                })
                .collect(),
        ));
    }
    let mut t = Tensor::zeros(examples.len(), classes);
    for (r, e) in examples.iter().enumerate() {
        match &e.target {
            Target::Class(y) if *y < classes => t.set(r, *y, 1.0),
            Target::Class(y) => return Err(crate::TensorError::InvalidTarget(format!("class {y} of {classes}")).into()),
            Target::Distribution(d) if d.len() == classes => t.row_mut(r).copy_from_slice(d),
            Target::Distribution(d) => {
                return Err(crate::TensorError::InvalidTarget(format!("distribution of width {}", d.len())).into())
            }
        }
    }
    Ok(Targets::Soft(t))
}

#[derive(Debug, Clone)]
struct Snapshot {
    params: Params,
    bank: Option<MemoryBank>,
    val_accuracy: f64,
}

/// A model with its optimizer, its own random stream for shuffling and
/// dropout, and the parameters that scored best on VAL so far.
#[derive(Debug, Clone)]
pub struct Learner<M> {
    pub model: M,
    pub source: Source,
    optimizer: Adam,
    rng: Rng,
    best: Option<Snapshot>,
}

impl<M: Classifier> Learner<M> {
    pub fn new(model: M, source: Source, config: &TrainConfig) -> Self {
        let optimizer = Adam::new(config.adam(), model.params());
        Self {
            model,
            source,
            optimizer,
            rng: rng_for(config.seed, &format!("train.{source}")),
            best: None,
        }
    }

    pub fn best_val_accuracy(&self) -> Option<f64> {
        self.best.as_ref().map(|s| s.val_accuracy)
    }

    /// Run `epochs_per_phase` epochs over `examples`, then score VAL.
    ///
    /// Each epoch shuffles the examples with the learner's generator, and
    /// each mini-batch then draws its dropout masks from the same
    /// generator. `reference` is the fixed labeled set whose loss is logged
    /// after every epoch.
    pub fn fit(
        &mut self,
        data: &TrainingData<'_>,
        bank: Option<&MemoryBank>,
        examples: &[Example],
        reference: &[(usize, usize)],
        config: &TrainConfig,
        round: usize,
    ) -> Result<PhaseRecord> {
        if config.reset_optimizer {
            self.optimizer = Adam::new(config.adam(), self.model.params());
        }
        let view = data.view(bank);
        let classes = self.model.num_classes();
        let mut epoch_losses = Vec::with_capacity(config.epochs_per_phase);
        let mut labeled_losses = Vec::with_capacity(config.epochs_per_phase);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let indices: Vec<usize> = examples.iter().map(|e| e.index).collect();
        for _ in 0..config.epochs_per_phase {
            if examples.is_empty() {
                break;
            }
            order.shuffle(&mut self.rng);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let batch: Vec<&Example> = chunk.iter().map(|&e| &examples[e]).collect();
                let items: Vec<usize> = batch.iter().map(|e| e.index).collect();
                let targets = targets(&batch, classes)?;
                let (loss, grads) = {
                    let mut tape = Tape::new(self.model.params());
                    let z = self.model.logits(&mut tape, &view, &items, true, &mut self.rng)?;
                    let l = tape.cross_entropy(z, &targets)?;
                    (tape.value(l).item(), tape.backward(l)?)
                };
                self.optimizer.step(self.model.params_mut(), &grads)?;
                total += loss * chunk.len() as f64;
            }
            self.model.calibrate(&view, &indices)?;
            epoch_losses.push(total / examples.len() as f64);
            labeled_losses.push(self.loss_on(data, bank, reference)?);
        }
        let val_accuracy = self.model.accuracy(&view, &data.split.val, data.labels())?;
        if self.best.as_ref().is_none_or(|b| val_accuracy >= b.val_accuracy) {
            self.best = Some(Snapshot {
                params: self.model.params().clone(),
                bank: bank.cloned(),
                val_accuracy,
            });
        }
        Ok(PhaseRecord {
            round,
            network: self.source,
            examples: examples.len(),
            pseudo_labeled: examples.len().saturating_sub(reference.len()),
            epoch_losses,
            labeled_losses,
            val_accuracy,
        })
    }

    /// Mean cross-entropy on `(index, label)` pairs with dropout off.
    pub fn loss_on(&self, data: &TrainingData<'_>, bank: Option<&MemoryBank>, set: &[(usize, usize)]) -> Result<f64> {
        if set.is_empty() {
            return Ok(0.0);
        }
        let items: Vec<usize> = set.iter().map(|&(i, _)| i).collect();
        let p = self.model.probabilities(&data.view(bank), &items)?;
        let total: f64 = set
            .iter()
            .enumerate()
            .map(|(r, &(_, y))| -p.get(r, y).max(f64::MIN_POSITIVE).ln())
            .sum();
        Ok(total / set.len() as f64)
    }

    /// The best-on-VAL parameters and the bank they were scored with; the
    /// current state when no phase has run.
    pub fn into_best(mut self) -> Result<(M, Option<MemoryBank>)> {
        match self.best {
            Some(s) => {
                self.model.params_mut().assign(&s.params)?;
                Ok((self.model, s.bank))
            }
            None => Ok((self.model, None)),
        }
    }
}
