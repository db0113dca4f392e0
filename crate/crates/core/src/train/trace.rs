use std::fmt;

use super::pseudo::Source;

/// One training phase of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub round: usize,
    pub network: Source,
    /// Training examples, pseudo-labeled ones included.
    pub examples: usize,
    pub pseudo_labeled: usize,
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Loss on the original labeled graphs after each epoch, dropout off.
    pub labeled_losses: Vec<f64>,
    pub val_accuracy: f64,
}

impl PhaseRecord {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRound {
    pub network: Source,
    pub loss: Option<f64>,
    pub val_accuracy: f64,
    pub labeled: usize,
    pub unlabeled: usize,
    pub augmented: usize,
}

/// State after a round; round 0 is initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub added: usize,
    pub networks: Vec<NetworkRound>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub phases: Vec<PhaseRecord>,
    pub rounds: Vec<RoundRecord>,
}

impl fmt::Display for RoundRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "round={} added={}", self.round, self.added)?;
        for n in &self.networks {
            write!(f, " {}.loss=", n.network)?;
            match n.loss {
                Some(l) => write!(f, "{l:?}")?,
                None => f.write_str("-")?,
            }
            write!(
                f,
                " {0}.val={1:?} {0}.labeled={2} {0}.unlabeled={3} {0}.augmented={4}",
                n.network, n.val_accuracy, n.labeled, n.unlabeled, n.augmented
            )?;
        }
        Ok(())
    }
}

/// One line per round.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rounds {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_line_format() {
        let r = RoundRecord {
            round: 2,
            added: 3,
            networks: vec![NetworkRound {
                network: Source::Gnn,
                loss: Some(0.25),
                val_accuracy: 0.5,
                labeled: 4,
                unlabeled: 10,
                augmented: 6,
            }],
        };
        assert_eq!(
            r.to_string(),
            "round=2 added=3 gnn.loss=0.25 gnn.val=0.5 gnn.labeled=4 gnn.unlabeled=10 gnn.augmented=6"
        );
    }
}
