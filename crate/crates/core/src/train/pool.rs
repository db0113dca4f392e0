use crate::error::{Error, Result};

/// Labeled, unlabeled and promoted training graphs of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    labeled: Vec<(usize, usize)>,
    unlabeled: Vec<usize>,
    augmented: Vec<(usize, usize)>,
    total: usize,
}

impl PoolState {
    /// `labeled` holds `(index, true label)`; `unlabeled` the remaining
    /// training indices.
    pub fn new(labeled: Vec<(usize, usize)>, mut unlabeled: Vec<usize>) -> Result<Self> {
        unlabeled.sort_unstable();
        let pool = Self {
            total: labeled.len() + unlabeled.len(),
            labeled,
            unlabeled,
            augmented: Vec::new(),
        };
        pool.check()?;
        Ok(pool)
    }

    pub fn labeled(&self) -> &[(usize, usize)] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn augmented(&self) -> &[(usize, usize)] {
        &self.augmented
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Original labels followed by promoted ones.
    pub fn training_set(&self) -> Vec<(usize, usize)> {
        self.labeled.iter().chain(&self.augmented).copied().collect()
    }

    /// Move `delta` out of the unlabeled pool into the augmented set.
    /// Returns how many graphs moved.
    pub fn promote(&mut self, delta: &[(usize, usize)]) -> Result<usize> {
        let mut moving: Vec<usize> = delta.iter().map(|&(i, _)| i).collect();
        moving.sort_unstable();
        for (k, &index) in moving.iter().enumerate() {
            if self.unlabeled.binary_search(&index).is_err() || (k > 0 && moving[k - 1] == index) {
                return Err(Error::Training(format!("graph {index} is not in the unlabeled pool")));
            }
        }
        self.unlabeled.retain(|i| moving.binary_search(i).is_err());
        self.augmented.extend_from_slice(delta);
        Ok(delta.len())
    }

    /// Sizes add up to the starting total and no graph sits in two places.
    pub fn check(&self) -> Result<()> {
        let sizes = self.labeled.len() + self.unlabeled.len() + self.augmented.len();
        if sizes != self.total {
            return Err(Error::Training(format!(
                "pool sizes sum to {sizes}, expected {}",
                self.total
            )));
        }
        let mut all: Vec<usize> = self
            .labeled
            .iter()
            .chain(&self.augmented)
            .map(|&(i, _)| i)
            .chain(self.unlabeled.iter().copied())
            .collect();
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Training(format!("graph {} appears in two pools", w[0])));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotion_conserves_graphs() {
        let mut p = PoolState::new(vec![(0, 1), (3, 0)], vec![5, 1, 2, 4]).unwrap();
        assert_eq!(p.unlabeled(), &[1, 2, 4, 5]);
        assert_eq!(p.promote(&[(2, 1), (5, 0)]).unwrap(), 2);
        p.check().unwrap();
        assert_eq!(p.unlabeled(), &[1, 4]);
        assert_eq!(p.training_set(), vec![(0, 1), (3, 0), (2, 1), (5, 0)]);
        assert_eq!(p.total(), 6);
    }

    #[test]
    fn labeled_graphs_cannot_be_relabeled() {
        let mut p = PoolState::new(vec![(0, 1)], vec![1, 2]).unwrap();
        assert!(p.promote(&[(0, 0)]).is_err());
        assert!(p.promote(&[(1, 0), (1, 1)]).is_err());
    }

    #[test]
    fn overlapping_start_is_rejected() {
        assert!(PoolState::new(vec![(1, 0)], vec![1, 2]).is_err());
    }
}
