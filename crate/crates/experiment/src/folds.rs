use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub folds: Vec<Fold>,
}

fn check_counts(n: usize, k: usize) -> Result<(), ExperimentError> {
    if k < 2 {
        return Err(ExperimentError::Folds(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(ExperimentError::Folds(format!("{n} instances cannot fill {k} folds")));
    }
    Ok(())
}

/// Turns per-fold eval lists into folds, each eval list sorted and the
/// train list holding every other index in ascending order.
fn assemble(n: usize, k: usize, seed: u64, stratified: bool, mut evals: Vec<Vec<usize>>) -> FoldSplit {
    let mut owner = vec![0; n];
    for (j, e) in evals.iter_mut().enumerate() {
        e.sort_unstable();
        for &i in e.iter() {
            owner[i] = j;
        }
    }
    let folds = evals
        .into_iter()
        .enumerate()
        .map(|(j, eval)| Fold {
            train: (0..n).filter(|&i| owner[i] != j).collect(),
            eval,
        })
        .collect();
    FoldSplit {
        k,
        seed,
        stratified,
        folds,
    }
}

/// Seeded shuffle of `0..n`, then contiguous eval blocks; the first `n % k`
/// folds take one extra instance.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldSplit, ExperimentError> {
    check_counts(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut evals = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let size = n / k + usize::from(j < n % k);
        evals.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(assemble(n, k, seed, false, evals))
}

/// Like [`kfold_split`], but each label's instances are spread evenly over
/// the folds: labels are shuffled within themselves, laid end to end in
/// label order and dealt round-robin.
pub fn stratified_kfold_split<L: Ord>(labels: &[L], k: usize, seed: u64) -> Result<FoldSplit, ExperimentError> {
    let n = labels.len();
    check_counts(n, k)?;
    let mut groups: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evals = vec![Vec::new(); k];
    let mut dealt = 0;
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            evals[dealt % k].push(i);
            dealt += 1;
        }
    }
    Ok(assemble(n, k, seed, true, evals))
}

impl FoldSplit {
    /// Checks that the eval sets partition `0..n`, differ in size by at most
    /// one, and that each train set is the complement of its eval set.
    pub fn validate(&self, n: usize) -> Result<(), ExperimentError> {
        if self.folds.len() != self.k {
            return Err(ExperimentError::Folds(format!("{} folds listed, k = {}", self.folds.len(), self.k)));
        }
        let mut seen = vec![false; n];
        for (j, f) in self.folds.iter().enumerate() {
            for &i in &f.eval {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(ExperimentError::Folds(format!("fold {j}: index {i} out of range or repeated")));
                }
            }
            if f.train.len() + f.eval.len() != n || f.train.iter().any(|i| f.eval.binary_search(i).is_ok()) {
                return Err(ExperimentError::Folds(format!("fold {j}: train set is not the complement of eval")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ExperimentError::Folds("eval sets do not cover every index".into()));
        }
        let sizes = self.folds.iter().map(|f| f.eval.len());
        let (lo, hi) = (sizes.clone().min().unwrap_or(0), sizes.max().unwrap_or(0));
        if hi - lo > 1 {
            return Err(ExperimentError::Folds(format!("eval sizes range from {lo} to {hi}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_dataset_gives_2400_per_fold() {
        let s = kfold_split(12000, 5, 0).unwrap();
        assert!(s.folds.iter().all(|f| f.eval.len() == 2400 && f.train.len() == 9600));
        s.validate(12000).unwrap();
    }

    #[test]
    fn ten_into_five() {
        let s = kfold_split(10, 5, 3).unwrap();
        assert!(s.folds.iter().all(|f| f.eval.len() == 2));
    }

    #[test]
    fn too_few_instances() {
        assert!(kfold_split(4, 5, 0).is_err());
        assert!(kfold_split(4, 1, 0).is_err());
        assert!(stratified_kfold_split(&[0, 1], 3, 0).is_err());
    }

    #[test]
    fn seed_fixes_the_split() {
        assert_eq!(kfold_split(50, 5, 9).unwrap(), kfold_split(50, 5, 9).unwrap());
        assert_ne!(kfold_split(50, 5, 9).unwrap(), kfold_split(50, 5, 10).unwrap());
    }

    #[test]
    fn stratified_folds_balance_labels() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 4) as u8).collect();
        let s = stratified_kfold_split(&labels, 5, 1).unwrap();
        s.validate(40).unwrap();
        for f in &s.folds {
            for l in 0..4 {
                assert_eq!(f.eval.iter().filter(|&&i| labels[i] == l).count(), 2);
            }
        }
    }

    #[test]
    fn validate_catches_overlap() {
        let mut s = kfold_split(10, 5, 0).unwrap();
        s.folds[1].eval[0] = s.folds[0].eval[0];
        assert!(s.validate(10).is_err());
    }
}
