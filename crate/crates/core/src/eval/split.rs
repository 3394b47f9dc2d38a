use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::Label;

pub const MAX_SPLIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// SplitMix64 finalizer over `(seed, a, b)`; used to give every trial and
/// purpose its own independent stream.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn test_size(n: usize, test_fraction: f64) -> usize {
    (n as f64 * test_fraction + 1e-9).floor() as usize
}

/// Random train/test partitions, one per trial, deterministic from `seed`.
///
/// Test sets are uniform samples without replacement unless `stratify` is
/// set. A draw whose training part misses a class is redrawn.
pub fn split_trials(
    labels: &[Label],
    test_fraction: f64,
    trials: usize,
    seed: u64,
    stratify: bool,
) -> Result<Vec<Split>> {
    let n = labels.len();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n_test = test_size(n, test_fraction);
    if n_test < 1 || n_test + 2 > n {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} of {n} instances gives a degenerate test size {n_test}"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    (0..trials)
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, trial as u64, 0));
            for attempt in 0..MAX_SPLIT_ATTEMPTS {
                let split = if stratify {
                    stratified_draw(labels, n_test, &mut rng)
                } else {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.shuffle(&mut rng);
                    partition(n, &order[..n_test])
                };
                let has = |l| split.train.iter().any(|&i| labels[i] == l);
                if has(Label::Asd) && has(Label::Nt) {
                    return Ok(split);
                }
                log::warn!(
                    "trial {trial}: training split misses a class, redrawing (attempt {})",
                    attempt + 1
                );
            }
            Err(Error::invalid(format!(
                "trial {trial}: no split with both classes in training after {MAX_SPLIT_ATTEMPTS} attempts"
            )))
        })
        .collect()
}

fn partition(n: usize, test: &[usize]) -> Split {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    let mut test: Vec<usize> = test.to_vec();
    test.sort_unstable();
    Split {
        train: (0..n).filter(|&i| !in_test[i]).collect(),
        test,
    }
}

// Test quota per class proportional to its size (largest remainder).
fn stratified_draw(labels: &[Label], n_test: usize, rng: &mut ChaCha8Rng) -> Split {
    let n = labels.len();
    let mut members: Vec<Vec<usize>> = [Label::Asd, Label::Nt]
        .iter()
        .map(|&c| (0..n).filter(|&i| labels[i] == c).collect())
        .collect();
    let exact: Vec<f64> = members
        .iter()
        .map(|m| m.len() as f64 * n_test as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    if quota.iter().sum::<usize>() < n_test {
        let k = if exact[0].fract() >= exact[1].fract() { 0 } else { 1 };
        quota[k] += 1;
    }
    let mut test = Vec::with_capacity(n_test);
    for (m, q) in members.iter_mut().zip(quota) {
        m.shuffle(rng);
        test.extend_from_slice(&m[..q.min(m.len())]);
    }
    partition(n, &test)
}

/// One split per instance, holding that instance out.
pub fn leave_one_out(labels: &[Label]) -> Result<Vec<Split>> {
    let n = labels.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "leave-one-out needs at least 3 instances, got {n}"
        )));
    }
    (0..n)
        .map(|i| {
            let split = partition(n, &[i]);
            let has = |l| split.train.iter().any(|&j| labels[j] == l);
            if has(Label::Asd) && has(Label::Nt) {
                Ok(split)
            } else {
                Err(Error::invalid(format!(
                    "holding out instance {i} leaves a single class"
                )))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<Label> {
        (0..n)
            .map(|i| if i % 2 == 0 { Label::Asd } else { Label::Nt })
            .collect()
    }

    #[test]
    fn sizes() {
        let s = split_trials(&labels(10), 0.2, 3, 1, false).unwrap();
        assert!(s.iter().all(|s| s.test.len() == 2 && s.train.len() == 8));
        assert_eq!(test_size(452, 0.05), 22);
        assert_eq!(test_size(100, 0.29), 29);
    }

    #[test]
    fn deterministic_and_disjoint() {
        let a = split_trials(&labels(30), 0.3, 5, 9, false).unwrap();
        assert_eq!(a, split_trials(&labels(30), 0.3, 5, 9, false).unwrap());
        assert_ne!(a, split_trials(&labels(30), 0.3, 5, 10, false).unwrap());
        for s in &a {
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..30).collect::<Vec<_>>());
        }
    }

    #[test]
    fn degenerate_sizes_error() {
        assert!(split_trials(&labels(10), 0.05, 1, 0, false).is_err());
        assert!(split_trials(&labels(10), 0.95, 1, 0, false).is_err());
        assert!(split_trials(&labels(10), 1.0, 1, 0, false).is_err());
        assert!(split_trials(&labels(10), 0.2, 0, 0, false).is_err());
    }

    #[test]
    fn stratified_quota() {
        let y: Vec<Label> = (0..40).map(|i| if i < 10 { Label::Asd } else { Label::Nt }).collect();
        for s in split_trials(&y, 0.2, 4, 3, true).unwrap() {
            let asd = s.test.iter().filter(|&&i| y[i] == Label::Asd).count();
            assert_eq!((asd, s.test.len()), (2, 8));
        }
    }

    #[test]
    fn impossible_class_balance_errors_after_retries() {
        // Only one ASD subject: any split putting it in test leaves a single class,
        // but there are valid splits, so this must succeed.
        let mut y = vec![Label::Nt; 10];
        y[0] = Label::Asd;
        for s in split_trials(&y, 0.5, 5, 4, false).unwrap() {
            assert!(s.train.contains(&0));
        }
    }

    #[test]
    fn loo() {
        let s = leave_one_out(&labels(4)).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[2].test, vec![2]);
        assert!(leave_one_out(&labels(2)).is_err());
        assert!(leave_one_out(&[Label::Asd, Label::Nt, Label::Nt]).is_err());
    }
}
