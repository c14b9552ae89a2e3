use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{CorpusError, TrainingSet};

/// Number of held-out examples for an intent with `n` examples.
pub(crate) fn test_count(n: usize, fraction: f64) -> usize {
    // The epsilon keeps products such as 0.29 * 100 from flooring to 28.
    ((n as f64 * fraction + 1e-9).floor() as usize).max(1)
}

/// Stratified split: for every intent, `max(1, floor(n * fraction))`
/// examples chosen by a seeded shuffle go to the test set. Both halves keep
/// the original example order and the parent's intent/entity/synonym lists.
pub fn split_train_test(
    ts: &TrainingSet,
    test_fraction: f64,
    seed: u64,
) -> Result<(TrainingSet, TrainingSet), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; ts.examples.len()];
    for intent in &ts.intents {
        let mut members: Vec<usize> = ts
            .examples
            .iter()
            .enumerate()
            .filter(|(_, e)| &e.intent == intent)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(CorpusError::IntentTooSmall {
                intent: intent.clone(),
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        for &i in &members[..test_count(members.len(), test_fraction)] {
            is_test[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (example, held_out) in ts.examples.iter().zip(is_test) {
        if held_out {
            test.push(example.clone());
        } else {
            train.push(example.clone());
        }
    }
    let wrap = |examples| TrainingSet {
        examples,
        intents: ts.intents.clone(),
        entity_types: ts.entity_types.clone(),
        synonyms: ts.synonyms.clone(),
    };
    Ok((wrap(train), wrap(test)))
}

/// Content hash identifying a split; equal hashes mean identical halves.
pub fn split_hash(train: &TrainingSet, test: &TrainingSet) -> String {
    let mut hasher = Sha256::new();
    for (tag, set) in [("train", train), ("test", test)] {
        hasher.update(tag.as_bytes());
        hasher.update([0u8]);
        for ex in &set.examples {
            hasher.update(ex.intent.as_bytes());
            hasher.update(b"\t");
            hasher.update(ex.markup().as_bytes());
            hasher.update(b"\n");
        }
    }
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TrainingExample;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn set(sizes: &[usize]) -> TrainingSet {
        let mut examples = Vec::new();
        for (i, &n) in sizes.iter().enumerate() {
            for j in 0..n {
                examples.push(TrainingExample {
                    text: format!("intent{i} example{j}"),
                    intent: format!("intent{i:02}"),
                    entities: vec![],
                });
            }
        }
        TrainingSet::from_examples(examples, BTreeMap::new())
    }

    #[test]
    fn five_examples_one_held_out() {
        let (train, test) = split_train_test(&set(&[5]), 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (4, 1));
    }

    #[test]
    fn deterministic() {
        let ts = set(&[5, 7, 9]);
        assert_eq!(split_train_test(&ts, 0.2, 9).unwrap(), split_train_test(&ts, 0.2, 9).unwrap());
        assert_ne!(split_train_test(&ts, 0.2, 9).unwrap(), split_train_test(&ts, 0.2, 10).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            split_train_test(&set(&[3, 1]), 0.2, 0),
            Err(CorpusError::IntentTooSmall { count: 1, .. })
        ));
        assert!(matches!(split_train_test(&set(&[3]), 1.0, 0), Err(CorpusError::InvalidFraction(_))));
    }

    proptest! {
        #[test]
        fn stratified_partition(sizes in proptest::collection::vec(2usize..30, 1..8), fraction in 0.05f64..0.95, seed: u64) {
            let ts = set(&sizes);
            let (train, test) = split_train_test(&ts, fraction, seed).unwrap();
            let mut all: Vec<_> = train.examples.iter().chain(&test.examples).cloned().collect();
            let mut orig = ts.examples.clone();
            all.sort_by(|a, b| a.text.cmp(&b.text));
            orig.sort_by(|a, b| a.text.cmp(&b.text));
            prop_assert_eq!(all, orig);
            for (i, &n) in sizes.iter().enumerate() {
                let name = format!("intent{i:02}");
                let held = test.examples_for(&name).count();
                let expected = ((n as f64 * fraction).floor() as usize).max(1);
                // Allow the epsilon guard to differ only when the product is
                // within 1e-9 of an integer.
                let near = (n as f64 * fraction - (n as f64 * fraction).round()).abs() < 1e-9;
                prop_assert!(held == expected || near);
                prop_assert!(train.examples_for(&name).count() >= 1);
            }
        }
    }
}
