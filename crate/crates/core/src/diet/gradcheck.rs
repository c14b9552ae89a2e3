use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::train::{batch_loss, loss_and_gradients_weighted, DietExample, LossWeights};
use super::{DietError, NluModel};
use crate::nn::Parameters;

/// Magnitudes below this are compared absolutely rather than relatively.
const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCheck {
    pub block: String,
    pub samples: usize,
    pub max_relative_error: f64,
}

/// Encoder tensors group by layer; everything else by its first name
/// component.
fn block_of(name: &str) -> String {
    let parts: Vec<&str> = name.split('.').collect();
    if parts[0] == "encoder" && parts.len() > 2 {
        format!("{}.{}", parts[0], parts[1])
    } else {
        parts[0].to_string()
    }
}

/// Compares analytic gradients with central differences on up to
/// `samples_per_block` random coordinates of every parameter block.
pub fn gradient_check(
    model: &NluModel,
    batch: &[DietExample],
    samples_per_block: usize,
    step: f64,
    seed: u64,
) -> Result<Vec<BlockCheck>, DietError> {
    let weights = LossWeights::default();
    let (_, grads) = loss_and_gradients_weighted(model, batch, weights)?;
    let grad_tensors = grads.tensors();

    let mut blocks: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (t, (name, tensor)) in model.params.tensors().iter().enumerate() {
        let coords = blocks.entry(block_of(name)).or_default();
        coords.extend((0..tensor.len()).map(|j| (t, j)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut report = Vec::new();
    for (block, coords) in blocks {
        if coords.is_empty() {
            continue;
        }
        let picked: Vec<(usize, usize)> = if coords.len() <= samples_per_block {
            coords.clone()
        } else {
            sample(&mut rng, coords.len(), samples_per_block)
                .into_iter()
                .map(|i| coords[i])
                .collect()
        };
        let mut worst: f64 = 0.0;
        for &(t, j) in &picked {
            let original = probe.params.tensors()[t].1.data[j];
            probe.params.tensors_mut()[t].data[j] = original + step;
            let plus = batch_loss(&probe, batch, weights);
            probe.params.tensors_mut()[t].data[j] = original - step;
            let minus = batch_loss(&probe, batch, weights);
            probe.params.tensors_mut()[t].data[j] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let analytic = grad_tensors[t].1.data[j];
            let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            worst = worst.max((analytic - numeric).abs() / scale);
        }
        report.push(BlockCheck {
            block,
            samples: picked.len(),
            max_relative_error: worst,
        });
    }
    Ok(report)
}
