use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DietError, DietParams, NluModel, NluModelConfig};
use crate::exec::Execution;
use crate::featurize::MessageFeatures;
use crate::nn::ops;
use crate::nn::{Adam, AdamConfig, Parameters};

/// Examples per gradient chunk. Chunk sums are reduced in index order, so the
/// result does not depend on how chunks are scheduled.
const GRADIENT_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DietExample {
    pub features: MessageFeatures,
    /// Index into the model's intent list.
    pub intent: usize,
    /// One index into the model's tag list per token.
    pub tags: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub intent: f64,
    pub entity: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            intent: 1.0,
            entity: 1.0,
        }
    }
}

/// Mean intent cross-entropy, mean per-token tag cross-entropy, and their
/// weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub intent: f64,
    pub entity: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: NluModel,
    /// Example-weighted mean batch loss per epoch.
    pub loss_curve: Vec<LossBreakdown>,
}

/// Adds one example's weighted gradient to `grads` and returns its intent
/// cross-entropy and summed token cross-entropy.
fn accumulate_example(
    model: &NluModel,
    ex: &DietExample,
    mask: Option<&[f64]>,
    intent_scale: f64,
    token_scale: f64,
    grads: &mut DietParams,
) -> (f64, f64) {
    let d = model.config.embed_dim;
    let n = ex.features.tokens.len();
    let n_tags = model.tags.len();
    let p = &model.params;
    let pass = model.forward_masked(&ex.features, mask);

    let intent_ce = ops::cross_entropy(&pass.intent_logits, ex.intent);
    let mut d_logits = pass.intent_logits.clone();
    ops::softmax(&mut d_logits);
    d_logits[ex.intent] -= 1.0;
    d_logits.iter_mut().for_each(|g| *g *= intent_scale);
    let mut d_projection = vec![0.0; model.config.label_embed_dim];
    for (k, &g) in d_logits.iter().enumerate() {
        ops::axpy(g, p.label_embeddings.row(k), &mut d_projection);
        ops::axpy(g, &pass.sentence_projection, grads.label_embeddings.row_mut(k));
    }
    let d_sentence = ops::linear_backward(
        &pass.hidden[n * d..],
        &p.intent_weight,
        &d_projection,
        &mut grads.intent_weight,
        Some(&mut grads.intent_bias),
    );

    let mut entity_ce = 0.0;
    let mut d_tag_logits = pass.tag_logits.clone();
    for (t, row) in d_tag_logits.chunks_mut(n_tags).enumerate() {
        let gold = ex.tags[t];
        entity_ce += ops::cross_entropy(&pass.tag_logits[t * n_tags..(t + 1) * n_tags], gold);
        ops::softmax(row);
        row[gold] -= 1.0;
        row.iter_mut().for_each(|g| *g *= token_scale);
    }
    let mut d_hidden = ops::linear_backward(
        &pass.hidden[..n * d],
        &p.entity_weight,
        &d_tag_logits,
        &mut grads.entity_weight,
        Some(&mut grads.entity_bias),
    );
    d_hidden.extend_from_slice(&d_sentence);

    let mut d_input = p.encoder.backward(&pass.cache, d_hidden, &mut grads.encoder);
    debug_assert_eq!(d_input.len(), pass.input.len());
    if let Some(mask) = mask {
        d_input.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
    }
    let f = &ex.features;
    let rows = f
        .token_sparse
        .iter()
        .zip(&f.token_dense)
        .chain(std::iter::once((&f.sentence_sparse, &f.sentence_dense)));
    for (r, (sparse, dense)) in rows.enumerate() {
        let dr = &d_input[r * d..(r + 1) * d];
        for &(i, v) in &sparse.entries {
            ops::axpy(v, dr, grads.sparse_projection.row_mut(i));
        }
        for (k, &v) in dense.values.iter().enumerate() {
            if v != 0.0 {
                ops::axpy(v, dr, grads.dense_projection.row_mut(k));
            }
        }
    }
    (intent_ce, entity_ce)
}

/// A batch member with its optional input dropout mask.
type MaskedExample<'a> = (&'a DietExample, Option<Vec<f64>>);

fn batch_gradients(
    model: &NluModel,
    batch: &[MaskedExample<'_>],
    weights: LossWeights,
    exec: Execution,
) -> (LossBreakdown, DietParams) {
    let n_examples = batch.len() as f64;
    let n_tokens: usize = batch.iter().map(|(e, _)| e.tags.len()).sum();
    let intent_scale = weights.intent / n_examples;
    let token_scale = if n_tokens == 0 { 0.0 } else { weights.entity / n_tokens as f64 };
    let partials = exec.map_chunks(batch, GRADIENT_CHUNK, |chunk| {
        let mut grads = model.params.zeros_like();
        let mut sums = (0.0, 0.0);
        for (ex, mask) in chunk {
            let (i, e) = accumulate_example(model, ex, mask.as_deref(), intent_scale, token_scale, &mut grads);
            sums.0 += i;
            sums.1 += e;
        }
        (sums, grads)
    });
    let mut parts = partials.into_iter();
    let ((mut intent_sum, mut entity_sum), mut grads) = parts.next().expect("batch is non-empty");
    for ((i, e), g) in parts {
        intent_sum += i;
        entity_sum += e;
        grads.add_assign(&g);
    }
    let intent = intent_sum / n_examples;
    let entity = if n_tokens == 0 { 0.0 } else { entity_sum / n_tokens as f64 };
    (
        LossBreakdown {
            intent,
            entity,
            total: weights.intent * intent + weights.entity * entity,
        },
        grads,
    )
}

/// Loss and analytic gradients with the two terms weighted separately.
pub fn loss_and_gradients_weighted(
    model: &NluModel,
    batch: &[DietExample],
    weights: LossWeights,
) -> Result<(LossBreakdown, DietParams), DietError> {
    if batch.is_empty() {
        return Err(DietError::EmptyTrainingSet);
    }
    let refs: Vec<MaskedExample<'_>> = batch.iter().map(|e| (e, None)).collect();
    let (loss, grads) = batch_gradients(model, &refs, weights, Execution::Sequential);
    if !loss.total.is_finite() {
        return Err(DietError::NonFiniteLoss { epoch: 0 });
    }
    Ok((loss, grads))
}

pub fn loss_and_gradients(model: &NluModel, batch: &[DietExample]) -> Result<(LossBreakdown, DietParams), DietError> {
    loss_and_gradients_weighted(model, batch, LossWeights::default())
}

/// Batch loss without gradients.
pub(crate) fn batch_loss(model: &NluModel, batch: &[DietExample], weights: LossWeights) -> f64 {
    let n_tokens: usize = batch.iter().map(|e| e.tags.len()).sum();
    let n_tags = model.tags.len();
    let (mut intent, mut entity) = (0.0, 0.0);
    for ex in batch {
        let pass = model.forward(&ex.features);
        intent += ops::cross_entropy(&pass.intent_logits, ex.intent);
        for (t, &gold) in ex.tags.iter().enumerate() {
            entity += ops::cross_entropy(&pass.tag_logits[t * n_tags..(t + 1) * n_tags], gold);
        }
    }
    let entity = if n_tokens == 0 { 0.0 } else { entity / n_tokens as f64 };
    weights.intent * intent / batch.len() as f64 + weights.entity * entity
}

/// Seeded-init, seeded-shuffle Adam training on the joint loss.
pub fn train(
    examples: &[DietExample],
    intents: Vec<String>,
    tags: Vec<String>,
    config: NluModelConfig,
    exec: Execution,
) -> Result<TrainedModel, DietError> {
    let first = examples.first().ok_or(DietError::EmptyTrainingSet)?;
    if intents.is_empty() {
        return Err(DietError::EmptyTrainingSet);
    }
    let (sparse_dim, dense_dim) = (first.features.sparse_dim(), first.features.dense_dim());
    let mut model = NluModel::new(config.clone(), intents, tags, sparse_dim, dense_dim)?;
    for ex in examples {
        model.check_dims(&ex.features)?;
        assert!(ex.intent < model.intents.len(), "intent index out of range");
        assert_eq!(ex.tags.len(), ex.features.tokens.len(), "one tag per token");
    }
    let mut adam = Adam::new(AdamConfig::with_learning_rate(config.learning_rate));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xd409_d409);
    let keep = 1.0 - config.drop_rate;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let n = examples.len() as f64;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = LossBreakdown::default();
        for batch_idx in order.chunks(config.batch_size) {
            // Masks are drawn sequentially so they do not depend on scheduling.
            let batch: Vec<MaskedExample<'_>> = batch_idx
                .iter()
                .map(|&i| {
                    let ex = &examples[i];
                    let mask = (config.drop_rate > 0.0).then(|| {
                        let len = (ex.features.tokens.len() + 1) * config.embed_dim;
                        (0..len)
                            .map(|_| if dropout_rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect()
                    });
                    (ex, mask)
                })
                .collect();
            let (loss, mut grads) = batch_gradients(&model, &batch, LossWeights::default(), exec);
            if !loss.total.is_finite() || !grads.all_finite() {
                return Err(DietError::NonFiniteLoss { epoch });
            }
            if config.weight_decay > 0.0 {
                let mut decay = model.params.clone();
                decay.scale(config.weight_decay);
                grads.add_assign(&decay);
            }
            let w = batch.len() as f64 / n;
            epoch_loss.intent += w * loss.intent;
            epoch_loss.entity += w * loss.entity;
            epoch_loss.total += w * loss.total;
            adam.step(&mut model.params, &grads);
        }
        loss_curve.push(epoch_loss);
    }
    Ok(TrainedModel { model, loss_curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{assemble_features, SparseBlock, SparseVector};
    use crate::tokenize::whitespace_tokenize;

    fn example(word_feature: usize, intent: usize, dim: usize) -> DietExample {
        let tokens = whitespace_tokenize("w");
        let v = SparseVector::from_pairs(dim, vec![(word_feature, 1.0)]);
        let features = assemble_features(
            tokens,
            &[SparseBlock {
                tokens: vec![v.clone()],
                sentence: v,
            }],
            &[],
        )
        .unwrap();
        DietExample {
            features,
            intent,
            tags: vec![0],
        }
    }

    fn separable() -> Vec<DietExample> {
        (0..10).map(|i| example(i, i / 5, 10)).collect()
    }

    fn small_config(epochs: usize) -> NluModelConfig {
        NluModelConfig {
            embed_dim: 8,
            feedforward_dim: 16,
            transformer_layers: 2,
            attention_heads: 2,
            label_embed_dim: 4,
            epochs,
            learning_rate: 0.05,
            batch_size: 4,
            drop_rate: 0.0,
            weight_decay: 0.0,
            seed: 42,
        }
    }

    fn names(n: usize, prefix: &str) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn fits_separable_intents() {
        let data = separable();
        let trained = train(&data, names(2, "i"), vec!["O".into()], small_config(60), Execution::default()).unwrap();
        for ex in &data {
            let p = trained.model.predict(&ex.features).unwrap();
            assert_eq!(p.ranking.top().unwrap().0, format!("i{}", ex.intent));
        }
        let curve = &trained.loss_curve;
        assert!(curve.last().unwrap().total < curve[0].total);
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let data = separable();
        let a = train(&data, names(2, "i"), vec!["O".into()], small_config(5), Execution::Sequential).unwrap();
        let b = train(&data, names(2, "i"), vec!["O".into()], small_config(5), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initial_intent_loss_is_log_k() {
        // Tiny weights make every logit nearly equal.
        let mut m = NluModel::new(small_config(1), names(4, "i"), vec!["O".into()], 10, 0).unwrap();
        m.params.label_embeddings.data.iter_mut().for_each(|v| *v *= 1e-6);
        let batch: Vec<DietExample> = (0..8).map(|i| example(i, i % 4, 10)).collect();
        let (loss, _) = loss_and_gradients(&m, &batch).unwrap();
        assert!((loss.intent - 4f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn duplicated_batch_has_same_mean_loss() {
        let m = NluModel::new(small_config(1), names(2, "i"), vec!["O".into(), "B-x".into()], 10, 0).unwrap();
        let batch = vec![example(1, 0, 10), example(7, 1, 10)];
        let doubled: Vec<DietExample> = batch.iter().chain(&batch).cloned().collect();
        let (a, _) = loss_and_gradients(&m, &batch).unwrap();
        let (b, _) = loss_and_gradients(&m, &doubled).unwrap();
        assert!((a.total - b.total).abs() < 1e-12);
    }

    #[test]
    fn intent_only_loss_leaves_entity_head_untouched() {
        let m = NluModel::new(small_config(1), names(2, "i"), vec!["O".into(), "B-x".into()], 10, 0).unwrap();
        let batch = vec![example(1, 0, 10), example(7, 1, 10)];
        let (_, g) = loss_and_gradients_weighted(&m, &batch, LossWeights { intent: 1.0, entity: 0.0 }).unwrap();
        assert!(g.entity_weight.data.iter().chain(&g.entity_bias.data).all(|&v| v == 0.0));
        assert!(g.label_embeddings.data.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn empty_training_set() {
        assert_eq!(
            train(&[], names(1, "i"), vec!["O".into()], small_config(1), Execution::Sequential).unwrap_err(),
            DietError::EmptyTrainingSet
        );
    }

    #[test]
    fn divergence_reports_epoch() {
        let data = separable();
        let mut c = small_config(3);
        c.learning_rate = 1e300;
        assert!(matches!(
            train(&data, names(2, "i"), vec!["O".into()], c, Execution::Sequential),
            Err(DietError::NonFiniteLoss { .. })
        ));
    }
}
