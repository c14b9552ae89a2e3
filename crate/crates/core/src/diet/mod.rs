//! Joint intent classifier and BIO entity tagger over a shared transformer
//! encoder. Intent scores are dot products between a projected sentence
//! embedding and one learned embedding per intent.

mod bio;
mod gradcheck;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EntitySpan;
use crate::featurize::MessageFeatures;
use crate::nn::ops;
use crate::nn::{prefixed, Encoder, EncoderCache, EncoderConfig, Parameters, Tensor};

pub use bio::{bio_tag_set, decode_bio, encode_bio, OUTSIDE};
pub use gradcheck::{gradient_check, BlockCheck};
pub use train::{loss_and_gradients, loss_and_gradients_weighted, train, DietExample, LossBreakdown, LossWeights, TrainedModel};

pub const INIT_BOUND: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DietError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("{what} dimension is {found}, model expects {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NluModelConfig {
    pub embed_dim: usize,
    pub feedforward_dim: usize,
    pub transformer_layers: usize,
    pub attention_heads: usize,
    pub label_embed_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Training-time dropout on the projected input rows; 0 disables it.
    pub drop_rate: f64,
    /// L2 penalty coefficient, applied to the gradient only; 0 disables it.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for NluModelConfig {
    fn default() -> Self {
        NluModelConfig {
            embed_dim: 128,
            feedforward_dim: 256,
            transformer_layers: 2,
            attention_heads: 4,
            label_embed_dim: 20,
            epochs: 500,
            learning_rate: 0.05,
            batch_size: 32,
            drop_rate: 0.0,
            weight_decay: 0.0,
            seed: 42,
        }
    }
}

impl NluModelConfig {
    pub fn validate(&self) -> Result<(), DietError> {
        let bad = |m: &str| Err(DietError::InvalidConfig(m.to_string()));
        if self.embed_dim == 0 || self.attention_heads == 0 || !self.embed_dim.is_multiple_of(self.attention_heads) {
            return bad("embed_dim must be a positive multiple of attention_heads");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.drop_rate) {
            return bad("drop_rate must lie in [0, 1)");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        if self.batch_size == 0 || self.label_embed_dim == 0 || self.feedforward_dim == 0 {
            return bad("batch_size, label_embed_dim and feedforward_dim must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DietParams {
    pub sparse_projection: Tensor,
    pub dense_projection: Tensor,
    pub encoder: Encoder,
    pub intent_weight: Tensor,
    pub intent_bias: Tensor,
    pub label_embeddings: Tensor,
    pub entity_weight: Tensor,
    pub entity_bias: Tensor,
}

impl Parameters for DietParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("sparse_projection".to_string(), &self.sparse_projection),
            ("dense_projection".to_string(), &self.dense_projection),
        ];
        out.extend(prefixed("encoder", self.encoder.tensors()));
        out.extend([
            ("intent.weight".to_string(), &self.intent_weight),
            ("intent.bias".to_string(), &self.intent_bias),
            ("intent.label_embeddings".to_string(), &self.label_embeddings),
            ("entity.weight".to_string(), &self.entity_weight),
            ("entity.bias".to_string(), &self.entity_bias),
        ]);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.sparse_projection, &mut self.dense_projection];
        out.extend(self.encoder.tensors_mut());
        out.extend([
            &mut self.intent_weight,
            &mut self.intent_bias,
            &mut self.label_embeddings,
            &mut self.entity_weight,
            &mut self.entity_bias,
        ]);
        out
    }
}

/// A trained classifier. The intent and tag orders are fixed at training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NluModel {
    pub config: NluModelConfig,
    pub intents: Vec<String>,
    pub tags: Vec<String>,
    pub sparse_dim: usize,
    pub dense_dim: usize,
    pub params: DietParams,
}

/// Intents with confidences, sorted descending; ties keep training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRanking {
    pub ranking: Vec<(String, f64)>,
}

impl IntentRanking {
    pub fn from_logits(intents: &[String], logits: &[f64]) -> Self {
        let mut probs = logits.to_vec();
        ops::softmax(&mut probs);
        let mut ranking: Vec<(String, f64)> = intents.iter().cloned().zip(probs).collect();
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1));
        IntentRanking { ranking }
    }

    pub fn top(&self) -> Option<(&str, f64)> {
        self.ranking.first().map(|(n, c)| (n.as_str(), *c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub ranking: IntentRanking,
    pub tags: Vec<String>,
    pub entities: Vec<EntitySpan>,
}

/// Everything the backward pass needs from one forward pass.
pub(crate) struct ForwardPass {
    pub input: Vec<f64>,
    pub cache: EncoderCache,
    pub hidden: Vec<f64>,
    pub sentence_projection: Vec<f64>,
    pub intent_logits: Vec<f64>,
    /// `tokens x tags`
    pub tag_logits: Vec<f64>,
}

impl NluModel {
    pub fn new(
        config: NluModelConfig,
        intents: Vec<String>,
        tags: Vec<String>,
        sparse_dim: usize,
        dense_dim: usize,
    ) -> Result<Self, DietError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.embed_dim;
        let b = INIT_BOUND;
        let params = DietParams {
            sparse_projection: Tensor::uniform(&[sparse_dim, d], b, &mut rng),
            dense_projection: Tensor::uniform(&[dense_dim, d], b, &mut rng),
            encoder: Encoder::new(
                EncoderConfig {
                    dim: d,
                    layers: config.transformer_layers,
                    heads: config.attention_heads,
                    ff_dim: config.feedforward_dim,
                },
                b,
                &mut rng,
            ),
            intent_weight: Tensor::uniform(&[d, config.label_embed_dim], b, &mut rng),
            intent_bias: Tensor::zeros(&[config.label_embed_dim]),
            label_embeddings: Tensor::uniform(&[intents.len(), config.label_embed_dim], b, &mut rng),
            entity_weight: Tensor::uniform(&[d, tags.len()], b, &mut rng),
            entity_bias: Tensor::zeros(&[tags.len()]),
        };
        Ok(NluModel {
            config,
            intents,
            tags,
            sparse_dim,
            dense_dim,
            params,
        })
    }

    fn check_dims(&self, f: &MessageFeatures) -> Result<(), DietError> {
        if f.sparse_dim() != self.sparse_dim {
            return Err(DietError::DimensionMismatch {
                what: "sparse feature",
                expected: self.sparse_dim,
                found: f.sparse_dim(),
            });
        }
        if f.dense_dim() != self.dense_dim {
            return Err(DietError::DimensionMismatch {
                what: "dense feature",
                expected: self.dense_dim,
                found: f.dense_dim(),
            });
        }
        Ok(())
    }

    /// Projected input rows: one per token, then the sentence slot.
    pub(crate) fn project_inputs(&self, f: &MessageFeatures) -> Vec<f64> {
        let d = self.config.embed_dim;
        let n = f.tokens.len();
        let mut x = vec![0.0; (n + 1) * d];
        let rows = f
            .token_sparse
            .iter()
            .zip(&f.token_dense)
            .chain(std::iter::once((&f.sentence_sparse, &f.sentence_dense)));
        for (r, (sparse, dense)) in rows.enumerate() {
            let out = &mut x[r * d..(r + 1) * d];
            for &(i, v) in &sparse.entries {
                ops::axpy(v, self.params.sparse_projection.row(i), out);
            }
            for (k, &v) in dense.values.iter().enumerate() {
                if v != 0.0 {
                    ops::axpy(v, self.params.dense_projection.row(k), out);
                }
            }
        }
        x
    }

    pub(crate) fn forward(&self, f: &MessageFeatures) -> ForwardPass {
        self.forward_masked(f, None)
    }

    /// Forward pass with an optional elementwise mask on the projected input.
    pub(crate) fn forward_masked(&self, f: &MessageFeatures, mask: Option<&[f64]>) -> ForwardPass {
        let d = self.config.embed_dim;
        let n = f.tokens.len();
        let mut input = self.project_inputs(f);
        if let Some(mask) = mask {
            input.iter_mut().zip(mask).for_each(|(x, m)| *x *= m);
        }
        let (hidden, cache) = self.params.encoder.forward(input.clone());
        let p = &self.params;
        let sentence_projection = ops::linear(&hidden[n * d..], &p.intent_weight, Some(&p.intent_bias));
        let intent_logits = (0..self.intents.len())
            .map(|k| ops::dot(&sentence_projection, p.label_embeddings.row(k)))
            .collect();
        let tag_logits = ops::linear(&hidden[..n * d], &p.entity_weight, Some(&p.entity_bias));
        ForwardPass {
            input,
            cache,
            hidden,
            sentence_projection,
            intent_logits,
            tag_logits,
        }
    }

    /// Per-token and sentence embeddings after the encoder.
    pub fn encode(&self, f: &MessageFeatures) -> Result<(Vec<Vec<f64>>, Vec<f64>), DietError> {
        self.check_dims(f)?;
        let d = self.config.embed_dim;
        let (hidden, _) = self.params.encoder.forward(self.project_inputs(f));
        let mut rows: Vec<Vec<f64>> = hidden.chunks(d).map(<[f64]>::to_vec).collect();
        let sentence = rows.pop().expect("sentence slot is always present");
        Ok((rows, sentence))
    }

    pub fn predict(&self, f: &MessageFeatures) -> Result<Prediction, DietError> {
        self.check_dims(f)?;
        let pass = self.forward(f);
        let ranking = IntentRanking::from_logits(&self.intents, &pass.intent_logits);
        let n_tags = self.tags.len();
        let tags: Vec<String> = pass
            .tag_logits
            .chunks(n_tags)
            .map(|row| {
                let best = (0..n_tags).fold(0, |b, k| if row[k] > row[b] { k } else { b });
                self.tags[best].clone()
            })
            .collect();
        let entities = decode_bio(&tags, &f.tokens);
        Ok(Prediction {
            ranking,
            tags,
            entities,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{assemble_features, DenseBlock, DenseVector, SparseBlock, SparseVector};
    use crate::tokenize::whitespace_tokenize;

    fn features(text: &str, sparse_dim: usize, seed: usize) -> MessageFeatures {
        let tokens = whitespace_tokenize(text);
        let token_sparse: Vec<SparseVector> = (0..tokens.len())
            .map(|i| SparseVector::from_pairs(sparse_dim, vec![((i + seed) % sparse_dim, 1.0)]))
            .collect();
        let sentence = SparseVector::sum(sparse_dim, &token_sparse);
        let dense = DenseBlock {
            tokens: vec![DenseVector::zeros(2); tokens.len()],
            sentence: DenseVector::zeros(2),
        };
        assemble_features(tokens, &[SparseBlock { tokens: token_sparse, sentence }], &[dense]).unwrap()
    }

    fn config(layers: usize) -> NluModelConfig {
        NluModelConfig {
            embed_dim: 8,
            feedforward_dim: 8,
            transformer_layers: layers,
            attention_heads: 2,
            label_embed_dim: 4,
            ..NluModelConfig::default()
        }
    }

    fn names(raw: &[&str]) -> Vec<String> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zero_projections_give_zero_embeddings() {
        let mut m = NluModel::new(config(0), names(&["a"]), names(&["O"]), 5, 2).unwrap();
        m.params.sparse_projection.data.iter_mut().for_each(|v| *v = 0.0);
        let (tokens, sentence) = m.encode(&features("x y", 5, 0)).unwrap();
        assert!(tokens.iter().flatten().chain(&sentence).all(|&v| v == 0.0));
    }

    #[test]
    fn identity_encoder_and_permutation() {
        let m = NluModel::new(config(0), names(&["a"]), names(&["O"]), 5, 2).unwrap();
        let f = features("x y", 5, 0);
        let (tokens, _) = m.encode(&f).unwrap();
        let projected = m.project_inputs(&f);
        assert_eq!(tokens.concat(), projected[..16].to_vec());

        let mut swapped = f.clone();
        swapped.token_sparse.swap(0, 1);
        let (t2, _) = m.encode(&swapped).unwrap();
        assert_eq!((t2[0].clone(), t2[1].clone()), (tokens[1].clone(), tokens[0].clone()));
    }

    #[test]
    fn single_intent_is_certain() {
        let m = NluModel::new(config(1), names(&["only"]), names(&["O"]), 5, 2).unwrap();
        let p = m.predict(&features("x y z", 5, 1)).unwrap();
        assert_eq!(p.ranking.ranking, vec![("only".to_string(), 1.0)]);
        assert_eq!(p.tags.len(), 3);
    }

    #[test]
    fn equal_logits_split_evenly() {
        let r = IntentRanking::from_logits(&names(&["a", "b"]), &[0.7, 0.7]);
        assert_eq!(r.ranking, vec![("a".to_string(), 0.5), ("b".to_string(), 0.5)]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = NluModel::new(config(1), names(&["a"]), names(&["O"]), 5, 2).unwrap();
        assert!(matches!(m.predict(&features("x", 6, 0)), Err(DietError::DimensionMismatch { .. })));
    }

    #[test]
    fn config_validation() {
        let mut c = NluModelConfig::default();
        assert!(c.validate().is_ok());
        c.attention_heads = 3;
        assert!(c.validate().is_err());
        let c = NluModelConfig {
            learning_rate: 0.0,
            ..NluModelConfig::default()
        };
        assert!(c.validate().is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ranking_is_a_distribution(logits in proptest::collection::vec(-30.0f64..30.0, 1..10), shift in -50.0f64..50.0) {
                let intents: Vec<String> = (0..logits.len()).map(|i| format!("i{i}")).collect();
                let r = IntentRanking::from_logits(&intents, &logits);
                let total: f64 = r.ranking.iter().map(|(_, c)| c).sum();
                prop_assert!((total - 1.0).abs() < 1e-6);
                prop_assert!(r.ranking.windows(2).all(|w| w[0].1 >= w[1].1));
                let mut seen: Vec<String> = r.ranking.iter().map(|(n, _)| n.clone()).collect();
                seen.sort();
                let mut expected = intents.clone();
                expected.sort();
                prop_assert_eq!(seen, expected);

                let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
                let order = |r: &IntentRanking| r.ranking.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
                let s = IntentRanking::from_logits(&intents, &shifted);
                // Ties may reorder only among numerically equal confidences.
                for (a, b) in r.ranking.iter().zip(&s.ranking) {
                    prop_assert!((a.1 - b.1).abs() < 1e-9);
                }
                if r.ranking.windows(2).all(|w| w[0].1 - w[1].1 > 1e-9) {
                    prop_assert_eq!(order(&r), order(&s));
                }
            }
        }
    }
}
