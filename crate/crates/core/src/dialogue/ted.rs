//! Transformer next-action classifier over a fixed window of conversation
//! items.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{PolicyKind, PolicyPrediction};
use super::state::{expand_story, Item};
use super::{DialogueError, PolicyConfig};
use crate::corpus::Story;
use crate::diet::INIT_BOUND;
use crate::exec::Execution;
use crate::nn::ops;
use crate::nn::{prefixed, Adam, AdamConfig, Encoder, EncoderCache, EncoderConfig, Parameters, Tensor};

const GRADIENT_CHUNK: usize = 8;

/// Names of the multi-hot input slots: intents, then entity types, then
/// actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnVocabulary {
    pub intents: Vec<String>,
    pub entity_types: Vec<String>,
    pub actions: Vec<String>,
}

impl TurnVocabulary {
    pub fn dim(&self) -> usize {
        self.intents.len() + self.entity_types.len() + self.actions.len()
    }

    /// Active slots of one item; unknown names are skipped.
    fn active(&self, item: &Item) -> Vec<usize> {
        let find = |list: &[String], x: &str| list.binary_search_by(|s| s.as_str().cmp(x)).ok();
        let (ni, ne) = (self.intents.len(), self.entity_types.len());
        match item {
            Item::User { intent, entities } => find(&self.intents, intent)
                .into_iter()
                .chain(entities.iter().filter_map(|e| find(&self.entity_types, e).map(|k| ni + k)))
                .collect(),
            Item::Action(a) => find(&self.actions, a).map(|k| ni + ne + k).into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TedParams {
    pub input_projection: Tensor,
    /// Row `k` is added to the item `k` steps before the newest one.
    pub positions: Tensor,
    pub encoder: Encoder,
    pub head_weight: Tensor,
    pub head_bias: Tensor,
    pub action_embeddings: Tensor,
}

impl Parameters for TedParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("input_projection".to_string(), &self.input_projection),
            ("positions".to_string(), &self.positions),
        ];
        out.extend(prefixed("encoder", self.encoder.tensors()));
        out.extend([
            ("head.weight".to_string(), &self.head_weight),
            ("head.bias".to_string(), &self.head_bias),
            ("head.action_embeddings".to_string(), &self.action_embeddings),
        ]);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.input_projection, &mut self.positions];
        out.extend(self.encoder.tensors_mut());
        out.extend([&mut self.head_weight, &mut self.head_bias, &mut self.action_embeddings]);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TedModel {
    pub max_history: usize,
    pub vocabulary: TurnVocabulary,
    pub params: TedParams,
}

/// A history window and the index of the action that followed it.
#[derive(Debug, Clone, PartialEq)]
pub struct TedExample {
    pub window: Vec<Item>,
    pub action: usize,
}

struct TedPass {
    active: Vec<Vec<usize>>,
    cache: EncoderCache,
    hidden: Vec<f64>,
    projection: Vec<f64>,
    logits: Vec<f64>,
}

impl TedModel {
    pub fn new(vocabulary: TurnVocabulary, config: &PolicyConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.ted_embed_dim;
        let b = INIT_BOUND;
        let params = TedParams {
            input_projection: Tensor::uniform(&[vocabulary.dim(), d], b, &mut rng),
            positions: Tensor::uniform(&[config.max_history, d], b, &mut rng),
            encoder: Encoder::new(
                EncoderConfig {
                    dim: d,
                    layers: config.ted_transformer_layers,
                    heads: config.ted_attention_heads,
                    ff_dim: 2 * d,
                },
                b,
                &mut rng,
            ),
            head_weight: Tensor::uniform(&[d, config.ted_label_dim], b, &mut rng),
            head_bias: Tensor::zeros(&[config.ted_label_dim]),
            action_embeddings: Tensor::uniform(&[vocabulary.actions.len(), config.ted_label_dim], b, &mut rng),
        };
        TedModel {
            max_history: config.max_history,
            vocabulary,
            params,
        }
    }

    fn dim(&self) -> usize {
        self.params.positions.cols()
    }

    fn window<'a>(&self, history: &'a [Item]) -> &'a [Item] {
        &history[history.len().saturating_sub(self.max_history)..]
    }

    fn forward(&self, window: &[Item]) -> TedPass {
        let d = self.dim();
        let p = &self.params;
        let len = window.len();
        let active: Vec<Vec<usize>> = window.iter().map(|i| self.vocabulary.active(i)).collect();
        let mut x = vec![0.0; len * d];
        for (r, slots) in active.iter().enumerate() {
            let row = &mut x[r * d..(r + 1) * d];
            for &f in slots {
                ops::axpy(1.0, p.input_projection.row(f), row);
            }
            ops::axpy(1.0, p.positions.row(len - 1 - r), row);
        }
        let (hidden, cache) = p.encoder.forward(x);
        let last = &hidden[(len - 1) * d..];
        let projection = ops::linear(last, &p.head_weight, Some(&p.head_bias));
        let logits = (0..self.vocabulary.actions.len())
            .map(|a| ops::dot(&projection, p.action_embeddings.row(a)))
            .collect();
        TedPass {
            active,
            cache,
            hidden,
            projection,
            logits,
        }
    }

    fn accumulate(&self, ex: &TedExample, scale: f64, grads: &mut TedParams) -> f64 {
        let d = self.dim();
        let p = &self.params;
        let len = ex.window.len();
        let pass = self.forward(&ex.window);
        let loss = ops::cross_entropy(&pass.logits, ex.action);
        let mut d_logits = pass.logits.clone();
        ops::softmax(&mut d_logits);
        d_logits[ex.action] -= 1.0;
        let mut d_projection = vec![0.0; p.head_bias.len()];
        for (a, g) in d_logits.iter().map(|g| g * scale).enumerate() {
            ops::axpy(g, p.action_embeddings.row(a), &mut d_projection);
            ops::axpy(g, &pass.projection, grads.action_embeddings.row_mut(a));
        }
        let d_last = ops::linear_backward(
            &pass.hidden[(len - 1) * d..],
            &p.head_weight,
            &d_projection,
            &mut grads.head_weight,
            Some(&mut grads.head_bias),
        );
        let mut d_hidden = vec![0.0; len * d];
        d_hidden[(len - 1) * d..].copy_from_slice(&d_last);
        let dx = p.encoder.backward(&pass.cache, d_hidden, &mut grads.encoder);
        for (r, slots) in pass.active.iter().enumerate() {
            let dr = &dx[r * d..(r + 1) * d];
            for &f in slots {
                ops::axpy(1.0, dr, grads.input_projection.row_mut(f));
            }
            ops::axpy(1.0, dr, grads.positions.row_mut(len - 1 - r));
        }
        loss
    }

    /// Mean cross-entropy and its gradient over `batch`.
    pub fn loss_and_gradients(&self, batch: &[TedExample], exec: Execution) -> (f64, TedParams) {
        let scale = 1.0 / batch.len() as f64;
        let parts = exec.map_chunks(batch, GRADIENT_CHUNK, |chunk| {
            let mut grads = self.params.zeros_like();
            let loss: f64 = chunk.iter().map(|ex| self.accumulate(ex, scale, &mut grads)).sum();
            (loss, grads)
        });
        let mut parts = parts.into_iter();
        let (mut loss, mut grads) = parts.next().expect("batch is non-empty");
        for (l, g) in parts {
            loss += l;
            grads.add_assign(&g);
        }
        (loss * scale, grads)
    }

    pub fn loss(&self, batch: &[TedExample]) -> f64 {
        batch
            .iter()
            .map(|ex| ops::cross_entropy(&self.forward(&ex.window).logits, ex.action))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Action distribution after `history`, in vocabulary order.
    pub fn probabilities(&self, history: &[Item]) -> Vec<f64> {
        let window = self.window(history);
        if window.is_empty() {
            let n = self.vocabulary.actions.len();
            return vec![1.0 / n as f64; n];
        }
        let mut probs = self.forward(window).logits;
        ops::softmax(&mut probs);
        probs
    }

    pub fn predict(&self, history: &[Item]) -> PolicyPrediction {
        let probs = self.probabilities(history);
        let best = (0..probs.len()).fold(0, |b, k| if probs[k] > probs[b] { k } else { b });
        PolicyPrediction {
            action: self.vocabulary.actions[best].clone(),
            confidence: probs[best],
            policy: PolicyKind::Ted,
        }
    }

    /// Sliding-window training pairs from every story.
    pub fn examples(&self, stories: &[Story]) -> Vec<TedExample> {
        let mut out = Vec::new();
        for story in stories {
            let items = expand_story(story);
            for (i, item) in items.iter().enumerate() {
                let Item::Action(a) = item else { continue };
                let Ok(action) = self.vocabulary.actions.binary_search(a) else { continue };
                if i == 0 {
                    continue;
                }
                out.push(TedExample {
                    window: self.window(&items[..i]).to_vec(),
                    action,
                });
            }
        }
        out
    }
}

/// Random story pairs played back to back, so that every story's opening
/// is also seen mid-conversation.
fn augment(stories: &[Story], factor: usize, rng: &mut ChaCha8Rng) -> Vec<Story> {
    if stories.len() < 2 {
        return Vec::new();
    }
    (0..factor * stories.len())
        .map(|_| {
            let pair: Vec<&Story> = stories.choose_multiple(rng, 2).collect();
            Story {
                name: format!("{} + {}", pair[0].name, pair[1].name),
                steps: pair[0].steps.iter().chain(&pair[1].steps).cloned().collect(),
            }
        })
        .collect()
}

/// Trains a policy on every story window with seeded init and shuffling.
pub fn train_ted(
    stories: &[Story],
    vocabulary: TurnVocabulary,
    config: &PolicyConfig,
    exec: Execution,
) -> Result<TedModel, DialogueError> {
    if stories.is_empty() {
        return Err(DialogueError::EmptyStorySet);
    }
    let mut model = TedModel::new(vocabulary, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7ed0_7ed0);
    let mut examples = model.examples(stories);
    examples.extend(model.examples(&augment(stories, config.augmentation_factor, &mut rng)));
    if examples.is_empty() {
        return Err(DialogueError::EmptyStorySet);
    }
    let mut adam = Adam::new(AdamConfig::with_learning_rate(config.ted_learning_rate));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.ted_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.ted_batch_size) {
            let batch: Vec<TedExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (loss, grads) = model.loss_and_gradients(&batch, exec);
            if !loss.is_finite() || !grads.all_finite() {
                return Err(DialogueError::NonFiniteLoss { epoch });
            }
            adam.step(&mut model.params, &grads);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::StoryStep;
    use crate::dialogue::ACTION_LISTEN;

    fn story(steps: &[(&str, &str)]) -> Story {
        Story {
            name: "s".into(),
            steps: steps
                .iter()
                .flat_map(|(i, a)| {
                    [
                        StoryStep::User {
                            intent: i.to_string(),
                            entities: vec![],
                        },
                        StoryStep::Action(a.to_string()),
                    ]
                })
                .collect(),
        }
    }

    fn vocab(intents: &[&str], actions: &[&str]) -> TurnVocabulary {
        let mut actions: Vec<String> = actions.iter().map(|s| s.to_string()).collect();
        actions.push(ACTION_LISTEN.into());
        actions.sort();
        TurnVocabulary {
            intents: intents.iter().map(|s| s.to_string()).collect(),
            entity_types: vec!["city".into()],
            actions,
        }
    }

    fn small_config(epochs: usize) -> PolicyConfig {
        PolicyConfig {
            ted_epochs: epochs,
            ted_embed_dim: 8,
            ted_attention_heads: 2,
            ted_label_dim: 4,
            ..PolicyConfig::default()
        }
    }

    fn greet() -> Item {
        Item::User {
            intent: "greet".into(),
            entities: vec![],
        }
    }

    #[test]
    fn single_pair_is_learned() {
        let stories = [story(&[("greet", "utter_greet")])];
        let m = train_ted(&stories, vocab(&["greet"], &["utter_greet"]), &small_config(60), Execution::default()).unwrap();
        let p = m.predict(&[greet()]);
        assert_eq!(p.action, "utter_greet");
        assert!(p.confidence > 0.9, "{}", p.confidence);
    }

    #[test]
    fn deterministic() {
        let stories = [story(&[("greet", "utter_greet"), ("bye", "utter_bye")])];
        let v = vocab(&["bye", "greet"], &["utter_bye", "utter_greet"]);
        let a = train_ted(&stories, v.clone(), &small_config(5), Execution::Sequential).unwrap();
        let b = train_ted(&stories, v, &small_config(5), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_story_set() {
        let err = train_ted(&[], vocab(&[], &[]), &small_config(1), Execution::default()).unwrap_err();
        assert!(matches!(err, DialogueError::EmptyStorySet));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let stories = [story(&[("greet", "utter_greet"), ("bye", "utter_bye")])];
        let v = vocab(&["bye", "greet"], &["utter_bye", "utter_greet"]);
        let m = TedModel::new(v, &small_config(1));
        let batch = m.examples(&stories);
        let (_, grads) = m.loss_and_gradients(&batch, Execution::Sequential);
        let mut probe = m.clone();
        let h = 1e-5;
        let n_tensors = m.params.tensors().len();
        for t in 0..n_tensors {
            let len = m.params.tensors()[t].1.len();
            for j in (0..len).step_by(len.div_ceil(3)) {
                let orig = probe.params.tensors()[t].1.data[j];
                probe.params.tensors_mut()[t].data[j] = orig + h;
                let plus = probe.loss(&batch);
                probe.params.tensors_mut()[t].data[j] = orig - h;
                let minus = probe.loss(&batch);
                probe.params.tensors_mut()[t].data[j] = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let analytic = grads.tensors()[t].1.data[j];
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                assert!(err < 1e-4, "{} [{j}]: {analytic} vs {numeric}", m.params.tensors()[t].0);
            }
        }
    }
}
