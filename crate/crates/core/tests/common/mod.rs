//! Toy two-layer model and batch for finite-difference gradient checks.

use bnlu_core::diet::{DietExample, NluModel, NluModelConfig};
use bnlu_core::featurize::{assemble_features, DenseBlock, DenseVector, SparseBlock, SparseVector};
use bnlu_core::tokenize::whitespace_tokenize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPARSE_DIM: usize = 12;
const DENSE_DIM: usize = 3;

fn toy_example(text: &str, intent: usize, tags: Vec<usize>, rng: &mut ChaCha8Rng) -> DietExample {
    let tokens = whitespace_tokenize(text);
    let sparse: Vec<SparseVector> = (0..tokens.len())
        .map(|_| {
            let pairs = (0..5).map(|_| (rng.gen_range(0..SPARSE_DIM), rng.gen_range(0.5..2.0))).collect();
            SparseVector::from_pairs(SPARSE_DIM, pairs)
        })
        .collect();
    let dense: Vec<DenseVector> = (0..tokens.len())
        .map(|_| DenseVector {
            values: (0..DENSE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        })
        .collect();
    let sentence_sparse = SparseVector::sum(SPARSE_DIM, &sparse);
    let sentence_dense = DenseVector {
        values: (0..DENSE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let features = assemble_features(
        tokens,
        &[SparseBlock {
            tokens: sparse,
            sentence: sentence_sparse,
        }],
        &[DenseBlock {
            tokens: dense,
            sentence: sentence_dense,
        }],
    )
    .unwrap();
    DietExample { features, intent, tags }
}

pub fn toy_model() -> (NluModel, Vec<DietExample>) {
    let config = NluModelConfig {
        embed_dim: 10,
        feedforward_dim: 12,
        transformer_layers: 2,
        attention_heads: 2,
        label_embed_dim: 6,
        epochs: 1,
        learning_rate: 0.05,
        batch_size: 4,
        drop_rate: 0.0,
        weight_decay: 0.0,
        seed: 11,
    };
    let intents = vec!["greet".into(), "ask_price".into(), "bye".into()];
    let tags = ["O", "B-city", "I-city", "B-price", "I-price"].map(String::from).to_vec();
    let mut model = NluModel::new(config, intents, tags, SPARSE_DIM, DENSE_DIM).unwrap();
    // Move layer-norm parameters off their initial values so their gradients
    // are exercised away from the symmetric starting point.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    use bnlu_core::nn::Parameters;
    for t in model.params.tensors_mut() {
        t.data.iter_mut().for_each(|v| *v += rng.gen_range(-0.3..0.3));
    }
    let batch = vec![
        toy_example("dam koto", 1, vec![0, 0], &mut rng),
        toy_example("dhaka te jabo", 2, vec![1, 2, 0], &mut rng),
        toy_example("hello", 0, vec![0], &mut rng),
        toy_example("500 taka", 1, vec![3, 4], &mut rng),
    ];
    (model, batch)
}
