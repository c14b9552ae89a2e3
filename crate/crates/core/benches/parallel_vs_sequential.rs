//! Sequential against parallel execution on the two hot paths: a short
//! classifier training run and batch parsing of the synthetic corpus.
//! Without the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bnlu_core::corpus::generate_synthetic_corpus;
use bnlu_core::evaluation::score_pipeline;
use bnlu_core::exec::Execution;
use bnlu_core::pipeline::{preset, NluPipeline, PipelineConfig, Resources};
use bnlu_core::project::Project;

const ARMS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn config(epochs: usize) -> PipelineConfig {
    let mut config = preset("P8").expect("P8 ships");
    config.classifier.epochs = epochs;
    config
}

fn bench(c: &mut Criterion) {
    let project = Project::from_synthetic(&generate_synthetic_corpus(42, 12, 10, 3)).expect("synthetic corpus is valid");
    let resources = Resources::default();

    let mut train = c.benchmark_group("train_5_epochs");
    train.sample_size(10);
    for (name, exec) in ARMS {
        train.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| NluPipeline::train(&config(5), &project.training, &resources, exec).unwrap())
        });
    }
    train.finish();

    let pipeline = NluPipeline::train(&config(5), &project.training, &resources, Execution::Sequential)
        .unwrap()
        .pipeline;
    let mut parse = c.benchmark_group("parse_corpus");
    for (name, exec) in ARMS {
        parse.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| score_pipeline(&pipeline, &project.training, exec).unwrap())
        });
    }
    parse.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
