//! Intent and entity metrics, confusion matrices, confidence histograms and
//! the preset ablation runner.

mod metrics;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{split_hash, TrainingSet};
use crate::diet::LossBreakdown;
use crate::exec::Execution;
use crate::pipeline::{NluPipeline, PipelineConfig, PipelineError, ReferenceMetrics, Resources};

pub use metrics::{
    confidence_histogram, confusion, entity_metrics, weighted_metrics, ConfidenceHistogram, ConfusionMatrix,
    EntityMetrics, MetricsRow, HISTOGRAM_BINS,
};
pub use report::{
    ablation_csv, ablation_status_csv, confusion_csv, confusion_svg, histogram_csv, histogram_svg, loss_csv,
    predictions_csv, write_report_dir,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("label `{0}` is not in the label set")]
    UnknownLabel(String),
    #[error("{golds} gold labels but {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("nothing to evaluate")]
    EmptyMatrix,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// One held-out message and what the pipeline made of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub text: String,
    pub gold: String,
    pub predicted: String,
    pub confidence: f64,
}

impl PredictionRecord {
    pub fn correct(&self) -> bool {
        self.gold == self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pipeline: String,
    pub split_hash: String,
    pub metrics: MetricsRow,
    pub confusion: ConfusionMatrix,
    pub histogram: ConfidenceHistogram,
    pub entities: EntityMetrics,
    pub loss_curve: Vec<LossBreakdown>,
    pub predictions: Vec<PredictionRecord>,
}

/// Training intents in order, then the fallback intent and any gold label
/// the training half never showed.
fn label_set(pipeline: &NluPipeline, test: &TrainingSet) -> Vec<String> {
    let mut labels = pipeline.labels();
    for ex in &test.examples {
        if !labels.contains(&ex.intent) {
            labels.push(ex.intent.clone());
        }
    }
    labels
}

/// Scores an already trained pipeline. A fallback prediction is wrong unless
/// the gold intent is the fallback intent itself.
pub fn score_pipeline(
    pipeline: &NluPipeline,
    test: &TrainingSet,
    exec: Execution,
) -> Result<(MetricsRow, ConfusionMatrix, ConfidenceHistogram, EntityMetrics, Vec<PredictionRecord>), EvaluationError> {
    if test.is_empty() {
        return Err(EvaluationError::EmptyMatrix);
    }
    let parsed = exec.map(&test.examples, |ex| pipeline.parse(&ex.text));
    let records: Vec<PredictionRecord> = test
        .examples
        .iter()
        .zip(&parsed)
        .map(|(ex, p)| PredictionRecord {
            text: ex.text.clone(),
            gold: ex.intent.clone(),
            predicted: p.intent.clone(),
            confidence: p.confidence,
        })
        .collect();
    let golds: Vec<&str> = records.iter().map(|r| r.gold.as_str()).collect();
    let preds: Vec<&str> = records.iter().map(|r| r.predicted.as_str()).collect();
    let cm = confusion(&golds, &preds, &label_set(pipeline, test))?;
    let metrics = weighted_metrics(&cm)?;
    let histogram = confidence_histogram(&records.iter().map(|r| (r.correct(), r.confidence)).collect::<Vec<_>>());
    let spans: Vec<_> = test
        .examples
        .iter()
        .zip(&parsed)
        .map(|(ex, p)| (ex.entities.clone(), p.entities.clone()))
        .collect();
    Ok((metrics, cm, histogram, entity_metrics(&spans), records))
}

/// Fits on `train` only, with the classifier seeded by `seed`, and scores
/// on `test`.
pub fn evaluate_pipeline(
    config: &PipelineConfig,
    train: &TrainingSet,
    test: &TrainingSet,
    resources: &Resources,
    seed: u64,
    exec: Execution,
) -> Result<EvaluationReport, EvaluationError> {
    if test.is_empty() {
        return Err(EvaluationError::EmptyMatrix);
    }
    let config = config.clone().with_seed(seed);
    let trained = NluPipeline::train(&config, train, resources, exec)?;
    let (metrics, confusion, histogram, entities, predictions) = score_pipeline(&trained.pipeline, test, exec)?;
    Ok(EvaluationReport {
        pipeline: config.name.clone(),
        split_hash: split_hash(train, test),
        metrics,
        confusion,
        histogram,
        entities,
        loss_curve: trained.loss_curve,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub pipeline: String,
    pub split_hash: String,
    pub reference: Option<ReferenceMetrics>,
    /// The report, or why the configuration failed.
    pub outcome: Result<EvaluationReport, String>,
}

/// Evaluates every configuration on the same split, in order. A failing
/// configuration is recorded and the rest still run. With `jobs > 1`
/// configurations are evaluated concurrently, each single-threaded.
pub fn run_ablation(
    configs: &[PipelineConfig],
    train: &TrainingSet,
    test: &TrainingSet,
    resources: &Resources,
    seed: u64,
    jobs: usize,
    exec: Execution,
) -> Vec<AblationRow> {
    let hash = split_hash(train, test);
    let evaluate = |config: &PipelineConfig, exec: Execution| AblationRow {
        pipeline: config.name.clone(),
        split_hash: hash.clone(),
        reference: config.reference,
        outcome: evaluate_pipeline(config, train, test, resources, seed, exec).map_err(|e| e.to_string()),
    };
    if jobs > 1 {
        exec.map_with_jobs(configs, jobs, |c| evaluate(c, Execution::Sequential))
    } else {
        configs.iter().map(|c| evaluate(c, exec)).collect()
    }
}
