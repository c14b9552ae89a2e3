use std::io::{BufRead, Write};
use std::path::Path;

use bnlu_core::archive::{train_bot, ModelArchive};
use bnlu_core::corpus::{generate_synthetic_corpus, split_train_test};
use bnlu_core::dialogue::{DialogueEngine, PolicyConfig, Tracker};
use bnlu_core::evaluation::{
    ablation_csv, ablation_status_csv, evaluate_pipeline, loss_csv, run_ablation, write_report_dir,
};
use bnlu_core::exec::Execution;
use bnlu_core::featurize::load_pretrained_vectors;
use bnlu_core::pipeline::{preset, presets, PipelineConfig, Resources};
use bnlu_core::project::{write_synthetic, Project};
use bnlu_gateway::GatewayConfig;

use crate::args::*;
use crate::error::{Categorize, Category, CliError, CliResult};

fn load_project(data: &DataArgs) -> CliResult<Project> {
    Project::load(&data.data).or_category(Category::Data)
}

/// A config file path, or a shipped preset name.
fn load_pipeline(spec: &str) -> CliResult<PipelineConfig> {
    let path = Path::new(spec);
    if path.is_file() {
        let contents = std::fs::read_to_string(path).or_category(Category::Io)?;
        return PipelineConfig::parse(&contents)
            .map_err(|e| CliError::new(Category::Config, format!("{}: {e}", path.display())));
    }
    preset(spec).ok_or_else(|| CliError::new(Category::Config, format!("`{spec}` is neither a config file nor a preset (P1..P8)")))
}

fn resources(vectors: Option<&Path>) -> CliResult<Resources> {
    let mut resources = Resources::default();
    if let Some(path) = vectors {
        let contents = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(Category::Io, format!("{}: {e}", path.display())))?;
        let origin = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
        let table = load_pretrained_vectors(&contents).or_category(Category::Data)?;
        resources.vectors = Some(table.with_origin(origin.to_string_lossy()));
    }
    Ok(resources)
}

fn prepare(mut config: PipelineConfig, flags: &TrainingFlags) -> PipelineConfig {
    if let Some(epochs) = flags.epochs {
        config.classifier.epochs = epochs;
    }
    config.with_seed(flags.seed)
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::new(Category::Io, format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| CliError::new(Category::Io, format!("{}: {e}", path.display())))
}

fn out(stdout: &mut dyn Write, line: impl std::fmt::Display) -> CliResult {
    writeln!(stdout, "{line}").or_category(Category::Io)
}

pub fn data_validate(args: &DataArgs, stdout: &mut dyn Write) -> CliResult {
    let p = load_project(args)?;
    out(
        stdout,
        format_args!(
            "ok: {} examples, {} intents, {} entity types, {} responses, {} stories, {} rules",
            p.training.len(),
            p.training.intents.len(),
            p.training.entity_types.len(),
            p.domain.responses.len(),
            p.stories.stories.len(),
            p.stories.rules.len()
        ),
    )
}

pub fn train(args: &TrainArgs, stdout: &mut dyn Write) -> CliResult {
    let project = load_project(&args.data)?;
    let config = prepare(load_pipeline(&args.pipeline)?, &args.training);
    let resources = resources(args.training.vectors.as_deref())?;
    let mut policy = PolicyConfig {
        seed: args.training.seed,
        ..PolicyConfig::default()
    };
    if let Some(epochs) = args.policy_epochs {
        policy.ted_epochs = epochs;
    }
    let bot = train_bot(&project, &config, &resources, policy, Execution::default()).or_category(Category::Train)?;
    let path = bot.archive.save(&args.out).or_category(Category::Io)?;
    write_file(&args.out.join("loss.csv"), &loss_csv(&bot.loss_curve))?;
    let last = bot.loss_curve.last().map_or(f64::NAN, |l| l.total);
    out(
        stdout,
        format_args!(
            "trained {} on {} examples, final loss {last:.4}; archive written to {}",
            config.name,
            project.training.len(),
            path.display()
        ),
    )
}

pub fn evaluate(args: &EvaluateArgs, stdout: &mut dyn Write) -> CliResult {
    let project = load_project(&args.data)?;
    let config = prepare(load_pipeline(&args.pipeline)?, &args.training);
    let resources = resources(args.training.vectors.as_deref())?;
    let (train, test) =
        split_train_test(&project.training, args.test_fraction, args.training.seed).or_category(Category::Data)?;
    let report = evaluate_pipeline(&config, &train, &test, &resources, args.training.seed, Execution::default())
        .or_category(Category::Train)?;
    write_report_dir(&report, &args.out).or_category(Category::Io)?;
    let m = report.metrics;
    out(
        stdout,
        format_args!(
            "{}: accuracy {:.4}, precision {:.4}, recall {:.4}, f1 {:.4} on {} held-out examples; report in {}",
            report.pipeline,
            m.accuracy,
            m.weighted_precision,
            m.weighted_recall,
            m.weighted_f1,
            test.len(),
            args.out.display()
        ),
    )
}

fn ablation_configs(names: &[String]) -> CliResult<Vec<PipelineConfig>> {
    if names.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(presets());
    }
    names.iter().map(|n| load_pipeline(n.trim())).collect()
}

pub fn ablate(args: &AblateArgs, stdout: &mut dyn Write) -> CliResult {
    let project = load_project(&args.data)?;
    let configs: Vec<PipelineConfig> = ablation_configs(&args.presets)?
        .into_iter()
        .map(|c| prepare(c, &args.training))
        .collect();
    let resources = resources(args.training.vectors.as_deref())?;
    let (train, test) =
        split_train_test(&project.training, args.test_fraction, args.training.seed).or_category(Category::Data)?;
    let rows = run_ablation(
        &configs,
        &train,
        &test,
        &resources,
        args.training.seed,
        args.jobs as usize,
        Execution::default(),
    );
    create_dir(&args.out)?;
    let table = ablation_csv(&rows);
    write_file(&args.out.join("ablation.csv"), &table)?;
    write_file(&args.out.join("ablation_status.csv"), &ablation_status_csv(&rows))?;
    for row in &rows {
        if let Ok(report) = &row.outcome {
            write_report_dir(report, &args.out.join(&row.pipeline)).or_category(Category::Io)?;
        }
    }
    write!(stdout, "{table}").or_category(Category::Io)?;
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("{} ({e})", r.pipeline)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(
            Category::Train,
            format!("{} of {} configurations failed: {}", failed.len(), rows.len(), failed.join("; ")),
        ))
    }
}

pub fn serve(args: &ServeArgs, stdout: &mut dyn Write) -> CliResult {
    let base = match &args.config {
        Some(path) => GatewayConfig::load(path).or_category(Category::Config)?,
        None => GatewayConfig::default(),
    };
    let mut config = base.apply_env(|k| std::env::var(k).ok()).or_category(Category::Config)?;
    if let Some(model) = &args.model {
        config.model = Some(model.clone());
    }
    if let Some(port) = args.port {
        config.port = port;
    }
    let runtime = tokio::runtime::Runtime::new().or_category(Category::Serve)?;
    runtime
        .block_on(bnlu_gateway::serve(&config, |addr| {
            let _ = writeln!(stdout, "listening on http://{addr}");
            let _ = stdout.flush();
        }))
        .map_err(|e| match e {
            bnlu_gateway::ServeError::Model(m) => CliError::new(Category::Model, m),
            other => CliError::new(Category::Serve, other),
        })
}

pub fn shell(args: &ShellArgs, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> CliResult {
    let archive = ModelArchive::load(&args.model).or_category(Category::Model)?;
    let engine = DialogueEngine {
        parser: &archive.pipeline,
        policies: &archive.dialogue,
        domain: &archive.domain,
        variant_seed: 0,
    };
    let mut tracker = Tracker::new(args.session.clone());
    for line in stdin.lines() {
        let line = line.or_category(Category::Io)?;
        let text = line.trim();
        if text == "/quit" {
            break;
        }
        if text.is_empty() {
            continue;
        }
        let turn = engine.run_turn(&mut tracker, text).or_category(Category::Model)?;
        if args.verbose {
            let entities: Vec<String> = turn.parsed.entities.iter().map(|e| format!("{}={}", e.entity, e.value)).collect();
            out(
                stdout,
                format_args!("  [{} {:.3}] {}", turn.parsed.intent, turn.parsed.confidence, entities.join(" ")),
            )?;
        }
        for r in &turn.responses {
            out(stdout, format_args!("bot: {}", r.text))?;
        }
    }
    Ok(())
}

pub fn gen_corpus(args: &GenCorpusArgs, stdout: &mut dyn Write) -> CliResult {
    let corpus = generate_synthetic_corpus(args.seed, args.intents as usize, args.examples as usize, args.entity_types as usize);
    write_synthetic(&corpus, &args.out).or_category(Category::Io)?;
    out(
        stdout,
        format_args!("wrote {} intents x {} examples to {}", args.intents, args.examples, args.out.display()),
    )
}
