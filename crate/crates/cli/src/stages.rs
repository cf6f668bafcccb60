//! Pipeline stages. Each stage reads its declared upstream directories and
//! writes only its own `<out>/<stage>/` directory, ending with `stage.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::ValueEnum;
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use newsprobe_core::corpus::{
    deduplicate, ingest_articles, word_count_stats, write_articles, Cleaner, IngestReport,
};
use newsprobe_core::dataset::{
    make_examples, read_examples, read_manifest, stratified_split, write_examples, write_manifest, SplitBundle,
    SplitName,
};
use newsprobe_core::fingerprint::{of_json, sha256_hex};
use newsprobe_core::inference::{render_report, PrevalenceReport};
use newsprobe_core::synthesis::{
    build_prompt, build_prompt_from_template, materialize, rewrite_batch, synthesis_report, HttpRewriteClient,
    MockRewriter, RewriteClient, RewritePrompt, Rewriter,
};
use newsprobe_core::{Article, Prediction, RewriteResult};
use newsprobe_model::classifier::select_device;
use newsprobe_model::{evaluate_split, predict_batch, train, Classifier, TrainOptions};

use crate::config::{MismatchPolicy, PipelineConfig, Provider};

pub const STAGE_FILE: &str = "stage.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Clean,
    Synthesize,
    Split,
    Train,
    Evaluate,
    Predict,
    Report,
    /// Every stage above, in order.
    Pipeline,
}

impl Stage {
    pub const ORDER: [Stage; 8] = [
        Stage::Ingest,
        Stage::Clean,
        Stage::Synthesize,
        Stage::Split,
        Stage::Train,
        Stage::Evaluate,
        Stage::Predict,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Clean => "clean",
            Stage::Synthesize => "synthesize",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Predict => "predict",
            Stage::Report => "report",
            Stage::Pipeline => "pipeline",
        }
    }

    /// Stages whose outputs this stage reads, directly or through others.
    pub fn requires(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Ingest | Pipeline => &[],
            Clean => &[Ingest],
            Synthesize => &[Ingest, Clean],
            Split => &[Ingest, Clean, Synthesize],
            Train => &[Ingest, Clean, Synthesize, Split],
            Evaluate => &[Ingest, Clean, Synthesize, Split, Train],
            Predict => &[Ingest, Clean, Synthesize, Split, Train],
            Report => &[Ingest, Clean, Synthesize, Split, Train, Predict],
        }
    }
}

/// Written last into every stage directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub fingerprint: String,
    pub upstream: BTreeMap<String, String>,
    pub summary: serde_json::Value,
}

/// Expected fingerprint of every stage under `cfg`. A stage's fingerprint
/// covers its own config section, the content of any external input files
/// and its parents' fingerprints.
pub fn fingerprints(cfg: &PipelineConfig) -> Result<BTreeMap<Stage, String>> {
    let digest_files = |paths: &[PathBuf]| -> Result<Vec<String>> {
        paths
            .iter()
            .map(|p| {
                let bytes = fs::read(p).with_context(|| format!("reading input {}", p.display()))?;
                Ok(sha256_hex(bytes))
            })
            .collect()
    };
    let mut fp = BTreeMap::new();
    let ingest = of_json(&json!({
        "stage": "ingest",
        "inputs": digest_files(&cfg.corpus.inputs)?,
        "format": cfg.corpus.format,
    }));
    let clean = of_json(&json!({
        "stage": "clean", "parent": ingest,
        "cleaning": cfg.corpus.cleaning, "dedup": cfg.corpus.dedup,
    }));
    let synth = of_json(&json!({
        "stage": "synthesize", "parent": clean,
        "synthesis": cfg.synthesis, "seed": cfg.synthesis_seed(),
        "template": match &cfg.synthesis.prompt_template {
            Some(p) => digest_files(std::slice::from_ref(p))?.pop(),
            None => None,
        },
    }));
    let split = of_json(&json!({
        "stage": "split", "parent": synth,
        "ratios": cfg.dataset.ratios, "seed": cfg.dataset_seed(),
    }));
    let train = of_json(&json!({"stage": "train", "parent": split, "training": cfg.training}));
    let evaluate = of_json(&json!({"stage": "evaluate", "parent": train}));
    let predict = of_json(&json!({
        "stage": "predict", "parent": train, "clean": clean,
        "inputs": digest_files(&cfg.inference.inputs)?,
        "batch_size": cfg.inference.batch_size,
        "on_cleaning_mismatch": cfg.inference.on_cleaning_mismatch,
    }));
    let report = of_json(&json!({"stage": "report", "parent": predict, "formats": cfg.inference.formats}));
    for (s, f) in [
        (Stage::Ingest, ingest),
        (Stage::Clean, clean),
        (Stage::Synthesize, synth),
        (Stage::Split, split),
        (Stage::Train, train),
        (Stage::Evaluate, evaluate),
        (Stage::Predict, predict),
        (Stage::Report, report),
    ] {
        fp.insert(s, f);
    }
    Ok(fp)
}

pub struct StageContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub out: PathBuf,
    pub fingerprints: BTreeMap<Stage, String>,
    pub force_mock: bool,
}

impl StageContext<'_> {
    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.name())
    }

    fn check_upstream(&self, stage: Stage) -> Result<BTreeMap<String, String>> {
        let mut seen = BTreeMap::new();
        for &up in stage.requires() {
            let path = self.dir(up).join(STAGE_FILE);
            if !path.is_file() {
                bail!(
                    "stage `{}` needs the output of stage `{}`, which has not been run in {}; run `--stage {}` first",
                    stage.name(),
                    up.name(),
                    self.out.display(),
                    up.name()
                );
            }
            let record: StageRecord = serde_json::from_str(&fs::read_to_string(&path)?)
                .with_context(|| format!("reading {}", path.display()))?;
            if record.fingerprint != self.fingerprints[&up] {
                bail!(
                    "output of stage `{}` is stale for the current config or inputs; rerun `--stage {}`",
                    up.name(),
                    up.name()
                );
            }
            seen.insert(up.name().to_string(), record.fingerprint);
        }
        Ok(seen)
    }

    fn prepare(&self, stage: Stage) -> Result<(PathBuf, BTreeMap<String, String>)> {
        let upstream = self.check_upstream(stage)?;
        let dir = self.dir(stage);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let marker = dir.join(STAGE_FILE);
        if marker.exists() {
            fs::remove_file(&marker)?;
        }
        Ok((dir, upstream))
    }

    fn finish(&self, stage: Stage, upstream: BTreeMap<String, String>, summary: serde_json::Value) -> Result<()> {
        let record = StageRecord {
            stage,
            fingerprint: self.fingerprints[&stage].clone(),
            upstream,
            summary,
        };
        write_json(&self.dir(stage).join(STAGE_FILE), &record)
    }

    fn cleaner(&self) -> Result<Cleaner> {
        Ok(Cleaner::new(self.cfg.corpus.cleaning.clone())?)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_articles(path: &Path) -> Result<Vec<Article>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).with_context(|| format!("parsing {}", path.display())))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for it in items {
        text.push_str(&serde_json::to_string(it)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).with_context(|| format!("parsing {}", path.display())))
        .collect()
}

/// Ingests every file, logging per-record failures; fails only when nothing
/// usable was read.
fn ingest_all(paths: &[PathBuf], cfg: &PipelineConfig) -> Result<(Vec<Article>, BTreeMap<String, IngestReport>)> {
    if paths.is_empty() {
        bail!("no input files configured");
    }
    let mut articles = Vec::new();
    let mut reports = BTreeMap::new();
    for p in paths {
        let ingested = ingest_articles(p, cfg.corpus.format)?;
        for e in &ingested.report.errors {
            warn!("{}:{}: {}", p.display(), e.line, e.message);
        }
        articles.extend(ingested.articles);
        reports.insert(p.display().to_string(), ingested.report);
    }
    if articles.is_empty() {
        bail!("no valid records in the configured inputs");
    }
    articles.sort_by(|a, b| a.id.cmp(&b.id));
    let mut ids = BTreeSet::new();
    for a in &articles {
        if !ids.insert(a.id.as_str()) {
            bail!("article id {} appears in more than one input", a.id);
        }
    }
    Ok((articles, reports))
}

pub fn ingest(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Ingest)?;
    let (articles, reports) = ingest_all(&ctx.cfg.corpus.inputs, ctx.cfg)?;
    write_articles(dir.join("articles.jsonl"), &articles)?;
    write_json(&dir.join("ingest_report.json"), &reports)?;
    let rejected: usize = reports.values().map(|r| r.errors.len()).sum();
    info!("ingest: {} articles, {rejected} rejected records", articles.len());
    ctx.finish(Stage::Ingest, up, json!({"articles": articles.len(), "rejected_records": rejected}))
}

pub fn clean(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Clean)?;
    let raw = read_articles(&ctx.dir(Stage::Ingest).join("articles.jsonl"))?;
    let cleaner = ctx.cleaner()?;
    let mut human: Vec<Article> = raw
        .into_iter()
        .filter(|a| a.origin != Some(newsprobe_core::OriginLabel::AiRewritten))
        .map(|mut a| {
            a.origin = Some(newsprobe_core::OriginLabel::HumanWritten);
            a
        })
        .collect();
    human.retain(|a| !cleaner.clean(&a.body).is_empty());
    let kept = deduplicate(&human, ctx.cfg.corpus.dedup);
    let cleaned: Vec<Article> = kept
        .iter()
        .map(|a| Article {
            body: cleaner.clean(&a.body),
            ..a.clone()
        })
        .collect();
    write_articles(dir.join("raw.jsonl"), &kept)?;
    write_articles(dir.join("articles.jsonl"), &cleaned)?;
    let stats = word_count_stats::<f64>(&cleaned, 25)?;
    write_json(&dir.join("stats.json"), &stats)?;
    write_json(&dir.join("cleaning_config.json"), &ctx.cfg.corpus.cleaning)?;
    info!("clean: {} of {} articles kept after dedup", kept.len(), human.len());
    ctx.finish(
        Stage::Clean,
        up,
        json!({"input": human.len(), "kept": kept.len(), "cleaning_fingerprint": ctx.cfg.corpus.cleaning.fingerprint()}),
    )
}

fn prompts(ctx: &StageContext, sources: &BTreeSet<&str>) -> Result<(BTreeMap<String, RewritePrompt>, RewritePrompt)> {
    let template = match &ctx.cfg.synthesis.prompt_template {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading prompt template {}", p.display()))?),
        None => None,
    };
    let render = |name: &str| -> Result<RewritePrompt> {
        Ok(match &template {
            Some(t) => build_prompt_from_template(t, name)?,
            None => build_prompt(name)?,
        })
    };
    let mut map = BTreeMap::new();
    for s in sources {
        let name = ctx.cfg.synthesis.newspaper_names.get(*s).map(String::as_str).unwrap_or(s);
        map.insert(s.to_string(), render(name)?);
    }
    Ok((map, render("the newspaper")?))
}

pub fn synthesize(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Synthesize)?;
    let raw = read_articles(&ctx.dir(Stage::Clean).join("raw.jsonl"))?;
    let cleaner = ctx.cleaner()?;
    let sources: BTreeSet<&str> = raw.iter().map(|a| a.source.as_str()).collect();
    let (prompts, fallback) = prompts(ctx, &sources)?;
    let s = &ctx.cfg.synthesis;
    let rewriter = Rewriter {
        prompts,
        fallback,
        normalizer: cleaner.clone(),
        gates: s.gates,
        retry: s.retry,
    };
    let use_mock = ctx.force_mock || s.provider == Provider::Mock;
    let client: Box<dyn RewriteClient> = if use_mock {
        let table = newsprobe_core::synthesis::parse_synonyms(newsprobe_core::synthesis::DEFAULT_SYNONYMS)?;
        Box::new(MockRewriter::new(ctx.cfg.synthesis_seed(), s.mock_fraction, table)?)
    } else {
        let http = s.http.clone().context("synthesis.http is required for the http provider")?;
        Box::new(HttpRewriteClient::from_env(http)?)
    };
    let results: Vec<RewriteResult> = rewrite_batch(&raw, client.as_ref(), &rewriter, s.workers)?;
    let by_id: BTreeMap<&str, &Article> = raw.iter().map(|a| (a.id.as_str(), a)).collect();
    let mut rewritten_raw = Vec::new();
    let mut rewritten = Vec::new();
    for r in &results {
        if let Some(a) = materialize(by_id[r.original_id.as_str()], r) {
            rewritten.push(Article {
                body: cleaner.clean(&a.body),
                ..a.clone()
            });
            rewritten_raw.push(a);
        }
    }
    let summary = synthesis_report(&results);
    write_jsonl(&dir.join("rewrites.jsonl"), &results)?;
    write_articles(dir.join("rewritten_raw.jsonl"), &rewritten_raw)?;
    write_articles(dir.join("rewritten.jsonl"), &rewritten)?;
    write_json(&dir.join("summary.json"), &summary)?;
    for (reason, n) in &summary.rejections {
        warn!("synthesize: {n} rewrite(s) rejected: {reason}");
    }
    info!("synthesize: {} of {} rewrites accepted", summary.accepted, summary.total);
    ctx.finish(
        Stage::Synthesize,
        up,
        json!({"total": summary.total, "accepted": summary.accepted, "provider": if use_mock { "mock" } else { "http" }}),
    )
}

pub fn split(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Split)?;
    let human = read_articles(&ctx.dir(Stage::Clean).join("articles.jsonl"))?;
    let rewritten = read_articles(&ctx.dir(Stage::Synthesize).join("rewritten.jsonl"))?;
    let results: Vec<RewriteResult> = read_jsonl(&ctx.dir(Stage::Synthesize).join("rewrites.jsonl"))?;
    let paired: BTreeSet<&str> = results.iter().filter(|r| r.accepted).map(|r| r.original_id.as_str()).collect();
    let human: Vec<Article> = human.into_iter().filter(|a| paired.contains(a.id.as_str())).collect();
    let examples = make_examples(&human, &rewritten)?;
    let bundle = stratified_split(&examples, ctx.cfg.dataset.ratios, ctx.cfg.dataset_seed())?;
    write_examples(dir.join("examples.jsonl"), &examples)?;
    for name in SplitName::ALL {
        write_manifest(dir.join(format!("{}.manifest.jsonl", name.as_str())), bundle.get(name))?;
    }
    let sizes: BTreeMap<&str, usize> = SplitName::ALL.iter().map(|n| (n.as_str(), bundle.get(*n).len())).collect();
    info!("split: {sizes:?}");
    ctx.finish(Stage::Split, up, json!({"examples": examples.len(), "sizes": sizes}))
}

fn load_bundle(ctx: &StageContext) -> Result<SplitBundle> {
    let dir = ctx.dir(Stage::Split);
    let examples = read_examples(dir.join("examples.jsonl"))?;
    let manifests: Vec<_> = SplitName::ALL
        .iter()
        .map(|n| read_manifest(dir.join(format!("{}.manifest.jsonl", n.as_str()))))
        .collect::<std::result::Result<_, _>>()?;
    Ok(SplitBundle::from_manifests(
        &examples,
        [&manifests[0], &manifests[1], &manifests[2]],
        ctx.cfg.dataset.ratios,
        ctx.cfg.dataset_seed(),
    )?)
}

pub fn train_stage(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Train)?;
    let bundle = load_bundle(ctx)?;
    let opts = TrainOptions {
        cleaning_fingerprint: ctx.cfg.corpus.cleaning.fingerprint(),
        split_fingerprint: ctx.fingerprints[&Stage::Split].clone(),
    };
    let outcome = train(&ctx.cfg.training, &bundle, &dir, &opts)?;
    write_json(&dir.join("outcome.json"), &outcome)?;
    info!(
        "train: best epoch {} with val F1 {:.4} after {} epochs ({:.0}s)",
        outcome.best_epoch,
        outcome.best_val_f1,
        outcome.records.len(),
        outcome.seconds
    );
    ctx.finish(
        Stage::Train,
        up,
        json!({
            "best_epoch": outcome.best_epoch,
            "best_val_f1": outcome.best_val_f1,
            "epochs_run": outcome.records.len(),
            "checkpoint_fingerprint": outcome.checkpoint_fingerprint,
        }),
    )
}

fn checkpoint_dir(ctx: &StageContext) -> PathBuf {
    ctx.dir(Stage::Train).join(newsprobe_model::train::BEST_DIR)
}

pub fn evaluate(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Evaluate)?;
    let bundle = load_bundle(ctx)?;
    let loaded = Classifier::load(&checkpoint_dir(ctx), &select_device())?;
    let alpha = ctx.cfg.training.label_smoothing;
    let batch = ctx.cfg.training.eval_batch_size;
    let mut summary = serde_json::Map::new();
    for name in [SplitName::Validation, SplitName::Test] {
        let ev = evaluate_split(&loaded.classifier, bundle.get(name), batch, alpha)?;
        let tag = name.as_str();
        write_json(&dir.join(format!("{tag}_metrics.json")), &ev.report)?;
        fs::write(dir.join(format!("{tag}_report.txt")), ev.report.to_table())?;
        write_jsonl(&dir.join(format!("{tag}_predictions.jsonl")), &ev.predictions)?;
        println!("{tag} split ({} examples, loss {:.4})\n{}", bundle.get(name).len(), ev.loss, ev.report.to_table());
        summary.insert(tag.into(), json!({"f1": ev.report.metrics.f1, "accuracy": ev.report.metrics.accuracy, "loss": ev.loss}));
    }
    ctx.finish(Stage::Evaluate, up, serde_json::Value::Object(summary))
}

pub fn predict(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Predict)?;
    let loaded = Classifier::load(&checkpoint_dir(ctx), &select_device())?;
    let current = ctx.cfg.corpus.cleaning.fingerprint();
    if loaded.meta.cleaning_fingerprint != current {
        let msg = "checkpoint was trained under a different cleaning config than the current one";
        match ctx.cfg.inference.on_cleaning_mismatch {
            MismatchPolicy::Warn => warn!("{msg}"),
            MismatchPolicy::Error => bail!("{msg}"),
        }
    }
    let (articles, reports) = ingest_all(&ctx.cfg.inference.inputs, ctx.cfg).context("inference.inputs")?;
    let cleaner = ctx.cleaner()?;
    let cleaned: Vec<Article> = articles
        .into_iter()
        .map(|a| Article {
            body: cleaner.clean(&a.body),
            ..a
        })
        .collect();
    let predictions = predict_batch(&loaded.classifier, &cleaned, ctx.cfg.inference.batch_size)?;
    write_jsonl(&dir.join("predictions.jsonl"), &predictions)?;
    write_json(&dir.join("ingest_report.json"), &reports)?;
    let ai = predictions.iter().filter(|p| p.predicted == newsprobe_core::OriginLabel::AiRewritten).count();
    info!("predict: {} articles, {ai} predicted AI-rewritten", predictions.len());
    ctx.finish(
        Stage::Predict,
        up,
        json!({"articles": predictions.len(), "predicted_ai": ai, "checkpoint_fingerprint": loaded.meta.fingerprint()}),
    )
}

pub fn report(ctx: &StageContext) -> Result<()> {
    let (dir, up) = ctx.prepare(Stage::Report)?;
    let predictions: Vec<Prediction> = read_jsonl(&ctx.dir(Stage::Predict).join("predictions.jsonl"))?;
    let meta_path = checkpoint_dir(ctx).join(newsprobe_model::classifier::META_FILE);
    let meta: newsprobe_model::CheckpointMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .with_context(|| format!("reading {}", meta_path.display()))?;
    let report = PrevalenceReport::new(&predictions, meta.fingerprint(), meta.cleaning_fingerprint.clone(), Utc::now())?;
    let mut written = Vec::new();
    for &format in &ctx.cfg.inference.formats {
        let path = dir.join(format!("prevalence.{}", format.extension()));
        render_report(&report, format, &path)?;
        written.push(path.display().to_string());
    }
    println!(
        "{}overall AI-rewritten rate: {:.1}%",
        newsprobe_core::inference::render_to_string(&report, newsprobe_core::inference::ReportFormat::Markdown)?,
        report.overall_ai_rate
    );
    ctx.finish(
        Stage::Report,
        up,
        json!({"rows": report.rows.len(), "overall_ai_rate": report.overall_ai_rate, "files": written}),
    )
}

pub fn run_stage(ctx: &StageContext, stage: Stage) -> Result<()> {
    match stage {
        Stage::Ingest => ingest(ctx),
        Stage::Clean => clean(ctx),
        Stage::Synthesize => synthesize(ctx),
        Stage::Split => split(ctx),
        Stage::Train => train_stage(ctx),
        Stage::Evaluate => evaluate(ctx),
        Stage::Predict => predict(ctx),
        Stage::Report => report(ctx),
        Stage::Pipeline => {
            for s in Stage::ORDER {
                info!("== {} ==", s.name());
                run_stage(ctx, s).with_context(|| format!("stage `{}`", s.name()))?;
            }
            Ok(())
        }
    }
}
