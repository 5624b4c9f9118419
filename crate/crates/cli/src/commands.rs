use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kgadapt::autodiff::Scalar;
use kgadapt::corpus::{filter_non_target_language, generate_corpus_parallel, VerbalizationTable, WalkConfig};
use kgadapt::eval::{diagnostic_breakdown, read_tsv, render_tables, EvalReport, LabeledExample, Metric};
use kgadapt::kg::{cache, ingest, AssertionParser};
use kgadapt::model::{audit, AdapterConfig, AuditReport, Checkpoint, Model, ModelConfig, Section, TaskHead};
use kgadapt::tokenizer::{build_vocab, Vocabulary};
use kgadapt::train::{
    finetune, grid_report_tsv, predict, pretrain_adapters, pretrain_base, write_loss_log, FinetuneConfig,
    LossRecord, PretrainConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::layered::resolve;
use crate::manifest::{sidecar, Recorder};
use crate::{
    AuditArgs, CliError, Command, EvaluateArgs, FilterArgs, FinetuneArgs, IngestArgs, PretrainArgs, Precision,
    Preset, ReportArgs, VocabArgs, WalkArgs,
};

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Walk(a) => cmd_walk(a),
        Command::FilterOmcs(a) => cmd_filter(a),
        Command::BuildVocab(a) => cmd_vocab(a),
        Command::PretrainAdapters(a) => cmd_pretrain(a),
        Command::Finetune(a) => cmd_finetune(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
        Command::AuditParams(a) => cmd_audit(a),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    open(path)?
        .lines()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| io_err(path, e))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|e| io_err(path, e))
}

fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), CliError> {
    write_bytes(path, &ck.to_bytes()?)
}

fn print_summary(v: &Value) {
    println!("{v}");
}

fn cmd_ingest(a: IngestArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("ingest");
    rec.input(&a.input)?;
    let mut parser = AssertionParser::new(&a.lang);
    if let Some(ex) = &a.exclude {
        parser = parser.with_exclusions(ex.iter().map(String::as_str));
    }
    let (g, counts) = ingest(open(&a.input)?, &parser).map_err(|e| io_err(&a.input, e))?;
    let mut w = create(&a.output)?;
    cache::write_graph(&g, &mut w)?;
    w.flush().map_err(|e| io_err(&a.output, e))?;
    rec.config(json!({ "lang": a.lang, "exclude": a.exclude }), Default::default());
    let stats = g.stats();
    let summary = json!({ "counts": counts, "nodes": stats.nodes, "edges": stats.edges, "sinks": stats.sinks });
    if counts.malformed > 0 {
        eprintln!("warning: {} malformed lines skipped", counts.malformed);
    }
    print_summary(&summary);
    rec.summary(summary);
    rec.output(&a.output);
    rec.finish()?;
    Ok(())
}

fn cmd_walk(a: WalkArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("walk");
    rec.input(&a.graph)?;
    let g = cache::read_graph(open(&a.graph)?).map_err(|e| io_err(&a.graph, e))?;
    let mut table = VerbalizationTable::default();
    if let Some(t) = &a.templates {
        rec.input(t)?;
        let text = std::fs::read_to_string(t).map_err(|e| io_err(t, e))?;
        table.apply_overrides(&text)?;
    }
    let cfg = WalkConfig::new(a.len, a.walks, a.seed)?;
    let corpus = generate_corpus_parallel(&g, &cfg, &table, a.threads.max(1))?;
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    let mut w = create(&a.out)?;
    corpus.write_to(&mut w)?;
    w.flush().map_err(|e| io_err(&a.out, e))?;
    let prov = sidecar(&a.out, ".provenance.json");
    let prov_text = serde_json::to_string_pretty(&corpus.provenance).map_err(|e| CliError::data(e.to_string()))?;
    write_bytes(&prov, prov_text.as_bytes())?;
    rec.config(json!({ "walks": a.walks, "len": a.len, "threads": a.threads }), Default::default());
    rec.seed("walk", a.seed);
    let summary = json!({ "sentences": corpus.sentences.len(), "walks": corpus.walk_sizes.len() });
    print_summary(&summary);
    rec.summary(summary);
    rec.output(&a.out);
    rec.output(&prov);
    rec.finish()?;
    Ok(())
}

fn cmd_filter(a: FilterArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("filter-omcs");
    rec.input(&a.input)?;
    let lines = read_lines(&a.input)?;
    let total = lines.len();
    let mut w = create(&a.out)?;
    let mut kept = 0usize;
    for l in filter_non_target_language(lines, a.threshold)? {
        writeln!(w, "{l}").map_err(|e| io_err(&a.out, e))?;
        kept += 1;
    }
    w.flush().map_err(|e| io_err(&a.out, e))?;
    rec.config(json!({ "threshold": a.threshold }), Default::default());
    let summary = json!({ "lines": total, "kept": kept });
    print_summary(&summary);
    rec.summary(summary);
    rec.output(&a.out);
    rec.finish()?;
    Ok(())
}

fn cmd_vocab(a: VocabArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("build-vocab");
    rec.input(&a.input)?;
    let lines = read_lines(&a.input)?;
    let vocab = build_vocab(&lines, a.size, a.min_freq)?;
    let mut w = create(&a.out)?;
    vocab.write(&mut w)?;
    w.flush().map_err(|e| io_err(&a.out, e))?;
    rec.config(json!({ "size": a.size, "min_freq": a.min_freq }), Default::default());
    let summary = json!({ "tokens": vocab.len() });
    print_summary(&summary);
    rec.summary(summary);
    rec.output(&a.out);
    rec.finish()?;
    Ok(())
}

fn read_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    Vocabulary::read(open(path)?).map_err(|e| io_err(path, e))
}

/// Encoder shape and injection options for `pretrain-adapters`. Shape fields
/// are ignored when a base checkpoint supplies the encoder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelOptions {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub max_positions: usize,
    pub dropout: f64,
    pub adapter_size: usize,
    /// MLM steps over the whole fresh encoder before injection; 0 skips.
    pub base_steps: u64,
    pub base_lr: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        let d = ModelConfig::desk(0);
        ModelOptions {
            layers: d.layers,
            hidden: d.hidden,
            heads: d.heads,
            ffn: d.ffn,
            max_positions: d.max_positions,
            dropout: d.dropout,
            adapter_size: AdapterConfig::desk().size,
            base_steps: 0,
            base_lr: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PretrainRun {
    #[serde(flatten)]
    pub train: PretrainConfig,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default = "f32_precision")]
    pub precision: Precision,
}

fn f32_precision() -> Precision {
    Precision::F32
}

fn write_log(path: &Path, log: &[LossRecord]) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_loss_log(log, &mut w)?;
    w.flush().map_err(|e| io_err(path, e))
}

fn mlm_pass<S: Scalar>(
    model: &Model<f32>,
    corpus: &[String],
    vocab: &Vocabulary,
    cfg: &PretrainConfig,
    adapters: bool,
) -> Result<(Model<f32>, kgadapt::train::PretrainOutcome), CliError> {
    let mut m = model.cast::<S>();
    let out = if adapters {
        pretrain_adapters(&mut m, corpus, vocab, cfg)?
    } else {
        pretrain_base(&mut m, corpus, vocab, cfg)?
    };
    Ok((m.cast::<f32>(), out))
}

fn mlm_at(
    p: Precision,
    model: &Model<f32>,
    corpus: &[String],
    vocab: &Vocabulary,
    cfg: &PretrainConfig,
    adapters: bool,
) -> Result<(Model<f32>, kgadapt::train::PretrainOutcome), CliError> {
    match p {
        Precision::F32 => mlm_pass::<f32>(model, corpus, vocab, cfg, adapters),
        Precision::F64 => mlm_pass::<f64>(model, corpus, vocab, cfg, adapters),
    }
}

fn cmd_pretrain(a: PretrainArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("pretrain-adapters");
    let mut flags: Vec<(&str, Value)> = Vec::new();
    if let Some(v) = a.steps {
        flags.push(("optimizer.total_steps", json!(v)));
    }
    if let Some(v) = a.warmup {
        flags.push(("optimizer.warmup_steps", json!(v)));
    }
    if let Some(v) = a.lr {
        flags.push(("optimizer.peak_lr", json!(v)));
    }
    if let Some(v) = a.batch_size {
        flags.push(("optimizer.batch_size", json!(v)));
    }
    if let Some(v) = a.max_len {
        flags.push(("max_len", json!(v)));
    }
    if let Some(v) = a.seed {
        flags.push(("seed", json!(v)));
        flags.push(("masking.seed", json!(v)));
    }
    if let Some(v) = a.adapter_size {
        flags.push(("model.adapter_size", json!(v)));
    }
    if let Some(v) = a.base_steps {
        flags.push(("model.base_steps", json!(v)));
    }
    if let Some(v) = &a.snapshot_steps {
        flags.push(("snapshot_steps", json!(v)));
    }
    if let Some(v) = a.precision {
        flags.push(("precision", json!(v)));
    }
    let defaults = PretrainRun {
        train: PretrainConfig::default(),
        model: ModelOptions::default(),
        precision: Precision::F32,
    };
    let mut layered = resolve(&defaults, a.config.as_deref(), flags)?;
    // A shortened run without an explicit warmup keeps the default 10% ratio.
    let src = |k: &str| layered.sources.get(k).map(String::as_str);
    if src("optimizer.warmup_steps") == Some("default") && src("optimizer.total_steps") != Some("default") {
        let o = &mut layered.value.train.optimizer;
        o.warmup_steps = o.total_steps / 10;
        layered.sources.insert("optimizer.warmup_steps".into(), "derived".into());
        layered.snapshot["optimizer"]["warmup_steps"] = json!(o.warmup_steps);
    }
    let run = layered.value;
    if let Some(c) = &a.config {
        rec.input(c)?;
    }
    rec.config(layered.snapshot, layered.sources);
    rec.input(&a.corpus)?;
    rec.input(&a.vocab)?;
    let corpus: Vec<String> = read_lines(&a.corpus)?.into_iter().filter(|l| !l.trim().is_empty()).collect();
    let vocab = read_vocab(&a.vocab)?;
    let seed = run.train.seed;
    rec.seed("train", seed);
    rec.seed("masking", run.train.masking.seed);
    let adapter = AdapterConfig { size: run.model.adapter_size };

    let (base, base_log) = match &a.base {
        Some(path) => {
            rec.input(path)?;
            let ck = load_checkpoint(path)?;
            if !ck.has_section(Section::Base) {
                return Err(CliError::data(format!("{}: checkpoint has no base section", path.display())));
            }
            let mut cfg = ck.header.model.clone();
            cfg.vocab_size = vocab.len();
            if ck.header.model.vocab_size != vocab.len() {
                return Err(CliError::data(format!(
                    "vocabulary has {} tokens but the base checkpoint expects {}",
                    vocab.len(),
                    ck.header.model.vocab_size
                )));
            }
            let mut base = Model::<f32>::new(cfg, None, true, None, seed)?;
            ck.apply_section(&mut base, Section::Base)?;
            if ck.header.mlm_head && ck.has_section(Section::Head) && ck.header.task.is_none() {
                base.copy_section(&ck.store(), Section::Head)?;
            }
            (base, None)
        }
        None => {
            let m = &run.model;
            let cfg = ModelConfig {
                layers: m.layers,
                hidden: m.hidden,
                heads: m.heads,
                ffn: m.ffn,
                max_positions: m.max_positions,
                dropout: m.dropout,
                ..ModelConfig::desk(vocab.len())
            };
            let base = Model::<f32>::new(cfg, None, true, None, seed)?;
            if m.base_steps > 0 {
                let mut bc = run.train.clone();
                bc.optimizer.peak_lr = m.base_lr;
                bc.optimizer = bc.optimizer.with_steps(m.base_steps / 10, m.base_steps);
                bc.snapshot_steps.clear();
                let (trained, out) = mlm_at(run.precision, &base, &corpus, &vocab, &bc, false)?;
                (trained, Some(out.log))
            } else {
                (base, None)
            }
        }
    };
    let mut model = Model::<f32>::new(base.config().clone(), Some(adapter), true, None, seed)?;
    model.copy_section(base.store(), Section::Base)?;
    model.copy_section(base.store(), Section::Head)?;
    let (model, out) = mlm_at(run.precision, &model, &corpus, &vocab, &run.train, true)?;

    let mut ck = Checkpoint::from_model(&model, &[Section::Base, Section::Adapter, Section::Head], Some(&vocab));
    ck.header.metadata.insert("max_len".into(), json!(run.train.max_len));
    ck.header.metadata.insert("steps".into(), json!(run.train.optimizer.total_steps));
    save_checkpoint(&a.out, &ck)?;
    rec.output(&a.out);
    let log_path = a.loss_log.clone().unwrap_or_else(|| sidecar(&a.out, ".loss.csv"));
    write_log(&log_path, &out.log)?;
    rec.output(&log_path);
    if let Some(log) = &base_log {
        let p = sidecar(&a.out, ".base.loss.csv");
        write_log(&p, log)?;
        rec.output(&p);
    }
    for (step, snap) in &out.snapshots {
        let p = sidecar(&a.out, &format!(".step{step}"));
        save_checkpoint(&p, snap)?;
        rec.output(&p);
    }
    let first = out.log.first().map(|r| r.loss);
    let last = out.log.last().map(|r| r.loss);
    let summary = json!({
        "steps": run.train.optimizer.total_steps,
        "first_loss": first,
        "final_loss": last,
        "trainable": model.store().params().iter().filter(|p| p.trainable).map(|p| p.value.len()).sum::<usize>(),
        "snapshots": out.snapshots.len(),
    });
    print_summary(&summary);
    rec.summary(summary);
    rec.finish()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FinetuneRun {
    #[serde(flatten)]
    pub train: FinetuneConfig,
    #[serde(default = "f32_precision")]
    pub precision: Precision,
}

fn read_examples(path: &Path) -> Result<Vec<LabeledExample>, CliError> {
    read_tsv(open(path)?).map_err(|e| io_err(path, e))
}

fn checkpoint_vocab(ck: &Checkpoint, path: &Path) -> Result<Vocabulary, CliError> {
    ck.vocabulary()?
        .ok_or_else(|| CliError::data(format!("{}: checkpoint carries no vocabulary", path.display())))
}

fn tune<S: Scalar>(
    base: &Model<f32>,
    train: &[LabeledExample],
    dev: &[LabeledExample],
    vocab: &Vocabulary,
    cfg: &FinetuneConfig,
) -> Result<kgadapt::train::FinetuneOutcome<f32>, CliError> {
    let o = finetune(&base.cast::<S>(), train, dev, vocab, cfg)?;
    Ok(kgadapt::train::FinetuneOutcome {
        model: o.model.cast::<f32>(),
        best: o.best,
        cells: o.cells,
    })
}

fn cmd_finetune(a: FinetuneArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("finetune");
    let train_path = a.data.join("train.tsv");
    let dev_path = a.data.join("dev.tsv");
    for p in [&a.model, &train_path, &dev_path] {
        rec.input(p)?;
    }
    let ck = load_checkpoint(&a.model)?;
    let vocab = checkpoint_vocab(&ck, &a.model)?;
    let base = ck.into_model().map_err(|e| io_err(&a.model, e))?;
    let train = read_examples(&train_path)?;
    let dev = read_examples(&dev_path)?;

    let metric = Metric::for_task(&a.task);
    let head = if metric.is_regression() {
        TaskHead::Regression
    } else {
        let inferred = train.iter().map(|e| e.label as usize + 1).max().unwrap_or(2).max(2);
        TaskHead::Classification {
            num_labels: a.labels.unwrap_or(inferred),
        }
    };
    let mut flags: Vec<(&str, Value)> = Vec::new();
    if let Some(v) = &a.lrs {
        flags.push(("grid.learning_rates", json!(v)));
    }
    if let Some(v) = &a.epochs {
        flags.push(("grid.epochs", json!(v)));
    }
    if let Some(v) = a.batch_size {
        flags.push(("batch_size", json!(v)));
    }
    if let Some(v) = a.max_len {
        flags.push(("max_len", json!(v)));
    }
    if let Some(v) = a.seed {
        flags.push(("seed", json!(v)));
    }
    if a.freeze_base {
        flags.push(("freeze_base", json!(true)));
    }
    if let Some(v) = a.precision {
        flags.push(("precision", json!(v)));
    }
    let defaults = FinetuneRun {
        train: FinetuneConfig::new(head, metric),
        precision: Precision::F32,
    };
    if let Some(c) = &a.config {
        rec.input(c)?;
    }
    let layered = resolve(&defaults, a.config.as_deref(), flags)?;
    let run = layered.value;
    rec.config(layered.snapshot, layered.sources);
    rec.seed("train", run.train.seed);
    let outcome = match run.precision {
        Precision::F32 => tune::<f32>(&base, &train, &dev, &vocab, &run.train)?,
        Precision::F64 => tune::<f64>(&base, &train, &dev, &vocab, &run.train)?,
    };
    let model = &outcome.model;
    let mut sections = vec![Section::Base, Section::Head];
    if model.adapter_config().is_some() {
        sections.push(Section::Adapter);
    }
    let mut out = Checkpoint::from_model(model, &sections, Some(&vocab));
    out.header.metadata.insert("task".into(), json!(a.task));
    out.header.metadata.insert("metric".into(), json!(run.train.metric));
    out.header.metadata.insert("max_len".into(), json!(run.train.max_len));
    save_checkpoint(&a.out, &out)?;
    rec.output(&a.out);
    let grid = sidecar(&a.out, ".grid.tsv");
    write_bytes(&grid, grid_report_tsv(&outcome.cells, outcome.best, run.train.metric).as_bytes())?;
    rec.output(&grid);
    let best = &outcome.cells[outcome.best];
    let summary = json!({
        "task": a.task,
        "metric": run.train.metric,
        "best_learning_rate": best.learning_rate,
        "best_epochs": best.epochs,
        "dev_score": best.dev_score,
    });
    print_summary(&summary);
    rec.summary(summary);
    rec.finish()?;
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn report_paths(report: &Path) -> (PathBuf, PathBuf) {
    if report.extension().is_some_and(|e| e == "tsv") {
        (report.with_extension("json"), report.to_path_buf())
    } else {
        (report.to_path_buf(), report.with_extension("tsv"))
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("evaluate");
    rec.input(&a.model)?;
    rec.input(&a.data)?;
    let ck = load_checkpoint(&a.model)?;
    let vocab = checkpoint_vocab(&ck, &a.model)?;
    let meta = ck.header.metadata.clone();
    let model = ck.into_model().map_err(|e| io_err(&a.model, e))?;
    let head = *model
        .task()
        .ok_or_else(|| CliError::data(format!("{}: checkpoint has no task head", a.model.display())))?;
    let task = a
        .task
        .clone()
        .or_else(|| meta.get("task").and_then(Value::as_str).map(String::from))
        .unwrap_or_else(|| stem(&a.data));
    let metric = match head {
        TaskHead::Regression => Metric::Spearman,
        TaskHead::Classification { .. } => Metric::for_task(&task),
    };
    let max_len = a
        .max_len
        .or_else(|| meta.get("max_len").and_then(Value::as_u64).map(|v| v as usize))
        .unwrap_or(kgadapt::tokenizer::DEFAULT_MAX_LEN);
    let examples = read_examples(&a.data)?;
    let preds = predict(&model, &examples, &vocab, max_len, a.batch_size)?;
    let name = a.name.clone().unwrap_or_else(|| stem(&a.model));
    let report = diagnostic_breakdown(&name, &task, &examples, &preds, metric, head.outputs())?;
    let (json_path, tsv_path) = report_paths(&a.report);
    write_bytes(&json_path, report.to_json()?.as_bytes())?;
    write_bytes(&tsv_path, report.to_tsv().as_bytes())?;
    rec.config(json!({ "task": task, "metric": metric, "max_len": max_len, "batch_size": a.batch_size }), Default::default());
    rec.output(&json_path);
    rec.output(&tsv_path);
    let summary = json!({ "model": name, "task": task, "metric": metric, "examples": report.examples, "score": report.primary });
    print_summary(&summary);
    rec.summary(summary);
    rec.finish()?;
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("report");
    let mut reports = Vec::new();
    for p in &a.reports {
        rec.input(p)?;
        let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        reports.push(EvalReport::from_json(&text).map_err(|e| io_err(p, e))?);
    }
    let tables = render_tables(&reports);
    match &a.out {
        Some(out) => {
            write_bytes(out, tables.as_bytes())?;
            rec.output(out);
            rec.summary(json!({ "reports": reports.len() }));
            rec.finish()?;
        }
        None => print!("{tables}"),
    }
    Ok(())
}

fn audit_checkpoint(path: &Path) -> Result<AuditReport, CliError> {
    let ck = load_checkpoint(path)?;
    let h = &ck.header;
    let specs: Vec<_> = h.params.iter().map(|e| e.spec()).collect();
    let trainable: std::collections::HashMap<String, bool> =
        h.params.iter().map(|e| (e.name.clone(), e.trainable)).collect();
    Ok(audit(&specs, |s| trainable[&s.name], &h.model, h.adapter.as_ref()))
}

fn audit_preset(preset: Preset, adapter_size: Option<usize>, vocab_size: Option<usize>) -> Result<AuditReport, CliError> {
    let (mut config, default_adapter) = match preset {
        Preset::Paper => (ModelConfig::paper(), AdapterConfig::paper()),
        Preset::Desk => (ModelConfig::desk(1000), AdapterConfig::desk()),
    };
    if let Some(v) = vocab_size {
        config.vocab_size = v;
    }
    let adapter = match adapter_size {
        Some(0) => None,
        Some(m) => Some(AdapterConfig { size: m }),
        None => Some(default_adapter),
    };
    let specs = Model::<f32>::specs(&config, adapter.as_ref(), true, None)?;
    // Audited as set up for knowledge injection: base frozen.
    Ok(audit(&specs, |s| s.section != Section::Base, &config, adapter.as_ref()))
}

pub fn audit_text(r: &AuditReport) -> String {
    let mut s = r.to_tsv();
    s.push_str(&format!("base\t\t{}\t\t\n", r.base));
    s.push_str(&format!("adapter\t\t{}\t\t\n", r.adapter));
    s.push_str(&format!("head\t\t{}\t\t\n", r.head));
    match &r.adapters {
        Some(a) => {
            s.push_str(&format!("adapters\t{}\n", a.adapters));
            s.push_str(&format!("per_adapter\t{}\n", a.per_adapter));
            s.push_str(&format!("ratio_h_over_m\t{}\n", a.ratio));
        }
        None => s.push_str("adapters\t0\n"),
    }
    s
}

fn cmd_audit(a: AuditArgs) -> Result<(), CliError> {
    let report = match (&a.checkpoint, a.preset) {
        (Some(p), _) => audit_checkpoint(p)?,
        (None, Some(preset)) => audit_preset(preset, a.adapter_size, a.vocab_size)?,
        (None, None) => return Err(CliError::usage("audit-params needs --checkpoint or --preset")),
    };
    if a.json {
        println!("{}", serde_json::to_string(&report).map_err(|e| CliError::data(e.to_string()))?);
    } else {
        print!("{}", audit_text(&report));
    }
    Ok(())
}
