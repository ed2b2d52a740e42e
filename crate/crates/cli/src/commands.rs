use std::path::{Path, PathBuf};
use std::sync::Arc;

use panacea_core::checkpoint::{Checkpoint, TensorEncoding};
use panacea_core::corpus::{Claim, PropagationTree, Store};
use panacea_core::optim::GradCheckReport;
use panacea_core::nlisan::{self, NlisanConfig, NlisanError, NlisanParams, TrainConfig};
use panacea_core::retrieval::{
    evaluate_pipeline, load_judged_queries, ApRow, CosineReranker, HashedTfidfEncoder, InvertedIndex,
    PipelineConfig, RetrievalError,
};
use panacea_core::rumournet::{
    bigcn_gradient_check, evaluate_cross_dataset, train_bigcn, BigcnConfig, BigcnParams, RumourError,
};
use panacea_service::api::{serve, AppState, StartupError};
use panacea_service::config::ServiceConfig;
use panacea_service::engine::{
    nli_provider, paragraph_index, tree_index, EngineError, EngineSettings, Models, PanaceaEngine,
};
use serde_json::json;

use crate::{Cli, CliError, Command, EvalTask, IndexAction, IngestKind, ModelKind, Outcome, TrainArgs};

const INDEX_DIR: &str = "index";
const PARAGRAPH_INDEX: &str = "paragraphs.json";
const TREE_INDEX: &str = "trees.json";
const GRADCHECK_TOLERANCE: f64 = 1e-4;

type CmdResult = Result<Outcome, CliError>;

pub fn execute(cli: &Cli) -> CmdResult {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Ingest { kind, path, min_size } => ingest(&config, *kind, path, *min_size),
        Command::Index { action: IndexAction::Build } => index_build(&config),
        Command::Index { action: IndexAction::Stats } => index_stats(&config),
        Command::Search { query, k } => search(&config, query, *k),
        Command::Train(args) => match args.model {
            ModelKind::Nlisan => train_nlisan(&config, args),
            ModelKind::Bigcn => train_rumour(&config, args),
        },
        Command::Eval { task: EvalTask::Retrieval { queries } } => eval_retrieval(&config, queries),
        Command::Eval { task: EvalTask::Rumour { model, train_set, tests } } => {
            eval_rumour(&config, model.as_deref(), train_set, tests)
        }
        Command::Precompute => precompute(&config),
        Command::Serve { bind, slots } => {
            let mut config = config;
            if let Some(b) = bind {
                config.bind = b.clone();
            }
            if let Some(s) = slots {
                config.slots = *s;
            }
            config.validate().map_err(CliError::usage)?;
            run_server(&config)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, CliError> {
    let mut config = ServiceConfig::resolve(cli.config.as_deref()).map_err(CliError::usage)?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

fn open_store(config: &ServiceConfig) -> Result<Store, CliError> {
    Store::open(&config.data_dir).map_err(CliError::data)
}

fn ingest(config: &ServiceConfig, kind: IngestKind, path: &Path, min_size: usize) -> CmdResult {
    let mut store = open_store(config)?;
    match kind {
        IngestKind::Docs => {
            let r = store.ingest_documents(path).map_err(CliError::data)?;
            let mut summary = format!("{} documents, {} paragraphs", r.documents, r.paragraphs);
            if r.duplicates > 0 {
                summary.push_str(&format!(", {} duplicates", r.duplicates));
            }
            Ok(Outcome::new(summary, json!(r)))
        }
        IngestKind::Claims => {
            let r = store.ingest_claims(path).map_err(CliError::data)?;
            Ok(Outcome::new(format!("{} claims, {} duplicates", r.added, r.duplicates), json!(r)))
        }
        IngestKind::Trees => {
            let r = store.ingest_trees(path, min_size).map_err(CliError::data)?;
            let summary = format!("{} trees accepted, {} rejected, {} duplicates", r.accepted, r.rejected, r.duplicates);
            Ok(Outcome::new(summary, json!(r)))
        }
    }
}

fn index_dir(config: &ServiceConfig) -> PathBuf {
    config.data_dir.join(INDEX_DIR)
}

fn index_summary(index: &InvertedIndex) -> serde_json::Value {
    json!({ "units": index.len(), "avg_length": index.avg_doc_length(), "terms": index.terms().count() })
}

fn index_build(config: &ServiceConfig) -> CmdResult {
    let store = open_store(config)?;
    let paragraphs = paragraph_index(&store).map_err(|e| match e {
        RetrievalError::EmptyCorpus => CliError::data("no paragraphs to index; ingest documents first"),
        other => CliError::data(other),
    })?;
    let dir = index_dir(config);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    paragraphs.save(dir.join(PARAGRAPH_INDEX)).map_err(CliError::runtime)?;
    let trees = match tree_index(store.trees()) {
        Ok(index) => {
            index.save(dir.join(TREE_INDEX)).map_err(CliError::runtime)?;
            Some(index)
        }
        Err(RetrievalError::EmptyCorpus) => {
            let _ = std::fs::remove_file(dir.join(TREE_INDEX));
            None
        }
        Err(e) => return Err(CliError::data(e)),
    };
    let tree_units = trees.as_ref().map_or(0, InvertedIndex::len);
    Ok(Outcome::new(
        format!("paragraph index: {} units; tree index: {tree_units} units", paragraphs.len()),
        json!({ "paragraphs": index_summary(&paragraphs), "trees": trees.as_ref().map(index_summary) }),
    ))
}

fn index_stats(config: &ServiceConfig) -> CmdResult {
    let dir = index_dir(config);
    let path = dir.join(PARAGRAPH_INDEX);
    if !path.exists() {
        return Err(CliError::data("index not built; run `panacea index build`"));
    }
    let paragraphs = InvertedIndex::load(&path).map_err(CliError::data)?;
    let trees = match dir.join(TREE_INDEX) {
        p if p.exists() => Some(InvertedIndex::load(&p).map_err(CliError::data)?),
        _ => None,
    };
    let mut summary = format!("paragraphs: {} units, avg length {:.2}", paragraphs.len(), paragraphs.avg_doc_length());
    if let Some(t) = &trees {
        summary.push_str(&format!("; trees: {} units, avg length {:.2}", t.len(), t.avg_doc_length()));
    }
    Ok(Outcome::new(
        summary,
        json!({ "paragraphs": index_summary(&paragraphs), "trees": trees.as_ref().map(index_summary) }),
    ))
}

fn search(config: &ServiceConfig, query: &str, k: usize) -> CmdResult {
    let store = open_store(config)?;
    let index = paragraph_index(&store).map_err(CliError::data)?;
    let hits = index.search(query, k);
    for (rank, (id, score)) in hits.iter().enumerate() {
        let text = &index.unit(id).expect("hit is indexed").text;
        let snippet: String = text.chars().take(80).collect();
        println!("{:>3}. {id} {score:.4} {snippet}", rank + 1);
    }
    let details: Vec<_> = hits.iter().map(|(id, score)| json!({ "unit_id": id, "score": score })).collect();
    Ok(Outcome::new(format!("{} hits", hits.len()), json!(details)))
}

fn load_named_checkpoint(path: &Path, model: &str) -> Result<Checkpoint, CliError> {
    let ck = Checkpoint::load(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if ck.model != model {
        return Err(CliError::data(format!("{} holds a {} model, not {model}", path.display(), ck.model)));
    }
    Ok(ck)
}

fn engine_with(store: &Store, config: &ServiceConfig, models: Models) -> Result<PanaceaEngine, CliError> {
    PanaceaEngine::build(store, models, nli_provider(config), EngineSettings::from(config)).map_err(CliError::data)
}

fn train_config(args: &TrainArgs) -> Result<TrainConfig, CliError> {
    if args.epochs == 0 || args.batch_size == 0 {
        return Err(CliError::usage("epochs and batch size must be positive"));
    }
    if !args.lr.is_finite() || args.lr < 0.0 {
        return Err(CliError::usage("learning rate must be a non-negative number"));
    }
    Ok(TrainConfig { epochs: args.epochs, lr: args.lr, seed: args.seed, batch_size: args.batch_size })
}

fn save_checkpoint(ck: &Checkpoint, out: &Path) -> Result<(), CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    }
    ck.save(out, TensorEncoding::Binary).map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))
}

fn labelled_claims(store: &Store, data: Option<&Path>) -> Result<Vec<Claim>, CliError> {
    match data {
        None => Ok(store.claims().to_vec()),
        Some(path) => {
            let mut scratch = Store::in_memory();
            scratch.ingest_claims(path).map_err(CliError::data)?;
            Ok(scratch.claims().to_vec())
        }
    }
}

fn labelled_trees(path: &Path) -> Result<Vec<PropagationTree>, CliError> {
    let mut scratch = Store::in_memory();
    let report = scratch.ingest_trees(path, 1).map_err(CliError::data)?;
    if let Some(r) = report.rejections.first() {
        tracing::warn!(tree = %r.tree_id, reason = %r.reason, rejected = report.rejected, "skipping invalid trees");
    }
    Ok(scratch.trees().to_vec())
}

fn final_loss(curve: &[f64]) -> Result<f64, CliError> {
    match curve.last() {
        Some(l) if l.is_finite() => Ok(*l),
        _ => Err(CliError::runtime("training diverged: loss is not finite")),
    }
}

fn gradcheck_line(r: &GradCheckReport) -> Result<String, CliError> {
    let (max_error, coords) = (r.max_relative_error, r.coordinates_checked);
    let mut line = format!("gradcheck max relative error {max_error:.3e} over {coords} coordinates");
    if let Some((tensor, offset, analytic, numeric)) = r.worst {
        line.push_str(&format!(" (worst: tensor {tensor}[{offset}] analytic {analytic:.3e} numeric {numeric:.3e})"));
    }
    if max_error < GRADCHECK_TOLERANCE {
        Ok(line)
    } else {
        Err(CliError::runtime(line))
    }
}

fn train_nlisan(config: &ServiceConfig, args: &TrainArgs) -> CmdResult {
    let cfg = train_config(args)?;
    let store = open_store(config)?;
    let init = match &args.from {
        Some(p) => NlisanParams::from_checkpoint(&load_named_checkpoint(p, "nlisan")?).map_err(CliError::data)?,
        None => NlisanParams::init(NlisanConfig::default(), args.seed),
    };
    let models = Models { nlisan: init.clone(), bigcn: BigcnParams::init(BigcnConfig::default(), args.seed) };
    let engine = engine_with(&store, config, models)?;
    let claims = labelled_claims(&store, args.data.as_deref())?;
    let examples = engine.veracity_examples(&claims).map_err(CliError::runtime)?;
    // Checked at the starting weights, before any update.
    let gradcheck = match (examples.first(), args.gradcheck) {
        (Some(ex), true) => {
            let r = nlisan::gradient_check(&init, &ex.inputs, ex.label, 1e-5, 100, args.seed).map_err(CliError::runtime)?;
            Some((gradcheck_line(&r)?, r))
        }
        _ => None,
    };
    let out = nlisan::train(init, &examples, &cfg).map_err(|e| match e {
        NlisanError::EmptyDataset => CliError::data("no labelled claims with retrievable evidence"),
        NlisanError::NonFinite => CliError::runtime(e),
        other => CliError::data(other),
    })?;
    let loss = final_loss(&out.loss_curve)?;
    let mut summary = format!(
        "nlisan: {} examples, final loss {loss:.4}, train accuracy {:.3}, checkpoint {}",
        examples.len(),
        out.train_accuracy,
        args.out.display()
    );
    if let Some((line, _)) = &gradcheck {
        summary = format!("{summary}; {line}");
    }
    save_checkpoint(&out.params.to_checkpoint(), &args.out)?;
    Ok(Outcome::new(
        summary,
        json!({
            "model": "nlisan",
            "examples": examples.len(),
            "loss_curve": out.loss_curve,
            "train_accuracy": out.train_accuracy,
            "checkpoint": args.out,
            "gradcheck": gradcheck.map(|(_, r)| r),
        }),
    ))
}

fn train_rumour(config: &ServiceConfig, args: &TrainArgs) -> CmdResult {
    let cfg = train_config(args)?;
    let store = open_store(config)?;
    let init = match &args.from {
        Some(p) => BigcnParams::from_checkpoint(&load_named_checkpoint(p, "bigcn")?).map_err(CliError::data)?,
        None => BigcnParams::init(BigcnConfig::default(), args.seed),
    };
    let models = Models { nlisan: NlisanParams::init(NlisanConfig::default(), args.seed), bigcn: init.clone() };
    let engine = engine_with(&store, config, models)?;
    let trees = match &args.data {
        Some(path) => labelled_trees(path)?,
        None => store.trees().to_vec(),
    };
    let graphs = engine.rumour_examples(&trees).map_err(CliError::data)?;
    // Checked at the starting weights, before any update.
    let gradcheck = match (graphs.first(), args.gradcheck) {
        (Some(ex), true) => {
            let r = bigcn_gradient_check(&init, &ex.graph, ex.label, 1e-5, 100, args.seed).map_err(CliError::runtime)?;
            Some((gradcheck_line(&r)?, r))
        }
        _ => None,
    };
    let out = train_bigcn(init, &graphs, &cfg).map_err(|e| match e {
        RumourError::EmptyDataset => CliError::data("no labelled trees to train on"),
        RumourError::NonFinite => CliError::runtime(e),
        other => CliError::data(other),
    })?;
    let loss = final_loss(&out.loss_curve)?;
    let mut summary = format!(
        "bigcn: {} trees, final loss {loss:.4}, train accuracy {:.3}, checkpoint {}",
        graphs.len(),
        out.train_accuracy,
        args.out.display()
    );
    if let Some((line, _)) = &gradcheck {
        summary = format!("{summary}; {line}");
    }
    save_checkpoint(&out.params.to_checkpoint(), &args.out)?;
    Ok(Outcome::new(
        summary,
        json!({
            "model": "bigcn",
            "examples": graphs.len(),
            "loss_curve": out.loss_curve,
            "train_accuracy": out.train_accuracy,
            "checkpoint": args.out,
            "gradcheck": gradcheck.map(|(_, r)| r),
        }),
    ))
}

fn ap_line(row: &ApRow) -> String {
    let cols: Vec<String> = row.ap.iter().map(|(k, v)| format!("AP@{k} {v:.4}")).collect();
    format!("{}: {}", row.pipeline, cols.join(" "))
}

fn eval_retrieval(config: &ServiceConfig, queries: &Path) -> CmdResult {
    let judged = load_judged_queries(queries).map_err(CliError::data)?;
    if judged.is_empty() {
        return Err(CliError::data(format!("{} holds no judged queries", queries.display())));
    }
    let store = open_store(config)?;
    let index = paragraph_index(&store).map_err(CliError::data)?;
    let encoder = Arc::new(HashedTfidfEncoder::from_index(&index, config.encoder_dim));
    let reranker = CosineReranker::new(encoder);
    let rows = [
        evaluate_pipeline(&judged, &index, PipelineConfig::Bm25).map_err(CliError::data)?,
        evaluate_pipeline(&judged, &index, PipelineConfig::Bm25Rerank { reranker: &reranker, n1: config.retrieval.n1 })
            .map_err(CliError::data)?,
    ];
    let lines: Vec<String> = rows.iter().map(ap_line).collect();
    Ok(Outcome::new(format!("{} queries\n{}", judged.len(), lines.join("\n")), json!(rows)))
}

fn split_test_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            (name, path)
        }
    }
}

fn eval_rumour(config: &ServiceConfig, model: Option<&Path>, train_set: &str, tests: &[String]) -> CmdResult {
    let store = open_store(config)?;
    let mut models = Models::load(config).map_err(CliError::usage)?;
    if let Some(p) = model {
        models.bigcn = BigcnParams::from_checkpoint(&load_named_checkpoint(p, "bigcn")?).map_err(CliError::data)?;
    }
    let params = models.bigcn.clone();
    let engine = engine_with(&store, config, models)?;
    let mut reports = Vec::new();
    for spec in tests {
        let (name, path) = split_test_spec(spec);
        let graphs = engine.rumour_examples(&labelled_trees(&path)?).map_err(CliError::data)?;
        let report = evaluate_cross_dataset(&params, train_set, &name, &graphs).map_err(|e| match e {
            RumourError::EmptyDataset => CliError::data(format!("{} holds no labelled trees", path.display())),
            other => CliError::data(other),
        })?;
        reports.push(report);
    }
    let lines: Vec<String> = reports
        .iter()
        .map(|r| format!("{} -> {}: accuracy {:.4} over {} trees", r.train_set, r.test_set, r.accuracy, r.examples))
        .collect();
    Ok(Outcome::new(lines.join("\n"), json!(reports)))
}

fn startup_error(e: StartupError) -> CliError {
    match e {
        StartupError::Engine(EngineError::Checkpoint { .. } | EngineError::WrongModel { .. }) => CliError::usage(e),
        StartupError::Store(_) | StartupError::Engine(_) => CliError::data(e),
        StartupError::Cache(_) => CliError::runtime(e),
    }
}

fn precompute(config: &ServiceConfig) -> CmdResult {
    let state = AppState::from_config(config).map_err(startup_error)?;
    let claims = state.store.read().unwrap().claims().to_vec();
    let report = state.service.precompute_all(&claims);
    for f in &report.failures {
        tracing::error!(claim = %f.claim_id, kind = ?f.kind, error = %f.error, "precompute failed");
    }
    if !report.failures.is_empty() {
        return Err(CliError::runtime(format!(
            "{} precomputed, {} failures",
            report.precomputed,
            report.failures.len()
        )));
    }
    Ok(Outcome::new(format!("{} precomputed", report.precomputed), json!(report)))
}

fn run_server(config: &ServiceConfig) -> CmdResult {
    let state = AppState::from_config(config).map_err(startup_error)?;
    let listener = std::net::TcpListener::bind(&config.bind)
        .map_err(|e| CliError::runtime(format!("cannot bind {}: {e}", config.bind)))?;
    listener.set_nonblocking(true).map_err(CliError::runtime)?;
    let addr = listener.local_addr().map_err(CliError::runtime)?;
    let service = state.service.clone();
    let workers = service.start_workers();
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(CliError::runtime)?;
    println!("listening on {addr}");
    let served = runtime.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        serve(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    });
    service.shutdown();
    for w in workers {
        let _ = w.join();
    }
    served.map_err(CliError::runtime)?;
    Ok(Outcome::new(format!("stopped serving on {addr}"), json!({ "addr": addr.to_string() })))
}
