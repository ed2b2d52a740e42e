use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use panacea_core::analytics::{build_rumour_panels, ClaimTrees, PanelOptions, RumourPanels, StanceSummary};
use panacea_core::checkpoint::{Checkpoint, CheckpointError};
use panacea_core::corpus::{Claim, ClaimLabel, PropagationTree, RumourClass, Store};
use panacea_core::inference::{BuiltinNli, NliProvider, Stance, SubprocessNli};
use panacea_core::nlisan::{classify, NlisanConfig, NlisanError, NlisanExample, NlisanParams, Verdict};
use panacea_core::retrieval::{
    build_index, retrieve_evidence, CosineReranker, EvidenceRecord, HashedTfidfEncoder, InvertedIndex,
    RetrievalConfig, RetrievalError, Unit, UnitKind,
};
use panacea_core::rumournet::{
    aggregate_rumour, build_tree_graph, class_index, score_tree, BigcnConfig, BigcnParams, LabelledGraph, TreeScore,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::jobs::JobKind;

/// Runs one unit of work for the queue.
pub trait Engine: Send + Sync {
    fn run(&self, kind: JobKind, claim: &str) -> Result<Value, String>;
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("checkpoint {path}: {source}")]
    Checkpoint { path: String, source: CheckpointError },
    #[error("checkpoint {path} holds a {found} model, expected {expected}")]
    WrongModel { path: String, found: String, expected: String },
    #[error("index: {0}")]
    Index(#[from] RetrievalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    pub encoder_dim: usize,
    pub retrieval: RetrievalConfig,
    pub tree_k: usize,
    pub panels: PanelOptions,
    pub rumour_threshold: f64,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings::from(&ServiceConfig::default())
    }
}

impl From<&ServiceConfig> for EngineSettings {
    fn from(c: &ServiceConfig) -> Self {
        EngineSettings {
            encoder_dim: c.encoder_dim,
            retrieval: RetrievalConfig { n1: c.retrieval.n1, n2: c.retrieval.n2, n3: c.retrieval.n3 },
            tree_k: c.retrieval.tree_k,
            panels: PanelOptions {
                topics: c.panels.topics,
                lda_iterations: c.panels.lda_iterations,
                seed: c.panels.seed,
                word_cloud_size: c.panels.word_cloud_size,
            },
            rumour_threshold: c.rumour_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub nlisan: NlisanParams,
    pub bigcn: BigcnParams,
}

impl Models {
    pub fn init(seed: u64) -> Self {
        Models {
            nlisan: NlisanParams::init(NlisanConfig::default(), seed),
            bigcn: BigcnParams::init(BigcnConfig::default(), seed),
        }
    }

    /// Checkpoints named in the config; a model without one is freshly
    /// initialised from `model_seed`.
    pub fn load(config: &ServiceConfig) -> Result<Self, EngineError> {
        let mut models = Models::init(config.model_seed);
        if let Some(path) = &config.models.nlisan {
            let ck = load_checkpoint(path, "nlisan")?;
            models.nlisan = NlisanParams::from_checkpoint(&ck).map_err(|source| checkpoint_err(path, source))?;
        }
        if let Some(path) = &config.models.bigcn {
            let ck = load_checkpoint(path, "bigcn")?;
            models.bigcn = BigcnParams::from_checkpoint(&ck).map_err(|source| checkpoint_err(path, source))?;
        }
        Ok(models)
    }
}

fn checkpoint_err(path: &std::path::Path, source: CheckpointError) -> EngineError {
    EngineError::Checkpoint { path: path.display().to_string(), source }
}

fn load_checkpoint(path: &std::path::Path, expected: &str) -> Result<Checkpoint, EngineError> {
    let ck = Checkpoint::load(path).map_err(|source| checkpoint_err(path, source))?;
    if ck.model != expected {
        return Err(EngineError::WrongModel {
            path: path.display().to_string(),
            found: ck.model,
            expected: expected.to_string(),
        });
    }
    Ok(ck)
}

pub fn nli_provider(config: &ServiceConfig) -> Arc<dyn NliProvider> {
    match &config.nli.command {
        Some(cmd) => Arc::new(SubprocessNli::new(
            cmd.clone(),
            config.nli.args.clone(),
            Duration::from_millis(config.nli.timeout_ms),
        )),
        None => Arc::new(BuiltinNli),
    }
}

pub fn paragraph_index(store: &Store) -> Result<InvertedIndex, RetrievalError> {
    build_index(store.paragraphs().iter().map(Unit::from).collect(), UnitKind::Paragraph)
}

/// One unit per tree holding its root tweet text.
pub fn tree_index(trees: &[PropagationTree]) -> Result<InvertedIndex, RetrievalError> {
    let units = trees
        .iter()
        .filter_map(|t| {
            t.root().map(|root| Unit {
                unit_id: t.tree_id.clone(),
                text: root.text.clone(),
                source: String::new(),
                doc_type: String::new(),
            })
        })
        .collect();
    build_index(units, UnitKind::TreeText)
}

/// The encoder shared by retrieval, training and serving: idf from the
/// paragraph index when there is one.
pub fn build_encoder(store: &Store, dim: usize) -> HashedTfidfEncoder {
    match paragraph_index(store) {
        Ok(index) => HashedTfidfEncoder::from_index(&index, dim),
        Err(_) => HashedTfidfEncoder::new(dim),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactCheckStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "no evidence")]
    NoEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactCheckResult {
    pub claim: String,
    pub status: FactCheckStatus,
    pub verdict: Option<Verdict>,
    pub p_true: Option<f64>,
    pub p_false: Option<f64>,
    /// Unit ids of the evidence the classifier attended over, in slot order.
    pub attention_evidence: Vec<String>,
    pub attention: Vec<Vec<f64>>,
    pub documents: Vec<EvidenceRecord>,
    pub sentences: Vec<EvidenceRecord>,
    /// Stance counts over the retrieved documents.
    pub stance_distribution: StanceSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RumourStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "no trees")]
    NoTrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RumourResult {
    pub claim: String,
    pub status: RumourStatus,
    /// Size-weighted rumour probability over the retrieved trees.
    pub aggregate: Option<f64>,
    pub label: Option<RumourClass>,
    pub trees: Vec<TreeScore>,
    pub panels: RumourPanels,
}

/// Retrieval, veracity and rumour models over a snapshot of the store.
pub struct PanaceaEngine {
    settings: EngineSettings,
    paragraphs: Option<InvertedIndex>,
    trees_index: Option<InvertedIndex>,
    trees: Vec<PropagationTree>,
    claim_texts: BTreeMap<String, String>,
    encoder: Arc<HashedTfidfEncoder>,
    nlisan_encoder: HashedTfidfEncoder,
    bigcn_encoder: HashedTfidfEncoder,
    reranker: CosineReranker,
    nli: Arc<dyn NliProvider>,
    models: Models,
}

impl PanaceaEngine {
    pub fn build(
        store: &Store,
        models: Models,
        nli: Arc<dyn NliProvider>,
        settings: EngineSettings,
    ) -> Result<Self, EngineError> {
        let paragraphs = match paragraph_index(store) {
            Ok(i) => Some(i),
            Err(RetrievalError::EmptyCorpus) => None,
            Err(e) => return Err(e.into()),
        };
        let encoder = Arc::new(match &paragraphs {
            Some(index) => HashedTfidfEncoder::from_index(index, settings.encoder_dim),
            None => HashedTfidfEncoder::new(settings.encoder_dim),
        });
        let trees = store.trees().to_vec();
        let trees_index = match tree_index(&trees) {
            Ok(i) => Some(i),
            Err(RetrievalError::EmptyCorpus) => None,
            Err(e) => return Err(e.into()),
        };
        Ok(PanaceaEngine {
            settings,
            paragraphs,
            trees_index,
            claim_texts: store.claims().iter().map(|c| (c.claim_id.clone(), c.text.clone())).collect(),
            trees,
            nlisan_encoder: encoder.with_dim(models.nlisan.config.d),
            bigcn_encoder: encoder.with_dim(models.bigcn.config.d),
            reranker: CosineReranker::new(encoder.clone()),
            encoder,
            nli,
            models,
        })
    }

    pub fn from_config(store: &Store, config: &ServiceConfig) -> Result<Self, EngineError> {
        Self::build(store, Models::load(config)?, nli_provider(config), EngineSettings::from(config))
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    /// Each True or False claim paired with the sentences retrieved for it.
    /// Claims without evidence are skipped.
    pub fn veracity_examples(&self, claims: &[Claim]) -> Result<Vec<NlisanExample>, String> {
        let mut out = Vec::new();
        for claim in claims {
            let verdict = match claim.label {
                ClaimLabel::True => Verdict::True,
                ClaimLabel::False => Verdict::False,
                ClaimLabel::Unlabelled => continue,
            };
            let result = self.fact_check(&claim.text)?;
            let pool = if result.sentences.is_empty() { &result.documents } else { &result.sentences };
            match NlisanExample::from_texts(
                &claim.text,
                pool,
                verdict,
                &self.nlisan_encoder,
                self.nli.as_ref(),
                &self.models.nlisan,
            ) {
                Ok(ex) => out.push(ex),
                Err(NlisanError::NoEvidence) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
        Ok(out)
    }

    /// Graphs of the trees that carry a rumour label.
    pub fn rumour_examples(&self, trees: &[PropagationTree]) -> Result<Vec<LabelledGraph>, String> {
        trees
            .iter()
            .filter_map(|t| t.rumour_label.map(|l| (t, l)))
            .map(|(t, l)| {
                let graph = build_tree_graph(t, &self.bigcn_encoder).map_err(|e| e.to_string())?;
                Ok(LabelledGraph { graph, label: class_index(l.class) })
            })
            .collect()
    }

    pub fn fact_check(&self, claim: &str) -> Result<FactCheckResult, String> {
        let mut result = FactCheckResult {
            claim: claim.to_string(),
            status: FactCheckStatus::NoEvidence,
            verdict: None,
            p_true: None,
            p_false: None,
            attention_evidence: Vec::new(),
            attention: Vec::new(),
            documents: Vec::new(),
            sentences: Vec::new(),
            stance_distribution: StanceSummary::default(),
        };
        let Some(index) = &self.paragraphs else { return Ok(result) };
        let evidence = retrieve_evidence(
            claim,
            index,
            self.encoder.as_ref(),
            &self.reranker,
            self.nli.as_ref(),
            self.settings.retrieval,
        )
        .map_err(|e| e.to_string())?;
        for d in &evidence.documents {
            match d.stance {
                Stance::Support => result.stance_distribution.support += 1,
                Stance::Neutral => result.stance_distribution.neutral += 1,
                Stance::Refute => result.stance_distribution.refute += 1,
            }
        }
        result.documents = evidence.documents;
        result.sentences = evidence.sentences;
        let pool = if result.sentences.is_empty() { &result.documents } else { &result.sentences };
        match classify(&self.models.nlisan, claim, pool, &self.nlisan_encoder, self.nli.as_ref()) {
            Ok(v) => {
                let mut order: Vec<usize> = (0..pool.len()).collect();
                order.sort_by(|&a, &b| pool[b].relevance.total_cmp(&pool[a].relevance).then(a.cmp(&b)));
                order.truncate(self.models.nlisan.config.n_slots);
                result.attention_evidence = order.into_iter().map(|i| pool[i].unit_id.clone()).collect();
                result.status = FactCheckStatus::Ok;
                result.verdict = Some(v.label);
                result.p_true = Some(v.p_true);
                result.p_false = Some(v.p_false);
                result.attention = v.attention;
            }
            Err(NlisanError::NoEvidence) => {}
            Err(e) => return Err(e.to_string()),
        }
        Ok(result)
    }

    pub fn rumour(&self, claim: &str) -> Result<RumourResult, String> {
        let mut result = RumourResult {
            claim: claim.to_string(),
            status: RumourStatus::NoTrees,
            aggregate: None,
            label: None,
            trees: Vec::new(),
            panels: RumourPanels::default(),
        };
        let Some(index) = &self.trees_index else { return Ok(result) };
        let hits = index.search(claim, self.settings.tree_k);
        let retrieved: Vec<&PropagationTree> = hits
            .iter()
            .filter_map(|(id, _)| self.trees.iter().find(|t| &t.tree_id == id))
            .collect();
        if retrieved.is_empty() {
            return Ok(result);
        }
        for tree in &retrieved {
            result.trees.push(score_tree(&self.models.bigcn, tree, &self.bigcn_encoder).map_err(|e| e.to_string())?);
        }
        let aggregate = aggregate_rumour(&result.trees).map_err(|e| e.to_string())?;
        result.aggregate = Some(aggregate);
        result.label = Some(if aggregate >= self.settings.rumour_threshold {
            RumourClass::Rumour
        } else {
            RumourClass::NonRumour
        });

        let own: HashSet<&str> = retrieved.iter().filter_map(|t| t.claim_ref.as_deref()).collect();
        let mut grouped: BTreeMap<&str, Vec<&PropagationTree>> = BTreeMap::new();
        for t in &self.trees {
            if let Some(c) = t.claim_ref.as_deref() {
                if !own.contains(c) && self.claim_texts.contains_key(c) {
                    grouped.entry(c).or_default().push(t);
                }
            }
        }
        let pool: Vec<ClaimTrees> = grouped
            .into_iter()
            .map(|(id, trees)| ClaimTrees { claim_id: id, text: &self.claim_texts[id], trees })
            .collect();
        result.panels = build_rumour_panels(
            claim,
            &retrieved,
            self.nli.as_ref(),
            self.encoder.as_ref(),
            &pool,
            &self.settings.panels,
        )
        .map_err(|e| e.to_string())?;
        result.status = RumourStatus::Ok;
        Ok(result)
    }
}

impl Engine for PanaceaEngine {
    fn run(&self, kind: JobKind, claim: &str) -> Result<Value, String> {
        let value = match kind {
            JobKind::FactCheck => serde_json::to_value(self.fact_check(claim)?),
            JobKind::Rumour => serde_json::to_value(self.rumour(claim)?),
        };
        value.map_err(|e| e.to_string())
    }
}
