mod common;

use std::sync::Arc;

use panacea_core::corpus::{RumourClass, Store};
use panacea_core::inference::BuiltinNli;
use panacea_core::nlisan::{train, TrainConfig, Verdict};
use panacea_core::rumournet::{bigcn_accuracy, train_bigcn};
use panacea_service::demo::{demo_claims, write_demo_corpus, DEMO_DOCUMENTS, DEMO_TREES};
use panacea_service::engine::{EngineSettings, FactCheckStatus, Models, PanaceaEngine, RumourStatus};

fn engine(store: &Store, models: Models) -> PanaceaEngine {
    let settings = EngineSettings { panels: panacea_core::analytics::PanelOptions { lda_iterations: 100, ..Default::default() }, ..Default::default() };
    PanaceaEngine::build(store, models, Arc::new(BuiltinNli), settings).unwrap()
}

#[test]
fn demo_corpus_ingests_completely() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::demo_store(tmp.path());
    assert_eq!(store.documents().len(), DEMO_DOCUMENTS);
    assert_eq!(store.claims().len(), 5);
    assert_eq!(store.trees().len(), DEMO_TREES);
}

#[test]
fn fact_check_retrieves_topical_evidence() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::demo_store(tmp.path());
    let e = engine(&store, Models::init(0));
    let r = e.fact_check("coronavirus is genetically engineered").unwrap();
    assert_eq!(r.status, FactCheckStatus::Ok);
    assert_eq!(r.documents.len(), 10);
    assert!(!r.sentences.is_empty() && r.sentences.len() <= 30);
    let top = store.paragraphs().iter().find(|p| p.para_id == r.documents[0].unit_id).unwrap();
    assert!(top.raw_text.contains("engineered"), "{}", top.raw_text);
    let s = r.stance_distribution;
    assert_eq!(s.support + s.neutral + s.refute, r.documents.len());
    assert!(s.refute > s.support, "{s:?}");
    let (p_true, p_false) = (r.p_true.unwrap(), r.p_false.unwrap());
    assert!((p_true + p_false - 1.0).abs() < 1e-12);
    assert_eq!(r.attention.len(), r.attention_evidence.len());
    for row in &r.attention {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn rumour_result_carries_every_panel() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::demo_store(tmp.path());
    let e = engine(&store, Models::init(0));
    let r = e.rumour("vitamin c cures coronavirus").unwrap();
    assert_eq!(r.status, RumourStatus::Ok);
    assert!(!r.trees.is_empty() && r.trees.len() <= e.settings().tree_k);
    let agg = r.aggregate.unwrap();
    assert!((0.0..=1.0).contains(&agg));
    let p = &r.panels;
    assert!(!p.tweet_count.is_empty());
    assert!(!p.word_cloud.support.is_empty() || !p.word_cloud.refute.is_empty());
    assert_eq!(p.topics.topics.len(), 5);
    assert_eq!(p.spread.len(), r.trees.len());
    let prop = p.propagation.as_ref().unwrap();
    assert!(!prop.comparisons.is_empty());
    assert!(!p.map.is_empty());
    let nodes: usize = r.trees.iter().map(|t| t.n).sum();
    assert_eq!(p.sentiment.negative + p.sentiment.neutral + p.sentiment.positive, nodes);
    assert_eq!(p.stances.support + p.stances.neutral + p.stances.refute, nodes);
}

#[test]
fn empty_tree_pool_is_marked_not_failed() {
    let tmp = tempfile::tempdir().unwrap();
    let files = write_demo_corpus(tmp.path().join("input")).unwrap();
    let mut store = Store::in_memory();
    store.ingest_documents(&files.documents).unwrap();
    let e = engine(&store, Models::init(0));
    let r = e.rumour("vitamin c cures coronavirus").unwrap();
    assert_eq!(r.status, RumourStatus::NoTrees);
    assert!(r.aggregate.is_none() && r.trees.is_empty());
    assert_eq!(e.fact_check("vitamin c cures coronavirus").unwrap().status, FactCheckStatus::Ok);

    let empty = engine(&Store::in_memory(), Models::init(0));
    let r = empty.fact_check("anything").unwrap();
    assert_eq!(r.status, FactCheckStatus::NoEvidence);
    assert!(r.verdict.is_none() && r.documents.is_empty());
}

#[test]
fn trained_models_give_expected_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::demo_store(tmp.path());
    let base = engine(&store, Models::init(3));

    let examples = base.veracity_examples(&demo_claims()).unwrap();
    assert_eq!(examples.len(), 5);
    let cfg = TrainConfig { epochs: 200, lr: 1e-2, seed: 3, batch_size: 1 };
    let veracity = train(base.models().nlisan.clone(), &examples, &cfg).unwrap();
    assert_eq!(veracity.train_accuracy, 1.0);

    let graphs = base.rumour_examples(store.trees()).unwrap();
    assert_eq!(graphs.len(), DEMO_TREES);
    let cfg = TrainConfig { epochs: 60, lr: 1e-2, seed: 3, batch_size: 1 };
    let rumour = train_bigcn(base.models().bigcn.clone(), &graphs, &cfg).unwrap();
    assert!(bigcn_accuracy(&rumour.params, &graphs).unwrap() >= 0.9);

    let trained = engine(&store, Models { nlisan: veracity.params, bigcn: rumour.params });
    assert_eq!(trained.fact_check("coronavirus is genetically engineered").unwrap().verdict, Some(Verdict::False));
    assert_eq!(trained.fact_check("face masks reduce the spread of coronavirus").unwrap().verdict, Some(Verdict::True));
    assert_eq!(trained.rumour("vitamin c cures coronavirus").unwrap().label, Some(RumourClass::Rumour));
}
