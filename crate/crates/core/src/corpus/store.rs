use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    chunk_document, validate_tree, Claim, ClaimLabel, CorpusError, Document, LabelProvenance, Location,
    Paragraph, PropagationTree, RumourClass, RumourLabel, TreeStance, TreeViolation, TweetNode,
    MAX_PARAGRAPH_TOKENS,
};

pub const DEFAULT_MIN_TREE_SIZE: usize = 5;

const DOCUMENTS_FILE: &str = "documents.jsonl";
const CLAIMS_FILE: &str = "claims.jsonl";
const TREES_FILE: &str = "trees.jsonl";
const TREE_LABELS_FILE: &str = "tree_labels.jsonl";

/// One line of a trees file. Tree-level fields may appear on any line of the
/// tree; they must agree where they appear more than once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNodeRecord {
    pub tree_id: String,
    pub tweet_id: String,
    pub parent_id: Option<String>,
    pub user_id: String,
    pub post_time: DateTime<Utc>,
    pub text: String,
    pub location: Option<Location>,
    pub retweet_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance_label: Option<TreeStance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rumour_label: Option<RumourClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_provenance: Option<LabelProvenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rumour_prob: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeLabelRecord {
    tree_id: String,
    rumour_label: Option<RumourLabel>,
    rumour_prob: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DocumentIngestReport {
    pub documents: usize,
    pub paragraphs: usize,
    /// Records whose doc_id was already stored; skipped.
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClaimIngestReport {
    pub added: usize,
    pub duplicates: usize,
    pub histogram: BTreeMap<ClaimLabel, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeRejection {
    pub tree_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TreeIngestReport {
    pub accepted: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub rejections: Vec<TreeRejection>,
}

/// File-backed store of documents, paragraphs, claims and trees.
///
/// Reads take `&self`; writes take `&mut self`. Wrap in a lock to share
/// between threads.
#[derive(Debug, Default)]
pub struct Store {
    dir: Option<PathBuf>,
    documents: Vec<Document>,
    doc_pos: HashMap<String, usize>,
    paragraphs: Vec<Paragraph>,
    claims: Vec<Claim>,
    claim_pos: HashMap<String, usize>,
    claim_texts: HashSet<String>,
    trees: Vec<PropagationTree>,
    tree_pos: HashMap<String, usize>,
}

impl Store {
    /// A store with no backing directory. Nothing is persisted.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) the store rooted at `dir` and rebuilds
    /// the in-memory indices from its record files.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| CorpusError::io(&dir, e))?;
        let mut store = Store { dir: Some(dir.clone()), ..Self::default() };

        for (line, doc) in read_records::<Document>(&dir.join(DOCUMENTS_FILE))? {
            store.insert_document(doc).map_err(|e| match e {
                CorpusError::MalformedRecord { reason, .. } => CorpusError::malformed(line, reason),
                other => other,
            })?;
        }
        for (_, claim) in read_records::<Claim>(&dir.join(CLAIMS_FILE))? {
            store.insert_claim(claim);
        }
        let nodes = read_records::<TreeNodeRecord>(&dir.join(TREES_FILE))?;
        for group in group_tree_records(nodes) {
            let tree = assemble_tree(&group)?;
            store.insert_tree(tree);
        }
        for (_, label) in read_records::<TreeLabelRecord>(&dir.join(TREE_LABELS_FILE))? {
            if let Some(&pos) = store.tree_pos.get(&label.tree_id) {
                store.trees[pos].rumour_label = label.rumour_label;
                store.trees[pos].rumour_prob = label.rumour_prob;
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.doc_pos.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    pub fn claim(&self, claim_id: &str) -> Option<&Claim> {
        self.claim_pos.get(claim_id).map(|&i| &self.claims[i])
    }

    pub fn trees(&self) -> &[PropagationTree] {
        &self.trees
    }

    pub fn tree(&self, tree_id: &str) -> Option<&PropagationTree> {
        self.tree_pos.get(tree_id).map(|&i| &self.trees[i])
    }

    pub fn label_histogram(&self) -> BTreeMap<ClaimLabel, usize> {
        let mut h = BTreeMap::new();
        for c in &self.claims {
            *h.entry(c.label).or_insert(0) += 1;
        }
        h
    }

    /// Reads a documents file, chunks each document and appends the new ones.
    /// The whole file is validated before anything is written.
    pub fn ingest_documents(&mut self, path: impl AsRef<Path>) -> Result<DocumentIngestReport, CorpusError> {
        let records = read_records::<Document>(path.as_ref())?;
        let mut seen = HashSet::new();
        let mut fresh = Vec::new();
        let mut report = DocumentIngestReport::default();
        for (line, doc) in records {
            if doc.doc_id.trim().is_empty() {
                return Err(CorpusError::malformed(line, "empty doc_id"));
            }
            if !seen.insert(doc.doc_id.clone()) {
                return Err(CorpusError::DuplicateId(doc.doc_id));
            }
            if self.doc_pos.contains_key(&doc.doc_id) {
                report.duplicates += 1;
                continue;
            }
            let paras = chunk_document(&doc, MAX_PARAGRAPH_TOKENS)?;
            report.documents += 1;
            report.paragraphs += paras.len();
            fresh.push(doc);
        }
        self.append_records(DOCUMENTS_FILE, &fresh)?;
        for doc in fresh {
            self.insert_document(doc)?;
        }
        Ok(report)
    }

    /// Reads a claims file. Claims whose text matches an existing one
    /// (case-insensitively) or whose id is taken are collapsed into the first
    /// occurrence.
    pub fn ingest_claims(&mut self, path: impl AsRef<Path>) -> Result<ClaimIngestReport, CorpusError> {
        let records = read_records::<Claim>(path.as_ref())?;
        let mut report = ClaimIngestReport::default();
        let mut fresh = Vec::new();
        let mut ids = HashSet::new();
        let mut texts = HashSet::new();
        for (line, claim) in records {
            if claim.claim_id.trim().is_empty() {
                return Err(CorpusError::malformed(line, "empty claim_id"));
            }
            if claim.text.trim().is_empty() {
                return Err(CorpusError::malformed(line, "empty claim text"));
            }
            let key = claim.text.to_lowercase();
            if self.claim_pos.contains_key(&claim.claim_id)
                || self.claim_texts.contains(&key)
                || !ids.insert(claim.claim_id.clone())
                || !texts.insert(key)
            {
                report.duplicates += 1;
                continue;
            }
            *report.histogram.entry(claim.label).or_insert(0) += 1;
            report.added += 1;
            fresh.push(claim);
        }
        self.append_records(CLAIMS_FILE, &fresh)?;
        for c in fresh {
            self.insert_claim(c);
        }
        Ok(report)
    }

    /// Reads a trees file of node records grouped by `tree_id`. Trees smaller
    /// than `min_size`, or with several roots, no root, a cycle or a duplicate
    /// node, are rejected; a self-parented node or a missing parent fails the
    /// whole file.
    pub fn ingest_trees(&mut self, path: impl AsRef<Path>, min_size: usize) -> Result<TreeIngestReport, CorpusError> {
        let records = read_records::<TreeNodeRecord>(path.as_ref())?;
        for (line, r) in &records {
            if r.parent_id.as_deref() == Some(r.tweet_id.as_str()) {
                return Err(CorpusError::malformed(*line, format!("node {} is its own parent (cycle)", r.tweet_id)));
            }
            if r.tweet_id.trim().is_empty() || r.tree_id.trim().is_empty() {
                return Err(CorpusError::malformed(*line, "empty tree_id or tweet_id"));
            }
        }
        let mut report = TreeIngestReport::default();
        let mut accepted = Vec::new();
        let mut seen = HashSet::new();
        for group in group_tree_records(records) {
            let tree = assemble_tree(&group)?;
            let validation = validate_tree(&tree);
            if let Some(TreeViolation::Orphan(id)) =
                validation.violations.iter().find(|v| matches!(v, TreeViolation::Orphan(_)))
            {
                return Err(CorpusError::OrphanNode(id.clone()));
            }
            if self.tree_pos.contains_key(&tree.tree_id) || !seen.insert(tree.tree_id.clone()) {
                report.duplicates += 1;
                continue;
            }
            let reason = if !validation.is_structurally_valid() {
                let v: Vec<_> = validation.violations.iter().filter(|v| v.is_structural()).collect();
                Some(format!("{v:?}"))
            } else if tree.root().map(|r| r.tweet_id.as_str()) != Some(tree.tree_id.as_str()) {
                Some("tree_id does not name the root tweet".to_string())
            } else if tree.size() < min_size {
                Some(format!("size {} below minimum {min_size}", tree.size()))
            } else {
                None
            };
            match reason {
                Some(reason) => {
                    report.rejected += 1;
                    report.rejections.push(TreeRejection { tree_id: tree.tree_id.clone(), reason });
                }
                None => {
                    report.accepted += 1;
                    accepted.push((tree, group));
                }
            }
        }
        let lines: Vec<TreeNodeRecord> = accepted.iter().flat_map(|(_, g)| g.iter().map(|(_, r)| r.clone())).collect();
        self.append_records(TREES_FILE, &lines)?;
        for (tree, _) in accepted {
            self.insert_tree(tree);
        }
        Ok(report)
    }

    /// Adds an already-assembled tree (e.g. built in memory by a caller).
    pub fn add_tree(&mut self, tree: PropagationTree) -> Result<(), CorpusError> {
        if self.tree_pos.contains_key(&tree.tree_id) {
            return Err(CorpusError::DuplicateId(tree.tree_id));
        }
        self.append_records(TREES_FILE, &tree_to_records(&tree))?;
        self.insert_tree(tree);
        Ok(())
    }

    /// Replaces the rumour label and probability of a stored tree.
    pub fn set_tree_label(
        &mut self,
        tree_id: &str,
        rumour_label: Option<RumourLabel>,
        rumour_prob: Option<f64>,
    ) -> Result<(), CorpusError> {
        let pos = *self
            .tree_pos
            .get(tree_id)
            .ok_or_else(|| CorpusError::malformed(0, format!("unknown tree {tree_id}")))?;
        self.append_records(
            TREE_LABELS_FILE,
            &[TreeLabelRecord { tree_id: tree_id.to_string(), rumour_label, rumour_prob }],
        )?;
        self.trees[pos].rumour_label = rumour_label;
        self.trees[pos].rumour_prob = rumour_prob;
        Ok(())
    }

    pub fn export_documents(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        write_records(path.as_ref(), &self.documents)
    }

    pub fn export_claims(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        write_records(path.as_ref(), &self.claims)
    }

    pub fn export_trees(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let lines: Vec<_> = self.trees.iter().flat_map(tree_to_records).collect();
        write_records(path.as_ref(), &lines)
    }

    fn insert_document(&mut self, doc: Document) -> Result<(), CorpusError> {
        if self.doc_pos.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateId(doc.doc_id));
        }
        let paras = chunk_document(&doc, MAX_PARAGRAPH_TOKENS)?;
        self.paragraphs.extend(paras);
        self.doc_pos.insert(doc.doc_id.clone(), self.documents.len());
        self.documents.push(doc);
        Ok(())
    }

    fn insert_claim(&mut self, claim: Claim) {
        let key = claim.text.to_lowercase();
        if self.claim_pos.contains_key(&claim.claim_id) || self.claim_texts.contains(&key) {
            return;
        }
        self.claim_texts.insert(key);
        self.claim_pos.insert(claim.claim_id.clone(), self.claims.len());
        self.claims.push(claim);
    }

    fn insert_tree(&mut self, tree: PropagationTree) {
        if self.tree_pos.contains_key(&tree.tree_id) {
            return;
        }
        self.tree_pos.insert(tree.tree_id.clone(), self.trees.len());
        self.trees.push(tree);
    }

    fn append_records<T: Serialize>(&self, file: &str, records: &[T]) -> Result<(), CorpusError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        if records.is_empty() {
            return Ok(());
        }
        let path = dir.join(file);
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CorpusError::io(&path, e))?;
        let mut w = BufWriter::new(f);
        for r in records {
            let line = serde_json::to_string(r).expect("record serializes");
            writeln!(w, "{line}").map_err(|e| CorpusError::io(&path, e))?;
        }
        w.flush().map_err(|e| CorpusError::io(&path, e))
    }
}

/// Reads a line-record file; blank lines are skipped, line numbers are 1-based.
/// A missing file reads as empty only when it is one of the store's own files.
fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && is_store_file(path) => return Ok(Vec::new()),
        Err(e) => return Err(CorpusError::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::malformed(i + 1, e.to_string()))?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn is_store_file(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| [DOCUMENTS_FILE, CLAIMS_FILE, TREES_FILE, TREE_LABELS_FILE].contains(&n))
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let f = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r).expect("record serializes")).map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

fn group_tree_records(records: Vec<(usize, TreeNodeRecord)>) -> Vec<Vec<(usize, TreeNodeRecord)>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<(usize, TreeNodeRecord)>> = HashMap::new();
    for (line, r) in records {
        if !groups.contains_key(&r.tree_id) {
            order.push(r.tree_id.clone());
        }
        groups.entry(r.tree_id.clone()).or_default().push((line, r));
    }
    order.into_iter().map(|id| groups.remove(&id).unwrap()).collect()
}

fn merge_field<T: Clone + PartialEq + std::fmt::Debug>(
    slot: &mut Option<T>,
    value: &Option<T>,
    line: usize,
    name: &str,
) -> Result<(), CorpusError> {
    if let Some(v) = value {
        match slot {
            Some(existing) if existing != v => {
                return Err(CorpusError::malformed(line, format!("conflicting {name}: {existing:?} vs {v:?}")))
            }
            _ => *slot = Some(v.clone()),
        }
    }
    Ok(())
}

fn assemble_tree(group: &[(usize, TreeNodeRecord)]) -> Result<PropagationTree, CorpusError> {
    let mut claim_ref = None;
    let mut stance = None;
    let mut class = None;
    let mut provenance = None;
    let mut prob = None;
    let mut nodes = Vec::with_capacity(group.len());
    for (line, r) in group {
        merge_field(&mut claim_ref, &r.claim_ref, *line, "claim_ref")?;
        merge_field(&mut stance, &r.stance_label, *line, "stance_label")?;
        merge_field(&mut class, &r.rumour_label, *line, "rumour_label")?;
        merge_field(&mut provenance, &r.label_provenance, *line, "label_provenance")?;
        merge_field(&mut prob, &r.rumour_prob, *line, "rumour_prob")?;
        if let Some(p) = r.rumour_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(CorpusError::malformed(*line, "rumour_prob outside [0,1]"));
            }
        }
        nodes.push(TweetNode {
            tweet_id: r.tweet_id.clone(),
            parent_id: r.parent_id.clone(),
            user_id: r.user_id.clone(),
            post_time: r.post_time,
            text: r.text.clone(),
            location: r.location.clone(),
            retweet_count: r.retweet_count,
        });
    }
    Ok(PropagationTree {
        tree_id: group[0].1.tree_id.clone(),
        nodes,
        claim_ref,
        stance_label: stance,
        rumour_label: class.map(|class| RumourLabel {
            class,
            provenance: provenance.unwrap_or(LabelProvenance::Annotated),
        }),
        rumour_prob: prob,
    })
}

/// Node records for a tree; tree-level fields ride on the root's line.
pub(crate) fn tree_to_records(tree: &PropagationTree) -> Vec<TreeNodeRecord> {
    tree.nodes
        .iter()
        .map(|n| {
            let is_root = n.parent_id.is_none();
            TreeNodeRecord {
                tree_id: tree.tree_id.clone(),
                tweet_id: n.tweet_id.clone(),
                parent_id: n.parent_id.clone(),
                user_id: n.user_id.clone(),
                post_time: n.post_time,
                text: n.text.clone(),
                location: n.location.clone(),
                retweet_count: n.retweet_count,
                claim_ref: tree.claim_ref.clone().filter(|_| is_root),
                stance_label: tree.stance_label.filter(|_| is_root),
                rumour_label: tree.rumour_label.map(|l| l.class).filter(|_| is_root),
                label_provenance: tree.rumour_label.map(|l| l.provenance).filter(|_| is_root),
                rumour_prob: tree.rumour_prob.filter(|_| is_root),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn doc_line(id: &str, body: &str) -> String {
        format!(
            r#"{{"doc_id":"{id}","title":"T {id}","body":"{body}","source":"CDC","doc_type":"guideline","url":"https://cdc.example/{id}","date":"2020-05-01"}}"#
        )
    }

    fn node_line(tree: &str, id: &str, parent: Option<&str>) -> String {
        let parent = parent.map(|p| format!("\"{p}\"")).unwrap_or_else(|| "null".into());
        format!(
            r#"{{"tree_id":"{tree}","tweet_id":"{id}","parent_id":{parent},"user_id":"u{id}","post_time":"2020-04-01T10:00:00Z","text":"tweet {id}","location":null,"retweet_count":1}}"#
        )
    }

    fn chain_tree(tree: &str, n: usize) -> String {
        let mut s = String::new();
        for i in 0..n {
            let id = format!("{tree}_{i}");
            let parent = (i > 0).then(|| format!("{tree}_{}", i - 1));
            let tree_id = format!("{tree}_0");
            writeln!(s, "{}", node_line(&tree_id, &id, parent.as_deref())).unwrap();
        }
        s
    }

    #[test]
    fn ingest_two_documents() {
        let tmp = tempfile::tempdir().unwrap();
        let mut store = Store::open(tmp.path().join("store")).unwrap();
        let path = write(
            tmp.path(),
            "docs.jsonl",
            &format!("{}\n{}\n", doc_line("d1", "Masks work."), doc_line("d2", "Wash hands often.")),
        );
        let r = store.ingest_documents(&path).unwrap();
        assert_eq!((r.documents, r.duplicates), (2, 0));
        assert!(r.paragraphs >= 2);
        // Re-running reports duplicates instead of duplicating.
        let r2 = store.ingest_documents(&path).unwrap();
        assert_eq!((r2.documents, r2.duplicates), (0, 2));
        assert_eq!(Store::open(tmp.path().join("store")).unwrap().documents().len(), 2);
    }

    #[test]
    fn missing_doc_id_is_malformed_line_one() {
        let tmp = tempfile::tempdir().unwrap();
        let mut store = Store::in_memory();
        let path = write(
            tmp.path(),
            "docs.jsonl",
            r#"{"title":"x","body":"y","source":"CDC","doc_type":"a","url":"u","date":"2020-01-01"}"#,
        );
        assert!(matches!(store.ingest_documents(&path), Err(CorpusError::MalformedRecord { line: 1, .. })));
    }

    #[test]
    fn duplicate_doc_ids_in_one_file() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write(tmp.path(), "d.jsonl", &format!("{}\n{}\n", doc_line("d1", "a b"), doc_line("d1", "c d")));
        assert!(matches!(Store::in_memory().ingest_documents(&path), Err(CorpusError::DuplicateId(id)) if id == "d1"));
    }

    #[test]
    fn tree_size_threshold() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write(tmp.path(), "t.jsonl", &(chain_tree("a", 4) + &chain_tree("b", 5)));
        let mut store = Store::in_memory();
        let r = store.ingest_trees(&path, 5).unwrap();
        assert_eq!((r.accepted, r.rejected), (1, 1));
        assert_eq!(r.rejections[0].tree_id, "a_0");
        assert_eq!(store.trees()[0].tree_id, "b_0");
    }

    #[test]
    fn self_parent_is_malformed() {
        let tmp = tempfile::tempdir().unwrap();
        let body = format!("{}\n{}\n", node_line("r", "r", None), node_line("r", "x", Some("x")));
        let path = write(tmp.path(), "t.jsonl", &body);
        assert!(matches!(Store::in_memory().ingest_trees(&path, 1), Err(CorpusError::MalformedRecord { line: 2, .. })));
    }

    #[test]
    fn orphan_node_fails() {
        let tmp = tempfile::tempdir().unwrap();
        let body = format!("{}\n{}\n", node_line("r", "r", None), node_line("r", "x", Some("ghost")));
        let path = write(tmp.path(), "t.jsonl", &body);
        assert!(matches!(Store::in_memory().ingest_trees(&path, 1), Err(CorpusError::OrphanNode(id)) if id == "x"));
    }

    #[test]
    fn multi_root_and_cycle_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let body = [
            node_line("m", "m", None),
            node_line("m", "m2", None),
            node_line("c", "c", None),
            node_line("c", "c1", Some("c2")),
            node_line("c", "c2", Some("c1")),
        ]
        .join("\n");
        let path = write(tmp.path(), "t.jsonl", &body);
        let r = Store::in_memory().ingest_trees(&path, 1).unwrap();
        assert_eq!((r.accepted, r.rejected), (0, 2));
    }

    #[test]
    fn claims_histogram_and_dedup() {
        let tmp = tempfile::tempdir().unwrap();
        let mut body = String::new();
        for (i, label) in ["False", "False", "True", "True", "True"].iter().enumerate() {
            writeln!(body, r#"{{"claim_id":"c{i}","text":"claim number {i}","label":"{label}","source":"s","subtype":"x"}}"#).unwrap();
        }
        writeln!(body, r#"{{"claim_id":"c9","text":"CLAIM number 0","label":"True","source":"s","subtype":"x"}}"#).unwrap();
        let path = write(tmp.path(), "c.jsonl", &body);
        let mut store = Store::in_memory();
        let r = store.ingest_claims(&path).unwrap();
        assert_eq!(r.added, 5);
        assert_eq!(r.duplicates, 1);
        assert_eq!(r.histogram, BTreeMap::from([(ClaimLabel::False, 2), (ClaimLabel::True, 3)]));
    }

    #[test]
    fn tree_labels_persist_and_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("s");
        let path = write(tmp.path(), "t.jsonl", &chain_tree("z", 5));
        {
            let mut store = Store::open(&dir).unwrap();
            store.ingest_trees(&path, 5).unwrap();
            store
                .set_tree_label(
                    "z_0",
                    Some(RumourLabel { class: RumourClass::Rumour, provenance: LabelProvenance::Pseudo }),
                    Some(0.8),
                )
                .unwrap();
        }
        let store = Store::open(&dir).unwrap();
        let t = store.tree("z_0").unwrap();
        assert_eq!(t.rumour_prob, Some(0.8));
        assert_eq!(t.rumour_label.unwrap().provenance, LabelProvenance::Pseudo);
        assert_eq!(t.size(), 5);
    }
}
