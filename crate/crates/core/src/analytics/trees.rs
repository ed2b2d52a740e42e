use std::collections::{HashMap, VecDeque};

use chrono::{DateTime, Utc};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::corpus::{validate_tree, PropagationTree};

/// Comparison claims shown next to a propagation graph.
pub const COMPARISON_COUNT: usize = 5;
/// Comparisons are sampled from this many most popular claims.
pub const POPULAR_POOL: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadRecord {
    pub tweet_id: String,
    /// Immediate replies and retweets.
    pub direct: usize,
    /// All descendants.
    pub total: usize,
    pub post_time: DateTime<Utc>,
}

fn children_of(tree: &PropagationTree) -> HashMap<&str, Vec<&str>> {
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for node in &tree.nodes {
        if let Some(p) = &node.parent_id {
            children.entry(p.as_str()).or_default().push(node.tweet_id.as_str());
        }
    }
    for list in children.values_mut() {
        list.sort_unstable();
    }
    children
}

fn require_valid(tree: &PropagationTree) -> Result<(), AnalyticsError> {
    let report = validate_tree(tree);
    if report.is_structurally_valid() {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidTree(tree.tree_id.clone()))
    }
}

/// Breadth-first order from the root (siblings by id) with depths.
fn bfs<'a>(tree: &'a PropagationTree, children: &HashMap<&'a str, Vec<&'a str>>) -> Vec<(&'a str, usize)> {
    let root = tree.root().expect("validated tree has a root");
    let mut out = Vec::with_capacity(tree.size());
    let mut queue = VecDeque::from([(root.tweet_id.as_str(), 0)]);
    while let Some((id, depth)) = queue.pop_front() {
        out.push((id, depth));
        for &c in children.get(id).into_iter().flatten() {
            queue.push_back((c, depth + 1));
        }
    }
    out
}

/// Direct and transitive reply counts for every node, in the tree's node order.
pub fn spread_metrics(tree: &PropagationTree) -> Result<Vec<SpreadRecord>, AnalyticsError> {
    require_valid(tree)?;
    let children = children_of(tree);
    let order = bfs(tree, &children);
    let mut total: HashMap<&str, usize> = HashMap::new();
    for &(id, _) in order.iter().rev() {
        let t = children.get(id).into_iter().flatten().map(|c| 1 + total[c]).sum();
        total.insert(id, t);
    }
    Ok(tree
        .nodes
        .iter()
        .map(|n| SpreadRecord {
            tweet_id: n.tweet_id.clone(),
            direct: children.get(n.tweet_id.as_str()).map_or(0, Vec::len),
            total: total[n.tweet_id.as_str()],
            post_time: n.post_time,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub tweet_id: String,
    pub parent_id: Option<String>,
    pub depth: usize,
    pub post_time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeGraphExport {
    pub tree_id: String,
    /// Breadth-first order.
    pub nodes: Vec<GraphNode>,
    /// (parent, child) pairs.
    pub edges: Vec<(String, String)>,
}

pub fn export_tree_graph(tree: &PropagationTree) -> Result<TreeGraphExport, AnalyticsError> {
    require_valid(tree)?;
    let children = children_of(tree);
    let order = bfs(tree, &children);
    let nodes: Vec<GraphNode> = order
        .iter()
        .map(|&(id, depth)| {
            let n = tree.node(id).expect("bfs ids come from the tree");
            GraphNode { tweet_id: id.to_string(), parent_id: n.parent_id.clone(), depth, post_time: n.post_time }
        })
        .collect();
    let edges = nodes
        .iter()
        .filter_map(|n| n.parent_id.as_ref().map(|p| (p.clone(), n.tweet_id.clone())))
        .collect();
    Ok(TreeGraphExport { tree_id: tree.tree_id.clone(), nodes, edges })
}

/// A claim with all of its stored trees.
#[derive(Debug, Clone)]
pub struct ClaimTrees<'a> {
    pub claim_id: &'a str,
    pub text: &'a str,
    pub trees: Vec<&'a PropagationTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub claim_id: String,
    pub text: String,
    /// Number of stored trees for the claim.
    pub popularity: usize,
    pub graph: TreeGraphExport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationGraph {
    pub graph: TreeGraphExport,
    pub comparisons: Vec<Comparison>,
}

/// Picks up to five comparison claims, sampled with `seed` from the most
/// popular claims (popularity = tree count, ties by claim id), each shown by
/// its largest tree. Claims without trees are skipped.
pub fn select_comparisons(pool: &[ClaimTrees], seed: u64) -> Result<Vec<Comparison>, AnalyticsError> {
    let mut ranked: Vec<&ClaimTrees> = pool.iter().filter(|c| !c.trees.is_empty()).collect();
    ranked.sort_by(|a, b| b.trees.len().cmp(&a.trees.len()).then_with(|| a.claim_id.cmp(b.claim_id)));
    ranked.truncate(POPULAR_POOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, ranked.len(), COMPARISON_COUNT.min(ranked.len())).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| {
            let c = ranked[i];
            let largest = c
                .trees
                .iter()
                .max_by(|a, b| a.size().cmp(&b.size()).then_with(|| b.tree_id.cmp(&a.tree_id)))
                .expect("non-empty");
            Ok(Comparison {
                claim_id: c.claim_id.to_string(),
                text: c.text.to_string(),
                popularity: c.trees.len(),
                graph: export_tree_graph(largest)?,
            })
        })
        .collect()
}

pub fn propagation_graph_export(
    tree: &PropagationTree,
    comparison_pool: &[ClaimTrees],
    seed: u64,
) -> Result<PropagationGraph, AnalyticsError> {
    Ok(PropagationGraph { graph: export_tree_graph(tree)?, comparisons: select_comparisons(comparison_pool, seed)? })
}
