use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::PropagationTree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TreeViolation {
    Empty,
    NoRoot,
    MultiRoot(Vec<String>),
    DuplicateNode(String),
    SelfParent(String),
    Orphan(String),
    /// Nodes not reachable from the root, i.e. on a parent cycle.
    Cycle(Vec<String>),
    /// Child posted before its parent. Real crawls contain these; they are
    /// flagged, not rejected.
    TimeOrder { child: String, parent: String },
}

impl TreeViolation {
    /// Structural violations make the tree unusable; time-order anomalies do not.
    pub fn is_structural(&self) -> bool {
        !matches!(self, TreeViolation::TimeOrder { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TreeReport {
    pub violations: Vec<TreeViolation>,
}

impl TreeReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_structurally_valid(&self) -> bool {
        !self.violations.iter().any(TreeViolation::is_structural)
    }
}

pub fn validate_tree(tree: &PropagationTree) -> TreeReport {
    let mut violations = Vec::new();
    if tree.nodes.is_empty() {
        violations.push(TreeViolation::Empty);
        return TreeReport { violations };
    }

    let mut by_id: HashMap<&str, usize> = HashMap::new();
    for (i, n) in tree.nodes.iter().enumerate() {
        if by_id.insert(n.tweet_id.as_str(), i).is_some() {
            violations.push(TreeViolation::DuplicateNode(n.tweet_id.clone()));
        }
    }

    let roots: Vec<&str> = tree
        .nodes
        .iter()
        .filter(|n| n.parent_id.is_none())
        .map(|n| n.tweet_id.as_str())
        .collect();
    match roots.len() {
        0 => violations.push(TreeViolation::NoRoot),
        1 => {}
        _ => violations.push(TreeViolation::MultiRoot(roots.iter().map(|s| s.to_string()).collect())),
    }

    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for n in &tree.nodes {
        if let Some(p) = n.parent_id.as_deref() {
            if p == n.tweet_id {
                violations.push(TreeViolation::SelfParent(n.tweet_id.clone()));
            } else if !by_id.contains_key(p) {
                violations.push(TreeViolation::Orphan(n.tweet_id.clone()));
            } else {
                children.entry(p).or_default().push(n.tweet_id.as_str());
                let parent = &tree.nodes[by_id[p]];
                if n.post_time < parent.post_time {
                    violations.push(TreeViolation::TimeOrder {
                        child: n.tweet_id.clone(),
                        parent: parent.tweet_id.clone(),
                    });
                }
            }
        }
    }

    let mut reached: HashSet<&str> = HashSet::new();
    let mut stack: Vec<&str> = roots.clone();
    while let Some(id) = stack.pop() {
        if reached.insert(id) {
            if let Some(cs) = children.get(id) {
                stack.extend(cs.iter().copied());
            }
        }
    }
    let mut unreachable: Vec<String> = tree
        .nodes
        .iter()
        .filter(|n| {
            !reached.contains(n.tweet_id.as_str())
                && n.parent_id.as_deref().is_some_and(|p| p != n.tweet_id && by_id.contains_key(p))
        })
        .map(|n| n.tweet_id.clone())
        .collect();
    if !unreachable.is_empty() {
        unreachable.sort();
        unreachable.dedup();
        violations.push(TreeViolation::Cycle(unreachable));
    }

    TreeReport { violations }
}
