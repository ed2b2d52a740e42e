use std::collections::{HashMap, VecDeque};

use ndarray::{Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RumourError;
use crate::corpus::{validate_tree, PropagationTree};
use crate::retrieval::Encoder;

/// A propagation tree as matrices. Row `i` of `x` and row/column `i` of
/// `a_td` refer to `node_ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeGraph {
    pub node_ids: Vec<String>,
    /// n × d node features.
    pub x: Array2<f64>,
    /// Parent→child adjacency: `a_td[[p, c]] = 1`.
    pub a_td: Array2<f64>,
    pub root_index: usize,
}

impl TreeGraph {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn edge_count(&self) -> usize {
        self.a_td.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn a_bu(&self) -> Array2<f64> {
        self.a_td.t().to_owned()
    }

    /// Builds a graph from explicit features and a parent list (`None` for
    /// the root), in the given node order.
    pub fn from_parents(x: Array2<f64>, parents: &[Option<usize>]) -> Result<Self, RumourError> {
        let n = x.nrows();
        if n == 0 || parents.len() != n {
            return Err(RumourError::InvalidTree("parent list does not match feature rows".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_none()).collect();
        let [root_index] = roots[..] else {
            return Err(RumourError::InvalidTree(format!("expected one root, found {}", roots.len())));
        };
        let mut a_td = Array2::zeros((n, n));
        for (c, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n || p == c {
                    return Err(RumourError::InvalidTree(format!("bad parent {p} for node {c}")));
                }
                a_td[[p, c]] = 1.0;
            }
        }
        Ok(TreeGraph { node_ids: (0..n).map(|i| i.to_string()).collect(), x, a_td, root_index })
    }

    /// Reorders nodes so that new row `i` is old row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> TreeGraph {
        let n = self.n();
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        TreeGraph {
            node_ids: perm.iter().map(|&o| self.node_ids[o].clone()).collect(),
            x: self.x.select(Axis(0), perm),
            a_td: Array2::from_shape_fn((n, n), |(i, j)| self.a_td[[perm[i], perm[j]]]),
            root_index: inverse[self.root_index],
        }
    }
}

/// Nodes are ordered breadth-first from the root, siblings by tweet_id.
pub fn build_tree_graph(tree: &PropagationTree, encoder: &dyn Encoder) -> Result<TreeGraph, RumourError> {
    let report = validate_tree(tree);
    if !report.is_structurally_valid() {
        return Err(RumourError::InvalidTree(format!("{}: {:?}", tree.tree_id, report.violations)));
    }
    let root = tree.root().ok_or_else(|| RumourError::InvalidTree(tree.tree_id.clone()))?;
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for node in &tree.nodes {
        if let Some(p) = &node.parent_id {
            children.entry(p.as_str()).or_default().push(node.tweet_id.as_str());
        }
    }
    for list in children.values_mut() {
        list.sort_unstable();
    }

    let mut order: Vec<&str> = Vec::with_capacity(tree.size());
    let mut queue = VecDeque::from([root.tweet_id.as_str()]);
    while let Some(id) = queue.pop_front() {
        order.push(id);
        queue.extend(children.get(id).into_iter().flatten());
    }
    let position: HashMap<&str, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let n = order.len();
    let mut x = Array2::zeros((n, encoder.dim()));
    let mut a_td = Array2::zeros((n, n));
    for (i, id) in order.iter().enumerate() {
        let node = tree.node(id).expect("ordered ids come from the tree");
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&encoder.encode(&node.text)));
        if let Some(p) = &node.parent_id {
            a_td[[position[p.as_str()], i]] = 1.0;
        }
    }
    Ok(TreeGraph { node_ids: order.into_iter().map(String::from).collect(), x, a_td, root_index: 0 })
}

/// `D̃⁻¹(A + I)` with `D̃` the row sums of `A + I`.
pub fn normalize_adjacency(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut out = a + &Array2::<f64>::eye(n);
    for mut row in out.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    out
}

/// Removes each edge independently with probability `p`.
pub fn drop_edge(a: &Array2<f64>, p: f64, seed: u64) -> Result<Array2<f64>, RumourError> {
    drop_edge_with(a, p, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn drop_edge_with<R: Rng>(a: &Array2<f64>, p: f64, rng: &mut R) -> Result<Array2<f64>, RumourError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RumourError::InvalidRate(p));
    }
    let mut out = a.clone();
    for v in out.iter_mut() {
        if *v != 0.0 && rng.gen::<f64>() < p {
            *v = 0.0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TweetNode;
    use crate::retrieval::HashedTfidfEncoder;
    use chrono::{TimeZone, Utc};
    use ndarray::array;

    fn node(id: &str, parent: Option<&str>) -> TweetNode {
        TweetNode {
            tweet_id: id.into(),
            parent_id: parent.map(String::from),
            user_id: "u".into(),
            post_time: Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap(),
            text: format!("tweet {id}"),
            location: None,
            retweet_count: 0,
        }
    }

    fn tree(nodes: Vec<TweetNode>) -> PropagationTree {
        PropagationTree {
            tree_id: nodes[0].tweet_id.clone(),
            nodes,
            claim_ref: None,
            stance_label: None,
            rumour_label: None,
            rumour_prob: None,
        }
    }

    #[test]
    fn root_only() {
        let g = build_tree_graph(&tree(vec![node("r", None)]), &HashedTfidfEncoder::new(8)).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(normalize_adjacency(&g.a_td), array![[1.0]]);
    }

    #[test]
    fn chain_and_bfs_order() {
        let enc = HashedTfidfEncoder::new(8);
        let g = build_tree_graph(&tree(vec![node("r", None), node("b", Some("a")), node("a", Some("r"))]), &enc).unwrap();
        assert_eq!(g.node_ids, ["r", "a", "b"]);
        assert_eq!(g.a_td, array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]);
        assert_eq!(g.x.row(2).to_vec(), enc.encode("tweet b"));

        let g = build_tree_graph(
            &tree(vec![node("r", None), node("z", Some("r")), node("c", Some("z")), node("m", Some("r"))]),
            &enc,
        )
        .unwrap();
        assert_eq!(g.node_ids, ["r", "m", "z", "c"]);
    }

    #[test]
    fn invalid_tree_rejected() {
        let t = tree(vec![node("r", None), node("x", Some("missing"))]);
        assert!(matches!(build_tree_graph(&t, &HashedTfidfEncoder::new(4)), Err(RumourError::InvalidTree(_))));
    }

    #[test]
    fn single_edge_normalisation() {
        assert_eq!(normalize_adjacency(&array![[0.0, 1.0], [0.0, 0.0]]), array![[0.5, 0.5], [0.0, 1.0]]);
    }

    #[test]
    fn drop_edge_extremes() {
        let a = array![[0.0, 1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(drop_edge(&a, 0.0, 1).unwrap(), a);
        assert_eq!(drop_edge(&a, 1.0, 1).unwrap(), Array2::<f64>::zeros((3, 3)));
        assert_eq!(drop_edge(&a, 0.5, 9).unwrap(), drop_edge(&a, 0.5, 9).unwrap());
        assert!(matches!(drop_edge(&a, 1.5, 1), Err(RumourError::InvalidRate(_))));
    }
}
