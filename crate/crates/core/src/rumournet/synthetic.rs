//! Generated tree datasets with known structure–label and feature–label
//! relationships.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::TreeGraph;
use super::model::{CLASS_NON_RUMOUR, CLASS_RUMOUR};
use super::train::LabelledGraph;

/// Parent list of a random tree in which every node's parent precedes it.
pub fn random_parents<R: Rng>(rng: &mut R, n: usize) -> Vec<Option<usize>> {
    (0..n).map(|i| if i == 0 { None } else { Some(rng.gen_range(0..i)) }).collect()
}

fn star(n: usize) -> Vec<Option<usize>> {
    (0..n).map(|i| if i == 0 { None } else { Some(0) }).collect()
}

fn chain(n: usize) -> Vec<Option<usize>> {
    (0..n).map(|i| i.checked_sub(1)).collect()
}

fn features<R: Rng>(rng: &mut R, n: usize, d: usize, mean0: f64, noise: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |(_, c)| rng.gen_range(-noise..=noise) + if c == 0 { mean0 } else { 0.0 })
}

/// Non-rumour stars and rumour chains of 5–12 nodes. Feature 0 is shifted by
/// `-shift` for stars and `+shift` for chains.
pub fn stars_and_chains(count: usize, d: usize, shift: f64, seed: u64) -> Vec<LabelledGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(5..=12);
            let (parents, label, mean0) =
                if i % 2 == 0 { (star(n), CLASS_NON_RUMOUR, -shift) } else { (chain(n), CLASS_RUMOUR, shift) };
            let x = features(&mut rng, n, d, mean0, 1.0);
            LabelledGraph { graph: TreeGraph::from_parents(x, &parents).unwrap(), label }
        })
        .collect()
}

/// Random-shape trees whose label is carried only by feature 0, with sign
/// `+correlation` for rumours. Two datasets with opposite `correlation`
/// share structure statistics but disagree on the feature–label relation.
pub fn feature_shifted(count: usize, d: usize, correlation: f64, seed: u64) -> Vec<LabelledGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(3..=10);
            let parents = random_parents(&mut rng, n);
            let label = if i % 2 == 0 { CLASS_NON_RUMOUR } else { CLASS_RUMOUR };
            let mean0 = if label == CLASS_RUMOUR { correlation } else { -correlation };
            let x = features(&mut rng, n, d, mean0, 0.5);
            LabelledGraph { graph: TreeGraph::from_parents(x, &parents).unwrap(), label }
        })
        .collect()
}
