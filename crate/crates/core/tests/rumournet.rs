use chrono::{TimeZone, Utc};
use ndarray::Array2;
use panacea_core::corpus::{LabelProvenance, PropagationTree, RumourClass, RumourLabel, TweetNode};
use panacea_core::optim::{ParamSet, TrainConfig};
use panacea_core::retrieval::HashedTfidfEncoder;
use panacea_core::rumournet::synthetic::{feature_shifted, random_parents, stars_and_chains};
use panacea_core::rumournet::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, d: usize) -> TreeGraph {
    let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
    TreeGraph::from_parents(x, &random_parents(rng, n)).unwrap()
}

fn toy_config(d: usize) -> BigcnConfig {
    BigcnConfig { d, h1: 4, h2: 4, classes: 2, dropedge_rate: 0.2 }
}

#[test]
fn probabilities_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..20 {
        let p = BigcnParams::init(toy_config(6), seed);
        let g = random_graph(&mut rng, 1 + seed as usize % 9, 6);
        for training in [false, true] {
            let out = bigcn_forward(&p, &g, training, seed).unwrap();
            assert!((out.probs.sum() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn single_node_depends_only_on_root_features() {
    let p = BigcnParams::init(toy_config(4), 3);
    let x = Array2::from_shape_vec((1, 4), vec![0.3, -0.2, 0.9, 0.1]).unwrap();
    let g = TreeGraph::from_parents(x.clone(), &[None]).unwrap();
    let out = bigcn_forward(&p, &g, false, 0).unwrap();

    // Â = [1], so each layer is a plain dense map of the root row.
    let relu = |a: Array2<f64>| a.mapv(|v| v.max(0.0));
    let dir = |w: &DirectionParams| {
        let h1 = relu(x.dot(&w.w1));
        let h1r = ndarray::concatenate![ndarray::Axis(1), h1, x];
        let h2 = relu(h1r.dot(&w.w2));
        ndarray::concatenate![ndarray::Axis(1), h2, h1].row(0).to_owned()
    };
    let feats = ndarray::concatenate![ndarray::Axis(0), dir(&p.td), dir(&p.bu)];
    let logits = feats.dot(&p.w_c) + &p.b_c;
    for (a, b) in logits.iter().zip(out.logits.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn normalisation_rows_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let g = random_graph(&mut rng, n, 2);
        for a in [g.a_td.clone(), g.a_bu()] {
            for row in normalize_adjacency(&a).rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn logits_invariant_under_relabelling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = BigcnParams::init(toy_config(5), 0);
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let g = random_graph(&mut rng, n, 5);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let a = bigcn_forward(&p, &g, false, 0).unwrap();
        let b = bigcn_forward(&p, &g.permuted(&perm), false, 0).unwrap();
        for (x, y) in a.logits.iter().zip(b.logits.iter()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn dropedge_keeps_expected_fraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_graph(&mut rng, 21, 1);
    assert_eq!(g.edge_count(), 20);
    for p in [0.2, 0.5] {
        let mut kept = 0usize;
        for _ in 0..10_000 {
            kept += drop_edge_with(&g.a_td, p, &mut rng).unwrap().iter().filter(|&&v| v != 0.0).count();
        }
        let frac = kept as f64 / (10_000.0 * 20.0);
        assert!((frac - (1.0 - p)).abs() < 0.02, "p={p} kept {frac}");
    }
}

#[test]
fn inference_is_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = BigcnParams::init(toy_config(5), 9);
    let g = random_graph(&mut rng, 8, 5);
    assert_eq!(bigcn_forward(&p, &g, false, 1).unwrap(), bigcn_forward(&p, &g, false, 2).unwrap());
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let p = BigcnParams::init(toy_config(8), trial);
        let n = rng.gen_range(1..=6);
        let g = random_graph(&mut rng, n, 8);
        let r = bigcn_gradient_check(&p, &g, (trial % 2) as usize, 1e-5, 100, trial).unwrap();
        assert!(r.coordinates_checked >= 100);
        worst = worst.max(r.max_relative_error);
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn corrupted_gradient_is_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = BigcnParams::init(toy_config(8), 1);
    let g = random_graph(&mut rng, 5, 8);
    let (_, mut grad) = bigcn_loss_and_grad(&p, &g, 1, false, 0).unwrap();
    grad.w_c.mapv_inplace(|v| v * 1.5 + 0.01);
    let report = panacea_core::optim::check_gradients(
        &p,
        &grad,
        |q| bigcn_loss(q, &g, 1).unwrap(),
        100,
        1e-5,
        0,
    );
    assert!(report.max_relative_error > 1e-2);
}

#[test]
fn overfits_a_single_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = vec![LabelledGraph { graph: random_graph(&mut rng, 6, 8), label: 1 }];
    let cfg = TrainConfig { epochs: 300, lr: 1e-2, seed: 0, batch_size: 1 };
    let out = train_bigcn(BigcnParams::init(toy_config(8), 0), &data, &cfg).unwrap();
    assert!(*out.loss_curve.last().unwrap() < 0.01, "{:?}", out.loss_curve.last());
}

#[test]
fn training_is_reproducible_and_zero_lr_is_inert() {
    let data = stars_and_chains(10, 6, 1.0, 1);
    let cfg = TrainConfig { epochs: 5, lr: 1e-2, seed: 4, batch_size: 3 };
    let a = train_bigcn(BigcnParams::init(toy_config(6), 2), &data, &cfg).unwrap();
    let b = train_bigcn(BigcnParams::init(toy_config(6), 2), &data, &cfg).unwrap();
    assert_eq!(a.loss_curve, b.loss_curve);
    assert_eq!(a.params, b.params);

    let p = BigcnParams::init(toy_config(6), 2);
    let still = train_bigcn(p.clone(), &data, &TrainConfig { lr: 0.0, ..cfg }).unwrap();
    assert_eq!(still.params, p);
    assert!(matches!(train_bigcn(p, &[], &cfg), Err(RumourError::EmptyDataset)));
}

#[test]
fn warm_start_continues_from_checkpoint() {
    let data = stars_and_chains(20, 6, 1.0, 2);
    let cfg = TrainConfig { epochs: 10, lr: 1e-2, seed: 0, batch_size: 4 };
    let first = train_bigcn(BigcnParams::init(toy_config(6), 0), &data, &cfg).unwrap();
    let mut buf = Vec::new();
    first.params.to_checkpoint().write_to(&mut buf, panacea_core::checkpoint::TensorEncoding::Binary).unwrap();
    let loaded =
        BigcnParams::from_checkpoint(&panacea_core::checkpoint::Checkpoint::read_from(&buf[..]).unwrap()).unwrap();
    assert_eq!(loaded, first.params);
    let second = train_bigcn(loaded, &data, &cfg).unwrap();
    assert!(second.loss_curve.last() < first.loss_curve.first());
}

#[test]
fn separable_stars_and_chains_generalise() {
    let train = stars_and_chains(200, 8, 1.0, 10);
    let held_out = stars_and_chains(100, 8, 1.0, 11);
    let cfg = TrainConfig { epochs: 30, lr: 1e-2, seed: 0, batch_size: 8 };
    let out = train_bigcn(BigcnParams::init(BigcnConfig { d: 8, h1: 16, h2: 16, ..Default::default() }, 0), &train, &cfg)
        .unwrap();
    let acc = bigcn_accuracy(&out.params, &held_out).unwrap();
    assert!(acc >= 0.9, "{acc}");
}

#[test]
fn cross_distribution_accuracy_drops() {
    let a_train = feature_shifted(200, 6, 1.0, 20);
    let a_test = feature_shifted(100, 6, 1.0, 21);
    let b = feature_shifted(100, 6, -1.0, 22);
    let cfg = TrainConfig { epochs: 20, lr: 1e-2, seed: 0, batch_size: 8 };
    let params = train_bigcn(BigcnParams::init(toy_config(6), 0), &a_train, &cfg).unwrap().params;
    let inside = evaluate_cross_dataset(&params, "A", "A-test", &a_test).unwrap();
    let cross = evaluate_cross_dataset(&params, "A", "B", &b).unwrap();
    assert_eq!(cross.train_set, "A");
    assert_eq!(cross.test_set, "B");
    assert!(inside.accuracy - cross.accuracy >= 0.10, "{} vs {}", inside.accuracy, cross.accuracy);
}

#[test]
fn overfit_set_scores_perfectly_and_constant_predictor_scores_class_share() {
    let (acc, per_class) = classification_metrics(&[0, 0, 0, 0], &[0, 1, 0, 0], 2);
    assert_eq!(acc, 0.75);
    assert_eq!(per_class[0].precision, 0.75);
    assert_eq!(per_class[0].recall, 1.0);
    assert_eq!(per_class[1].recall, 0.0);

    let data = stars_and_chains(6, 6, 2.0, 3);
    let cfg = TrainConfig { epochs: 200, lr: 1e-2, seed: 0, batch_size: 1 };
    let params = train_bigcn(BigcnParams::init(toy_config(6), 0), &data, &cfg).unwrap().params;
    assert_eq!(evaluate_cross_dataset(&params, "s", "s", &data).unwrap().accuracy, 1.0);
    assert!(matches!(evaluate_cross_dataset(&params, "s", "s", &[]), Err(RumourError::EmptyDataset)));
}

#[test]
fn aggregation_examples() {
    let s = |n, r| TreeScore { tree_id: String::new(), r, n };
    assert_eq!(aggregate_rumour(&[s(5, 1.0)]).unwrap(), 1.0);
    assert_eq!(aggregate_rumour(&[s(3, 1.0), s(1, 0.0)]).unwrap(), 0.75);
    assert_eq!(aggregate_rumour(&[]), Err(RumourError::NoTrees));
}

proptest! {
    #[test]
    fn aggregation_bounds(scores in prop::collection::vec((1usize..1000, 0.0f64..=1.0), 1..20)) {
        let list: Vec<TreeScore> = scores.iter().map(|&(n, r)| TreeScore { tree_id: String::new(), r, n }).collect();
        let agg = aggregate_rumour(&list).unwrap();
        let lo = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let hi = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(agg >= lo - 1e-12 && agg <= hi + 1e-12);
    }

    #[test]
    fn aggregation_of_constant_r(r in 0.0f64..=1.0, ns in prop::collection::vec(1usize..100, 1..10)) {
        let list: Vec<TreeScore> = ns.iter().map(|&n| TreeScore { tree_id: String::new(), r, n }).collect();
        prop_assert!((aggregate_rumour(&list).unwrap() - r).abs() < 1e-12);
    }
}

fn text_tree(id: &str, texts: &[&str]) -> PropagationTree {
    let nodes = texts
        .iter()
        .enumerate()
        .map(|(i, t)| TweetNode {
            tweet_id: format!("{id}-{i}"),
            parent_id: (i > 0).then(|| format!("{id}-{}", (i - 1) / 2)),
            user_id: format!("u{i}"),
            post_time: Utc.with_ymd_and_hms(2020, 4, 1, 0, i as u32, 0).unwrap(),
            text: t.to_string(),
            location: None,
            retweet_count: 0,
        })
        .collect();
    PropagationTree {
        tree_id: format!("{id}-0"),
        nodes,
        claim_ref: None,
        stance_label: None,
        rumour_label: None,
        rumour_prob: None,
    }
}

#[test]
fn pseudo_labels_respect_annotations_and_match_single_scoring() {
    let enc = HashedTfidfEncoder::new(16);
    let params = BigcnParams::init(BigcnConfig { d: 16, ..toy_config(16) }, 5);
    let mut trees: Vec<PropagationTree> = (0..10)
        .map(|i| text_tree(&format!("t{i}"), &["vitamin c cures covid", "no it does not", "source please", "fake news"][..1 + i % 4]))
        .collect();
    let annotated = RumourLabel { class: RumourClass::NonRumour, provenance: LabelProvenance::Annotated };
    trees[3].rumour_label = Some(annotated);
    let before = trees.clone();

    let updated = pseudo_label_trees(&params, &mut trees, &enc, 0.5).unwrap();
    assert_eq!(updated, 9);
    assert_eq!(trees[3], before[3]);
    for (i, t) in trees.iter().enumerate().filter(|&(i, _)| i != 3) {
        let single = score_tree(&params, &before[i], &enc).unwrap();
        assert_eq!(t.rumour_prob, Some(single.r));
        let label = t.rumour_label.unwrap();
        assert_eq!(label.provenance, LabelProvenance::Pseudo);
        assert_eq!(label.class == RumourClass::Rumour, single.r >= 0.5);
    }

    // Threshold equal to a tree's own score labels it Rumour.
    let mut one = vec![before[0].clone()];
    let r = score_tree(&params, &one[0], &enc).unwrap().r;
    pseudo_label_trees(&params, &mut one, &enc, r).unwrap();
    assert_eq!(one[0].rumour_label.unwrap().class, RumourClass::Rumour);
}

#[test]
fn checkpoint_round_trip_text() {
    let p = BigcnParams::init(toy_config(5), 11);
    let mut buf = Vec::new();
    p.to_checkpoint().write_to(&mut buf, panacea_core::checkpoint::TensorEncoding::Text).unwrap();
    let ck = panacea_core::checkpoint::Checkpoint::read_from(&buf[..]).unwrap();
    assert_eq!(ck.arch_usize("c").unwrap(), 2);
    assert_eq!(BigcnParams::from_checkpoint(&ck).unwrap(), p);
    assert!(p.is_finite());
}
