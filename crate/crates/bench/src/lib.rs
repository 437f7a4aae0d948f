//! Input generators shared by the benchmark targets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treealign_core::tree::{FlowProfile, Measure, NodeId, Tree};
use treealign_core::Point;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_profile(rng: &mut ChaCha8Rng, atoms: usize) -> FlowProfile {
    let mut lengths: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.0..10.0)).collect();
    lengths.sort_by(f64::total_cmp);
    let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.2..2.0)).collect();
    let total: f64 = raw.iter().sum();
    FlowProfile::new(
        lengths
            .into_iter()
            .zip(raw)
            .map(|(l, w)| (l, w / total))
            .collect(),
    )
    .expect("generated profile is valid")
}

pub fn random_tree(rng: &mut ChaCha8Rng, nodes: usize) -> Tree {
    let mut parents = vec![None];
    let mut lengths = vec![0.0];
    for i in 1..nodes {
        parents.push(Some(rng.random_range(0..i)));
        lengths.push(rng.random_range(0.05..2.0));
    }
    Tree::from_parents(parents, lengths).expect("generated tree is valid")
}

pub fn random_measure(rng: &mut ChaCha8Rng, tree: &Tree, supports: usize) -> Measure {
    let k = supports.min(tree.len());
    let mut nodes: Vec<NodeId> = (0..tree.len()).collect();
    for i in 0..k {
        let j = rng.random_range(i..nodes.len());
        nodes.swap(i, j);
    }
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..2.0)).collect();
    let total: f64 = raw.iter().sum();
    Measure::new(
        nodes[..k].to_vec(),
        raw.into_iter().map(|w| w / total).collect(),
    )
    .expect("generated measure is valid")
}

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Point> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect()
}
