//! Tree metric properties against brute-force graph oracles.

mod common;

use common::*;
use rand::Rng;
use treealign_core::tree::{flow_profile, Tree};

#[test]
fn distance_matches_floyd_warshall_all_pairs() {
    let mut rng = rng(0xA11);
    for _ in 0..20 {
        let tree = random_tree(&mut rng, 10);
        let oracle = floyd_warshall(&tree);
        for u in tree.node_ids() {
            for v in tree.node_ids() {
                let got = tree.tree_distance(u, v).unwrap();
                assert!(
                    (got - oracle[u][v]).abs() < 1e-12,
                    "d({u},{v}) = {got}, oracle {}",
                    oracle[u][v]
                );
            }
        }
    }
}

#[test]
fn lca_matches_root_path_intersection() {
    let mut rng = rng(0xB22);
    for _ in 0..20 {
        let tree = random_tree(&mut rng, 14);
        for u in tree.node_ids() {
            for v in tree.node_ids() {
                assert_eq!(
                    tree.lowest_common_ancestor(u, v).unwrap(),
                    lca_by_path_intersection(&tree, u, v)
                );
            }
        }
    }
}

#[test]
fn metric_axioms_on_random_trees() {
    let mut rng = rng(0xC33);
    for _ in 0..10 {
        let tree = random_tree(&mut rng, 30);
        let n = tree.len();
        for u in 0..n {
            for v in 0..n {
                let duv = tree.tree_distance(u, v).unwrap();
                let dvu = tree.tree_distance(v, u).unwrap();
                assert!(duv >= 0.0);
                assert_eq!(duv, dvu, "symmetry");
                // identity of indiscernibles holds when edges are positive
                assert_eq!(duv == 0.0, u == v, "d({u},{v}) = {duv}");
            }
        }
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let direct = tree.tree_distance(u, w).unwrap();
                    let via = tree.tree_distance(u, v).unwrap() + tree.tree_distance(v, w).unwrap();
                    assert!(direct <= via + 1e-9, "triangle at ({u},{v},{w})");
                }
            }
        }
    }
}

#[test]
fn root_split_identity_through_the_common_ancestor() {
    let mut rng = rng(0xD44);
    for _ in 0..20 {
        let tree = random_tree(&mut rng, 25);
        let r = tree.root();
        for u in tree.node_ids() {
            for v in tree.node_ids() {
                let a = tree.lowest_common_ancestor(u, v).unwrap();
                let lhs = tree.tree_distance(u, v).unwrap();
                let rhs = tree.tree_distance(r, u).unwrap() + tree.tree_distance(r, v).unwrap()
                    - 2.0 * tree.tree_distance(r, a).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn flow_profile_mass_is_conserved_and_sorted() {
    let mut rng = rng(0xE55);
    for _ in 0..50 {
        let tree = random_tree(&mut rng, 20);
        let measure = random_measure(&mut rng, &tree, 10);
        let profile = flow_profile(&measure, &tree).unwrap();
        let total: f64 = profile.masses().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let lengths: Vec<f64> = profile.lengths().collect();
        assert!(lengths.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn serialization_survives_random_trees() {
    use treealign_core::io::{tree_from_text, tree_to_text};
    let mut rng = rng(0xF66);
    for _ in 0..25 {
        let tree = random_tree(&mut rng, 40);
        let back = tree_from_text(&tree_to_text(&tree)).unwrap();
        assert_eq!(tree.len(), back.len());
        for v in tree.node_ids() {
            assert_eq!(tree.parent(v), back.parent(v));
            assert_eq!(tree.edge_length(v).to_bits(), back.edge_length(v).to_bits());
        }
    }
}

#[test]
fn stable_tie_order_under_equal_lengths() {
    // four nodes at identical distances from the root; profile order must
    // follow support order
    let tree = Tree::from_parents(
        vec![None, Some(0), Some(0), Some(0), Some(0)],
        vec![0.0, 1.0, 1.0, 1.0, 1.0],
    )
    .unwrap();
    let m =
        treealign_core::Measure::new(vec![3, 1, 4, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let p = flow_profile(&m, &tree).unwrap();
    // supports in measure order (all lengths equal): indices 0,1,2,3
    let masses: Vec<f64> = p.masses().collect();
    assert_eq!(masses, vec![0.1, 0.2, 0.3, 0.4]);
}

#[test]
fn rerooting_keeps_the_metric() {
    let mut rng = rng(0x177);
    for _ in 0..10 {
        let tree = random_tree(&mut rng, 15);
        let new_root = rng.random_range(0..tree.len());
        let rerooted = tree.rerooted(new_root).unwrap();
        assert_eq!(rerooted.root(), new_root);
        for u in tree.node_ids() {
            for v in tree.node_ids() {
                let a = tree.tree_distance(u, v).unwrap();
                let b = rerooted.tree_distance(u, v).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
