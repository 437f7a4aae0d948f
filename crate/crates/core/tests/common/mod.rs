//! Shared generators and independent reference implementations used by the
//! integration suites. Everything here recomputes results through a route
//! different from the library's own.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treealign_core::tree::{Measure, NodeId, Tree};
use treealign_core::Point;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random edge length on a dyadic lattice. Path sums of such lengths are
/// exact in f64, so differently ordered accumulations agree bit for bit.
pub fn dyadic_length(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(1u64..=(1 << 21)) as f64 / (1u64 << 20) as f64
}

/// Random rooted tree with `2..=max_nodes` nodes and dyadic edge lengths.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> Tree {
    let n = rng.random_range(2..=max_nodes);
    let mut parents = vec![None];
    let mut lengths = vec![0.0];
    for i in 1..n {
        parents.push(Some(rng.random_range(0..i)));
        lengths.push(dyadic_length(rng));
    }
    Tree::from_parents(parents, lengths).expect("generated tree is valid")
}

/// Random measure on up to `max_supports` distinct nodes with integer-ratio
/// weights.
pub fn random_measure(rng: &mut ChaCha8Rng, tree: &Tree, max_supports: usize) -> Measure {
    let k = rng.random_range(1..=max_supports.min(tree.len()));
    let mut nodes: Vec<NodeId> = (0..tree.len()).collect();
    for i in 0..k {
        let j = rng.random_range(i..nodes.len());
        nodes.swap(i, j);
    }
    let supports: Vec<NodeId> = nodes[..k].to_vec();
    let raw: Vec<u64> = (0..k).map(|_| rng.random_range(1..=20)).collect();
    let total: u64 = raw.iter().sum();
    let weights = raw.iter().map(|&w| w as f64 / total as f64).collect();
    Measure::new(supports, weights).expect("generated measure is valid")
}

/// All-pairs shortest paths by Floyd-Warshall over the undirected edge set.
pub fn floyd_warshall(tree: &Tree) -> Vec<Vec<f64>> {
    let n = tree.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    #[allow(clippy::needless_range_loop)]
    for v in 0..n {
        d[v][v] = 0.0;
        if let Some(p) = tree.parent(v) {
            d[v][p] = tree.edge_length(v);
            d[p][v] = tree.edge_length(v);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Lowest common ancestor by brute-force root-path intersection.
pub fn lca_by_path_intersection(tree: &Tree, u: NodeId, v: NodeId) -> NodeId {
    let path = |mut x: NodeId| {
        let mut p = vec![x];
        while let Some(parent) = tree.parent(x) {
            p.push(parent);
            x = parent;
        }
        p
    };
    let pu = path(u);
    let pv = path(v);
    pu.iter()
        .copied()
        .filter(|a| pv.contains(a))
        .max_by_key(|&a| tree.depth(a))
        .expect("root is always shared")
}

/// A 1-D empirical measure with integer weights over a common denominator.
#[derive(Debug, Clone)]
pub struct RationalProfile {
    pub positions: Vec<f64>,
    pub counts: Vec<u64>,
    pub denominator: u64,
}

impl RationalProfile {
    pub fn random(rng: &mut ChaCha8Rng, max_atoms: usize, denominator: u64) -> Self {
        let k = rng.random_range(1..=max_atoms);
        // split `denominator` into k positive parts
        let mut cuts: Vec<u64> = (0..k - 1)
            .map(|_| rng.random_range(1..denominator))
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut counts = Vec::with_capacity(cuts.len() + 1);
        let mut prev = 0;
        for &c in &cuts {
            counts.push(c - prev);
            prev = c;
        }
        counts.push(denominator - prev);
        let mut positions: Vec<f64> = counts
            .iter()
            .map(|_| rng.random_range(0.0..5.0f64))
            .collect();
        positions.sort_by(f64::total_cmp);
        Self {
            positions,
            counts,
            denominator,
        }
    }

    pub fn entries(&self) -> Vec<(f64, f64)> {
        self.positions
            .iter()
            .zip(&self.counts)
            .map(|(&p, &c)| (p, c as f64 / self.denominator as f64))
            .collect()
    }

    /// Expansion into `denominator` unit atoms, already sorted.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.denominator as usize);
        for (&p, &c) in self.positions.iter().zip(&self.counts) {
            out.extend(std::iter::repeat_n(p, c as usize));
        }
        out
    }
}

/// Index-wise matching of the two expansions: the quantile coupling
/// computed without the sweep.
pub fn atom_expansion_cost(a: &RationalProfile, b: &RationalProfile, squared: bool) -> f64 {
    assert_eq!(a.denominator, b.denominator);
    let xs = a.expand();
    let zs = b.expand();
    let unit = 1.0 / a.denominator as f64;
    xs.iter()
        .zip(&zs)
        .map(|(&x, &z)| {
            let d = (x - z).abs();
            unit * if squared { d * d } else { d }
        })
        .sum()
}

/// Minimum matching cost over all permutations of `b` against `a`
/// (equal-size unit-mass atom lists). Enumerates every vertex of the
/// expanded transport polytope.
pub fn min_permutation_cost(a: &[f64], b: &[f64], squared: bool) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let unit = 1.0 / n as f64;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    // Heap's algorithm
    fn heaps(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            visit(perm);
            return;
        }
        for i in 0..k {
            heaps(perm, k - 1, visit);
            if k.is_multiple_of(2) {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
    }
    heaps(&mut perm, n, &mut |p: &[usize]| {
        let cost: f64 = p
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let d = (a[i] - b[j]).abs();
                unit * if squared { d * d } else { d }
            })
            .sum();
        if cost < best {
            best = cost;
        }
    });
    best
}

/// Random cloud of `n` points in `dim` dimensions, coordinates in
/// `[-scale, scale]`.
pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Vec<Point> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

/// Random rotation matrix (proper, det +1) from Gram-Schmidt on a Gaussian
/// matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut ok = true;
        for _ in 0..dim {
            let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
            for u in &q {
                let proj: f64 = v.iter().zip(u).map(|(&a, &b)| a * b).sum();
                for (vi, &ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
        if !ok {
            continue;
        }
        if det_sign(&q) < 0.0 {
            for x in q[0].iter_mut() {
                *x = -*x;
            }
        }
        return q;
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; test-only helper
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn det_sign(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0].signum(),
        2 => (m[0][0] * m[1][1] - m[0][1] * m[1][0]).signum(),
        3 => {
            let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            d.signum()
        }
        _ => unimplemented!("det_sign for dim > 3"),
    }
}

pub fn apply_motion(points: &[Point], rotation: &[Vec<f64>], shift: &[f64]) -> Vec<Point> {
    points
        .iter()
        .map(|p| {
            rotation
                .iter()
                .zip(shift)
                .map(|(row, &t)| {
                    row.iter().zip(p).map(|(&r, &x)| r * x).sum::<f64>() + t
                })
                .collect()
        })
        .collect()
}
