//! Clustering-based tree metric sampling: farthest-point clustering applied
//! recursively to embed raw points into a rooted weighted tree.
//!
//! Every level clusters the current point set into at most `kappa` groups
//! and creates a child node at each group's mean, with the edge length set
//! to the Euclidean distance between parent and child centers. All ties are
//! broken by index, so a rigid motion of the inputs reproduces the same
//! topology and edge lengths.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::{euclidean, mean_point, Point};
use crate::tree::{Measure, NodeId, Tree};
use crate::util::derive_seed;

/// Where the sampled tree's root is placed.
#[derive(Debug, Clone, PartialEq)]
pub enum RootMode {
    /// Root at the arithmetic mean of the input points. Sampling several
    /// measures this way yields aligned roots by construction.
    MeanOfSupports,
    /// Root at a caller-supplied point.
    FixedPoint(Point),
}

/// Parameters of the tree sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Number of clusters per level (`kappa >= 2`).
    pub num_clusters: usize,
    /// Deepest tree level (`>= 2`); the root is at level 1.
    pub max_depth: u32,
    pub seed: u64,
    pub root_mode: RootMode,
}

impl SamplerConfig {
    pub fn new(num_clusters: usize, max_depth: u32, seed: u64) -> Result<Self> {
        let cfg = Self {
            num_clusters,
            max_depth,
            seed,
            root_mode: RootMode::MeanOfSupports,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_root_mode(mut self, mode: RootMode) -> Self {
        self.root_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clusters < 2 {
            return Err(Error::InvalidConfig(format!(
                "num_clusters must be >= 2, got {}",
                self.num_clusters
            )));
        }
        if self.max_depth < 2 {
            return Err(Error::InvalidConfig(format!(
                "max_depth must be >= 2, got {}",
                self.max_depth
            )));
        }
        Ok(())
    }
}

/// A sampled tree together with the point each node represents and the node
/// each input point landed on.
#[derive(Debug, Clone)]
pub struct Embedding {
    tree: Tree,
    point_of_node: Vec<Point>,
    node_of_point: Vec<NodeId>,
}

impl Embedding {
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn point_of_node(&self) -> &[Point] {
        &self.point_of_node
    }

    pub fn node_of_point(&self) -> &[NodeId] {
        &self.node_of_point
    }

    /// Converts per-point weights into a measure on the sampled tree.
    /// Points that landed on the same node have their weights merged.
    pub fn measure(&self, weights: &[f64]) -> Result<Measure> {
        if weights.len() != self.node_of_point.len() {
            return Err(Error::SizeMismatch(format!(
                "{} weights for {} embedded points",
                weights.len(),
                self.node_of_point.len()
            )));
        }
        let mut mass = vec![0.0f64; self.tree.len()];
        for (&node, &w) in self.node_of_point.iter().zip(weights) {
            mass[node] += w;
        }
        let mut supports = Vec::new();
        let mut merged = Vec::new();
        for (node, &m) in mass.iter().enumerate() {
            if m > 0.0 {
                supports.push(node);
                merged.push(m);
            }
        }
        Measure::new(supports, merged)
    }
}

/// Greedy farthest-point clustering (a 2-approximation of the k-center
/// objective).
///
/// The first center is `points[init_index]`; each following center is the
/// point farthest from the chosen set, ties going to the lowest index.
/// Selection stops early once every point coincides with a center. Each
/// point is assigned to its nearest center, ties again by lowest center
/// index.
pub fn farthest_point_clustering(
    points: &[Point],
    kappa: usize,
    init_index: usize,
) -> Result<(Vec<Point>, Vec<usize>)> {
    if points.is_empty() {
        return Err(Error::EmptyInput("farthest-point clustering input"));
    }
    if init_index >= points.len() {
        return Err(Error::InvalidConfig(format!(
            "init_index {} out of {} points",
            init_index,
            points.len()
        )));
    }
    if kappa == 0 {
        return Err(Error::InvalidConfig("kappa must be positive".into()));
    }
    let subset: Vec<usize> = (0..points.len()).collect();
    let (center_ids, assignment) = fpc_on_subset(points, &subset, kappa, init_index);
    let centers = center_ids.iter().map(|&i| points[i].clone()).collect();
    Ok((centers, assignment))
}

/// Clustering over `subset` (indices into `points`). Returns center point
/// indices and, per subset position, the cluster index.
fn fpc_on_subset(
    points: &[Point],
    subset: &[usize],
    kappa: usize,
    init_pos: usize,
) -> (Vec<usize>, Vec<usize>) {
    let n = subset.len();
    let mut centers = vec![subset[init_pos]];
    // distance of each subset point to its nearest chosen center
    let mut dist: Vec<f64> = subset
        .iter()
        .map(|&i| euclidean(&points[i], &points[subset[init_pos]]))
        .collect();
    let mut nearest = vec![0usize; n];
    while centers.len() < kappa && centers.len() < n {
        let (mut far_pos, mut far_dist) = (0usize, f64::NEG_INFINITY);
        for (pos, &d) in dist.iter().enumerate() {
            if d > far_dist {
                far_dist = d;
                far_pos = pos;
            }
        }
        if far_dist <= 0.0 {
            break; // every point already coincides with a center
        }
        let c = centers.len();
        centers.push(subset[far_pos]);
        for (pos, &i) in subset.iter().enumerate() {
            let d = euclidean(&points[i], &points[subset[far_pos]]);
            if d < dist[pos] {
                dist[pos] = d;
                nearest[pos] = c;
            }
        }
    }
    (centers, nearest)
}

/// Embeds `points` into a sampled tree metric.
///
/// The root sits at the mean of all points (or the configured fixed point,
/// with the whole-set mean inserted below it). Recursion stops on singleton
/// sets or at `max_depth`; every input point is bound to the node where its
/// recursion stopped.
pub fn sample_tree_metric(points: &[Point], config: &SamplerConfig) -> Result<Embedding> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyInput("sampler points"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::SizeMismatch("points of mixed dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut builder = TreeBuilder::new(points.len());
    let all: Vec<usize> = (0..points.len()).collect();
    match &config.root_mode {
        RootMode::MeanOfSupports => {
            let root = builder.add_node(None, 0.0, mean_point(points));
            grow(points, &all, root, 1, config, &mut rng, &mut builder);
        }
        RootMode::FixedPoint(p) => {
            if p.len() != dim {
                return Err(Error::SizeMismatch(format!(
                    "fixed root has dimension {}, points have {}",
                    p.len(),
                    dim
                )));
            }
            let root = builder.add_node(None, 0.0, p.clone());
            let center = mean_point(points);
            let w = euclidean(p, &center);
            let hub = builder.add_node(Some(root), w, center);
            grow(points, &all, hub, 2, config, &mut rng, &mut builder);
        }
    }
    builder.finish()
}

struct TreeBuilder {
    parents: Vec<Option<NodeId>>,
    lengths: Vec<f64>,
    point_of_node: Vec<Point>,
    node_of_point: Vec<NodeId>,
}

impl TreeBuilder {
    fn new(num_points: usize) -> Self {
        Self {
            parents: Vec::new(),
            lengths: Vec::new(),
            point_of_node: Vec::new(),
            node_of_point: vec![usize::MAX; num_points],
        }
    }

    fn add_node(&mut self, parent: Option<NodeId>, length: f64, point: Point) -> NodeId {
        let id = self.parents.len();
        self.parents.push(parent);
        self.lengths.push(length);
        self.point_of_node.push(point);
        id
    }

    fn bind(&mut self, point_idx: usize, node: NodeId) {
        self.node_of_point[point_idx] = node;
    }

    fn finish(self) -> Result<Embedding> {
        debug_assert!(self.node_of_point.iter().all(|&n| n != usize::MAX));
        Ok(Embedding {
            tree: Tree::from_parents(self.parents, self.lengths)?,
            point_of_node: self.point_of_node,
            node_of_point: self.node_of_point,
        })
    }
}

/// Recursive level construction. `node` already represents `subset`; its
/// point is the subset's center (or the root point).
fn grow(
    points: &[Point],
    subset: &[usize],
    node: NodeId,
    depth: u32,
    config: &SamplerConfig,
    rng: &mut ChaCha8Rng,
    builder: &mut TreeBuilder,
) {
    if subset.len() > 1 && depth < config.max_depth {
        let init_pos = rng.random_range(0..subset.len());
        let (_, assignment) = fpc_on_subset(points, subset, config.num_clusters, init_pos);
        let num_clusters = assignment.iter().copied().max().unwrap_or(0) + 1;
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); num_clusters];
        for (pos, &c) in assignment.iter().enumerate() {
            clusters[c].push(subset[pos]);
        }
        for cluster in clusters.into_iter().filter(|c| !c.is_empty()) {
            let member_points: Vec<Point> =
                cluster.iter().map(|&i| points[i].clone()).collect();
            let center = mean_point(&member_points);
            let w = euclidean(&builder.point_of_node[node], &center);
            let child = builder.add_node(Some(node), w, center);
            grow(points, &cluster, child, depth + 1, config, rng, builder);
        }
    } else {
        for &i in subset {
            builder.bind(i, node);
        }
    }
}

/// Samples one tree per point list with deterministically derived
/// per-measure seeds, each rooted per the configured mode (means give
/// aligned roots). Measures embed concurrently; the derived seeds make the
/// result independent of scheduling.
pub fn sample_aligned_root_trees(
    point_sets: &[Vec<Point>],
    config: &SamplerConfig,
) -> Result<Vec<Embedding>> {
    config.validate()?;
    if point_sets.iter().any(|ps| ps.is_empty()) {
        return Err(Error::EmptyInput("aligned-root sampling point list"));
    }
    point_sets
        .par_iter()
        .enumerate()
        .map(|(i, ps)| {
            let mut cfg = config.clone();
            cfg.seed = derive_seed(config.seed, "measure", i as u64);
            sample_tree_metric(ps, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[&[f64]]) -> Vec<Point> {
        coords.iter().map(|c| c.to_vec()).collect()
    }

    #[test]
    fn fpc_single_point() {
        let p = pts(&[&[1.0, 2.0]]);
        let (centers, assignment) = farthest_point_clustering(&p, 3, 0).unwrap();
        assert_eq!(centers, vec![vec![1.0, 2.0]]);
        assert_eq!(assignment, vec![0]);
    }

    #[test]
    fn fpc_collinear_example() {
        let p = pts(&[&[0.0], &[1.0], &[2.0], &[10.0]]);
        let (centers, assignment) = farthest_point_clustering(&p, 2, 0).unwrap();
        assert_eq!(centers, vec![vec![0.0], vec![10.0]]);
        assert_eq!(assignment, vec![0, 0, 0, 1]);
    }

    #[test]
    fn fpc_duplicates_stop_early() {
        let p = pts(&[&[1.0], &[1.0], &[1.0]]);
        let (centers, assignment) = farthest_point_clustering(&p, 3, 1).unwrap();
        assert_eq!(centers.len(), 1);
        assert_eq!(assignment, vec![0, 0, 0]);
    }

    #[test]
    fn sampled_tree_two_points_at_midpoint_root() {
        let p = pts(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let cfg = SamplerConfig::new(2, 2, 9).unwrap();
        let e = sample_tree_metric(&p, &cfg).unwrap();
        let t = e.tree();
        assert_eq!(t.len(), 3);
        assert_eq!(t.children(t.root()).len(), 2);
        for &c in t.children(t.root()) {
            assert!((t.edge_length(c) - 1.0).abs() < 1e-12);
        }
        assert_eq!(e.node_of_point().len(), 2);
        assert_ne!(e.node_of_point()[0], e.node_of_point()[1]);
    }

    #[test]
    fn sampled_tree_single_point_modes() {
        let p = pts(&[&[2.0, 3.0]]);
        let cfg = SamplerConfig::new(2, 3, 1).unwrap();
        let e = sample_tree_metric(&p, &cfg).unwrap();
        // mean mode: root is the point itself, no extra node
        assert_eq!(e.tree().len(), 1);
        assert_eq!(e.node_of_point(), &[0]);

        let fixed = cfg
            .clone()
            .with_root_mode(RootMode::FixedPoint(vec![0.0, 0.0]));
        let e = sample_tree_metric(&p, &fixed).unwrap();
        // fixed mode: root plus one node at the point
        assert_eq!(e.tree().len(), 2);
        let d = euclidean(&[0.0, 0.0], &[2.0, 3.0]);
        assert!((e.tree().edge_length(1) - d).abs() < 1e-12);
        assert_eq!(e.node_of_point(), &[1]);
    }

    #[test]
    fn depth_and_branching_respect_config() {
        let mut points = Vec::new();
        for i in 0..40 {
            let a = i as f64 * 0.37;
            points.push(vec![a.sin() * 3.0, (a * 1.7).cos() * 2.0]);
        }
        let cfg = SamplerConfig::new(3, 4, 123).unwrap();
        let e = sample_tree_metric(&points, &cfg).unwrap();
        let t = e.tree();
        assert!(t.max_depth() <= 4);
        for v in t.node_ids() {
            assert!(t.children(v).len() <= 3);
        }
        // node count bound for kappa-ary trees of this depth
        let bound = (3usize.pow(4) - 1) / 2;
        assert!(t.len() <= bound);
    }

    #[test]
    fn sampler_is_deterministic() {
        let points: Vec<Point> = (0..25)
            .map(|i| vec![(i as f64 * 0.71).sin(), (i as f64 * 0.31).cos()])
            .collect();
        let cfg = SamplerConfig::new(4, 5, 77).unwrap();
        let a = sample_tree_metric(&points, &cfg).unwrap();
        let b = sample_tree_metric(&points, &cfg).unwrap();
        assert_eq!(a.node_of_point(), b.node_of_point());
        assert_eq!(a.tree().len(), b.tree().len());
        for v in a.tree().node_ids() {
            assert_eq!(a.tree().parent(v), b.tree().parent(v));
            assert_eq!(a.tree().edge_length(v), b.tree().edge_length(v));
        }
    }

    #[test]
    fn aligned_roots_sit_at_support_means() {
        let sets = vec![
            pts(&[&[0.0, 0.0], &[2.0, 0.0]]),
            pts(&[&[5.0, 1.0], &[7.0, 3.0], &[6.0, 2.0]]),
        ];
        let cfg = SamplerConfig::new(2, 3, 5).unwrap();
        let embeddings = sample_aligned_root_trees(&sets, &cfg).unwrap();
        assert_eq!(embeddings.len(), 2);
        assert_eq!(embeddings[0].point_of_node()[0], vec![1.0, 0.0]);
        assert_eq!(embeddings[1].point_of_node()[0], vec![6.0, 2.0]);
    }

    #[test]
    fn translation_leaves_edge_lengths_unchanged() {
        let points: Vec<Point> = (0..20)
            .map(|i| vec![(i as f64 * 0.47).sin() * 2.0, (i as f64 * 0.23).cos()])
            .collect();
        let shifted: Vec<Point> = points
            .iter()
            .map(|p| vec![p[0] + 13.5, p[1] - 4.25])
            .collect();
        let cfg = SamplerConfig::new(3, 4, 11).unwrap();
        let a = sample_tree_metric(&points, &cfg).unwrap();
        let b = sample_tree_metric(&shifted, &cfg).unwrap();
        assert_eq!(a.tree().len(), b.tree().len());
        for v in a.tree().node_ids() {
            assert_eq!(a.tree().parent(v), b.tree().parent(v));
            assert!((a.tree().edge_length(v) - b.tree().edge_length(v)).abs() < 1e-9);
        }
        assert_eq!(a.node_of_point(), b.node_of_point());
    }

    #[test]
    fn duplicate_points_merge_into_one_measure_atom() {
        let p = pts(&[&[1.0, 1.0], &[1.0, 1.0], &[4.0, 4.0]]);
        let cfg = SamplerConfig::new(2, 3, 3).unwrap();
        let e = sample_tree_metric(&p, &cfg).unwrap();
        assert_eq!(e.node_of_point()[0], e.node_of_point()[1]);
        let m = e.measure(&[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(m.len(), 2);
        assert!(m.weights().iter().any(|&w| (w - 0.5).abs() < 1e-12));
    }
}
