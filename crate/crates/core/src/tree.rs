//! Rooted weighted trees, discrete measures on their nodes, and the 1-D
//! flow profile a measure induces from the root.
//!
//! The tree stores flat per-node arrays indexed by node id. Children lists
//! keep insertion order so every traversal is reproducible. Trees and
//! measures are immutable after construction; all queries are read-only.

use crate::error::{Error, Result};
use crate::util::KahanSum;

pub type NodeId = usize;

/// Tolerance on a measure's total mass.
pub const MASS_SUM_TOL: f64 = 1e-12;

/// A rooted tree with nonnegative edge lengths.
///
/// `edge_length[v]` is the length of the edge from `v` to its parent
/// (`0.0` for the root). The root has depth 1 and every child sits one
/// level below its parent.
#[derive(Debug, Clone)]
pub struct Tree {
    parent: Vec<Option<NodeId>>,
    edge_length: Vec<f64>,
    depth: Vec<u32>,
    children: Vec<Vec<NodeId>>,
    root: NodeId,
    // distance from the root to every node, filled at construction
    root_dist: Vec<f64>,
}

impl Tree {
    /// Builds a tree from parent links. `parents[v] = None` marks the root;
    /// `edge_lengths[v]` is the length of the edge to `parents[v]` and is
    /// ignored for the root.
    pub fn from_parents(parents: Vec<Option<NodeId>>, edge_lengths: Vec<f64>) -> Result<Self> {
        let n = parents.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        if edge_lengths.len() != n {
            return Err(Error::SizeMismatch(format!(
                "{} parents vs {} edge lengths",
                n,
                edge_lengths.len()
            )));
        }
        let mut root = None;
        for (v, p) in parents.iter().enumerate() {
            match p {
                None => {
                    if root.replace(v).is_some() {
                        return Err(Error::InvalidTree("more than one root".into()));
                    }
                }
                Some(p) => {
                    if *p >= n {
                        return Err(Error::InvalidNode { id: *p, len: n });
                    }
                    let w = edge_lengths[v];
                    if !w.is_finite() || w < 0.0 {
                        return Err(Error::InvalidTree(format!(
                            "edge length of node {v} must be finite and nonnegative, got {w}"
                        )));
                    }
                }
            }
        }
        let root = root.ok_or_else(|| Error::InvalidTree("no root".into()))?;

        let mut children = vec![Vec::new(); n];
        for (v, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }

        // BFS from the root assigns depths and root distances, and doubles
        // as the acyclicity/connectivity check.
        let mut depth = vec![0u32; n];
        let mut root_dist = vec![0.0f64; n];
        let mut queue = std::collections::VecDeque::from([root]);
        let mut seen = 1usize;
        depth[root] = 1;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if depth[c] != 0 {
                    return Err(Error::InvalidTree(format!("node {c} reached twice")));
                }
                depth[c] = depth[u] + 1;
                root_dist[c] = root_dist[u] + edge_lengths[c];
                seen += 1;
                queue.push_back(c);
            }
        }
        if seen != n {
            return Err(Error::InvalidTree(format!(
                "{} of {} nodes unreachable from root",
                n - seen,
                n
            )));
        }

        let mut edge_length = edge_lengths;
        edge_length[root] = 0.0;
        Ok(Self {
            parent: parents,
            edge_length,
            depth,
            children,
            root,
            root_dist,
        })
    }

    /// Single-node tree.
    pub fn singleton() -> Self {
        Self::from_parents(vec![None], vec![0.0]).expect("singleton tree is valid")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a valid tree always has a root
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    /// Length of the edge from `v` to its parent (0 for the root).
    pub fn edge_length(&self, v: NodeId) -> f64 {
        self.edge_length[v]
    }

    /// Depth level of `v`; the root is at level 1.
    pub fn depth(&self, v: NodeId) -> u32 {
        self.depth[v]
    }

    /// Deepest level present in the tree.
    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(1)
    }

    /// Distance from the root to `v`.
    pub fn root_distance(&self, v: NodeId) -> f64 {
        self.root_dist[v]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.parent.len()
    }

    fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                id: v,
                len: self.len(),
            })
        }
    }

    /// Length of the unique path between `u` and `v`.
    pub fn tree_distance(&self, u: NodeId, v: NodeId) -> Result<f64> {
        self.check_node(u)?;
        self.check_node(v)?;
        let a = self.lca_unchecked(u, v);
        Ok(self.root_dist[u] + self.root_dist[v] - 2.0 * self.root_dist[a])
    }

    /// Deepest node lying on both root-to-`u` and root-to-`v` paths.
    pub fn lowest_common_ancestor(&self, u: NodeId, v: NodeId) -> Result<NodeId> {
        self.check_node(u)?;
        self.check_node(v)?;
        Ok(self.lca_unchecked(u, v))
    }

    pub(crate) fn lca_unchecked(&self, mut u: NodeId, mut v: NodeId) -> NodeId {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u].expect("non-root node has a parent");
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v].expect("non-root node has a parent");
        }
        while u != v {
            u = self.parent[u].expect("non-root node has a parent");
            v = self.parent[v].expect("non-root node has a parent");
        }
        u
    }

    /// All nodes whose root path contains `x`, i.e. the subtree rooted at
    /// `x`, including `x` itself. Returned in preorder.
    pub fn subtree_nodes(&self, x: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(x)?;
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            out.push(v);
            // preserve child order under the LIFO stack
            for &c in self.children[v].iter().rev() {
                stack.push(c);
            }
        }
        Ok(out)
    }

    /// True when `anc` lies on the root path of `v`.
    pub fn is_ancestor(&self, anc: NodeId, mut v: NodeId) -> bool {
        while self.depth[v] > self.depth[anc] {
            v = self.parent[v].expect("non-root node has a parent");
        }
        v == anc
    }

    /// The same tree re-rooted at `new_root`. Node ids and edge lengths are
    /// preserved; parent links, depths and children orders are rebuilt by a
    /// traversal that visits the old parent first, then the old children.
    pub fn rerooted(&self, new_root: NodeId) -> Result<Tree> {
        self.check_node(new_root)?;
        if new_root == self.root {
            return Ok(self.clone());
        }
        let n = self.len();
        // undirected edge weights: length of the edge between v and old parent
        let mut parents = vec![None; n];
        let mut lengths = vec![0.0; n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([new_root]);
        visited[new_root] = true;
        while let Some(u) = queue.pop_front() {
            let mut neighbors: Vec<(NodeId, f64)> = Vec::new();
            if let Some(p) = self.parent[u] {
                neighbors.push((p, self.edge_length[u]));
            }
            for &c in &self.children[u] {
                neighbors.push((c, self.edge_length[c]));
            }
            for (v, w) in neighbors {
                if !visited[v] {
                    visited[v] = true;
                    parents[v] = Some(u);
                    lengths[v] = w;
                    queue.push_back(v);
                }
            }
        }
        Tree::from_parents(parents, lengths)
    }
}

/// A discrete probability measure supported on distinct tree nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    supports: Vec<NodeId>,
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(supports: Vec<NodeId>, weights: Vec<f64>) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::EmptyInput("measure supports"));
        }
        if supports.len() != weights.len() {
            return Err(Error::SizeMismatch(format!(
                "{} supports vs {} weights",
                supports.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().copied().collect::<KahanSum>().value();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let mut sorted = supports.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure("duplicate support node".into()));
        }
        Ok(Self { supports, weights })
    }

    /// Dirac measure at one node.
    pub fn dirac(node: NodeId) -> Self {
        Self {
            supports: vec![node],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn supports(&self) -> &[NodeId] {
        &self.supports
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight placed exactly on `node`, or 0.
    pub fn weight_at(&self, node: NodeId) -> f64 {
        self.supports
            .iter()
            .position(|&s| s == node)
            .map_or(0.0, |i| self.weights[i])
    }
}

/// The 1-D pushforward of a measure along root-to-support path lengths:
/// `(length, mass)` atoms sorted ascending by length. Atoms at equal
/// lengths stay separate entries; masses are strictly positive and sum
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProfile {
    entries: Vec<(f64, f64)>,
}

impl FlowProfile {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("flow profile"));
        }
        for w in entries.windows(2) {
            if w[1].0 < w[0].0 {
                return Err(Error::Unsorted("flow profile lengths must be ascending"));
            }
        }
        if entries
            .iter()
            .any(|&(l, m)| !l.is_finite() || l < 0.0 || !m.is_finite() || m <= 0.0)
        {
            return Err(Error::InvalidProfile(
                "lengths must be nonnegative and masses positive".into(),
            ));
        }
        let total: f64 = entries.iter().map(|&(_, m)| m).collect::<KahanSum>().value();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidProfile(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { entries })
    }

    /// Internal fast path for entries already known to satisfy the
    /// invariants (sorted incremental merges, normalized sub-measures).
    pub(crate) fn from_sorted_unchecked(entries: Vec<(f64, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 <= w[1].0));
        debug_assert!(entries.iter().all(|&(_, m)| m > 0.0));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|&(l, _)| l)
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|&(_, m)| m)
    }
}

/// Pushes a measure forward to its flow profile on `tree`.
///
/// Atoms are ordered by `(length, original support index)`; the stable tie
/// rule keeps results bit-identical across runs. Zero-weight supports are
/// dropped.
pub fn flow_profile(measure: &Measure, tree: &Tree) -> Result<FlowProfile> {
    Ok(flow_profile_indexed(measure, tree)?.0)
}

/// [`flow_profile`] plus, per profile atom, the index of the support it
/// came from — the provenance needed to map a transport plan on profile
/// positions back onto measure supports.
pub fn flow_profile_indexed(measure: &Measure, tree: &Tree) -> Result<(FlowProfile, Vec<usize>)> {
    let mut entries: Vec<(f64, usize, f64)> = Vec::with_capacity(measure.len());
    for (idx, (&s, &w)) in measure
        .supports()
        .iter()
        .zip(measure.weights())
        .enumerate()
    {
        if s >= tree.len() {
            return Err(Error::InvalidNode {
                id: s,
                len: tree.len(),
            });
        }
        if w > 0.0 {
            entries.push((tree.root_distance(s), idx, w));
        }
    }
    if entries.is_empty() {
        return Err(Error::InvalidMeasure("measure carries no mass".into()));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let indices = entries.iter().map(|&(_, idx, _)| idx).collect();
    let profile = FlowProfile::from_sorted_unchecked(
        entries.into_iter().map(|(l, _, m)| (l, m)).collect(),
    );
    Ok((profile, indices))
}
