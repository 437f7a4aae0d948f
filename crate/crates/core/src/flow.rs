//! Flow alignment: match the 1-D pushforwards of two measures along
//! root-to-support path lengths, optionally minimizing over all root pairs.
//!
//! The aligned-root value is a single univariate OT evaluation. The root
//! search evaluates the kernel for every root pair; the `Incremental`
//! strategy derives each re-rooted sorted profile from the original one
//! instead of re-sorting. Re-rooting at `r` moves a support `s` to distance
//! `d(r, s) = d(root, r) + d(root, s) - 2 d(root, a)` with `a` the lowest
//! common ancestor, which splits the supports into runs that stay sorted:
//! supports below `r` shift down together, supports on the root path to `r`
//! reverse, and the rest shift up grouped by their common ancestor. A k-way
//! merge of those runs restores global order in near-linear time.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tree::{flow_profile, Measure, NodeId, Tree};
use crate::univariate::{merge_runs_by, monotone_cost, LossKind, TransportPlan};
use crate::util::KahanSum;

/// Outcome of a root-pair search.
#[derive(Debug, Clone)]
pub struct RootSearchResult {
    /// Minimum discrepancy over all evaluated root pairs.
    pub value: f64,
    /// Lexicographically smallest pair attaining the minimum.
    pub best_roots: (NodeId, NodeId),
    /// Sorted per-root profiles, kept when the strategy computed them all.
    pub per_root_profiles: Option<RootProfileCache>,
}

/// Sorted `(length, mass)` flow profiles for every candidate root, one set
/// per tree.
#[derive(Debug, Clone)]
pub struct RootProfileCache {
    pub tree_x: Vec<Vec<(f64, f64)>>,
    pub tree_z: Vec<Vec<(f64, f64)>>,
}

/// How the root search builds per-root profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Recompute distances and re-sort for every root pair. Cubic with an
    /// extra log factor; the reference the incremental path is checked
    /// against.
    BruteForce,
    /// Per-tree preprocessing via ordered-run merging, then one kernel call
    /// per root pair.
    Incremental,
}

/// Which nodes are candidate roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootCandidates {
    AllNodes,
    /// Skip leaves; trades search breadth for speed.
    InternalOnly,
}

/// Aligned-root flow discrepancy: the square root of the squared-loss
/// univariate OT cost between the two flow profiles taken from the trees'
/// current roots.
pub fn aligned_flow_align(
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
) -> Result<f64> {
    let pa = flow_profile(mu, tree_x)?;
    let pb = flow_profile(nu, tree_z)?;
    Ok(monotone_cost(pa.entries(), pb.entries(), LossKind::Squared).sqrt())
}

/// Flow discrepancy minimized over candidate root pairs.
pub fn flow_align(
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
    strategy: SearchStrategy,
) -> Result<RootSearchResult> {
    flow_align_with(mu, tree_x, nu, tree_z, strategy, RootCandidates::AllNodes)
}

/// [`flow_align`] with an explicit candidate-root set.
pub fn flow_align_with(
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
    strategy: SearchStrategy,
    candidates: RootCandidates,
) -> Result<RootSearchResult> {
    // validate support ids up front
    flow_profile(mu, tree_x)?;
    flow_profile(nu, tree_z)?;
    let roots_x = candidate_roots(tree_x, candidates);
    let roots_z = candidate_roots(tree_z, candidates);

    match strategy {
        SearchStrategy::BruteForce => {
            let mut best = (f64::INFINITY, (usize::MAX, usize::MAX));
            for &rx in &roots_x {
                for &rz in &roots_z {
                    let pa = rerooted_profile_direct(mu, tree_x, rx);
                    let pb = rerooted_profile_direct(nu, tree_z, rz);
                    let cost = monotone_cost(&pa, &pb, LossKind::Squared);
                    if cost < best.0 || (cost == best.0 && (rx, rz) < best.1) {
                        best = (cost, (rx, rz));
                    }
                }
            }
            Ok(RootSearchResult {
                value: best.0.sqrt(),
                best_roots: best.1,
                per_root_profiles: None,
            })
        }
        SearchStrategy::Incremental => {
            let profiles_x = all_root_profiles(mu, tree_x, &roots_x);
            let profiles_z = all_root_profiles(nu, tree_z, &roots_z);
            let pairs: Vec<(usize, usize)> = roots_x
                .iter()
                .enumerate()
                .flat_map(|(ix, _)| (0..roots_z.len()).map(move |iz| (ix, iz)))
                .collect();
            // min with lexicographic tie-break is order-independent, so the
            // parallel reduction is deterministic
            let best = pairs
                .par_iter()
                .map(|&(ix, iz)| {
                    let cost =
                        monotone_cost(&profiles_x[ix], &profiles_z[iz], LossKind::Squared);
                    (cost, (roots_x[ix], roots_z[iz]))
                })
                .reduce(
                    || (f64::INFINITY, (usize::MAX, usize::MAX)),
                    |a, b| {
                        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                            b
                        } else {
                            a
                        }
                    },
                );
            // cache is indexed by node id; non-candidate roots stay empty
            let mut cache_x = vec![Vec::new(); tree_x.len()];
            for (ix, &r) in roots_x.iter().enumerate() {
                cache_x[r] = profiles_x[ix].clone();
            }
            let mut cache_z = vec![Vec::new(); tree_z.len()];
            for (iz, &r) in roots_z.iter().enumerate() {
                cache_z[r] = profiles_z[iz].clone();
            }
            Ok(RootSearchResult {
                value: best.0.sqrt(),
                best_roots: best.1,
                per_root_profiles: Some(RootProfileCache {
                    tree_x: cache_x,
                    tree_z: cache_z,
                }),
            })
        }
    }
}

fn candidate_roots(tree: &Tree, candidates: RootCandidates) -> Vec<NodeId> {
    match candidates {
        RootCandidates::AllNodes => tree.node_ids().collect(),
        RootCandidates::InternalOnly => {
            let internal: Vec<NodeId> = tree
                .node_ids()
                .filter(|&v| !tree.children(v).is_empty())
                .collect();
            if internal.is_empty() {
                vec![tree.root()]
            } else {
                internal
            }
        }
    }
}

/// Reference profile construction: walk every support's path from scratch
/// for this root and sort. Deliberately independent of the incremental
/// arithmetic.
fn rerooted_profile_direct(measure: &Measure, tree: &Tree, root: NodeId) -> Vec<(f64, f64)> {
    // distances from `root` over the undirected tree, path sums accumulated
    // outward exactly as a fresh BFS would
    let mut dist = vec![f64::NAN; tree.len()];
    let mut queue = std::collections::VecDeque::from([root]);
    dist[root] = 0.0;
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        let parent_edge = tree.parent(u).map(|p| (p, tree.edge_length(u)));
        let child_edges = tree.children(u).iter().map(|&c| (c, tree.edge_length(c)));
        for (v, w) in parent_edge.into_iter().chain(child_edges) {
            if dist[v].is_nan() {
                dist[v] = du + w;
                queue.push_back(v);
            }
        }
    }
    let mut entries: Vec<(f64, usize, f64)> = measure
        .supports()
        .iter()
        .zip(measure.weights())
        .enumerate()
        .filter(|(_, (_, &w))| w > 0.0)
        .map(|(idx, (&s, &w))| (dist[s], idx, w))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    entries.into_iter().map(|(l, _, m)| (l, m)).collect()
}

/// Atom carried through the incremental merge: `(length, support index,
/// mass)`. The support index is the tie key, matching the brute-force sort
/// order so both strategies produce identical profiles.
type RunAtom = (f64, usize, f64);

/// Builds the sorted flow profile for every candidate root from the
/// original root's sorted profile.
fn all_root_profiles(measure: &Measure, tree: &Tree, roots: &[NodeId]) -> Vec<Vec<(f64, f64)>> {
    // base order: (distance from original root, support index)
    let mut base: Vec<(f64, usize)> = measure
        .supports()
        .iter()
        .enumerate()
        .filter(|&(idx, _)| measure.weights()[idx] > 0.0)
        .map(|(idx, &s)| (tree.root_distance(s), idx))
        .collect();
    base.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    roots
        .par_iter()
        .map(|&r| rerooted_profile_incremental(measure, tree, r, &base))
        .collect()
}

fn rerooted_profile_incremental(
    measure: &Measure,
    tree: &Tree,
    new_root: NodeId,
    base: &[(f64, usize)],
) -> Vec<(f64, f64)> {
    let shift = tree.root_distance(new_root);
    if new_root == tree.root() {
        return base
            .iter()
            .map(|&(l, idx)| (l, measure.weights()[idx]))
            .collect();
    }

    // Runs, each ascending after its affine map:
    //   below: supports under the new root, lengths shift down uniformly
    //   on_path: supports on the old-root path to the new root, reversed
    //   per ancestor group: off-path supports shift by a group constant
    let mut below: Vec<RunAtom> = Vec::new();
    let mut on_path: Vec<RunAtom> = Vec::new();
    let mut group_keys: Vec<NodeId> = Vec::new();
    let mut groups: Vec<Vec<RunAtom>> = Vec::new();

    for &(dist, idx) in base {
        let s = measure.supports()[idx];
        let mass = measure.weights()[idx];
        let anc = tree.lca_unchecked(new_root, s);
        if anc == new_root {
            below.push((dist - shift, idx, mass));
        } else if anc == s {
            on_path.push((shift - dist, idx, mass));
        } else {
            let offset = shift - 2.0 * tree.root_distance(anc);
            let pos = match group_keys.iter().position(|&k| k == anc) {
                Some(p) => p,
                None => {
                    group_keys.push(anc);
                    groups.push(Vec::new());
                    group_keys.len() - 1
                }
            };
            groups[pos].push((dist + offset, idx, mass));
        }
    }
    on_path.reverse();

    let mut runs: Vec<Vec<RunAtom>> = Vec::with_capacity(groups.len() + 2);
    if !below.is_empty() {
        runs.push(below);
    }
    if !on_path.is_empty() {
        runs.push(on_path);
    }
    runs.extend(groups.into_iter().filter(|g| !g.is_empty()));

    let n: usize = runs.iter().map(Vec::len).sum();
    // with mostly-singleton runs the merge degenerates; a plain sort is the
    // better degenerate-case bound
    let merged: Vec<RunAtom> = if runs.len() * 2 > n.max(2) {
        let mut all: Vec<RunAtom> = runs.into_iter().flatten().collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    } else {
        merge_runs_by(&runs, |a| a.0, |a| a.1 as f64)
    };
    merged.into_iter().map(|(l, _, m)| (l, m)).collect()
}

/// Evaluates the quartic alignment objective of a transport plan against
/// the pairwise tree metrics of both support sets. A desk-scale evaluator,
/// not a solver: quadratic in the number of plan entries.
pub fn gw_objective(
    plan: &TransportPlan,
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
) -> Result<f64> {
    if plan.rows() != mu.len() || plan.cols() != nu.len() {
        return Err(Error::SizeMismatch(format!(
            "plan is {}x{}, measures have {} and {} supports",
            plan.rows(),
            plan.cols(),
            mu.len(),
            nu.len()
        )));
    }
    plan.check_marginals(mu.weights(), nu.weights(), 1e-8)?;

    let dx = pairwise_distances(mu.supports(), tree_x)?;
    let dz = pairwise_distances(nu.supports(), tree_z)?;
    let entries = plan.entries();
    let mut total = KahanSum::new();
    for &(i, j, m) in entries {
        for &(i2, j2, m2) in entries {
            let diff = dx[i][i2] - dz[j][j2];
            total.add(diff * diff * m * m2);
        }
    }
    Ok(total.value())
}

fn pairwise_distances(supports: &[NodeId], tree: &Tree) -> Result<Vec<Vec<f64>>> {
    let k = supports.len();
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = tree.tree_distance(supports[i], supports[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}
