//! Depth alignment: match flows level by level down both trees.
//!
//! Each node `x` induces a two-level view of its subtree: `x` at distance 0
//! plus one atom per child, carrying the child subtree's renormalized mass
//! at the child edge's length. Starting from the root pair with mass one,
//! every matched pair contributes its flow discrepancy weighted by its
//! matching mass, and the monotone plan's child-child entries seed the next
//! level. Mass matched into either center stops there; so does the mass of
//! a pair where one side has nothing below it, which instead pays the
//! weighted path lengths of the other side's remaining supports.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::RootSearchResult;
use crate::tree::{Measure, NodeId, Tree};
use crate::univariate::{monotone_plan, LossKind};
use crate::util::KahanSum;

/// Child masses below this leave a node "simple": nothing to recurse into.
const SIMPLE_MASS_TOL: f64 = 1e-12;

/// Plan entries below this are numerical dust and are not propagated.
const PUSH_MASS_TOL: f64 = 1e-15;

/// One atom of a two-level subtree view: the center itself at length 0, or
/// a child subtree collapsed to the child's edge length.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthAtom {
    pub node: NodeId,
    /// Renormalized mass: subtree mass divided by the center's subtree mass.
    pub mass: f64,
    /// Distance from the center: 0 for the center atom, the child edge
    /// length otherwise.
    pub length: f64,
    pub is_center: bool,
}

/// A measure collapsed onto the two-level view rooted at `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDepthMeasure {
    center: NodeId,
    atoms: Vec<DepthAtom>,
}

impl TwoDepthMeasure {
    pub fn center(&self) -> NodeId {
        self.center
    }

    /// Center atom first when it carries mass, then children in tree order.
    pub fn atoms(&self) -> &[DepthAtom] {
        &self.atoms
    }

    pub fn child_mass(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| !a.is_center)
            .map(|a| a.mass)
            .sum()
    }

    /// No children carry mass; recursion stops here.
    pub fn is_simple(&self) -> bool {
        self.child_mass() < SIMPLE_MASS_TOL
    }

    /// Sorted `(length, mass)` profile with the atom order as tie key.
    fn profile(&self) -> Vec<(f64, usize, f64)> {
        let mut p: Vec<(f64, usize, f64)> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(pos, a)| (a.length, pos, a.mass))
            .collect();
        p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        p
    }
}

/// A matched node pair awaiting processing, with its matching mass and
/// depth level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentItem {
    pub pair: (NodeId, NodeId),
    pub mass: f64,
    pub level: u32,
}

/// Mass bookkeeping after a level has been processed: pairs still alive
/// plus everything already settled must account for the full unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMassRecord {
    pub level: u32,
    pub live_mass: f64,
    pub resolved_mass: f64,
}

/// Value plus the per-level mass trace.
#[derive(Debug, Clone)]
pub struct DepthAlignRun {
    pub value: f64,
    pub levels: Vec<LevelMassRecord>,
}

/// Per-node subtree masses of `measure` on `tree`, accumulated bottom-up.
fn subtree_masses(measure: &Measure, tree: &Tree) -> Result<Vec<f64>> {
    let mut mass = vec![0.0f64; tree.len()];
    for (&s, &w) in measure.supports().iter().zip(measure.weights()) {
        if s >= tree.len() {
            return Err(Error::InvalidNode {
                id: s,
                len: tree.len(),
            });
        }
        mass[s] += w;
    }
    // children appear after parents in BFS order, so accumulate in reverse
    let mut order = Vec::with_capacity(tree.len());
    let mut queue = std::collections::VecDeque::from([tree.root()]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        queue.extend(tree.children(u).iter().copied());
    }
    for &u in order.iter().rev() {
        if let Some(p) = tree.parent(u) {
            mass[p] += mass[u];
        }
    }
    Ok(mass)
}

/// One measure side of a depth alignment, with everything the recursion
/// reads precomputed.
struct DepthSide<'a> {
    tree: &'a Tree,
    measure: &'a Measure,
    subtree_mass: Vec<f64>,
    node_weight: Vec<f64>,
}

impl<'a> DepthSide<'a> {
    fn new(measure: &'a Measure, tree: &'a Tree) -> Result<Self> {
        let subtree_mass = subtree_masses(measure, tree)?;
        let mut node_weight = vec![0.0f64; tree.len()];
        for (&s, &w) in measure.supports().iter().zip(measure.weights()) {
            node_weight[s] += w;
        }
        Ok(Self {
            tree,
            measure,
            subtree_mass,
            node_weight,
        })
    }

    fn two_depth(&self, x: NodeId) -> Result<TwoDepthMeasure> {
        let denom = self.subtree_mass[x];
        if denom <= 0.0 {
            return Err(Error::Degenerate(format!(
                "no mass in the subtree rooted at node {x}"
            )));
        }
        let mut atoms = Vec::with_capacity(self.tree.children(x).len() + 1);
        let center_mass = self.node_weight[x] / denom;
        if center_mass > 0.0 {
            atoms.push(DepthAtom {
                node: x,
                mass: center_mass,
                length: 0.0,
                is_center: true,
            });
        }
        for &c in self.tree.children(x) {
            let m = self.subtree_mass[c];
            if m > 0.0 {
                atoms.push(DepthAtom {
                    node: c,
                    mass: m / denom,
                    length: self.tree.edge_length(c),
                    is_center: false,
                });
            }
        }
        Ok(TwoDepthMeasure { center: x, atoms })
    }

    /// Mean path length from `x` to the measure's supports inside the
    /// subtree at `x`, weights renormalized to that subtree.
    fn weighted_subtree_path_length(&self, x: NodeId) -> f64 {
        let denom = self.subtree_mass[x];
        let mut acc = KahanSum::new();
        for (&s, &w) in self.measure.supports().iter().zip(self.measure.weights()) {
            if w > 0.0 && self.tree.is_ancestor(x, s) {
                let d = self.tree.root_distance(s) - self.tree.root_distance(x);
                acc.add(w / denom * d);
            }
        }
        acc.value()
    }
}

/// Two-level view of `mu` at node `x`: child atoms carry
/// `mu(subtree(child)) / mu(subtree(x))`, the remaining mass sits on the
/// center.
pub fn two_depth_measure(mu: &Measure, tree: &Tree, x: NodeId) -> Result<TwoDepthMeasure> {
    if x >= tree.len() {
        return Err(Error::InvalidNode {
            id: x,
            len: tree.len(),
        });
    }
    DepthSide::new(mu, tree)?.two_depth(x)
}

/// Aligned-root depth discrepancy with the roots taken as matched.
pub fn aligned_depth_align(
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
) -> Result<f64> {
    Ok(aligned_depth_align_traced(mu, tree_x, nu, tree_z)?.value)
}

/// [`aligned_depth_align`] keeping the per-level mass records.
pub fn aligned_depth_align_traced(
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
) -> Result<DepthAlignRun> {
    let side_x = DepthSide::new(mu, tree_x)?;
    let side_z = DepthSide::new(nu, tree_z)?;
    run_depth_align(&side_x, &side_z)
}

fn run_depth_align(side_x: &DepthSide, side_z: &DepthSide) -> Result<DepthAlignRun> {
    let mut total = KahanSum::new();
    let mut resolved = KahanSum::new();
    let mut levels = Vec::new();
    let mut current = vec![AlignmentItem {
        pair: (side_x.tree.root(), side_z.tree.root()),
        mass: 1.0,
        level: 1,
    }];

    while !current.is_empty() {
        let level = current[0].level;
        let mut next = Vec::new();
        for item in &current {
            let (x, z) = item.pair;
            let w = item.mass;
            let tdx = side_x.two_depth(x)?;
            let tdz = side_z.two_depth(z)?;
            match (tdx.is_simple(), tdz.is_simple()) {
                (true, true) => {
                    resolved.add(w);
                }
                (true, false) => {
                    total.add(w * side_z.weighted_subtree_path_length(z));
                    resolved.add(w);
                }
                (false, true) => {
                    total.add(w * side_x.weighted_subtree_path_length(x));
                    resolved.add(w);
                }
                (false, false) => {
                    let pa = tdx.profile();
                    let pb = tdz.profile();
                    let slice_a: Vec<(f64, f64)> = pa.iter().map(|&(l, _, m)| (l, m)).collect();
                    let slice_b: Vec<(f64, f64)> = pb.iter().map(|&(l, _, m)| (l, m)).collect();
                    let (cost, plan) = monotone_plan(&slice_a, &slice_b, LossKind::Squared);
                    total.add(w * cost.sqrt());
                    for (i, j, m) in plan {
                        let atom_x = &tdx.atoms()[pa[i].1];
                        let atom_z = &tdz.atoms()[pb[j].1];
                        let pushed = w * m;
                        if !atom_x.is_center && !atom_z.is_center && pushed > PUSH_MASS_TOL {
                            next.push(AlignmentItem {
                                pair: (atom_x.node, atom_z.node),
                                mass: pushed,
                                level: level + 1,
                            });
                        } else {
                            // matched into a center (or dust): settled here
                            resolved.add(pushed);
                        }
                    }
                }
            }
        }
        let live: f64 = next.iter().map(|i| i.mass).collect::<KahanSum>().value();
        levels.push(LevelMassRecord {
            level,
            live_mass: live,
            resolved_mass: resolved.value(),
        });
        current = next;
    }

    Ok(DepthAlignRun {
        value: total.value(),
        levels,
    })
}

/// Depth discrepancy minimized over all root pairs by exhaustive re-rooting.
pub fn depth_align(
    mu: &Measure,
    tree_x: &Tree,
    nu: &Measure,
    tree_z: &Tree,
) -> Result<RootSearchResult> {
    let rooted_x: Vec<Tree> = tree_x
        .node_ids()
        .map(|r| tree_x.rerooted(r))
        .collect::<Result<_>>()?;
    let rooted_z: Vec<Tree> = tree_z
        .node_ids()
        .map(|r| tree_z.rerooted(r))
        .collect::<Result<_>>()?;
    let sides_x: Vec<DepthSide> = rooted_x
        .iter()
        .map(|t| DepthSide::new(mu, t))
        .collect::<Result<_>>()?;
    let sides_z: Vec<DepthSide> = rooted_z
        .iter()
        .map(|t| DepthSide::new(nu, t))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..sides_x.len())
        .flat_map(|rx| (0..sides_z.len()).map(move |rz| (rx, rz)))
        .collect();
    let best = pairs
        .par_iter()
        .map(|&(rx, rz)| {
            let value = run_depth_align(&sides_x[rx], &sides_z[rz])
                .map(|run| run.value)
                .unwrap_or(f64::INFINITY);
            (value, (rx, rz))
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
    if !best.0.is_finite() {
        return Err(Error::Degenerate(
            "depth alignment failed for every root pair".into(),
        ));
    }
    Ok(RootSearchResult {
        value: best.0,
        best_roots: best.1,
        per_root_profiles: None,
    })
}
