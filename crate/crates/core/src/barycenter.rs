//! Free-support barycenters in flow-length space, k-means over measures
//! with per-slice barycenter centroids, and pairwise clustering scores.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::WeightedPointSet;
use crate::sampling::sample_aligned_root_trees;
use crate::sliced::SliceSpec;
use crate::tree::{flow_profile, FlowProfile};
use crate::univariate::{monotone_cost, monotone_plan, LossKind};
use crate::util::{derive_seed, KahanSum};

/// A barycenter in flow-length space: `k` sorted nonnegative lengths with
/// positive masses summing to one (uniform `1/k` when produced by
/// [`flow_barycenter`]).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBarycenter {
    lengths: Vec<f64>,
    masses: Vec<f64>,
}

impl FlowBarycenter {
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn to_profile(&self) -> FlowProfile {
        FlowProfile::from_sorted_unchecked(
            self.lengths
                .iter()
                .zip(&self.masses)
                .map(|(&l, &m)| (l, m))
                .collect(),
        )
    }

    fn from_profile(p: &FlowProfile) -> Self {
        Self {
            lengths: p.lengths().collect(),
            masses: p.masses().collect(),
        }
    }
}

/// Barycenter together with the objective value recorded before every
/// support update.
#[derive(Debug, Clone)]
pub struct BarycenterRun {
    pub barycenter: FlowBarycenter,
    pub objectives: Vec<f64>,
    pub iterations: usize,
}

/// Fixed-mass free-support barycenter of 1-D profiles under squared loss.
///
/// Masses stay uniform at `1/k`; supports start on `k` evenly spaced
/// quantiles of the pooled weighted profile and then alternate between
/// monotone transport plans and the plans' barycentric projection until the
/// objective improves by less than `tol` or `max_iter` updates have run.
pub fn flow_barycenter(
    profiles: &[FlowProfile],
    weights: &[f64],
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<FlowBarycenter> {
    Ok(flow_barycenter_detailed(profiles, weights, k, max_iter, tol)?.barycenter)
}

/// [`flow_barycenter`] keeping the objective trace.
pub fn flow_barycenter_detailed(
    profiles: &[FlowProfile],
    weights: &[f64],
    k: usize,
    max_iter: usize,
    tol: f64,
) -> Result<BarycenterRun> {
    if profiles.is_empty() {
        return Err(Error::EmptyInput("barycenter profiles"));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("barycenter needs k >= 1".into()));
    }
    if profiles.len() != weights.len() {
        return Err(Error::SizeMismatch(format!(
            "{} profiles vs {} weights",
            profiles.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::InvalidMeasure(
            "barycenter problem weights must be positive".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMeasure(format!(
            "barycenter problem weights sum to {wsum}"
        )));
    }

    let mass = 1.0 / k as f64;
    let mut lengths = pooled_quantiles(profiles, weights, k);
    let mut objectives = Vec::new();
    let mut updates = 0usize;

    loop {
        let bary: Vec<(f64, f64)> = lengths.iter().map(|&l| (l, mass)).collect();
        let mut obj = KahanSum::new();
        let mut targets = vec![KahanSum::new(); k];
        for (profile, &p) in profiles.iter().zip(weights) {
            let (cost, plan) = monotone_plan(&bary, profile.entries(), LossKind::Squared);
            obj.add(p * cost);
            for (i, t, m) in plan {
                targets[i].add(p * m * profile.entries()[t].0);
            }
        }
        let obj = obj.value();
        objectives.push(obj);

        let improved = objectives
            .len()
            .checked_sub(2)
            .map(|prev| objectives[prev] - obj);
        if updates >= max_iter || matches!(improved, Some(delta) if delta < tol) {
            break;
        }

        for (j, t) in targets.iter().enumerate() {
            lengths[j] = (t.value() / mass).max(0.0);
        }
        // the barycentric projection of monotone plans preserves order;
        // sorting costs little and guards the profile invariant
        lengths.sort_by(f64::total_cmp);
        updates += 1;
    }

    Ok(BarycenterRun {
        barycenter: FlowBarycenter {
            lengths,
            masses: vec![mass; k],
        },
        objectives,
        iterations: updates,
    })
}

/// `k` mid-level quantiles of the pooled weighted profile.
fn pooled_quantiles(profiles: &[FlowProfile], weights: &[f64], k: usize) -> Vec<f64> {
    let mut pooled: Vec<(f64, f64)> = profiles
        .iter()
        .zip(weights)
        .flat_map(|(profile, &p)| profile.entries().iter().map(move |&(l, m)| (l, p * m)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pooled.iter().map(|&(_, m)| m).sum();
    let mut out = Vec::with_capacity(k);
    let mut cum = 0.0;
    let mut idx = 0;
    for j in 0..k {
        let level = (j as f64 + 0.5) / k as f64 * total;
        while idx + 1 < pooled.len() && cum + pooled[idx].1 < level {
            cum += pooled[idx].1;
            idx += 1;
        }
        out.push(pooled[idx].0);
    }
    out
}

/// Result of clustering measures around per-slice barycenter centroids.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// Cluster index per measure, each below the cluster count.
    pub assignment: Vec<usize>,
    /// Per cluster, one barycenter per slice.
    pub centroids: Vec<Vec<FlowBarycenter>>,
    /// Sum of squared measure-to-centroid distances at the final state.
    pub inertia: f64,
    /// Lloyd rounds executed.
    pub iterations: usize,
    /// Inertia after each recorded round; non-increasing.
    pub inertia_history: Vec<f64>,
}

/// Options controlling [`kmeans`] beyond the slicing spec.
#[derive(Debug, Clone, Copy)]
pub struct KmeansOptions {
    pub k_clusters: usize,
    /// Maximum barycenter support count.
    pub k_supports: usize,
    pub max_iter: usize,
    pub seed: u64,
}

const BARYCENTER_MAX_ITER: usize = 60;
const BARYCENTER_TOL: f64 = 1e-9;

/// Distance between two per-slice profile stacks: mean over slices of the
/// square-rooted squared-loss transport cost.
fn slice_distance(a: &[FlowProfile], b: &[FlowProfile]) -> f64 {
    let mut acc = KahanSum::new();
    for (pa, pb) in a.iter().zip(b) {
        acc.add(monotone_cost(pa.entries(), pb.entries(), LossKind::Squared).sqrt());
    }
    acc.value() / a.len() as f64
}

/// Lloyd k-means over measures with k-means++ seeding.
///
/// Each measure is represented by one flow profile per slice (trees sampled
/// once up front); centroids are per-slice flow barycenters of their
/// members, recomputed each round. Stops when the assignment stabilizes,
/// `max_iter` is hit, or a round fails to improve the inertia (the previous
/// state is kept in that case).
pub fn kmeans(
    measures: &[WeightedPointSet],
    spec: &SliceSpec,
    opts: &KmeansOptions,
) -> Result<ClusteringResult> {
    let m = measures.len();
    let k = opts.k_clusters;
    if k == 0 {
        return Err(Error::InvalidConfig("k_clusters must be >= 1".into()));
    }
    if m < k {
        return Err(Error::SizeMismatch(format!(
            "{m} measures for {k} clusters"
        )));
    }
    if opts.k_supports == 0 {
        return Err(Error::InvalidConfig("k_supports must be >= 1".into()));
    }

    // one profile per measure per slice, sampled once
    let point_sets: Vec<Vec<Vec<f64>>> = measures.iter().map(|w| w.points().to_vec()).collect();
    let mut profiles: Vec<Vec<FlowProfile>> = vec![Vec::with_capacity(spec.n_slices); m];
    for slice in 0..spec.n_slices {
        let mut cfg = spec.sampler.clone();
        cfg.seed = derive_seed(spec.sampler.seed, "slice", slice as u64);
        let embeddings = sample_aligned_root_trees(&point_sets, &cfg)?;
        for (i, e) in embeddings.iter().enumerate() {
            let measure = e.measure(measures[i].weights())?;
            profiles[i].push(flow_profile(&measure, e.tree())?);
        }
    }

    // k-means++ seeding on squared distances
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, "kmeans-init", 0));
    let mut centroid_profiles: Vec<Vec<FlowProfile>> = Vec::with_capacity(k);
    let first = rng.random_range(0..m);
    let mut seeded = vec![false; m];
    seeded[first] = true;
    centroid_profiles.push(profiles[first].clone());
    let mut nearest_sq: Vec<f64> = profiles
        .par_iter()
        .map(|p| {
            let d = slice_distance(p, &centroid_profiles[0]);
            d * d
        })
        .collect();
    while centroid_profiles.len() < k {
        let total: f64 = nearest_sq.iter().sum();
        let chosen = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, &d2) in nearest_sq.iter().enumerate() {
                if u < d2 {
                    pick = i;
                    break;
                }
                u -= d2;
            }
            pick
        } else {
            // every remaining measure coincides with a centroid; take the
            // lowest unused index so centroids stay distinct measures
            (0..m).find(|&i| !seeded[i]).unwrap_or(0)
        };
        seeded[chosen] = true;
        centroid_profiles.push(profiles[chosen].clone());
        let last = centroid_profiles.len() - 1;
        let updates: Vec<f64> = profiles
            .par_iter()
            .map(|p| {
                let d = slice_distance(p, &centroid_profiles[last]);
                d * d
            })
            .collect();
        for (cur, new) in nearest_sq.iter_mut().zip(updates) {
            if new < *cur {
                *cur = new;
            }
        }
    }

    let assign = |centroids: &Vec<Vec<FlowProfile>>| -> Vec<usize> {
        profiles
            .par_iter()
            .map(|p| {
                let mut best = (f64::INFINITY, 0usize);
                for (c, cp) in centroids.iter().enumerate() {
                    let d = slice_distance(p, cp);
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best.1
            })
            .collect()
    };
    let inertia_of = |assignment: &[usize], centroids: &Vec<Vec<FlowProfile>>| -> f64 {
        let per: Vec<f64> = profiles
            .par_iter()
            .zip(assignment)
            .map(|(p, &c)| {
                let d = slice_distance(p, &centroids[c]);
                d * d
            })
            .collect();
        per.iter().copied().collect::<KahanSum>().value()
    };

    let mut assignment = assign(&centroid_profiles);
    let mut history: Vec<f64> = Vec::new();
    let mut state: Option<(Vec<usize>, Vec<Vec<FlowProfile>>, f64)> = None;
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        // reseed empty clusters from the worst-served measure
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in assignment.iter().enumerate() {
            members[c].push(i);
        }
        for c in 0..k {
            if members[c].is_empty() {
                let current = state.as_ref().map_or(&centroid_profiles, |s| &s.1);
                let far = assignment
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (slice_distance(&profiles[i], &current[a]), i))
                    .max_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)))
                    .map(|(_, i)| i)
                    .expect("at least one measure");
                let old = assignment[far];
                members[old].retain(|&i| i != far);
                members[c].push(far);
                assignment[far] = c;
            }
        }

        // per-cluster, per-slice barycenters of the members
        let jobs: Vec<(usize, usize)> = (0..k)
            .flat_map(|c| (0..spec.n_slices).map(move |s| (c, s)))
            .collect();
        let updated: Vec<FlowProfile> = jobs
            .par_iter()
            .map(|&(c, s)| {
                let member_profiles: Vec<FlowProfile> = members[c]
                    .iter()
                    .map(|&i| profiles[i][s].clone())
                    .collect();
                let p = vec![1.0 / member_profiles.len() as f64; member_profiles.len()];
                flow_barycenter(
                    &member_profiles,
                    &p,
                    opts.k_supports,
                    BARYCENTER_MAX_ITER,
                    BARYCENTER_TOL,
                )
                .map(|b| b.to_profile())
            })
            .collect::<Result<_>>()?;
        let mut new_centroids: Vec<Vec<FlowProfile>> = vec![Vec::new(); k];
        for ((c, _), profile) in jobs.into_iter().zip(updated) {
            new_centroids[c].push(profile);
        }

        let inertia = inertia_of(&assignment, &new_centroids);
        if let Some(&prev) = history.last() {
            if inertia > prev + 1e-12 {
                // a worse round: keep the previous state
                iterations -= 1;
                break;
            }
        }
        history.push(inertia);
        let new_assignment = assign(&new_centroids);
        let stable = new_assignment == assignment;
        state = Some((assignment.clone(), new_centroids, inertia));
        if stable || iterations >= opts.max_iter {
            break;
        }
        assignment = new_assignment;
    }

    let (assignment, centroids, inertia) = state.expect("at least one round ran");
    Ok(ClusteringResult {
        assignment,
        centroids: centroids
            .into_iter()
            .map(|slices| slices.iter().map(FlowBarycenter::from_profile).collect())
            .collect(),
        inertia,
        iterations,
        inertia_history: history,
    })
}

/// Pairwise clustering score with recall weighted by `beta^2 = |D| / |S|`,
/// where `S` and `D` are the same-label and different-label pair sets.
///
/// Errors when the labels make either set empty.
pub fn f_beta(assignment: &[usize], labels: &[usize]) -> Result<f64> {
    if assignment.len() != labels.len() {
        return Err(Error::SizeMismatch(format!(
            "{} assignments vs {} labels",
            assignment.len(),
            labels.len()
        )));
    }
    let n = assignment.len();
    if n < 2 {
        return Err(Error::EmptyInput("need at least two labeled items"));
    }

    // contingency counts; pair counts follow without enumerating pairs
    let pairs = |c: usize| (c * c.saturating_sub(1) / 2) as f64;
    let mut cluster_sizes = std::collections::HashMap::new();
    let mut label_sizes = std::collections::HashMap::new();
    let mut cell_sizes = std::collections::HashMap::new();
    for (&a, &l) in assignment.iter().zip(labels) {
        *cluster_sizes.entry(a).or_insert(0usize) += 1;
        *label_sizes.entry(l).or_insert(0usize) += 1;
        *cell_sizes.entry((a, l)).or_insert(0usize) += 1;
    }
    let tp: f64 = cell_sizes.values().map(|&c| pairs(c)).sum();
    let same_cluster: f64 = cluster_sizes.values().map(|&c| pairs(c)).sum();
    let same_label: f64 = label_sizes.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let fp = same_cluster - tp;
    let fn_ = same_label - tp;
    let diff_label = total - same_label;

    if same_label == 0.0 {
        return Err(Error::Degenerate(
            "all labels distinct: no same-class pairs".into(),
        ));
    }
    if diff_label == 0.0 {
        return Err(Error::Degenerate(
            "all labels equal: no different-class pairs".into(),
        ));
    }
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fn_);
    let beta_sq = diff_label / same_label;
    Ok((beta_sq + 1.0) * precision * recall / (beta_sq * precision + recall))
}
