//! Sliced variants: averaging flow/depth alignments over freshly sampled
//! tree metrics, and a sliced baseline that projects both point sets to a
//! random line and evaluates the quartic 1-D alignment objective in
//! closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::depth::aligned_depth_align;
use crate::error::{Error, Result};
use crate::flow::aligned_flow_align;
use crate::points::{Point, WeightedPointSet};
use crate::sampling::{sample_aligned_root_trees, SamplerConfig};
use crate::util::{derive_seed, KahanSum};

/// Which discrepancy a slice evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseDiscrepancy {
    FlowAligned,
    DepthAligned,
    SlicedGw,
}

/// Slice count, base discrepancy and the tree sampler driving each slice.
/// For [`BaseDiscrepancy::SlicedGw`] the sampler's seed doubles as the
/// projection seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub n_slices: usize,
    pub base: BaseDiscrepancy,
    pub sampler: SamplerConfig,
}

impl SliceSpec {
    pub fn new(n_slices: usize, base: BaseDiscrepancy, sampler: SamplerConfig) -> Result<Self> {
        if n_slices == 0 {
            return Err(Error::InvalidConfig("n_slices must be >= 1".into()));
        }
        Ok(Self {
            n_slices,
            base,
            sampler,
        })
    }
}

/// Mean of the base discrepancy over `n_slices` independently sampled
/// aligned-root tree pairs.
///
/// Both measures are embedded with the same per-slice seed, so the value is
/// symmetric under swapping the inputs and bit-stable across reruns.
pub fn tree_sliced_discrepancy(
    mu: &WeightedPointSet,
    nu: &WeightedPointSet,
    spec: &SliceSpec,
) -> Result<f64> {
    if spec.n_slices == 0 {
        return Err(Error::InvalidConfig("n_slices must be >= 1".into()));
    }
    let eval = match spec.base {
        BaseDiscrepancy::FlowAligned => aligned_flow_align,
        BaseDiscrepancy::DepthAligned => aligned_depth_align,
        BaseDiscrepancy::SlicedGw => {
            return Err(Error::InvalidConfig(
                "sliced-GW is not a tree-sliced base; call sliced_gw".into(),
            ))
        }
    };
    let mut acc = KahanSum::new();
    for slice in 0..spec.n_slices {
        let mut cfg = spec.sampler.clone();
        cfg.seed = derive_seed(spec.sampler.seed, "slice", slice as u64);
        let ex = sample_aligned_root_trees(std::slice::from_ref(&mu.points().to_vec()), &cfg)?
            .pop()
            .expect("one embedding per point list");
        let ez = sample_aligned_root_trees(std::slice::from_ref(&nu.points().to_vec()), &cfg)?
            .pop()
            .expect("one embedding per point list");
        let m_mu = ex.measure(mu.weights())?;
        let m_nu = ez.measure(nu.weights())?;
        acc.add(eval(&m_mu, ex.tree(), &m_nu, ez.tree())?);
    }
    Ok(acc.value() / spec.n_slices as f64)
}

/// Appends origin points until `points` has `target_n` rows; the padded
/// measure carries uniform weights `1/target_n`.
pub fn zero_pad(points: &[Point], target_n: usize) -> Result<WeightedPointSet> {
    if points.is_empty() {
        return Err(Error::EmptyInput("zero_pad points"));
    }
    if target_n < points.len() {
        return Err(Error::SizeMismatch(format!(
            "target size {} below current size {}",
            target_n,
            points.len()
        )));
    }
    let dim = points[0].len();
    let mut padded = points.to_vec();
    padded.resize(target_n, vec![0.0; dim]);
    WeightedPointSet::uniform(padded)
}

/// Quartic pair objective for index-paired scalar samples,
/// `sum_{i,j} ((x_i-x_j)^2 - (y_i-y_j)^2)^2`, evaluated in O(n) through
/// its moment expansion.
pub fn quartic_double_sum(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch(format!(
            "{} xs vs {} ys",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("quartic objective samples"));
    }
    let n = x.len() as f64;
    let (mut s1x, mut s2x, mut s3x, mut s4x) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut s1y, mut s2y, mut s3y, mut s4y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut sxy, mut sx2y, mut sxy2, mut sx2y2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in x.iter().zip(y) {
        let a2 = a * a;
        let b2 = b * b;
        s1x += a;
        s2x += a2;
        s3x += a2 * a;
        s4x += a2 * a2;
        s1y += b;
        s2y += b2;
        s3y += b2 * b;
        s4y += b2 * b2;
        sxy += a * b;
        sx2y += a2 * b;
        sxy2 += a * b2;
        sx2y2 += a2 * b2;
    }
    Ok(2.0 * n * s4x - 8.0 * s3x * s1x + 6.0 * s2x * s2x
        + 2.0 * n * s4y - 8.0 * s3y * s1y + 6.0 * s2y * s2y
        - 4.0 * s2x * s2y
        - 4.0 * n * sx2y2
        + 8.0 * s1x * sxy2
        + 8.0 * s1y * sx2y
        - 8.0 * sxy * sxy)
}

/// Sliced alignment baseline for two equally sized uniform point sets.
///
/// Each slice projects both sets onto a random unit direction, sorts the
/// projections, evaluates the quartic objective for the
/// ascending-ascending and ascending-descending pairings, and keeps the
/// smaller. The per-slice value is the square root of that minimum scaled
/// by the uniform pair weights `1/n^2`; the result is the mean over slices.
pub fn sliced_gw(points_x: &[Point], points_y: &[Point], n_slices: usize, seed: u64) -> Result<f64> {
    if points_x.is_empty() || points_y.is_empty() {
        return Err(Error::EmptyInput("sliced baseline points"));
    }
    if points_x.len() != points_y.len() {
        return Err(Error::SizeMismatch(format!(
            "support counts {} vs {}; zero_pad the smaller measure first",
            points_x.len(),
            points_y.len()
        )));
    }
    let dim = points_x[0].len();
    if points_x.iter().chain(points_y).any(|p| p.len() != dim) {
        return Err(Error::SizeMismatch("points of mixed dimension".into()));
    }
    if n_slices == 0 {
        return Err(Error::InvalidConfig("n_slices must be >= 1".into()));
    }

    let n = points_x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = KahanSum::new();
    for _ in 0..n_slices {
        let dir = random_unit_direction(dim, &mut rng);
        let mut px: Vec<f64> = points_x.iter().map(|p| dot(p, &dir)).collect();
        let mut py: Vec<f64> = points_y.iter().map(|p| dot(p, &dir)).collect();
        px.sort_by(f64::total_cmp);
        py.sort_by(f64::total_cmp);
        let ascending = quartic_double_sum(&px, &py)?;
        py.reverse();
        let descending = quartic_double_sum(&px, &py)?;
        // heavy cancellation can leave a tiny negative residue near zero
        let raw = ascending.min(descending).max(0.0);
        acc.add((raw / (n * n) as f64).sqrt());
    }
    Ok(acc.value() / n_slices as f64)
}

fn dot(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| a * b).sum()
}

fn random_unit_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
