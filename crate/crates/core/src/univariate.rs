//! Closed-form one-dimensional optimal transport between sorted empirical
//! measures — the kernel behind every flow/depth alignment evaluation.
//!
//! The monotone (quantile) coupling is optimal for any convex ground loss,
//! so a single two-pointer sweep over both sorted supports produces the
//! optimal plan and its cost in linear time.

use crate::error::{Error, Result};
use crate::tree::FlowProfile;
use crate::util::KahanSum;

/// Ground loss for the 1-D transport cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `|x - z|`
    Absolute,
    /// `(x - z)^2`; the returned cost is the squared discrepancy and the
    /// caller takes the square root.
    Squared,
}

impl LossKind {
    #[inline]
    fn eval(self, x: f64, z: f64) -> f64 {
        let d = x - z;
        match self {
            LossKind::Absolute => d.abs(),
            LossKind::Squared => d * d,
        }
    }
}

/// Residual masses below this are treated as exhausted during the sweep,
/// so rounding dribble cannot emit spurious plan entries.
const MASS_DUST: f64 = 1e-15;

/// Tolerance on the difference of total input masses.
const BALANCE_TOL: f64 = 1e-9;

/// Tolerance on plan marginals.
pub const MARGINAL_TOL: f64 = 1e-10;

/// A sparse nonnegative coupling with prescribed marginals. For the
/// monotone plan the nonzero entries form a staircase: both indices are
/// jointly non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput("transport plan dimensions"));
        }
        for &(i, j, m) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::SizeMismatch(format!(
                    "plan entry ({i},{j}) out of {rows}x{cols}"
                )));
            }
            if m.is_nan() || m <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "plan entry ({i},{j}) has non-positive mass {m}"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Sparse `(row, col, mass)` entries, all strictly positive.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut acc = vec![KahanSum::new(); self.rows];
        for &(i, _, m) in &self.entries {
            acc[i].add(m);
        }
        acc.into_iter().map(|k| k.value()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut acc = vec![KahanSum::new(); self.cols];
        for &(_, j, m) in &self.entries {
            acc[j].add(m);
        }
        acc.into_iter().map(|k| k.value()).collect()
    }

    /// Checks both marginals against the given weights at `tol`.
    pub fn check_marginals(&self, row_weights: &[f64], col_weights: &[f64], tol: f64) -> Result<()> {
        if row_weights.len() != self.rows || col_weights.len() != self.cols {
            return Err(Error::SizeMismatch(format!(
                "plan is {}x{}, weights are {}x{}",
                self.rows,
                self.cols,
                row_weights.len(),
                col_weights.len()
            )));
        }
        for (i, (got, want)) in self.row_sums().iter().zip(row_weights).enumerate() {
            if (got - want).abs() > tol {
                return Err(Error::MarginalMismatch(format!(
                    "row {i}: {got} vs {want}"
                )));
            }
        }
        for (j, (got, want)) in self.col_sums().iter().zip(col_weights).enumerate() {
            if (got - want).abs() > tol {
                return Err(Error::MarginalMismatch(format!(
                    "col {j}: {got} vs {want}"
                )));
            }
        }
        Ok(())
    }

    /// Dumps the plan as `i j mass` lines for debugging.
    pub fn to_triplet_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for &(i, j, m) in &self.entries {
            writeln!(s, "{i} {j} {m}").expect("write to string");
        }
        s
    }
}

/// Cost-only variant of the sweep over raw `(position, mass)` slices.
/// Root-pair searches evaluate this for every candidate pair, so no plan is
/// materialized.
pub(crate) fn monotone_cost(a: &[(f64, f64)], b: &[(f64, f64)], loss: LossKind) -> f64 {
    let mut cost = KahanSum::new();
    let mut i = 0;
    let mut j = 0;
    let mut ai = a[0].1;
    let mut bj = b[0].1;
    while i < a.len() && j < b.len() {
        let l = loss.eval(a[i].0, b[j].0);
        if ai <= bj {
            cost.add(ai * l);
            bj -= ai;
            i += 1;
            if i < a.len() {
                ai = a[i].1;
            }
            if bj <= MASS_DUST {
                j += 1;
                if j < b.len() {
                    bj = b[j].1;
                }
            }
        } else {
            cost.add(bj * l);
            ai -= bj;
            j += 1;
            if j < b.len() {
                bj = b[j].1;
            }
            if ai <= MASS_DUST {
                i += 1;
                if i < a.len() {
                    ai = a[i].1;
                }
            }
        }
    }
    cost.value()
}

pub(crate) fn monotone_plan(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    loss: LossKind,
) -> (f64, Vec<(usize, usize, f64)>) {
    let mut cost = KahanSum::new();
    let mut entries = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut j = 0;
    let mut ai = a[0].1;
    let mut bj = b[0].1;
    while i < a.len() && j < b.len() {
        let l = loss.eval(a[i].0, b[j].0);
        if ai <= bj {
            if ai > 0.0 {
                entries.push((i, j, ai));
                cost.add(ai * l);
            }
            bj -= ai;
            i += 1;
            if i < a.len() {
                ai = a[i].1;
            }
            if bj <= MASS_DUST {
                j += 1;
                if j < b.len() {
                    bj = b[j].1;
                }
            }
        } else {
            if bj > 0.0 {
                entries.push((i, j, bj));
                cost.add(bj * l);
            }
            ai -= bj;
            j += 1;
            if j < b.len() {
                bj = b[j].1;
            }
            if ai <= MASS_DUST {
                i += 1;
                if i < a.len() {
                    ai = a[i].1;
                }
            }
        }
    }
    (cost.value(), entries)
}

/// Optimal transport between two sorted 1-D empirical measures.
///
/// Returns the cost under `loss` together with the monotone coupling. With
/// [`LossKind::Squared`] the cost is the squared aligned-root flow
/// discrepancy; callers take the square root.
pub fn univariate_ot(
    mu: &FlowProfile,
    nu: &FlowProfile,
    loss: LossKind,
) -> Result<(f64, TransportPlan)> {
    let a = mu.entries();
    let b = nu.entries();
    let total_a: f64 = a.iter().map(|&(_, m)| m).collect::<KahanSum>().value();
    let total_b: f64 = b.iter().map(|&(_, m)| m).collect::<KahanSum>().value();
    if (total_a - total_b).abs() > BALANCE_TOL {
        return Err(Error::MassImbalance((total_a - total_b).abs()));
    }
    let (cost, entries) = monotone_plan(a, b, loss);
    let plan = TransportPlan::new(a.len(), b.len(), entries)?;
    Ok((cost, plan))
}

/// Merges ascending runs into one ascending list. Ties are broken by
/// `(run index, position within run)`, so equal keys from earlier runs come
/// first and the output is reproducible.
pub fn monotone_merge(sorted_runs: &[Vec<f64>]) -> Result<Vec<f64>> {
    for (r, run) in sorted_runs.iter().enumerate() {
        if run.windows(2).any(|w| w[1] < w[0]) {
            let _ = r;
            return Err(Error::Unsorted("monotone_merge run not ascending"));
        }
    }
    Ok(merge_runs_by(sorted_runs, |&x| x, |x| *x))
}

/// Generic k-way merge of ascending runs. `key` orders items; ties are
/// broken by `(key, tie(item))` and then by run order. Runs must each be
/// ascending under `(key, tie)`.
pub(crate) fn merge_runs_by<T: Copy, K, Tie>(runs: &[Vec<T>], key: K, tie: Tie) -> Vec<T>
where
    K: Fn(&T) -> f64,
    Tie: Fn(&T) -> f64,
{
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct HeapKey(f64, f64, usize);
    impl Eq for HeapKey {}
    impl PartialOrd for HeapKey {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for HeapKey {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0
                .total_cmp(&other.0)
                .then(self.1.total_cmp(&other.1))
                .then(self.2.cmp(&other.2))
        }
    }

    let total: usize = runs.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total);
    let live: Vec<usize> = (0..runs.len()).filter(|&r| !runs[r].is_empty()).collect();
    match live.len() {
        0 => return out,
        1 => {
            out.extend_from_slice(&runs[live[0]]);
            return out;
        }
        2 => {
            // common case in the incremental root sweep
            let (ra, rb) = (&runs[live[0]], &runs[live[1]]);
            let (mut i, mut j) = (0, 0);
            while i < ra.len() && j < rb.len() {
                let ka = (key(&ra[i]), tie(&ra[i]));
                let kb = (key(&rb[j]), tie(&rb[j]));
                if ka.0 < kb.0 || (ka.0 == kb.0 && ka.1 <= kb.1) {
                    out.push(ra[i]);
                    i += 1;
                } else {
                    out.push(rb[j]);
                    j += 1;
                }
            }
            out.extend_from_slice(&ra[i..]);
            out.extend_from_slice(&rb[j..]);
            return out;
        }
        _ => {}
    }

    let mut heap: BinaryHeap<Reverse<(HeapKey, usize)>> = live
        .iter()
        .map(|&r| {
            let it = &runs[r][0];
            Reverse((HeapKey(key(it), tie(it), r), 0))
        })
        .collect();
    while let Some(Reverse((HeapKey(_, _, r), pos))) = heap.pop() {
        out.push(runs[r][pos]);
        let next = pos + 1;
        if next < runs[r].len() {
            let it = &runs[r][next];
            heap.push(Reverse((HeapKey(key(it), tie(it), r), next)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::FlowProfile;

    fn profile(entries: &[(f64, f64)]) -> FlowProfile {
        FlowProfile::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn identical_profiles_cost_zero_diagonal_plan() {
        let p = profile(&[(0.5, 0.25), (1.0, 0.25), (2.0, 0.5)]);
        let (cost, plan) = univariate_ot(&p, &p, LossKind::Squared).unwrap();
        assert_eq!(cost, 0.0);
        assert_eq!(plan.entries(), &[(0, 0, 0.25), (1, 1, 0.25), (2, 2, 0.5)]);
    }

    #[test]
    fn single_atom_costs() {
        let a = profile(&[(0.0, 1.0)]);
        let b = profile(&[(3.0, 1.0)]);
        let (abs, _) = univariate_ot(&a, &b, LossKind::Absolute).unwrap();
        let (sq, _) = univariate_ot(&a, &b, LossKind::Squared).unwrap();
        assert_eq!(abs, 3.0);
        assert_eq!(sq, 9.0);
    }

    #[test]
    fn plan_is_staircase_with_correct_marginals() {
        let a = profile(&[(0.0, 0.3), (1.0, 0.7)]);
        let b = profile(&[(0.5, 0.5), (2.0, 0.2), (3.0, 0.3)]);
        let (_, plan) = univariate_ot(&a, &b, LossKind::Absolute).unwrap();
        plan.check_marginals(&[0.3, 0.7], &[0.5, 0.2, 0.3], MARGINAL_TOL)
            .unwrap();
        let e = plan.entries();
        for w in e.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1, "staircase violated");
        }
    }

    #[test]
    fn imbalanced_masses_rejected() {
        // bypass the FlowProfile mass check via from_sorted_unchecked
        let a = FlowProfile::from_sorted_unchecked(vec![(0.0, 0.5)]);
        let b = profile(&[(0.0, 1.0)]);
        assert!(matches!(
            univariate_ot(&a, &b, LossKind::Absolute),
            Err(Error::MassImbalance(_))
        ));
    }

    #[test]
    fn cost_matches_plan_recomputation() {
        let a = profile(&[(0.1, 0.2), (0.4, 0.3), (1.5, 0.5)]);
        let b = profile(&[(0.2, 0.6), (0.9, 0.4)]);
        for loss in [LossKind::Absolute, LossKind::Squared] {
            let (cost, plan) = univariate_ot(&a, &b, loss).unwrap();
            let recomputed: f64 = plan
                .entries()
                .iter()
                .map(|&(i, j, m)| m * loss.eval(a.entries()[i].0, b.entries()[j].0))
                .sum();
            assert!((cost - recomputed).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_symmetry_is_exact() {
        let a = profile(&[(0.1, 0.25), (0.7, 0.25), (1.5, 0.5)]);
        let b = profile(&[(0.3, 0.5), (0.9, 0.25), (2.5, 0.25)]);
        let (ab, _) = univariate_ot(&a, &b, LossKind::Squared).unwrap();
        let (ba, _) = univariate_ot(&b, &a, LossKind::Squared).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn plan_dumps_as_triplets() {
        let a = profile(&[(0.0, 0.5), (1.0, 0.5)]);
        let b = profile(&[(0.5, 1.0)]);
        let (_, plan) = univariate_ot(&a, &b, LossKind::Absolute).unwrap();
        assert_eq!(plan.to_triplet_text(), "0 0 0.5\n1 0 0.5\n");
    }

    #[test]
    fn merge_single_run_is_identity() {
        let runs = vec![vec![1.0, 4.0, 7.0]];
        assert_eq!(monotone_merge(&runs).unwrap(), vec![1.0, 4.0, 7.0]);
    }

    #[test]
    fn merge_two_runs() {
        let runs = vec![vec![1.0, 4.0, 7.0], vec![2.0, 3.0, 9.0]];
        assert_eq!(
            monotone_merge(&runs).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 7.0, 9.0]
        );
    }

    #[test]
    fn merge_rejects_unsorted_run() {
        let runs = vec![vec![1.0, 0.5]];
        assert!(monotone_merge(&runs).is_err());
    }

    #[test]
    fn merge_ties_keep_run_order() {
        let runs = vec![vec![1.0, 2.0], vec![1.0], vec![0.5, 2.0]];
        assert_eq!(
            monotone_merge(&runs).unwrap(),
            vec![0.5, 1.0, 1.0, 2.0, 2.0]
        );
    }
}
