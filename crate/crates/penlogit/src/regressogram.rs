//! Regressogram estimators: closed-form maximum-likelihood fits on interval
//! partitions, the population projection onto piecewise-constant functions,
//! regular partition collections, and an exact dynamic-programming search for
//! the best irregular partition of each dimension.
//!
//! The contrast of a fitted regressogram is cell-additive: the cell with
//! |J| points and empirical success rate p contributes |J|·H(p) where H is
//! the Bernoulli entropy. The DP search exploits exactly this additivity.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BinarySample, FittedLogit, TrueFunction};

#[derive(Debug, Error)]
pub enum RegressogramError {
    #[error("cannot place {dim} cells of at least {min_cell} points each in a sample of size {n}")]
    InfeasibleDimension { dim: usize, min_cell: usize, n: usize },
    #[error("a partition needs at least one cell")]
    EmptyPartition,
    #[error("breakpoints must be strictly increasing and interior")]
    InvalidBreakpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    Regular,
    Irregular,
}

/// Cells are stored as interior breakpoints; the invariants (ordered,
/// disjoint, covering) hold by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartitionCells {
    /// Breakpoints 0 < b_1 < … < b_{D-1} < 1 splitting [0, 1] into
    /// [0, b_1), [b_1, b_2), …, [b_{D-1}, 1].
    Intervals(Vec<f64>),
    /// Rank breakpoints 0 < r_1 < … < r_{D-1} < n splitting the sorted
    /// design indices into [0, r_1), …, [r_{D-1}, n). Placing boundaries
    /// between consecutive design points is lossless: the contrast depends
    /// on the data only through cell membership.
    IndexRanges { breaks: Vec<usize>, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionModel {
    cells: PartitionCells,
    kind: PartitionKind,
}

impl PartitionModel {
    /// The regular partition of [0, 1] into `dim` equal cells.
    pub fn regular(dim: usize) -> Result<Self, RegressogramError> {
        if dim == 0 {
            return Err(RegressogramError::EmptyPartition);
        }
        let breaks = (1..dim).map(|k| k as f64 / dim as f64).collect();
        Ok(Self { cells: PartitionCells::Intervals(breaks), kind: PartitionKind::Regular })
    }

    pub fn from_interval_breaks(
        breaks: Vec<f64>,
        kind: PartitionKind,
    ) -> Result<Self, RegressogramError> {
        let increasing = breaks.windows(2).all(|w| w[0] < w[1]);
        let interior = breaks.iter().all(|&b| 0.0 < b && b < 1.0);
        if !increasing || !interior {
            return Err(RegressogramError::InvalidBreakpoints);
        }
        Ok(Self { cells: PartitionCells::Intervals(breaks), kind })
    }

    pub fn from_index_breaks(
        breaks: Vec<usize>,
        n: usize,
        kind: PartitionKind,
    ) -> Result<Self, RegressogramError> {
        let increasing = breaks.windows(2).all(|w| w[0] < w[1]);
        let interior = breaks.iter().all(|&b| 0 < b && b < n);
        if !increasing || !interior {
            return Err(RegressogramError::InvalidBreakpoints);
        }
        Ok(Self { cells: PartitionCells::IndexRanges { breaks, n }, kind })
    }

    pub fn dimension(&self) -> usize {
        match &self.cells {
            PartitionCells::Intervals(b) => b.len() + 1,
            PartitionCells::IndexRanges { breaks, .. } => breaks.len() + 1,
        }
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn cells(&self) -> &PartitionCells {
        &self.cells
    }

    /// Contiguous index range of design points falling in each cell.
    pub fn assign(&self, sample: &BinarySample) -> Vec<Range<usize>> {
        match &self.cells {
            PartitionCells::Intervals(breaks) => {
                let xs = sample.xs();
                let mut ranges = Vec::with_capacity(breaks.len() + 1);
                let mut start = 0;
                for &b in breaks {
                    let end = xs.partition_point(|&x| x < b);
                    ranges.push(start..end);
                    start = end;
                }
                ranges.push(start..xs.len());
                ranges
            }
            PartitionCells::IndexRanges { breaks, n } => {
                assert_eq!(*n, sample.n(), "partition built for a different sample size");
                let mut ranges = Vec::with_capacity(breaks.len() + 1);
                let mut start = 0;
                for &b in breaks {
                    ranges.push(start..b);
                    start = b;
                }
                ranges.push(start..*n);
                ranges
            }
        }
    }
}

/// A fitted (or projected) piecewise-constant logit model.
#[derive(Debug, Clone)]
pub struct RegressogramFit {
    pub model: PartitionModel,
    /// Per-cell success probability.
    pub cell_probs: Vec<f64>,
    /// Per-cell logit; ±∞ on degenerate cells.
    pub cell_logits: Vec<f64>,
    /// gamma_n of the piecewise-constant function against the sample.
    pub contrast: f64,
    /// Cells whose probability is exactly 0 or 1.
    pub degenerate_cells: BTreeSet<usize>,
    /// Cells containing no design point; they get prob 1/2 and logit 0.
    pub empty_cells: BTreeSet<usize>,
}

impl RegressogramFit {
    /// Expands the per-cell values to per-design-point logits.
    pub fn expand(&self, sample: &BinarySample) -> FittedLogit {
        let ranges = self.model.assign(sample);
        let mut values = vec![0.0; sample.n()];
        for (cell, range) in ranges.iter().enumerate() {
            for v in &mut values[range.clone()] {
                *v = self.cell_logits[cell];
            }
        }
        FittedLogit::from_values(values)
    }

    /// Per-design-point success probabilities.
    pub fn probs_at_design(&self, sample: &BinarySample) -> Vec<f64> {
        let ranges = self.model.assign(sample);
        let mut probs = vec![0.0; sample.n()];
        for (cell, range) in ranges.iter().enumerate() {
            for v in &mut probs[range.clone()] {
                *v = self.cell_probs[cell];
            }
        }
        probs
    }
}

fn logit_of_counts(successes: usize, len: usize) -> f64 {
    if successes == 0 {
        f64::NEG_INFINITY
    } else if successes == len {
        f64::INFINITY
    } else {
        (successes as f64 / (len - successes) as f64).ln()
    }
}

/// |J|·H(s/|J|) in the positive form s·log(|J|/s) + (|J|-s)·log(|J|/(|J|-s)).
fn cell_entropy_cost(successes: usize, len: usize) -> f64 {
    if successes == 0 || successes == len {
        return 0.0;
    }
    let s = successes as f64;
    let f = (len - successes) as f64;
    let l = len as f64;
    s * (l / s).ln() + f * (l / f).ln()
}

/// Maximum-likelihood regressogram: each non-empty cell gets the cell mean
/// of Y as probability and its logit as value. Degeneracy is flagged, never
/// fatal; empty cells get the uninformative prob 1/2.
pub fn fit_regressogram(sample: &BinarySample, model: &PartitionModel) -> RegressogramFit {
    let ranges = model.assign(sample);
    let ys = sample.ys();
    let mut cell_probs = Vec::with_capacity(ranges.len());
    let mut cell_logits = Vec::with_capacity(ranges.len());
    let mut degenerate_cells = BTreeSet::new();
    let mut empty_cells = BTreeSet::new();
    let mut contrast = 0.0;
    for (cell, range) in ranges.iter().enumerate() {
        let len = range.len();
        if len == 0 {
            empty_cells.insert(cell);
            cell_probs.push(0.5);
            cell_logits.push(0.0);
            continue;
        }
        let successes = ys[range.clone()].iter().map(|&y| usize::from(y)).sum::<usize>();
        if successes == 0 || successes == len {
            degenerate_cells.insert(cell);
        }
        cell_probs.push(successes as f64 / len as f64);
        cell_logits.push(logit_of_counts(successes, len));
        contrast += cell_entropy_cost(successes, len);
    }
    contrast /= sample.n() as f64;
    RegressogramFit {
        model: model.clone(),
        cell_probs,
        cell_logits,
        contrast,
        degenerate_cells,
        empty_cells,
    }
}

/// Population projection onto the partition: each non-empty cell gets the
/// cell mean of pi_f0(x_i). This is the ‖·‖_n projection of pi_f0 onto the
/// span of the cell indicators.
///
/// The `contrast` field holds gamma_n of the projected function against the
/// observed labels (+∞ if a degenerate projected cell conflicts with them).
pub fn project_truth(
    truth: &TrueFunction,
    sample: &BinarySample,
    model: &PartitionModel,
) -> RegressogramFit {
    let ranges = model.assign(sample);
    let p0 = truth.probs_at(sample);
    let ys = sample.ys();
    let mut cell_probs = Vec::with_capacity(ranges.len());
    let mut cell_logits = Vec::with_capacity(ranges.len());
    let mut degenerate_cells = BTreeSet::new();
    let mut empty_cells = BTreeSet::new();
    let mut contrast = 0.0;
    for (cell, range) in ranges.iter().enumerate() {
        let len = range.len();
        if len == 0 {
            empty_cells.insert(cell);
            cell_probs.push(0.5);
            cell_logits.push(0.0);
            continue;
        }
        let p = p0[range.clone()].iter().sum::<f64>() / len as f64;
        if p == 0.0 || p == 1.0 {
            degenerate_cells.insert(cell);
        }
        cell_probs.push(p);
        cell_logits.push(if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            (p / (1.0 - p)).ln()
        });
        // cross-entropy form of the per-cell contrast contribution
        let successes = ys[range.clone()].iter().map(|&y| usize::from(y)).sum::<usize>();
        let failures = len - successes;
        if successes > 0 {
            contrast += if p == 0.0 { f64::INFINITY } else { -(successes as f64) * p.ln() };
        }
        if failures > 0 {
            contrast += if p == 1.0 { f64::INFINITY } else { -(failures as f64) * (1.0 - p).ln() };
        }
    }
    contrast /= sample.n() as f64;
    RegressogramFit {
        model: model.clone(),
        cell_probs,
        cell_logits,
        contrast,
        degenerate_cells,
        empty_cells,
    }
}

/// Cap on the dimension of a model collection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxDimRule {
    /// D up to floor(n / log n), capped at n.
    NOverLogN,
    Fixed(usize),
}

impl MaxDimRule {
    pub fn max_dim(&self, n: usize) -> usize {
        match self {
            MaxDimRule::NOverLogN => {
                let d = (n as f64 / (n as f64).ln()).floor() as usize;
                d.clamp(1, n)
            }
            MaxDimRule::Fixed(d) => (*d).clamp(1, n),
        }
    }
}

/// Regular partitions {[(k-1)/D, k/D)} for D = 1 up to the rule's cap.
pub fn regular_collection(n: usize, rule: MaxDimRule) -> Vec<PartitionModel> {
    assert!(n >= 2, "regular collection needs n >= 2");
    let dmax = rule.max_dim(n);
    (1..=dmax).map(|d| PartitionModel::regular(d).expect("d >= 1")).collect()
}

/// Smallest admissible cell size for a given Gamma: max(1, floor(Gamma·log²n)).
/// The default Gamma of 0 gives min_cell = 1, which keeps small-sample
/// collections non-empty.
pub const DEFAULT_GAMMA: f64 = 0.0;

pub fn min_cell_for(gamma: f64, n: usize) -> usize {
    let v = (gamma * (n as f64).ln().powi(2)).floor() as usize;
    v.max(1)
}

/// Exact search for the contrast-minimizing partition with exactly `dim`
/// cells, breakpoints between consecutive design points, each cell holding
/// at least `min_cell` points.
///
/// Dynamic programming over suffixes; reconstruction picks the smallest
/// feasible breakpoint at every step, which yields the lexicographically
/// smallest optimal breakpoint vector. Returns the partition and its
/// contrast gamma_n.
#[allow(clippy::needless_range_loop)] // index loops mirror the recurrence
pub fn best_irregular_partition(
    sample: &BinarySample,
    dim: usize,
    min_cell: usize,
) -> Result<(PartitionModel, f64), RegressogramError> {
    let n = sample.n();
    let min_cell = min_cell.max(1);
    if dim == 0 || dim * min_cell > n {
        return Err(RegressogramError::InfeasibleDimension { dim, min_cell, n });
    }

    let mut prefix = vec![0usize; n + 1];
    for (i, &y) in sample.ys().iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(y);
    }
    let seg_cost =
        |i: usize, j: usize| -> f64 { cell_entropy_cost(prefix[j] - prefix[i], j - i) };

    // suffix_cost[d][i]: minimal cost of splitting [i, n) into exactly d cells
    let mut suffix_cost = vec![vec![f64::INFINITY; n + 1]; dim + 1];
    suffix_cost[0][n] = 0.0;
    for d in 1..=dim {
        // [i, n) must hold d cells of >= min_cell points
        for i in 0..=(n - d * min_cell) {
            let mut best = f64::INFINITY;
            for j in (i + min_cell)..=(n - (d - 1) * min_cell) {
                let candidate = seg_cost(i, j) + suffix_cost[d - 1][j];
                if candidate < best {
                    best = candidate;
                }
            }
            suffix_cost[d][i] = best;
        }
    }

    let mut breaks = Vec::with_capacity(dim - 1);
    let mut i = 0;
    for d in (1..=dim).rev() {
        if d == 1 {
            break;
        }
        let target = suffix_cost[d][i];
        // smallest breakpoint attaining the optimum ties lexicographically
        let mut next = None;
        for j in (i + min_cell)..=(n - (d - 1) * min_cell) {
            if seg_cost(i, j) + suffix_cost[d - 1][j] == target {
                next = Some(j);
                break;
            }
        }
        let j = next.expect("an optimal breakpoint must exist");
        breaks.push(j);
        i = j;
    }

    let contrast = suffix_cost[dim][0] / n as f64;
    let model = PartitionModel::from_index_breaks(breaks, n, PartitionKind::Irregular)?;
    Ok((model, contrast))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{contrast, empirical_norm_sq, kl_divergence, log1p_exp, sigmoid};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn evenly_spaced_sample(ys: Vec<u8>) -> BinarySample {
        let n = ys.len();
        let xs = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        BinarySample::new(xs, ys).unwrap()
    }

    /// Brute force: enumerate every breakpoint vector in lexicographic order,
    /// total cost folded right-to-left, keep the strictly best.
    #[allow(clippy::assign_op_pattern)] // spell out the right fold
    fn brute_force_best(
        sample: &BinarySample,
        dim: usize,
        min_cell: usize,
    ) -> Option<(Vec<usize>, f64)> {
        let n = sample.n();
        let mut prefix = vec![0usize; n + 1];
        for (i, &y) in sample.ys().iter().enumerate() {
            prefix[i + 1] = prefix[i] + usize::from(y);
        }
        let seg = |i: usize, j: usize| cell_entropy_cost(prefix[j] - prefix[i], j - i);
        fn recurse(
            seg: &dyn Fn(usize, usize) -> f64,
            start: usize,
            cells_left: usize,
            min_cell: usize,
            n: usize,
            acc: &mut Vec<usize>,
            best: &mut Option<(Vec<usize>, f64)>,
        ) {
            if cells_left == 1 {
                let mut total = seg(start, n);
                for w in acc.windows(2).rev() {
                    total = seg(w[0], w[1]) + total;
                }
                if let Some(&first) = acc.first() {
                    total = seg(0, first) + total;
                }
                // acc holds interior breakpoints only when start > 0
                let total = if acc.is_empty() { seg(0, n) } else { total };
                let improves = best.as_ref().is_none_or(|(_, b)| total < *b);
                if improves {
                    *best = Some((acc.clone(), total));
                }
                return;
            }
            for j in (start + min_cell)..=(n - (cells_left - 1) * min_cell) {
                acc.push(j);
                recurse(seg, j, cells_left - 1, min_cell, n, acc, best);
                acc.pop();
            }
        }
        if dim == 0 || dim * min_cell > n {
            return None;
        }
        let mut best = None;
        recurse(&seg, 0, dim, min_cell, n, &mut Vec::new(), &mut best);
        best.map(|(b, total)| (b, total / n as f64))
    }

    #[test]
    fn fit_balanced_cell() {
        let s = evenly_spaced_sample(vec![1, 0, 1, 0]);
        let m = PartitionModel::regular(1).unwrap();
        let fit = fit_regressogram(&s, &m);
        assert_eq!(fit.cell_probs, vec![0.5]);
        assert_eq!(fit.cell_logits, vec![0.0]);
        assert!(fit.degenerate_cells.is_empty());
    }

    #[test]
    fn fit_quarter_cell() {
        let s = evenly_spaced_sample(vec![1, 0, 0, 0]);
        let m = PartitionModel::regular(1).unwrap();
        let fit = fit_regressogram(&s, &m);
        assert_eq!(fit.cell_probs, vec![0.25]);
        assert!((fit.cell_logits[0] - (1.0_f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn fit_degenerate_cell_flagged() {
        let s = evenly_spaced_sample(vec![0, 0, 0]);
        let m = PartitionModel::regular(1).unwrap();
        let fit = fit_regressogram(&s, &m);
        assert_eq!(fit.cell_probs, vec![0.0]);
        assert_eq!(fit.cell_logits, vec![f64::NEG_INFINITY]);
        assert!(fit.degenerate_cells.contains(&0));
        assert_eq!(fit.contrast, 0.0);
    }

    #[test]
    fn fit_empty_cell_gets_uninformative_prob() {
        // all points in the left half: right cell is empty
        let xs = vec![0.05, 0.15, 0.25, 0.35];
        let s = BinarySample::new(xs, vec![0, 1, 1, 0]).unwrap();
        let m = PartitionModel::regular(2).unwrap();
        let fit = fit_regressogram(&s, &m);
        assert!(fit.empty_cells.contains(&1));
        assert_eq!(fit.cell_probs[1], 0.5);
        assert_eq!(fit.cell_logits[1], 0.0);
        assert_eq!(fit.model.dimension(), 2);
    }

    #[test]
    fn entropy_contrast_matches_direct_gamma_n() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(5..40);
            let ys: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
            let s = evenly_spaced_sample(ys);
            let d = rng.random_range(1..6);
            let m = PartitionModel::regular(d).unwrap();
            let fit = fit_regressogram(&s, &m);
            let direct = contrast(&s, &fit.expand(&s)).unwrap();
            assert!(
                (fit.contrast - direct).abs() < 1e-12,
                "entropy form {} vs direct {}",
                fit.contrast,
                direct
            );
        }
    }

    #[test]
    fn projection_of_constant_and_two_point_mean() {
        let s = evenly_spaced_sample(vec![0, 1, 0, 1]);
        let m = PartitionModel::regular(1).unwrap();
        let logit_of = |p: f64| (p / (1.0 - p)).ln();
        let constant = TrueFunction::new(move |_| logit_of(0.3));
        let proj = project_truth(&constant, &s, &m);
        assert!((proj.cell_probs[0] - 0.3).abs() < 1e-12);

        let xs = vec![0.2, 0.8];
        let s2 = BinarySample::new(xs, vec![0, 1]).unwrap();
        let two_point = TrueFunction::new(move |x| if x < 0.5 { logit_of(0.2) } else { logit_of(0.4) });
        let proj2 = project_truth(&two_point, &s2, &m);
        assert!((proj2.cell_probs[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn projection_contrast_is_gamma_n_of_projection() {
        let s = evenly_spaced_sample(vec![0, 1, 1, 0, 1, 0]);
        let m = PartitionModel::regular(2).unwrap();
        let truth = TrueFunction::new(|x| x - 0.3);
        let proj = project_truth(&truth, &s, &m);
        let direct = contrast(&s, &proj.expand(&s)).unwrap();
        assert!((proj.contrast - direct).abs() < 1e-12);
    }

    #[test]
    fn projection_minimizes_empirical_distance() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 30;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let s = BinarySample::new(xs, ys).unwrap();
        let truth = TrueFunction::new(|x| (2.0 * x - 1.0).tanh());
        let m = PartitionModel::regular(3).unwrap();
        let proj = project_truth(&truth, &s, &m);
        let p0 = truth.probs_at(&s);
        let base: Vec<f64> = proj
            .probs_at_design(&s)
            .iter()
            .zip(&p0)
            .map(|(a, b)| a - b)
            .collect();
        let base_norm = empirical_norm_sq(&base);
        let ranges = m.assign(&s);
        for delta in [-0.01, 0.01] {
            for range in &ranges {
                let mut perturbed = proj.probs_at_design(&s);
                for i in range.clone() {
                    perturbed[i] += delta;
                }
                let diff: Vec<f64> = perturbed.iter().zip(&p0).map(|(a, b)| a - b).collect();
                assert!(empirical_norm_sq(&diff) >= base_norm - 1e-12);
            }
        }
    }

    #[test]
    fn regular_collection_dimension_caps() {
        let c10 = regular_collection(10, MaxDimRule::NOverLogN);
        assert_eq!(c10.len(), 4); // 10 / ln 10 ≈ 4.34
        let c2 = regular_collection(2, MaxDimRule::NOverLogN);
        assert_eq!(c2.len(), 2); // 2 / ln 2 ≈ 2.89, capped at n
        assert_eq!(c10[0].dimension(), 1);
        assert!(matches!(c10[0].cells(), PartitionCells::Intervals(b) if b.is_empty()));
        assert!(c10.iter().all(|m| m.kind() == PartitionKind::Regular));
    }

    #[test]
    fn min_cell_rule() {
        assert_eq!(min_cell_for(DEFAULT_GAMMA, 1000), 1);
        assert_eq!(min_cell_for(1.0, 100), 21); // ln(100)² ≈ 21.2
    }

    #[test]
    fn best_irregular_separates_clean_split() {
        let s = evenly_spaced_sample(vec![0, 0, 1, 1]);
        let (model, c) = best_irregular_partition(&s, 2, 1).unwrap();
        assert_eq!(c, 0.0);
        match model.cells() {
            PartitionCells::IndexRanges { breaks, .. } => assert_eq!(breaks, &vec![2]),
            _ => panic!("expected index ranges"),
        }
        let (_, c1) = best_irregular_partition(&s, 1, 1).unwrap();
        assert!((c1 - 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn best_irregular_saturated_fit_is_pure() {
        let s = evenly_spaced_sample(vec![1, 0, 0, 1, 1]);
        let (model, c) = best_irregular_partition(&s, 5, 1).unwrap();
        assert_eq!(c, 0.0);
        let fit = fit_regressogram(&s, &model);
        assert_eq!(fit.degenerate_cells.len(), 5);
    }

    #[test]
    fn best_irregular_infeasible_dimension() {
        let s = evenly_spaced_sample(vec![0, 1, 0, 1]);
        assert!(matches!(
            best_irregular_partition(&s, 3, 2),
            Err(RegressogramError::InfeasibleDimension { .. })
        ));
    }

    #[test]
    fn dp_matches_brute_force_small() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..25 {
            let n = rng.random_range(2..9);
            let ys: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
            let s = evenly_spaced_sample(ys);
            for dim in 1..=n {
                let (model, c) = best_irregular_partition(&s, dim, 1).unwrap();
                let (expected_breaks, expected_cost) = brute_force_best(&s, dim, 1).unwrap();
                assert!((c - expected_cost).abs() < 1e-12);
                match model.cells() {
                    PartitionCells::IndexRanges { breaks, .. } => {
                        assert_eq!(breaks, &expected_breaks, "n = {n}, dim = {dim}")
                    }
                    _ => panic!("expected index ranges"),
                }
            }
        }
    }

    #[test]
    fn pythagoras_identity_for_non_degenerate_fits() {
        let mut rng = StdRng::seed_from_u64(19);
        let mut checked = 0;
        while checked < 30 {
            let n = rng.random_range(20..60);
            let a = rng.random_range(-1.5..1.5);
            let b = rng.random_range(-1.5..1.5);
            let truth = TrueFunction::new(move |x: f64| a + b * (3.0 * x).sin());
            let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let p0: Vec<f64> = xs.iter().map(|&x| sigmoid(truth.eval(x))).collect();
            let ys: Vec<u8> = p0.iter().map(|&p| u8::from(rng.random::<f64>() < p)).collect();
            let s = BinarySample::new(xs, ys).unwrap();
            let m = PartitionModel::regular(rng.random_range(1..5)).unwrap();
            let fit = fit_regressogram(&s, &m);
            if !fit.degenerate_cells.is_empty() {
                continue;
            }
            let p0 = truth.probs_at(&s);
            let p_proj = project_truth(&truth, &s, &m).probs_at_design(&s);
            let p_fit = fit.probs_at_design(&s);
            let total = kl_divergence(&p0, &p_fit).unwrap();
            let bias = kl_divergence(&p0, &p_proj).unwrap();
            let variance = kl_divergence(&p_proj, &p_fit).unwrap();
            assert!(
                (total - bias - variance).abs() < 1e-10,
                "{total} != {bias} + {variance}"
            );
            checked += 1;
        }
    }

    #[test]
    fn fitted_cells_beat_grid_perturbations() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..10 {
            let n = rng.random_range(10..40);
            let ys: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.6)).collect();
            let s = evenly_spaced_sample(ys);
            let m = PartitionModel::regular(rng.random_range(1..5)).unwrap();
            let fit = fit_regressogram(&s, &m);
            let ranges = m.assign(&s);
            // gamma_n is cell-additive, so per-cell optimality suffices
            let mut total = 0.0;
            for (cell, range) in ranges.iter().enumerate() {
                let len = range.len();
                if len == 0 {
                    continue;
                }
                let successes: usize =
                    s.ys()[range.clone()].iter().map(|&y| usize::from(y)).sum();
                let fitted = cell_entropy_cost(successes, len);
                total += fitted;
                let mut g = -6.0;
                while g <= 6.0 {
                    let alternative =
                        len as f64 * log1p_exp(g) - successes as f64 * g;
                    assert!(
                        alternative >= fitted - 1e-12,
                        "cell {cell}: grid logit {g} beats the fit"
                    );
                    g += 0.01;
                }
            }
            assert!((total / s.n() as f64 - fit.contrast).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn refining_a_partition_never_increases_contrast(
            ys in proptest::collection::vec(0u8..2, 6..40),
            split_seed in 0u64..1000
        ) {
            let s = evenly_spaced_sample(ys);
            let n = s.n();
            let mut rng = StdRng::seed_from_u64(split_seed);
            let coarse_break = rng.random_range(1..n);
            let coarse = PartitionModel::from_index_breaks(
                vec![coarse_break], n, PartitionKind::Irregular).unwrap();
            // refine by splitting one of the two cells
            let extra = if coarse_break > 1 {
                rng.random_range(1..coarse_break)
            } else if coarse_break + 1 < n {
                rng.random_range(coarse_break + 1..n)
            } else {
                coarse_break
            };
            if extra == coarse_break {
                return Ok(());
            }
            let mut breaks = vec![coarse_break, extra];
            breaks.sort_unstable();
            let fine = PartitionModel::from_index_breaks(
                breaks, n, PartitionKind::Irregular).unwrap();
            let coarse_fit = fit_regressogram(&s, &coarse);
            let fine_fit = fit_regressogram(&s, &fine);
            prop_assert!(fine_fit.contrast <= coarse_fit.contrast + 1e-12);
        }

        #[test]
        fn regular_dyadic_refinement_monotone(
            ys in proptest::collection::vec(0u8..2, 8..64)
        ) {
            let s = evenly_spaced_sample(ys);
            let coarse = fit_regressogram(&s, &PartitionModel::regular(2).unwrap());
            let fine = fit_regressogram(&s, &PartitionModel::regular(4).unwrap());
            prop_assert!(fine.contrast <= coarse.contrast + 1e-12);
        }
    }
}
