//! Desk-scale ground truth: exhaustive searches, a structural equivalence
//! check, and a randomized counterexample hunter.
//!
//! Everything here is deliberately brute-force. The exhaustive searches give
//! the solvers something exact to be measured against; the equivalence check
//! cross-validates the three structural characterizations of "sequential is
//! enough"; and the hunter looks for channels where the best sequential
//! quantizer is strictly worse than the best unrestricted one even though
//! dominance holds — expected to be vanishingly rare.

use crate::assignment::Assignment;
use crate::baselines::weighted_phi;
use crate::channel::{Channel, Labeling};
use crate::cost::{CostFamily, LogBase, SegmentCostView};
use crate::geometry::{
    check_dominance, check_dominance_strict, posterior_geometry, relabel_inputs_dominant,
    COLLINEARITY_TOL, DOMINANCE_TOL,
};
use crate::sampling;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::RangeInclusive;
use thiserror::Error;

/// Hard cap on candidates either exhaustive search will enumerate.
pub const DEFAULT_ORACLE_BUDGET: u64 = 1_000_000;

/// Relative margin a cost difference must clear before the hunter calls it a
/// real gap rather than floating-point noise.
const GAP_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("cell count {cells} must be between 1 and the output count {outputs}")]
    CellCount { cells: usize, outputs: usize },
    #[error("{what} search would enumerate {required} candidates, over the budget of {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        budget: u64,
    },
}

/// Outcome of an exhaustive search. `S` is the solution representation:
/// boundary vectors for the sequential search, assignments for the general
/// one.
#[derive(Debug, Clone)]
pub struct OracleResult<S> {
    pub best_cost: f64,
    /// Every candidate whose cost ties the minimum exactly, in enumeration
    /// order (lexicographic for both searches).
    pub optima: Vec<S>,
    /// How many candidates were scored; always the full count, never a
    /// truncation.
    pub enumerated: u64,
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k {
        // Multiply before dividing: the running value is C(n, i) after each
        // step, so the division is exact.
        result = match result.checked_mul((n - k + i) as u128) {
            Some(v) => v / i as u128,
            None => return u128::MAX,
        };
    }
    result
}

/// Stirling number of the second kind (partitions of `n` items into exactly
/// `k` non-empty blocks), saturating at `u128::MAX`.
pub fn stirling2(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    if n == 0 {
        return 1; // k == 0 here
    }
    if k == 0 {
        return 0;
    }
    let mut row: Vec<u128> = vec![0; k as usize + 1];
    row[0] = 1; // S(0, 0)
    for _ in 1..=n {
        for j in (1..=k as usize).rev() {
            let scaled = (row[j]).checked_mul(j as u128).unwrap_or(u128::MAX);
            row[j] = scaled.checked_add(row[j - 1]).unwrap_or(u128::MAX);
        }
        row[0] = 0;
    }
    row[k as usize]
}

fn check_cells(cells: usize, outputs: usize) -> Result<(), OracleError> {
    if cells == 0 || cells > outputs {
        return Err(OracleError::CellCount { cells, outputs });
    }
    Ok(())
}

/// Score every sequential quantizer with `cells` cells and return the exact
/// minimum, all exact ties, and the enumeration count (which always equals
/// the closed-form candidate count).
pub fn exhaustive_sdq(
    view: &SegmentCostView,
    cells: usize,
) -> Result<OracleResult<Vec<usize>>, OracleError> {
    exhaustive_sdq_with_budget(view, cells, DEFAULT_ORACLE_BUDGET)
}

pub fn exhaustive_sdq_with_budget(
    view: &SegmentCostView,
    cells: usize,
    budget: u64,
) -> Result<OracleResult<Vec<usize>>, OracleError> {
    let n = view.outputs();
    check_cells(cells, n)?;
    let required = binomial((n - 1) as u64, (cells - 1) as u64);
    if required > budget as u128 {
        return Err(OracleError::BudgetExceeded {
            what: "sequential",
            required,
            budget,
        });
    }

    let mut result = OracleResult {
        best_cost: f64::INFINITY,
        optima: Vec::new(),
        enumerated: 0,
    };
    // Interior boundaries as a k-combination of 1..n, advanced in
    // lexicographic order.
    let mut interior: Vec<usize> = (1..cells).collect();
    loop {
        let mut b = Vec::with_capacity(cells + 1);
        b.push(0);
        b.extend_from_slice(&interior);
        b.push(n);
        let cost = view
            .sdq_cost(&b)
            .expect("enumerated boundaries are valid by construction");
        result.enumerated += 1;
        if cost < result.best_cost {
            result.best_cost = cost;
            result.optima.clear();
            result.optima.push(b);
        } else if cost == result.best_cost {
            result.optima.push(b);
        }

        let k = interior.len();
        if k == 0 {
            break;
        }
        let mut i = k;
        while i > 0 && interior[i - 1] == n - 1 - (k - i) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        interior[i - 1] += 1;
        for j in i..k {
            interior[j] = interior[j - 1] + 1;
        }
    }
    debug_assert_eq!(result.enumerated as u128, required);
    Ok(result)
}

/// Score every partition of the outputs into exactly `cells` non-empty cells
/// — arbitrary subsets, not just contiguous runs. Splitting a cell never
/// increases a concave cost, so partitions with fewer cells need not be
/// searched: the best over exactly `cells` blocks is the best over at most
/// `cells`.
pub fn exhaustive_dq(
    view: &SegmentCostView,
    cells: usize,
) -> Result<OracleResult<Assignment>, OracleError> {
    exhaustive_dq_with_budget(view, cells, DEFAULT_ORACLE_BUDGET)
}

pub fn exhaustive_dq_with_budget(
    view: &SegmentCostView,
    cells: usize,
    budget: u64,
) -> Result<OracleResult<Assignment>, OracleError> {
    let channel = view.channel();
    let cost = view.cost_family();
    let n = channel.outputs();
    let q = channel.inputs();
    check_cells(cells, n)?;
    let required = stirling2(n as u64, cells as u64);
    if required > budget as u128 {
        return Err(OracleError::BudgetExceeded {
            what: "partition",
            required,
            budget,
        });
    }

    // Joint columns once; each leaf re-aggregates them per cell.
    let joint: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..q).map(|i| channel.joint(i, j)).collect())
        .collect();
    let mut result = OracleResult {
        best_cost: f64::INFINITY,
        optima: Vec::new(),
        enumerated: 0,
    };
    let mut map = vec![0usize; n];

    // Depth-first over restricted growth strings: position `pos` may reuse
    // any of the `used` existing labels or open label `used` itself; a branch
    // is pruned when the remaining positions cannot open enough new cells.
    fn recurse(
        map: &mut Vec<usize>,
        pos: usize,
        used: usize,
        cells: usize,
        joint: &[Vec<f64>],
        q: usize,
        cost: &CostFamily,
        result: &mut OracleResult<Assignment>,
    ) {
        let n = map.len();
        if pos == n {
            debug_assert_eq!(used, cells);
            let mut cell_u = vec![vec![0.0; q]; cells];
            for (j, col) in joint.iter().enumerate() {
                let u = &mut cell_u[map[j]];
                for (i, &v) in col.iter().enumerate() {
                    u[i] += v;
                }
            }
            let total: f64 = cell_u.iter().map(|u| weighted_phi(cost, u)).sum();
            result.enumerated += 1;
            if total < result.best_cost {
                result.best_cost = total;
                result.optima.clear();
                result.optima.push(
                    Assignment::new(map.clone(), cells).expect("growth strings are surjective"),
                );
            } else if total == result.best_cost {
                result.optima.push(
                    Assignment::new(map.clone(), cells).expect("growth strings are surjective"),
                );
            }
            return;
        }
        let top = (used + 1).min(cells);
        for label in 0..top {
            let next_used = used.max(label + 1);
            // Prune: every still-unopened cell needs one of the remaining slots.
            if next_used + (n - pos - 1) < cells {
                continue;
            }
            map[pos] = label;
            recurse(map, pos + 1, next_used, cells, joint, q, cost, result);
        }
    }
    recurse(&mut map, 0, 0, cells, &joint, q, cost, &mut result);
    debug_assert_eq!(result.enumerated as u128, required);
    Ok(result)
}

/// One channel where the best sequential quantizer is strictly worse than the
/// best unrestricted one, despite the dominance condition holding.
#[derive(Debug, Clone)]
pub struct GapInstance {
    pub channel: Channel,
    pub cells: usize,
    pub sdq_cost: f64,
    pub dq_cost: f64,
    /// First sequential optimum, as boundaries.
    pub sdq_boundaries: Vec<usize>,
    /// First unrestricted optimum.
    pub dq_assignment: Assignment,
}

#[derive(Debug, Clone)]
pub struct HuntReport {
    /// Channels drawn.
    pub trials: usize,
    /// (channel, cell-count) pairs actually searched.
    pub searched: u64,
    pub gaps: Vec<GapInstance>,
}

/// Randomized search for dominance-satisfying channels whose sequential
/// optimum falls short of the unrestricted optimum, scored by mutual
/// information (the α → 1 cost). Binary-input channels can never produce a
/// gap — the structural equivalence guarantees sequential optimality there —
/// so any hit needs q ≥ 3, and even then hits are extremely rare.
///
/// Channels are drawn from a totally-positive ensemble so dominance holds by
/// construction; sizes come uniformly from the given ranges, and cell counts
/// sweep `m_range` clamped to `2 ≤ M < N`.
pub fn hunt_sdq_gap(
    q_range: RangeInclusive<usize>,
    n_range: RangeInclusive<usize>,
    m_range: RangeInclusive<usize>,
    trials: usize,
    seed: u64,
) -> HuntReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = HuntReport {
        trials,
        searched: 0,
        gaps: Vec::new(),
    };
    for _ in 0..trials {
        let q = rng.random_range(q_range.clone());
        let n = rng.random_range(n_range.clone());
        let channel = sampling::random_dominant_channel(q, n, &mut rng);
        debug_assert!(check_dominance_strict(&channel, DOMINANCE_TOL).holds);
        let cost = CostFamily::alpha_for(&channel, 1.0, LogBase::Natural)
            .expect("sampled priors are strictly positive");
        let view = SegmentCostView::new(&channel, &cost);
        for cells in m_range.clone() {
            if cells < 2 || cells >= n {
                continue;
            }
            let sdq = exhaustive_sdq(&view, cells).expect("hunt sizes are desk-scale");
            let dq = exhaustive_dq(&view, cells).expect("hunt sizes are desk-scale");
            report.searched += 1;
            let margin = GAP_REL_TOL * dq.best_cost.abs().max(1.0);
            if sdq.best_cost > dq.best_cost + margin {
                report.gaps.push(GapInstance {
                    channel: channel.clone(),
                    cells,
                    sdq_cost: sdq.best_cost,
                    dq_cost: dq.best_cost,
                    sdq_boundaries: sdq.optima[0].clone(),
                    dq_assignment: dq.optima[0].clone(),
                });
            }
        }
    }
    report
}

/// The three structural statements that are equivalent for any channel:
/// whichever holds, all hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceReport {
    /// The posteriors lie on a line (precondition shared by all three).
    pub collinear: bool,
    /// (1) The given output order walks that line monotonically, in either
    /// direction — reversing the outputs changes no quantizer's cost, so
    /// both directions count.
    pub sequential: bool,
    /// (2) Collinear, and some input relabelling makes the full pairwise
    /// dominance condition hold under the given output order.
    pub full_dominance_relabellable: bool,
    /// (3) Collinear, and some input relabelling makes the adjacent-pair
    /// dominance condition hold under the given output order.
    pub adjacent_dominance_relabellable: bool,
}

impl EquivalenceReport {
    /// All three statements agree (all true or all false).
    pub fn consistent(&self) -> bool {
        self.sequential == self.full_dominance_relabellable
            && self.sequential == self.adjacent_dominance_relabellable
    }
}

/// Does some input order make the channel dominance-satisfying, keeping the
/// output order fixed? Tries the geometry-derived candidate and its reverse
/// first, then falls back to scanning all `q!` input orders (only feasible
/// for small `q`; beyond 8 inputs the cheap candidates must decide).
fn dominant_input_order_exists(channel: &Channel, strict: bool) -> bool {
    let passes = |ch: &Channel| {
        if strict {
            check_dominance_strict(ch, DOMINANCE_TOL).holds
        } else {
            check_dominance(ch, DOMINANCE_TOL).holds
        }
    };
    let (candidate, labeling, satisfied) = relabel_inputs_dominant(channel, DOMINANCE_TOL);
    if satisfied && strict {
        return true;
    }
    if passes(&candidate) {
        return true;
    }
    let reversed: Vec<usize> = labeling.perm().iter().rev().copied().collect();
    if passes(&channel.permute_inputs(&Labeling::new(reversed))) {
        return true;
    }
    let q = channel.inputs();
    if q > 8 {
        return false;
    }
    let mut perm: Vec<usize> = (0..q).collect();
    loop {
        if passes(&channel.permute_inputs(&Labeling::new(perm.clone()))) {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

/// Advance to the next permutation in lexicographic order; false at the last.
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Evaluate the three equivalent structural statements on one channel. A
/// consistent report (all true or all false) is the expected outcome on every
/// channel; an inconsistent one would falsify the equivalence.
pub fn verify_equivalence(channel: &Channel) -> EquivalenceReport {
    let geo = posterior_geometry(channel, COLLINEARITY_TOL);
    let sequential = if !geo.collinear {
        false
    } else if geo.sequential {
        true
    } else {
        // Try the reversed output order before giving up on monotonicity.
        let n = channel.outputs();
        let reversal = Labeling::new((0..n).rev().collect());
        posterior_geometry(&channel.permute_outputs(&reversal), COLLINEARITY_TOL).sequential
    };
    let full = geo.collinear && dominant_input_order_exists(channel, true);
    let adjacent = geo.collinear && dominant_input_order_exists(channel, false);
    EquivalenceReport {
        collinear: geo.collinear,
        sequential,
        full_dominance_relabellable: full,
        adjacent_dominance_relabellable: adjacent,
    }
}
