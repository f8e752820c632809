//! Iterative dynamic programming for non-sequential quantizers.
//!
//! A sequential quantizer is only optimal among quantizers that respect the
//! current output order. This module alternates two steps that together never
//! increase cost:
//!
//! 1. **Relabel**: permute the outputs so the incumbent assignment's cells
//!    become contiguous index blocks (any block order works).
//! 2. **Update**: run an exact sequential solve on the relabelled channel and
//!    map the optimum back through the inverse permutation.
//!
//! The relabelled incumbent is always a feasible sequential quantizer, so the
//! update step can only match or improve it; cost trajectories are monotone
//! non-increasing up to an absolute slack of [`IMPROVEMENT_TOL`] (the slack
//! absorbs re-summation noise, not any real regression).
//!
//! Stable block order converges quickly but can get stuck; random block order
//! keeps exploring, because a different permutation can expose a cheaper
//! non-contiguous grouping to the sequential solver.

use crate::assignment::Assignment;
use crate::channel::{Channel, Labeling};
use crate::cost::{CostFamily, SegmentCostView};
use crate::dp::{check_quadrangle_inequality, design_sdq, DpError, Engine};
use rand::seq::SliceRandom;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Cost improvements smaller than this count as "no improvement": the stable
/// mode stops, and the monotonicity invariant allows this much slack.
pub const IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdpError {
    #[error("initial assignment has {got} cells, expected {want}")]
    CellMismatch { want: usize, got: usize },
    #[error("initial assignment covers {got} outputs, channel has {want}")]
    OutputMismatch { want: usize, got: usize },
    #[error("iteration budget must be at least 1")]
    NoIterations,
    #[error(transparent)]
    Dp(#[from] DpError),
}

/// How the relabelling step orders the incumbent's cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMode {
    /// Blocks sorted by their smallest member index, members kept in
    /// ascending order. Deterministic; an assignment that is already
    /// sequential maps to the identity permutation.
    Stable,
    /// Block order and within-block orders drawn from a seeded generator.
    /// In [`idp`] the seed is a master seed; each iteration derives its own
    /// sub-seed from it.
    Random { seed: u64 },
}

/// Permutation of the outputs under which `q`'s cells become contiguous
/// blocks. The returned labeling maps new index to old index, so position
/// runs of equal cells appear in the order the mode chose.
pub fn relabel_for_incumbent(q: &Assignment, mode: OrderMode) -> Labeling {
    let mut blocks: Vec<Vec<usize>> = (0..q.cells()).map(|z| q.members(z)).collect();
    match mode {
        OrderMode::Stable => {
            // Surjectivity guarantees every block is non-empty.
            blocks.sort_by_key(|b| b[0]);
        }
        OrderMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            blocks.shuffle(&mut rng);
            for block in &mut blocks {
                block.shuffle(&mut rng);
            }
        }
    }
    let mut perm = Vec::with_capacity(q.outputs());
    for block in blocks {
        perm.extend(block);
    }
    Labeling::new(perm)
}

/// Why an [`idp`] run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Stable mode saw an improvement below [`IMPROVEMENT_TOL`].
    Converged,
    /// The iteration budget ran out (always the reason in random mode).
    MaxIterations,
}

/// Final state of an [`idp`] run.
#[derive(Debug, Clone)]
pub struct IdpState {
    /// Completed iterations (relabel + solve pairs).
    pub iterations: usize,
    /// Best assignment found, in original output coordinates.
    pub incumbent: Assignment,
    /// The labeling used by the last completed iteration.
    pub labeling: Labeling,
    /// `cost_history[0]` is the initial assignment's cost; entry `t` is the
    /// cost after iteration `t`. Non-increasing within [`IMPROVEMENT_TOL`].
    pub cost_history: Vec<f64>,
    pub stop: StopReason,
    /// Iterations where the requested fast engine was swapped for the
    /// standard one because the quadrangle-inequality check failed.
    pub qi_fallbacks: usize,
}

impl IdpState {
    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().expect("history is never empty")
    }
}

/// Knobs beyond the core contract; the defaults match [`idp`].
#[derive(Debug, Clone, Copy)]
pub struct IdpOptions {
    /// Engine for the per-iteration solve. The default is
    /// [`Engine::Standard`] because relabelled channels generally do not
    /// satisfy the quadrangle inequality, whatever structure the original
    /// channel had.
    pub engine: Engine,
    /// Re-check the quadrangle inequality on every relabelled channel and
    /// fall back to the standard engine when it fails. Only meaningful with
    /// a fast engine; costs O(N²) segment evaluations per iteration.
    pub check_qi: bool,
    /// Slack passed to the per-iteration check.
    pub qi_tol: f64,
}

impl Default for IdpOptions {
    fn default() -> Self {
        IdpOptions {
            engine: Engine::Standard,
            check_qi: false,
            qi_tol: 1e-10,
        }
    }
}

/// Iterative dynamic programming with the default options: standard engine,
/// no per-iteration structure checks.
///
/// Starts from `q0`, runs at most `max_iters` iterations, and returns the
/// best assignment together with the run's state. Stable mode stops early
/// once an iteration improves by less than [`IMPROVEMENT_TOL`]; random mode
/// always uses the full budget, since a later permutation can still unlock
/// improvement after a flat stretch.
pub fn idp(
    channel: &Channel,
    cost: &CostFamily,
    cells: usize,
    q0: &Assignment,
    max_iters: usize,
    mode: OrderMode,
) -> Result<(Assignment, IdpState), IdpError> {
    idp_with(channel, cost, cells, q0, max_iters, mode, IdpOptions::default())
}

/// [`idp`] with explicit engine options.
pub fn idp_with(
    channel: &Channel,
    cost: &CostFamily,
    cells: usize,
    q0: &Assignment,
    max_iters: usize,
    mode: OrderMode,
    options: IdpOptions,
) -> Result<(Assignment, IdpState), IdpError> {
    if q0.cells() != cells {
        return Err(IdpError::CellMismatch {
            want: cells,
            got: q0.cells(),
        });
    }
    if q0.outputs() != channel.outputs() {
        return Err(IdpError::OutputMismatch {
            want: channel.outputs(),
            got: q0.outputs(),
        });
    }
    if max_iters == 0 {
        return Err(IdpError::NoIterations);
    }

    let mut master = ChaCha8Rng::seed_from_u64(match mode {
        OrderMode::Random { seed } => seed,
        OrderMode::Stable => 0,
    });
    let mut incumbent = q0.clone();
    let mut labeling = Labeling::identity(channel.outputs());
    let mut history = vec![q0.cost(channel, cost)];
    let mut qi_fallbacks = 0;
    let mut stop = StopReason::MaxIterations;

    for _ in 0..max_iters {
        let iter_mode = match mode {
            OrderMode::Stable => OrderMode::Stable,
            OrderMode::Random { .. } => OrderMode::Random {
                seed: master.next_u64(),
            },
        };
        let lab = relabel_for_incumbent(&incumbent, iter_mode);
        let relabelled = channel.permute_outputs(&lab);
        let view = SegmentCostView::new(&relabelled, cost);

        let mut engine = options.engine;
        if engine != Engine::Standard && options.check_qi {
            let qi = check_quadrangle_inequality(&view);
            if !qi.holds(options.qi_tol) {
                engine = Engine::Standard;
                qi_fallbacks += 1;
            }
        }
        let sol = design_sdq(&view, cells, engine, false)?;

        // The relabelled incumbent is itself a feasible sequential
        // quantizer, so the solve can only match or improve it.
        let prev = *history.last().expect("history starts non-empty");
        debug_assert!(
            sol.cost <= prev + IMPROVEMENT_TOL,
            "iteration regressed: {prev} -> {}",
            sol.cost
        );

        let seq = Assignment::from_boundaries(&sol.boundaries);
        let mut map = vec![0usize; channel.outputs()];
        for new in 0..channel.outputs() {
            map[lab.perm()[new]] = seq.cell_of(new);
        }
        incumbent = Assignment::new(map, cells).expect("solver output is surjective");
        labeling = lab;
        history.push(sol.cost);

        if matches!(mode, OrderMode::Stable) && prev - sol.cost < IMPROVEMENT_TOL {
            stop = StopReason::Converged;
            break;
        }
    }

    let state = IdpState {
        iterations: history.len() - 1,
        incumbent: incumbent.clone(),
        labeling,
        cost_history: history,
        stop,
        qi_fallbacks,
    };
    Ok((incumbent, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{greedy_combine, CombineStrategy};
    use crate::cost::LogBase;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Collinear binary-input channel whose given output order is scrambled:
    /// posteriors run (0.9, 0.1), (0.1, 0.9), (0.6, 0.4), so the middle
    /// posterior sits at index 2 and the best unordered grouping {y0, y2} is
    /// not contiguous.
    fn scrambled_collinear() -> Channel {
        let px = vec![0.5, 0.5];
        let pyx = vec![vec![0.45, 0.07, 0.48], vec![0.05, 0.63, 0.32]];
        Channel::new(px, pyx).unwrap()
    }

    fn all_two_cell_costs(ch: &Channel, fam: &CostFamily) -> Vec<(Vec<usize>, f64)> {
        // Every 2-cell partition of three outputs, as assignment maps.
        [[0, 0, 1], [0, 1, 0], [0, 1, 1]]
            .into_iter()
            .map(|m| {
                let a = Assignment::new(m.to_vec(), 2).unwrap();
                let c = a.cost(ch, fam);
                (m.to_vec(), c)
            })
            .collect()
    }

    #[test]
    fn relabel_stable_identity_for_sequential_assignments() {
        let q = Assignment::from_boundaries(&[0, 2, 5, 7]).relabel_by_first_appearance();
        let lab = relabel_for_incumbent(&q, OrderMode::Stable);
        assert!(lab.is_identity());
    }

    #[test]
    fn relabel_stable_orders_blocks_by_smallest_member() {
        // Cells numbered against index order: cell 0 = {3, 4}, cell 1 = {0, 2}, cell 2 = {1}.
        let q = Assignment::new(vec![1, 2, 1, 0, 0], 3).unwrap();
        let lab = relabel_for_incumbent(&q, OrderMode::Stable);
        assert_eq!(lab.perm(), &[0, 2, 1, 3, 4]);
    }

    #[test]
    fn relabel_worked_example_orders() {
        // Two cells {y0, y2} and {y1}: with the first block leading, the
        // only valid permutations are (0,2,1) and (2,0,1); with the second
        // block leading, (1,0,2) and (1,2,0). Random mode must produce
        // nothing else, and both within-block orders must show up.
        let q = Assignment::new(vec![0, 1, 0], 2).unwrap();
        let mut seen_first_block_leading = std::collections::HashSet::new();
        for seed in 0..64u64 {
            let lab = relabel_for_incumbent(&q, OrderMode::Random { seed });
            let p = lab.perm().to_vec();
            assert!(
                [[0, 2, 1], [2, 0, 1], [1, 0, 2], [1, 2, 0]]
                    .iter()
                    .any(|v| v == p.as_slice()),
                "unexpected permutation {p:?}"
            );
            if p[0] != 1 {
                seen_first_block_leading.insert(p);
            }
        }
        assert_eq!(seen_first_block_leading.len(), 2);
    }

    #[test]
    fn relabel_makes_blocks_contiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let n = 4 + trial % 6;
            let cells = 2 + trial % 3;
            let q = sampling::random_assignment(n, cells, &mut rng);
            for mode in [OrderMode::Stable, OrderMode::Random { seed: trial as u64 }] {
                let lab = relabel_for_incumbent(&q, mode);
                // Walk the new order; each cell must appear in one run.
                let cells_in_order: Vec<usize> =
                    lab.perm().iter().map(|&old| q.cell_of(old)).collect();
                let mut seen = vec![false; cells];
                let mut prev = usize::MAX;
                for &z in &cells_in_order {
                    if z != prev {
                        assert!(!seen[z], "cell {z} split across blocks: {cells_in_order:?}");
                        seen[z] = true;
                        prev = z;
                    }
                }
            }
        }
    }

    #[test]
    fn stable_converges_at_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = sampling::random_channel(3, 8, &mut rng);
        let fam = CostFamily::alpha_for(&ch, 1.0, LogBase::Two).unwrap();
        let view = SegmentCostView::new(&ch, &fam);
        let sol = design_sdq(&view, 3, Engine::Standard, false).unwrap();
        let q0 = Assignment::from_boundaries(&sol.boundaries);
        let (best, state) = idp(&ch, &fam, 3, &q0, 50, OrderMode::Stable).unwrap();
        assert_eq!(state.iterations, 1);
        assert_eq!(state.stop, StopReason::Converged);
        assert!(state.labeling.is_identity());
        assert_eq!(best.map(), q0.map());
        assert!((state.final_cost() - sol.cost).abs() < IMPROVEMENT_TOL);
    }

    #[test]
    fn random_mode_escapes_the_sequential_optimum() {
        let ch = scrambled_collinear();
        let fam = CostFamily::alpha_for(&ch, 1.0, LogBase::Two).unwrap();
        let costs = all_two_cell_costs(&ch, &fam);
        let (best_map, best_cost) = costs
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .unwrap();
        // The unordered optimum groups outputs 0 and 2, which no boundary
        // vector over the given order can express.
        assert_eq!(best_map, vec![0, 1, 0]);

        let view = SegmentCostView::new(&ch, &fam);
        let sdq = design_sdq(&view, 2, Engine::Standard, false).unwrap();
        assert!(sdq.cost > best_cost + 1e-6);

        let q0 = Assignment::from_boundaries(&sdq.boundaries);
        let (stuck, stable_state) = idp(&ch, &fam, 2, &q0, 50, OrderMode::Stable).unwrap();
        assert_eq!(stuck.relabel_by_first_appearance().map(), q0.map());
        assert_eq!(stable_state.stop, StopReason::Converged);

        let (best, state) =
            idp(&ch, &fam, 2, &q0, 30, OrderMode::Random { seed: 5 }).unwrap();
        assert_eq!(state.iterations, 30);
        assert_eq!(state.stop, StopReason::MaxIterations);
        assert_eq!(best.relabel_by_first_appearance().map(), best_map);
        assert!((state.final_cost() - best_cost).abs() < 1e-12);
        assert!(state.final_cost() < stable_state.final_cost() - 1e-6);
    }

    #[test]
    fn trajectories_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..10 {
            let ch = sampling::random_channel(4, 10, &mut rng);
            let fam = CostFamily::alpha_for(&ch, 2.0, LogBase::Two).unwrap();
            let q0 = sampling::random_assignment(10, 4, &mut rng);
            let (_, state) = idp(
                &ch,
                &fam,
                4,
                &q0,
                15,
                OrderMode::Random { seed: trial },
            )
            .unwrap();
            for pair in state.cost_history.windows(2) {
                assert!(pair[1] <= pair[0] + IMPROVEMENT_TOL, "{:?}", state.cost_history);
            }
        }
    }

    #[test]
    fn improves_on_greedy_initializer() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ch = sampling::random_channel(4, 12, &mut rng);
        let fam = CostFamily::alpha_for(&ch, 1.0, LogBase::Two).unwrap();
        let gc = greedy_combine(&ch, &fam, 3, CombineStrategy::Naive).unwrap();
        let c_gc = gc.assignment.cost(&ch, &fam);
        let (_, state) = idp(&ch, &fam, 3, &gc.assignment, 25, OrderMode::Random { seed: 1 }).unwrap();
        assert!((state.cost_history[0] - c_gc).abs() < 1e-12);
        assert!(state.final_cost() <= c_gc + IMPROVEMENT_TOL);
    }

    #[test]
    fn qi_fallback_matches_standard_run() {
        // Concave but outside the α family: the identity-ordered channel
        // violates the quadrangle inequality, so a checked fast engine must
        // fall back and reproduce the standard trajectory bit for bit.
        let px = vec![2.0 / 3.0, 1.0 / 3.0];
        let pyx = vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]];
        let ch = Channel::new(px, pyx).unwrap();
        let fam = CostFamily::custom(
            2,
            |p: &[f64]| -p.iter().map(|v| v * v).sum::<f64>().sqrt(),
            LogBase::Natural,
        );
        let q0 = Assignment::new(vec![0, 1, 1], 2).unwrap();
        let (_, plain) = idp(&ch, &fam, 2, &q0, 5, OrderMode::Stable).unwrap();
        let (_, checked) = idp_with(
            &ch,
            &fam,
            2,
            &q0,
            5,
            OrderMode::Stable,
            IdpOptions {
                engine: Engine::Smawk,
                check_qi: true,
                ..IdpOptions::default()
            },
        )
        .unwrap();
        assert!(checked.qi_fallbacks >= 1);
        assert_eq!(plain.cost_history.len(), checked.cost_history.len());
        for (a, b) in plain.cost_history.iter().zip(&checked.cost_history) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(plain.incumbent.map(), checked.incumbent.map());
    }

    #[test]
    fn rejects_bad_arguments() {
        let ch = sampling::bsc(0.2);
        let fam = CostFamily::alpha_for(&ch, 1.0, LogBase::Two).unwrap();
        let q0 = Assignment::new(vec![0, 1], 2).unwrap();
        assert!(matches!(
            idp(&ch, &fam, 3, &q0, 5, OrderMode::Stable),
            Err(IdpError::CellMismatch { .. })
        ));
        assert!(matches!(
            idp(&ch, &fam, 2, &q0, 0, OrderMode::Stable),
            Err(IdpError::NoIterations)
        ));
        let wide = Assignment::new(vec![0, 1, 1], 2).unwrap();
        assert!(matches!(
            idp(&ch, &fam, 2, &wide, 5, OrderMode::Stable),
            Err(IdpError::OutputMismatch { .. })
        ));
    }
}
