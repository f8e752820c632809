//! Posterior geometry: collinearity, sequential orderings, and the pairwise
//! likelihood-ratio dominance condition.
//!
//! The posteriors δ_1..δ_N of a channel live on the input simplex. Two
//! structural properties decide when the fast design paths are exact:
//!
//! * **Sequential collinearity** — the posteriors lie on one line segment and
//!   their positions along it are monotone in the output index. Then the best
//!   sequential quantizer is best among all deterministic quantizers, and the
//!   segment costs satisfy the quadrangle inequality for every concave cost.
//! * **Dominance** — every pair of transition rows is likelihood-ratio
//!   ordered. Then the quadrangle inequality holds for the whole α family
//!   even when the posteriors are not collinear.

use crate::channel::{Channel, Labeling};

/// Default relative L∞ tolerance for collinearity tests. Posterior entries
/// live in [0, 1], so deviations are measured on that unit scale.
pub const COLLINEARITY_TOL: f64 = 1e-9;

/// Default absolute slack for dominance cross-product comparisons.
pub const DOMINANCE_TOL: f64 = 1e-12;

/// Line fit of the posteriors δ_1..δ_N.
///
/// When `collinear` holds, `delta[j] ≈ delta[0] + t[j] · direction` with the
/// parameters rescaled so the farthest posterior from δ_1 sits at t = 1.
/// `sequential` additionally requires 0 = t_1 ≤ t_2 ≤ … ≤ t_N = 1. A channel
/// whose posteriors all coincide is flagged `degenerate` (and is trivially
/// collinear and sequential with all t = 0).
#[derive(Debug, Clone)]
pub struct PosteriorGeometry {
    pub delta: Vec<Vec<f64>>,
    pub collinear: bool,
    pub sequential: bool,
    pub degenerate: bool,
    /// Projection parameter per output; meaningful when `collinear`.
    pub t: Vec<f64>,
    /// Line direction δ_far − δ_1; the zero vector when `degenerate`.
    pub direction: Vec<f64>,
}

/// Fit a line through the posteriors and classify the channel's geometry.
///
/// The fit anchors at δ_1, takes the first posterior that differs from it as
/// the direction, projects every posterior onto that line (least squares),
/// and then rescales so the farthest projection maps to 1. `tol` bounds the
/// L∞ residual allowed per posterior and the slack in the monotonicity and
/// endpoint tests.
pub fn posterior_geometry(channel: &Channel, tol: f64) -> PosteriorGeometry {
    let n = channel.outputs();
    let q = channel.inputs();
    let delta = channel.posteriors();

    let linf = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };

    // Anchor direction: first posterior that differs from δ_1.
    let anchor = (1..n).find(|&j| linf(&delta[j], &delta[0]) > tol);
    let Some(anchor) = anchor else {
        // All posteriors coincide.
        return PosteriorGeometry {
            delta,
            collinear: true,
            sequential: true,
            degenerate: true,
            t: vec![0.0; n],
            direction: vec![0.0; q],
        };
    };

    let fit_dir: Vec<f64> = (0..q).map(|i| delta[anchor][i] - delta[0][i]).collect();
    let dir_norm2: f64 = fit_dir.iter().map(|d| d * d).sum();

    // Least-squares projection parameter of each posterior onto the fit line.
    let mut t: Vec<f64> = delta
        .iter()
        .map(|dj| {
            let dot: f64 = (0..q).map(|i| (dj[i] - delta[0][i]) * fit_dir[i]).sum();
            dot / dir_norm2
        })
        .collect();

    let collinear = delta.iter().enumerate().all(|(j, dj)| {
        let residual = (0..q)
            .map(|i| (dj[i] - (delta[0][i] + t[j] * fit_dir[i])).abs())
            .fold(0.0, f64::max);
        residual <= tol
    });

    // Rescale so the farthest projection sits at 1 (t[anchor] = 1 before
    // rescaling, so the maximum is ≥ 1 and the division is safe).
    let t_max = t.iter().copied().fold(f64::MIN, f64::max);
    for tj in &mut t {
        *tj /= t_max;
    }
    let direction: Vec<f64> = fit_dir.iter().map(|d| d * t_max).collect();

    let monotone = t.windows(2).all(|w| w[1] >= w[0] - tol);
    let sequential = collinear && monotone && (t[n - 1] - 1.0).abs() <= tol;

    PosteriorGeometry {
        delta,
        collinear,
        sequential,
        degenerate: false,
        t,
        direction,
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("posteriors are not collinear; no output order makes them sequential")]
    NotCollinear,
}

/// Sort outputs along the fitted posterior line so a collinear channel
/// becomes sequentially collinear. The sort is stable, so outputs with equal
/// projection parameters keep their original relative order.
///
/// Returns the reordered channel and the labeling (new index ↦ old index).
pub fn relabel_outputs_sequential(
    channel: &Channel,
    tol: f64,
) -> Result<(Channel, Labeling), GeometryError> {
    let geo = posterior_geometry(channel, tol);
    if !geo.collinear {
        return Err(GeometryError::NotCollinear);
    }
    let mut order: Vec<usize> = (0..channel.outputs()).collect();
    order.sort_by(|&a, &b| geo.t[a].partial_cmp(&geo.t[b]).expect("t is finite"));
    let labeling = Labeling::new(order);
    Ok((channel.permute_outputs(&labeling), labeling))
}

/// Report of a dominance scan; `first_violation` holds `(i, i', j, j')` with
/// `pyx[i][j]·pyx[i'][j'] < pyx[i][j']·pyx[i'][j] − tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub holds: bool,
    pub first_violation: Option<(usize, usize, usize, usize)>,
}

/// Check the adjacent form of the dominance condition: for every consecutive
/// input pair and consecutive output pair,
/// `pyx[i][j]·pyx[i+1][j+1] ≥ pyx[i][j+1]·pyx[i+1][j] − tol`.
///
/// For strictly positive matrices the adjacent form implies the full pairwise
/// form; with zero entries use [`check_dominance_strict`] to certify.
pub fn check_dominance(channel: &Channel, tol: f64) -> DominanceReport {
    let pyx = channel.pyx();
    for i in 0..channel.inputs() - 1 {
        for j in 0..channel.outputs() - 1 {
            let lhs = pyx[i][j] * pyx[i + 1][j + 1];
            let rhs = pyx[i][j + 1] * pyx[i + 1][j];
            if lhs < rhs - tol {
                return DominanceReport {
                    holds: false,
                    first_violation: Some((i, i + 1, j, j + 1)),
                };
            }
        }
    }
    DominanceReport {
        holds: true,
        first_violation: None,
    }
}

/// Check the full pairwise dominance condition over all input pairs
/// `i < i'` and output pairs `j < j'`. O(q²·n²).
pub fn check_dominance_strict(channel: &Channel, tol: f64) -> DominanceReport {
    let pyx = channel.pyx();
    for i in 0..channel.inputs() {
        for ip in i + 1..channel.inputs() {
            for j in 0..channel.outputs() {
                for jp in j + 1..channel.outputs() {
                    let lhs = pyx[i][j] * pyx[ip][jp];
                    let rhs = pyx[i][jp] * pyx[ip][j];
                    if lhs < rhs - tol {
                        return DominanceReport {
                            holds: false,
                            first_violation: Some((i, ip, j, jp)),
                        };
                    }
                }
            }
        }
    }
    DominanceReport {
        holds: true,
        first_violation: None,
    }
}

/// Whether transition row `a` dominates row `b`: `a[j]·b[j'] ≥ a[j']·b[j]`
/// for all output pairs `j < j'` (likelihood-ratio ordering).
fn row_dominates(a: &[f64], b: &[f64], tol: f64) -> bool {
    for j in 0..a.len() {
        for jp in j + 1..a.len() {
            if a[j] * b[jp] < a[jp] * b[j] - tol {
                return false;
            }
        }
    }
    true
}

/// Try to reorder inputs so the dominance condition holds.
///
/// For collinear posteriors the order is the one that provably works when any
/// does: sort inputs by `d_i / P(x_i | y_1)` ascending, where `d` is the
/// posterior line direction, placing inputs with `P(x_i | y_1) = 0` last
/// (their `d_i` is necessarily positive, i.e. the ratio is +∞). Otherwise the
/// inputs are ordered greedily by the pairwise dominance relation.
///
/// Returns the reordered channel, the labeling (new ↦ old), and whether the
/// reordered channel actually satisfies full pairwise dominance — `false`
/// means no ordering was found, not merely that the heuristic failed, in the
/// collinear case; in the general case it means the relation is not totally
/// orderable by the greedy pass.
pub fn relabel_inputs_dominant(channel: &Channel, tol: f64) -> (Channel, Labeling, bool) {
    let q = channel.inputs();
    let geo = posterior_geometry(channel, COLLINEARITY_TOL);

    let order: Vec<usize> = if geo.collinear && !geo.degenerate {
        // Sort by d_i / δ_1(i) ascending via cross-multiplication; zero
        // denominators sort last.
        let d = &geo.direction;
        let p1 = &geo.delta[0];
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| {
            // a before b iff d_a·p1_b ≤ d_b·p1_a.
            let lhs = d[a] * p1[b];
            let rhs = d[b] * p1[a];
            lhs.partial_cmp(&rhs).expect("finite cross products")
        });
        order
    } else {
        // Greedy topological order: repeatedly emit the smallest-index row
        // that dominates every remaining row.
        let pyx = channel.pyx();
        let mut remaining: Vec<usize> = (0..q).collect();
        let mut order = Vec::with_capacity(q);
        while !remaining.is_empty() {
            let pick = remaining.iter().position(|&i| {
                remaining
                    .iter()
                    .all(|&j| j == i || row_dominates(&pyx[i], &pyx[j], tol))
            });
            match pick {
                Some(pos) => order.push(remaining.remove(pos)),
                None => {
                    // Not totally orderable; emit the rest in index order so
                    // the caller still gets a deterministic permutation.
                    order.extend(remaining.drain(..));
                }
            }
        }
        order
    };

    let labeling = Labeling::new(order);
    let permuted = channel.permute_inputs(&labeling);
    let satisfied = check_dominance_strict(&permuted, tol).holds;
    (permuted, labeling, satisfied)
}
