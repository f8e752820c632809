//! Validated channel model and joint prefix sums.
//!
//! A discrete memoryless channel is a strictly positive input prior `px`
//! together with a row-stochastic transition matrix `pyx` (one row per input,
//! one column per output). Every output must carry positive marginal
//! probability; dead outputs would make posteriors undefined and are rejected
//! up front rather than special-cased downstream.

use thiserror::Error;

/// Absolute tolerance for probability-vector sums.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel needs at least 2 inputs, got {0}")]
    TooFewInputs(usize),
    #[error("channel needs at least 2 outputs, got {0}")]
    TooFewOutputs(usize),
    #[error("input prior must be strictly positive, but px[{index}] = {value}")]
    NonPositivePrior { index: usize, value: f64 },
    #[error("input prior sums to {sum}, expected 1 within {PROB_SUM_TOL}")]
    PriorSum { sum: f64 },
    #[error("transition row {input} has {got} entries, expected {expected}")]
    RaggedRow {
        input: usize,
        got: usize,
        expected: usize,
    },
    #[error("transition probability out of [0, 1]: pyx[{input}][{output}] = {value}")]
    TransitionRange {
        input: usize,
        output: usize,
        value: f64,
    },
    #[error("transition row {input} sums to {sum}, expected 1 within {PROB_SUM_TOL}")]
    RowSum { input: usize, sum: f64 },
    #[error("output {output} has zero probability under the prior")]
    DeadOutput { output: usize },
}

/// Validate a prior/transition pair without constructing a [`Channel`].
///
/// Reports the first violated constraint, scanning the prior first, then the
/// transition matrix row by row, then the output marginals.
pub fn validate(px: &[f64], pyx: &[Vec<f64>]) -> Result<(), ChannelError> {
    let q = px.len();
    if q < 2 {
        return Err(ChannelError::TooFewInputs(q));
    }
    if pyx.len() != q {
        return Err(ChannelError::RaggedRow {
            input: pyx.len().min(q),
            got: pyx.len(),
            expected: q,
        });
    }
    let n = pyx[0].len();
    if n < 2 {
        return Err(ChannelError::TooFewOutputs(n));
    }
    for (i, &p) in px.iter().enumerate() {
        if !(p > 0.0) {
            return Err(ChannelError::NonPositivePrior { index: i, value: p });
        }
    }
    let sum: f64 = px.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(ChannelError::PriorSum { sum });
    }
    for (i, row) in pyx.iter().enumerate() {
        if row.len() != n {
            return Err(ChannelError::RaggedRow {
                input: i,
                got: row.len(),
                expected: n,
            });
        }
        for (j, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(ChannelError::TransitionRange {
                    input: i,
                    output: j,
                    value: p,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ChannelError::RowSum { input: i, sum });
        }
    }
    for j in 0..n {
        let py: f64 = (0..q).map(|i| px[i] * pyx[i][j]).sum();
        if !(py > 0.0) {
            return Err(ChannelError::DeadOutput { output: j });
        }
    }
    Ok(())
}

/// A discrete memoryless channel with a fixed input prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    px: Vec<f64>,
    pyx: Vec<Vec<f64>>,
    py: Vec<f64>,
}

impl Channel {
    pub fn new(px: Vec<f64>, pyx: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        validate(&px, &pyx)?;
        let q = px.len();
        let n = pyx[0].len();
        let py: Vec<f64> = (0..n)
            .map(|j| (0..q).map(|i| px[i] * pyx[i][j]).sum())
            .collect();
        Ok(Channel { px, pyx, py })
    }

    /// Input alphabet size `q`.
    pub fn inputs(&self) -> usize {
        self.px.len()
    }

    /// Output alphabet size `n`.
    pub fn outputs(&self) -> usize {
        self.pyx[0].len()
    }

    pub fn px(&self) -> &[f64] {
        &self.px
    }

    /// Transition rows, one per input.
    pub fn pyx(&self) -> &[Vec<f64>] {
        &self.pyx
    }

    /// Output marginal, strictly positive by construction.
    pub fn py(&self) -> &[f64] {
        &self.py
    }

    /// Joint probability P(x_i, y_j).
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        self.px[i] * self.pyx[i][j]
    }

    /// Posterior δ_j = P(X = · | Y = y_j).
    pub fn posterior(&self, j: usize) -> Vec<f64> {
        (0..self.inputs())
            .map(|i| self.joint(i, j) / self.py[j])
            .collect()
    }

    /// All posteriors, one per output.
    pub fn posteriors(&self) -> Vec<Vec<f64>> {
        (0..self.outputs()).map(|j| self.posterior(j)).collect()
    }

    /// Per-input prefix sums of the joint distribution; see [`JointPrefix`].
    pub fn joint_prefix(&self) -> JointPrefix {
        let q = self.inputs();
        let n = self.outputs();
        let mut s = vec![vec![0.0; n + 1]; q];
        for i in 0..q {
            for j in 0..n {
                s[i][j + 1] = s[i][j] + self.joint(i, j);
            }
        }
        JointPrefix { s }
    }

    /// Reorder outputs: new output `k` is old output `labeling.perm()[k]`.
    pub fn permute_outputs(&self, labeling: &Labeling) -> Channel {
        assert_eq!(labeling.len(), self.outputs(), "labeling length must be n");
        let pyx = self
            .pyx
            .iter()
            .map(|row| labeling.perm().iter().map(|&old| row[old]).collect())
            .collect();
        let py = labeling.perm().iter().map(|&old| self.py[old]).collect();
        Channel {
            px: self.px.clone(),
            pyx,
            py,
        }
    }

    /// Reorder inputs: new input `k` is old input `labeling.perm()[k]`.
    pub fn permute_inputs(&self, labeling: &Labeling) -> Channel {
        assert_eq!(labeling.len(), self.inputs(), "labeling length must be q");
        let px: Vec<f64> = labeling.perm().iter().map(|&old| self.px[old]).collect();
        let pyx: Vec<Vec<f64>> = labeling
            .perm()
            .iter()
            .map(|&old| self.pyx[old].clone())
            .collect();
        Channel {
            px,
            pyx,
            py: self.py.clone(),
        }
    }
}

/// Prefix sums `s[i][k] = Σ_{j<k} P(x_i, y_j)`, with `s[i][0] = 0`.
///
/// Any contiguous run of outputs then yields its aggregated joint column in
/// O(q) by differencing, which is what keeps the segment-cost evaluations of
/// the dynamic programs cheap.
#[derive(Debug, Clone)]
pub struct JointPrefix {
    s: Vec<Vec<f64>>,
}

impl JointPrefix {
    /// Aggregated joint mass of input `i` over outputs `l..=r` (1-based).
    pub fn segment(&self, i: usize, l: usize, r: usize) -> f64 {
        debug_assert!(1 <= l && l <= r && r < self.s[i].len());
        self.s[i][r] - self.s[i][l - 1]
    }

    pub fn raw(&self) -> &[Vec<f64>] {
        &self.s
    }
}

/// A permutation of `[0, len)` mapping new indices to old ones:
/// `perm()[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    perm: Vec<usize>,
}

impl Labeling {
    /// Build from a permutation vector; panics if `perm` is not a permutation.
    pub fn new(perm: Vec<usize>) -> Self {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            assert!(p < perm.len() && !seen[p], "not a permutation: {perm:?}");
            seen[p] = true;
        }
        Labeling { perm }
    }

    pub fn identity(len: usize) -> Self {
        Labeling {
            perm: (0..len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(new, &old)| new == old)
    }

    /// `perm()[new] = old`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Inverse map: `inverse()[old] = new`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            inv[old] = new;
        }
        inv
    }
}
