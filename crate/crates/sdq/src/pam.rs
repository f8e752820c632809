//! Discretization of pulse-amplitude modulation over an AWGN link into a
//! finite-output channel.
//!
//! The real line is cut into `n` cells by thresholds γ_0 = −∞ < γ_1 < … <
//! γ_{n−1} < γ_n = +∞, with the finite thresholds spaced uniformly between
//! `x_1 − k·σ` and `x_q + k·σ` (`k` = [`PamSpec::tail_sigmas`]). Transition
//! probabilities are normal-CDF differences. The resulting transition matrix
//! is likelihood-ratio ordered in the output index, i.e. it satisfies the
//! dominance condition, which certifies the quadrangle inequality for every
//! α cost.

use crate::channel::{Channel, ChannelError, PROB_SUM_TOL};
use thiserror::Error;

/// Default width, in noise standard deviations, of the guard band the finite
/// threshold grid extends beyond the outermost constellation points.
pub const DEFAULT_TAIL_SIGMAS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PamError {
    #[error("need at least 2 amplitude levels, got {0}")]
    TooFewLevels(usize),
    #[error("amplitude levels must be strictly increasing at position {0}")]
    LevelsNotIncreasing(usize),
    #[error("noise sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("need at least 3 output cells so the interior grid is non-empty, got {0}")]
    TooFewCells(usize),
    #[error("tail width must be positive, got {0}")]
    BadTail(f64),
    #[error("discretized channel is invalid: {0}")]
    Channel(#[from] ChannelError),
}

/// Parameters of a PAM/AWGN discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct PamSpec {
    /// Amplitude levels x_1 < … < x_q.
    pub levels: Vec<f64>,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Number of output cells `n ≥ 3`.
    pub cells: usize,
    /// Guard band width in sigmas; the finite grid spans
    /// `[x_1 − tail_sigmas·σ, x_q + tail_sigmas·σ]`.
    pub tail_sigmas: f64,
}

impl PamSpec {
    /// Uniform levels x_i = (2i − q − 1)·spacing/2 for i = 1..q, i.e.
    /// `spacing = 2` gives the grid −(q−1), −(q−3), …, q−1.
    pub fn uniform(q: usize, spacing: f64, sigma: f64, cells: usize) -> Self {
        let levels = (1..=q)
            .map(|i| (2.0 * i as f64 - q as f64 - 1.0) * spacing / 2.0)
            .collect();
        PamSpec {
            levels,
            sigma,
            cells,
            tail_sigmas: DEFAULT_TAIL_SIGMAS,
        }
    }
}

/// A discretized PAM channel plus the grid that produced it.
#[derive(Debug, Clone)]
pub struct PamDiscretization {
    pub channel: Channel,
    /// Finite thresholds γ_1 … γ_{n−1}.
    pub thresholds: Vec<f64>,
    /// Rows whose raw CDF-difference sum deviated from 1 by more than the
    /// validation tolerance and were explicitly renormalized.
    pub renormalized_rows: Vec<usize>,
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Discretize a PAM constellation over AWGN; uniform input prior.
pub fn discretize_pam(spec: &PamSpec) -> Result<PamDiscretization, PamError> {
    let q = spec.levels.len();
    if q < 2 {
        return Err(PamError::TooFewLevels(q));
    }
    if let Some(k) = spec.levels.windows(2).position(|w| w[1] <= w[0]) {
        return Err(PamError::LevelsNotIncreasing(k + 1));
    }
    if !(spec.sigma > 0.0) {
        return Err(PamError::BadSigma(spec.sigma));
    }
    if spec.cells < 3 {
        return Err(PamError::TooFewCells(spec.cells));
    }
    if !(spec.tail_sigmas > 0.0) {
        return Err(PamError::BadTail(spec.tail_sigmas));
    }

    let n = spec.cells;
    let lo = spec.levels[0] - spec.tail_sigmas * spec.sigma;
    let hi = spec.levels[q - 1] + spec.tail_sigmas * spec.sigma;
    let thresholds: Vec<f64> = (0..n - 1)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 2) as f64)
        .collect();

    let mut renormalized_rows = Vec::new();
    let mut pyx = Vec::with_capacity(q);
    for (i, &x) in spec.levels.iter().enumerate() {
        // Cell masses as CDF differences; the open tails use Φ(±∞) = 0, 1.
        let mut row = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &g in &thresholds {
            let c = normal_cdf((g - x) / spec.sigma);
            row.push(c - prev);
            prev = c;
        }
        row.push(1.0 - prev);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            for p in &mut row {
                *p /= sum;
            }
            renormalized_rows.push(i);
        }
        pyx.push(row);
    }

    let px = vec![1.0 / q as f64; q];
    let channel = Channel::new(px, pyx)?;
    Ok(PamDiscretization {
        channel,
        thresholds,
        renormalized_rows,
    })
}
