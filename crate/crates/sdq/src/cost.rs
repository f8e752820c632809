//! Concave cost families over posteriors, segment costs, and α-mutual
//! information.
//!
//! A quantizer `Q` is scored by `C(Q) = Σ_z P(z) · φ(P(X·|z))` with `φ`
//! concave on the input simplex. The α family
//!
//! ```text
//! φ_1(u) = −Σ_i u_i log u_i                     (Shannon)
//! φ_α(u) = +(Σ_i px_i^{1−α} u_i^α)^{1/α}        α ∈ (0, 1)
//! φ_α(u) = −(Σ_i px_i^{1−α} u_i^α)^{1/α}        α ∈ (1, ∞)
//! φ_∞(u) = −max_i u_i / px_i
//! ```
//!
//! is the one whose minimization maximizes α-mutual information; the exact
//! correspondence is [`cost_to_alpha_mi`]. Costs for α=1 are reported in the
//! configured logarithm base; the other cases involve no logarithm until the
//! final transform.

use crate::assignment::Assignment;
use crate::channel::{Channel, JointPrefix};
use thiserror::Error;

/// α values this close to 1 are routed to the Shannon path; the general-α
/// formulas lose all precision in `α/(α−1)` there.
pub const ALPHA_ONE_TOL: f64 = 1e-9;

/// Entries of a distribution may dip this far below zero before being
/// rejected (accumulated rounding from prefix-sum differences).
pub const NEG_ENTRY_TOL: f64 = -1e-15;

/// Absolute tolerance on the total mass of a joint passed to [`alpha_mi`].
pub const JOINT_MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("alpha must be positive (or infinity), got {0}")]
    BadAlpha(f64),
    #[error("prior entries must be strictly positive, got {value} at {index}")]
    BadPrior { index: usize, value: f64 },
    #[error("joint matrix must be non-empty and rectangular")]
    BadJointShape,
    #[error("joint entry at ({row}, {col}) is negative: {value}")]
    NegativeJointEntry { row: usize, col: usize, value: f64 },
    #[error("joint mass is {mass}, expected 1 within {JOINT_MASS_TOL}")]
    JointMass { mass: f64 },
    #[error("transform undefined: log argument {arg} is not positive (alpha = {alpha})")]
    TransformDomain { alpha: f64, arg: f64 },
}

/// Logarithm base for user-facing information quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    /// Bits.
    Two,
    /// Nats.
    Natural,
}

impl LogBase {
    /// ln(base); information in nats divided by this lands in `self`.
    pub fn ln(self) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::Natural => 1.0,
        }
    }

    pub fn log(self, x: f64) -> f64 {
        x.ln() / self.ln()
    }
}

enum Kind {
    /// α = 1: entropy of the posterior, in `base`.
    Shannon,
    /// α = ∞: −max_i u_i / px_i.
    MaxRatio,
    /// Finite α ≠ 1: ±(Σ px^{1−α} u^α)^{1/α}, positive branch for α < 1.
    Power { alpha: f64 },
    /// User-supplied concave φ; trusted, with randomized midpoint-concavity
    /// probes under debug assertions.
    Custom(Box<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// A concave cost functional φ on the `dim`-input simplex, together with the
/// logarithm base used for entropic values.
pub struct CostFamily {
    kind: Kind,
    /// Input prior the α family references; uniform placeholder for custom φ.
    px: Vec<f64>,
    base: LogBase,
    alpha: f64,
}

impl std::fmt::Debug for CostFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.kind {
            Kind::Shannon => "shannon".to_string(),
            Kind::MaxRatio => "max-ratio".to_string(),
            Kind::Power { alpha } => format!("power(α={alpha})"),
            Kind::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("CostFamily")
            .field("kind", &kind)
            .field("dim", &self.px.len())
            .field("base", &self.base)
            .finish()
    }
}

impl CostFamily {
    /// The α-family cost for a channel prior. `alpha` may be
    /// `f64::INFINITY`; values within [`ALPHA_ONE_TOL`] of 1 use the Shannon
    /// path.
    pub fn alpha(alpha: f64, px: &[f64], base: LogBase) -> Result<Self, CostError> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(CostError::BadAlpha(alpha));
        }
        for (i, &p) in px.iter().enumerate() {
            if !(p > 0.0) {
                return Err(CostError::BadPrior { index: i, value: p });
            }
        }
        let kind = if (alpha - 1.0).abs() <= ALPHA_ONE_TOL {
            Kind::Shannon
        } else if alpha.is_infinite() {
            Kind::MaxRatio
        } else {
            Kind::Power { alpha }
        };
        let alpha = match kind {
            Kind::Shannon => 1.0,
            _ => alpha,
        };
        Ok(CostFamily {
            kind,
            px: px.to_vec(),
            base,
            alpha,
        })
    }

    /// Shorthand for [`CostFamily::alpha`] with the channel's own prior.
    pub fn alpha_for(channel: &Channel, alpha: f64, base: LogBase) -> Result<Self, CostError> {
        Self::alpha(alpha, channel.px(), base)
    }

    /// Wrap a user-supplied concave φ on the `dim`-simplex. Concavity is
    /// trusted; under debug assertions, randomized midpoint probes guard
    /// against obvious mistakes. The dynamic programs remain optimal over
    /// sequential quantizers for any φ, but every structural guarantee
    /// (quadrangle inequality, dominance implications) needs concavity.
    pub fn custom(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        base: LogBase,
    ) -> Self {
        let family = CostFamily {
            kind: Kind::Custom(Box::new(f)),
            px: vec![1.0 / dim as f64; dim],
            base,
            alpha: f64::NAN,
        };
        #[cfg(debug_assertions)]
        family.probe_midpoint_concavity();
        family
    }

    #[cfg(debug_assertions)]
    fn probe_midpoint_concavity(&self) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5d_c0_7e);
        let dim = self.px.len();
        for _ in 0..32 {
            let u = crate::sampling::random_simplex(dim, &mut rng);
            let v = crate::sampling::random_simplex(dim, &mut rng);
            let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
            debug_assert!(
                self.phi(&mid) >= 0.5 * (self.phi(&u) + self.phi(&v)) - 1e-12,
                "custom cost functional fails midpoint concavity"
            );
        }
    }

    /// Dimension of the simplex φ is defined on (the input alphabet size).
    pub fn dim(&self) -> usize {
        self.px.len()
    }

    pub fn base(&self) -> LogBase {
        self.base
    }

    /// The α parameter; `NaN` for custom functionals.
    pub fn alpha_value(&self) -> f64 {
        self.alpha
    }

    /// Evaluate φ on a distribution over the inputs.
    ///
    /// Panics if `dist` has the wrong dimension or an entry below
    /// [`NEG_ENTRY_TOL`]; entries in `[NEG_ENTRY_TOL, 0)` are treated as 0.
    pub fn phi(&self, dist: &[f64]) -> f64 {
        assert_eq!(dist.len(), self.dim(), "distribution has wrong dimension");
        assert!(
            dist.iter().all(|&u| u >= NEG_ENTRY_TOL),
            "distribution entry below {NEG_ENTRY_TOL}: {dist:?}"
        );
        match &self.kind {
            Kind::Shannon => {
                let nats: f64 = dist
                    .iter()
                    .filter(|&&u| u > 0.0)
                    .map(|&u| -u * u.ln())
                    .sum();
                nats / self.base.ln()
            }
            Kind::MaxRatio => {
                let m = dist
                    .iter()
                    .zip(&self.px)
                    .map(|(&u, &p)| u.max(0.0) / p)
                    .fold(0.0, f64::max);
                -m
            }
            Kind::Power { alpha } => {
                // Terms px^{1−α}·u^α evaluated in log space for stability.
                let s: f64 = dist
                    .iter()
                    .zip(&self.px)
                    .filter(|(&u, _)| u > 0.0)
                    .map(|(&u, &p)| ((1.0 - alpha) * p.ln() + alpha * u.ln()).exp())
                    .sum();
                let root = s.powf(alpha.recip());
                if *alpha < 1.0 {
                    root
                } else {
                    -root
                }
            }
            Kind::Custom(f) => f(dist),
        }
    }
}

/// Shannon entropy of a distribution in `base`; 0·log 0 = 0.
pub fn entropy(dist: &[f64], base: LogBase) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>()
        / base.ln()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("boundary list must start at 0, got {0:?}")]
    FirstNotZero(Vec<usize>),
    #[error("boundary list must end at the output count {n}, got {last}")]
    LastNotN { last: usize, n: usize },
    #[error("boundaries must be strictly increasing at position {0}")]
    NotIncreasing(usize),
    #[error("boundary list needs at least two entries")]
    TooShort,
}

/// Validate a boundary list 0 = λ_0 < λ_1 < … < λ_M = n.
pub fn validate_boundaries(boundaries: &[usize], n: usize) -> Result<(), BoundaryError> {
    if boundaries.len() < 2 {
        return Err(BoundaryError::TooShort);
    }
    if boundaries[0] != 0 {
        return Err(BoundaryError::FirstNotZero(boundaries.to_vec()));
    }
    if *boundaries.last().unwrap() != n {
        return Err(BoundaryError::LastNotN {
            last: *boundaries.last().unwrap(),
            n,
        });
    }
    if let Some(k) = boundaries.windows(2).position(|w| w[1] <= w[0]) {
        return Err(BoundaryError::NotIncreasing(k + 1));
    }
    Ok(())
}

/// Segment-cost evaluator `w(l, r)` over a channel and cost family.
///
/// `w(l, r)` is the cost contribution of merging outputs `l..=r` (1-based)
/// into one cell: `a·φ(b/a)` where `a` is the cell's output mass and `b` its
/// aggregated joint column, both obtained in O(q) from prefix sums. Values
/// are computed online by default; [`SegmentCostView::with_table`]
/// precomputes all O(n²) pairs for repeated-query workloads (the table is
/// filled by the same code path, so cached and online values agree bitwise).
pub struct SegmentCostView<'a> {
    channel: &'a Channel,
    cost: &'a CostFamily,
    prefix: JointPrefix,
    table: Option<Vec<f64>>,
}

impl<'a> SegmentCostView<'a> {
    pub fn new(channel: &'a Channel, cost: &'a CostFamily) -> Self {
        assert_eq!(
            cost.dim(),
            channel.inputs(),
            "cost family dimension must match the channel input count"
        );
        SegmentCostView {
            channel,
            cost,
            prefix: channel.joint_prefix(),
            table: None,
        }
    }

    /// Like [`SegmentCostView::new`] but with every `w(l, r)` precomputed
    /// (O(n²) memory, O(q·n²) time).
    pub fn with_table(channel: &'a Channel, cost: &'a CostFamily) -> Self {
        let mut view = Self::new(channel, cost);
        let n = channel.outputs();
        let mut table = vec![0.0; n * n];
        for l in 1..=n {
            for r in l..=n {
                table[(l - 1) * n + (r - 1)] = view.compute(l, r);
            }
        }
        view.table = Some(table);
        view
    }

    pub fn channel(&self) -> &Channel {
        self.channel
    }

    pub fn cost_family(&self) -> &CostFamily {
        self.cost
    }

    pub fn outputs(&self) -> usize {
        self.channel.outputs()
    }

    fn compute(&self, l: usize, r: usize) -> f64 {
        let q = self.channel.inputs();
        let mut joint = vec![0.0; q];
        let mut mass = 0.0;
        for (i, ji) in joint.iter_mut().enumerate() {
            *ji = self.prefix.segment(i, l, r);
            mass += *ji;
        }
        for ji in &mut joint {
            *ji /= mass;
        }
        mass * self.cost.phi(&joint)
    }

    /// Segment cost `w(l, r)` for 1 ≤ l ≤ r ≤ n.
    pub fn w(&self, l: usize, r: usize) -> f64 {
        debug_assert!(1 <= l && l <= r && r <= self.outputs());
        match &self.table {
            Some(t) => t[(l - 1) * self.outputs() + (r - 1)],
            None => self.compute(l, r),
        }
    }

    /// Total cost of the sequential quantizer with the given boundaries.
    pub fn sdq_cost(&self, boundaries: &[usize]) -> Result<f64, BoundaryError> {
        validate_boundaries(boundaries, self.outputs())?;
        Ok(boundaries
            .windows(2)
            .map(|w| self.w(w[0] + 1, w[1]))
            .sum())
    }
}

/// α-mutual information between `X` and `Z` from their joint distribution
/// (rows indexed by `x`, columns by `z`), in `base`.
pub fn alpha_mi(joint: &[Vec<f64>], alpha: f64, base: LogBase) -> Result<f64, CostError> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(CostError::BadAlpha(alpha));
    }
    if joint.is_empty() || joint[0].is_empty() {
        return Err(CostError::BadJointShape);
    }
    let cols = joint[0].len();
    let mut mass = 0.0;
    for (r, row) in joint.iter().enumerate() {
        if row.len() != cols {
            return Err(CostError::BadJointShape);
        }
        for (c, &v) in row.iter().enumerate() {
            if v < NEG_ENTRY_TOL {
                return Err(CostError::NegativeJointEntry {
                    row: r,
                    col: c,
                    value: v,
                });
            }
            mass += v.max(0.0);
        }
    }
    if (mass - 1.0).abs() > JOINT_MASS_TOL {
        return Err(CostError::JointMass { mass });
    }

    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let nq = joint.len();

    if (alpha - 1.0).abs() <= ALPHA_ONE_TOL {
        let pz: Vec<f64> = (0..cols).map(|z| joint.iter().map(|r| r[z]).sum()).collect();
        let nats: f64 = joint
            .iter()
            .enumerate()
            .flat_map(|(x, row)| {
                row.iter().enumerate().filter(|(_, &v)| v > 0.0).map(
                    move |(z, &v)| (x, z, v),
                )
            })
            .map(|(x, z, v)| v * (v / (px[x] * pz[z])).ln())
            .sum();
        return Ok(nats / base.ln());
    }

    if alpha.is_infinite() {
        let total: f64 = (0..cols)
            .map(|z| {
                (0..nq)
                    .filter(|&x| px[x] > 0.0)
                    .map(|x| joint[x][z] / px[x])
                    .fold(0.0, f64::max)
            })
            .sum();
        return Ok(base.log(total));
    }

    // Finite α ≠ 1: (α/(α−1)) · log Σ_z (Σ_x px^{1−α}·pxz^α)^{1/α}.
    let total: f64 = (0..cols)
        .map(|z| {
            let inner: f64 = (0..nq)
                .filter(|&x| joint[x][z] > 0.0)
                .map(|x| ((1.0 - alpha) * px[x].ln() + alpha * joint[x][z].max(0.0).ln()).exp())
                .sum();
            inner.powf(alpha.recip())
        })
        .sum();
    Ok(alpha / (alpha - 1.0) * base.log(total))
}

/// Convert a quantizer's α cost into the α-mutual information it certifies:
///
/// ```text
/// α = 1:        I = H(X) − C
/// α ∈ (0, 1):   I = (α/(α−1)) · log C          (C > 0)
/// α ∈ (1, ∞):   I = (α/(α−1)) · log(−C)        (C < 0)
/// α = ∞:        I = log(−C)                    (C < 0)
/// ```
///
/// `h_x` is H(X) in `base` and is only used for α = 1.
pub fn cost_to_alpha_mi(
    cost: f64,
    alpha: f64,
    h_x: f64,
    base: LogBase,
) -> Result<f64, CostError> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(CostError::BadAlpha(alpha));
    }
    if (alpha - 1.0).abs() <= ALPHA_ONE_TOL {
        return Ok(h_x - cost);
    }
    let arg = if alpha < 1.0 { cost } else { -cost };
    if !(arg > 0.0) {
        return Err(CostError::TransformDomain { alpha, arg });
    }
    if alpha.is_infinite() {
        Ok(base.log(arg))
    } else {
        Ok(alpha / (alpha - 1.0) * base.log(arg))
    }
}

/// Shannon mutual information I(X;Y) of the channel itself, in `base`.
pub fn shannon_mi(channel: &Channel, base: LogBase) -> f64 {
    let joint: Vec<Vec<f64>> = (0..channel.inputs())
        .map(|i| (0..channel.outputs()).map(|j| channel.joint(i, j)).collect())
        .collect();
    alpha_mi(&joint, 1.0, base).expect("channel joint is a valid distribution")
}

/// Information lost by quantizing: I(X;Y) − I(X;Z), Shannon, in `base`.
/// Non-negative up to rounding by the data-processing inequality.
pub fn mi_gap(channel: &Channel, assignment: &Assignment, base: LogBase) -> f64 {
    let joint = assignment.joint_with_inputs(channel);
    let iz = alpha_mi(&joint, 1.0, base).expect("assignment joint is a valid distribution");
    shannon_mi(channel, base) - iz
}
