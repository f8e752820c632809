//! Quantizer design for discrete memoryless channels with q-ary inputs.
//!
//! Given a channel and a target number of cells M, the crate finds output
//! quantizers minimizing a concave cost over posteriors — equivalently,
//! maximizing an α-mutual-information objective. Sequential (contiguous)
//! quantizers are solved exactly by dynamic programming, with optional
//! Yao/SMAWK acceleration when the segment costs satisfy the quadrangle
//! inequality; unrestricted mappings are attacked by greedy combining,
//! KL-means style clustering, and iterated dynamic programming over output
//! relabellings. Exhaustive oracles, structural checks (collinearity,
//! dominance), and a counterexample hunter support validation end to end.

pub mod assignment;
pub mod baselines;
pub mod channel;
pub mod cost;
pub mod dp;
pub mod geometry;
pub mod idp;
pub mod io;
pub mod oracle;
pub mod pam;
pub mod sampling;
pub mod smawk;

pub use assignment::Assignment;
pub use channel::{Channel, ChannelError, Labeling};
pub use cost::{CostFamily, LogBase, SegmentCostView};
pub use dp::{design_sdq, Engine, SdqSolution};
pub use geometry::{posterior_geometry, PosteriorGeometry};
