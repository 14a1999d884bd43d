//! Bounded solutions of the iterative functional equation
//!
//! ```text
//! φ(x) = Σ_n p_n φ(f_n(x)) + g(x),   φ(0) = a,  φ(1) = b,
//! ```
//!
//! on `[0, 1]`, where every `f_n` fixes 0 and 1 and the weights `p_n` form a
//! probability vector.
//!
//! Solutions are built from iterates of the transfer operator
//! `T h = Σ p_n h ∘ f_n`: the homogeneous part as a limit functional `B_h` of
//! `(T^m h(x))_m`, the particular part as the same functional applied to the
//! partial sums `g_k = Σ_{l<k} T^l g`. The limit functional is a certified
//! almost-limit detector ([`almostlim`]) that answers `Undecided` rather than
//! guess.
//!
//! Modules:
//! - [`funcspace`]: unit maps, bounded functions, sampling grids, Jordan parts.
//! - [`transfer`]: `T`, exact/Monte Carlo/periodic iterates.
//! - [`almostlim`]: shifted Cesàro means and the almost-limit detector.
//! - [`solver`]: `B_h`, `B_*`, Neumann series, periodic closed forms, diagnostics.
//! - [`stochastic`]: random trajectories and absorption probabilities.
//! - [`verify`]: hypothesis checks, class estimates, residuals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod almostlim;
pub mod error;
pub mod funcspace;
pub mod rng;
pub mod solver;
pub mod stochastic;
pub mod transfer;
pub mod verify;

pub use almostlim::{almost_limit, AlmostLimitParams, AlmostLimitResult, LimitStatus};
pub use error::{Error, Result};
pub use funcspace::{EndpointPair, FunctionRep, Interpolation, SampleGrid, UnitMap};
pub use transfer::{IterateEstimate, IterateMethod, MethodSelector, WeightedSystem};
