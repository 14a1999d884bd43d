//! Self-maps of the unit interval and bounded real functions on it.

mod function;
mod grid;
mod jordan;
mod map;

pub use function::{convex_combination, FnKind, FunctionRep, GridFn, Interpolation};
pub(crate) use grid::sort_dedup;
pub use grid::SampleGrid;
pub use jordan::{jordan_decompose, jordan_parts};
pub use map::{compose_map_power, UnitMap};

/// Boundary data `φ(0) = a`, `φ(1) = b`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct EndpointPair {
    pub a: f64,
    pub b: f64,
}
