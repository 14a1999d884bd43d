//! The transfer operator `T h(x) = Σ p_n h(f_n(x))` and its iterates.

mod alpha;
mod iterate;
mod sequence;
mod system;

pub use alpha::{build_alpha_table, iterate_periodic, AlphaTable};
pub use iterate::{apply_transfer, iterate_exact, iterate_mc, IterateEstimate, IterateMethod, DEFAULT_BRANCH_BUDGET};
pub use sequence::{iterate_sequence, IterateSequence, MethodSelector, SequenceConfig, SequenceKind};
pub use system::WeightedSystem;

/// `m(x) = Σ p_n f_n(x)`.
pub fn mean_map(sys: &WeightedSystem, x: f64) -> crate::Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(crate::Error::Domain(x));
    }
    Ok(sys.mean_map(x))
}
