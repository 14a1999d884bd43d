use super::iterate::{IterateEstimate, IterateMethod};
use super::system::WeightedSystem;
use crate::error::{Error, Result};
use crate::funcspace::{convex_combination, FunctionRep};

/// Coefficients `α_{m,n}` with `T^m h(x) = Σ_n α_{m,n} h(f^n(x))` for a
/// periodic system `{f⁰, …, f^N}`, `f^{N+1} = id`.
///
/// Row `m` is the law after `m` steps of the random walk on `ℤ_{N+1}` with
/// step distribution `p`; row 0 is the point mass at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaTable {
    rows: Vec<Vec<f64>>,
}

impl AlphaTable {
    pub fn m_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn order(&self) -> usize {
        self.rows[0].len()
    }

    /// `α_{m,·}`; `m = 0` gives the identity operator's row.
    pub fn row(&self, m: usize) -> Result<&[f64]> {
        self.rows.get(m).map(Vec::as_slice).ok_or(Error::OutOfRange { m, m_max: self.m_max() })
    }
}

/// `α_{1,n} = p_n`, `α_{m+1,n} = Σ_k α_{m,k} p_{(n−k) mod (N+1)}`.
pub fn build_alpha_table(sys: &WeightedSystem, m_max: usize) -> Result<AlphaTable> {
    let order = sys.periodic_order().ok_or(Error::NotPeriodic)?;
    if m_max == 0 {
        return Err(Error::InvalidParams("alpha table needs m_max >= 1".into()));
    }
    let p = sys.weights();
    let mut rows = Vec::with_capacity(m_max + 1);
    let mut first = vec![0.0; order];
    first[0] = 1.0;
    rows.push(first);
    rows.push(p.to_vec());
    for m in 1..m_max {
        let prev = &rows[m];
        let next: Vec<f64> =
            (0..order).map(|n| (0..order).map(|k| prev[k] * p[(n + order - k) % order]).sum()).collect();
        rows.push(next);
    }
    Ok(AlphaTable { rows })
}

/// `T^m h(x)` from the table in `O(N)`.
pub fn iterate_periodic(
    sys: &WeightedSystem,
    h: &FunctionRep,
    m: usize,
    x: f64,
    table: &AlphaTable,
) -> Result<IterateEstimate> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    if sys.periodic_order() != Some(table.order()) {
        return Err(Error::NotPeriodic);
    }
    let row = table.row(m)?;
    let values: Vec<f64> = sys.maps().iter().map(|f| h.apply(f.apply(x))).collect();
    Ok(IterateEstimate {
        value: convex_combination(row, &values),
        half_width: 0.0,
        method: IterateMethod::AlphaTable,
        m,
    })
}
