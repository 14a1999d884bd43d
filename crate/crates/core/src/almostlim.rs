//! A numerical stand-in for Banach limits.
//!
//! A Banach limit cannot be constructed, but on almost convergent sequences
//! every Banach limit takes the same value: the uniform limit of the shifted
//! Cesàro means `C(n, k) = (1/n) Σ_{m<n} x_{k+m}`. The detector here returns a
//! value only when that uniformity is observed numerically, and reports
//! `Undecided` otherwise.
//!
//! Means are taken over the tail of the finite sequence. Shift invariance of
//! Banach limits makes the choice of origin immaterial, while head-anchored
//! windows would carry `O(1/n)` transient errors far above any useful
//! tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::FunctionRep;
use crate::transfer::{iterate_sequence, AlphaTable, IterateMethod, SequenceConfig, SequenceKind, WeightedSystem};

/// Number of anchors in the long-range drift sweep.
const DRIFT_ANCHORS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlmostLimitParams {
    /// Window lengths `n`; the largest one produces the value.
    pub n_values: Vec<usize>,
    /// Largest shift `K` checked for every window.
    pub shift_max: usize,
    pub tol: f64,
    /// Length of the sequences generated from iterates.
    pub m_max: usize,
    /// Sequences with an entry above this magnitude are reported unbounded.
    pub bound_cap: f64,
}

impl Default for AlmostLimitParams {
    fn default() -> Self {
        AlmostLimitParams { n_values: vec![64, 128, 256, 512], shift_max: 256, tol: 1e-6, m_max: 2048, bound_cap: 1e12 }
    }
}

impl AlmostLimitParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::InvalidParams("window lengths must be positive and nonempty".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.bound_cap > 0.0) {
            return Err(Error::InvalidParams("bound_cap must be positive".into()));
        }
        if self.required_length() > self.m_max {
            return Err(Error::InvalidParams(format!(
                "max window {} + shift {} exceeds m_max {}",
                self.max_window(),
                self.shift_max,
                self.m_max
            )));
        }
        Ok(())
    }

    pub fn max_window(&self) -> usize {
        self.n_values.iter().copied().max().unwrap_or(1)
    }

    pub fn required_length(&self) -> usize {
        self.max_window() + self.shift_max
    }

    fn sorted_windows(&self) -> Vec<usize> {
        let mut w = self.n_values.clone();
        w.sort_unstable();
        w.dedup();
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Convergent,
    AlmostConvergent,
    Undecided,
    Unbounded,
}

impl LimitStatus {
    pub fn is_certified(self) -> bool {
        matches!(self, LimitStatus::Convergent | LimitStatus::AlmostConvergent)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LimitStatus::Convergent => "convergent",
            LimitStatus::AlmostConvergent => "almost_convergent",
            LimitStatus::Undecided => "undecided",
            LimitStatus::Unbounded => "unbounded",
        }
    }
}

/// Shifted Cesàro means for one window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostic {
    pub n: usize,
    /// `C(n, 0)`.
    pub mean: f64,
    /// `max_k |C(n, k) − C(n, 0)|`.
    pub shift_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostLimitResult {
    pub status: LimitStatus,
    /// Certified value; `None` unless the status is certified.
    pub value: Option<f64>,
    /// `C(n*, 0)` on the tail, reported even when uncertified.
    pub estimate: f64,
    /// Largest deviation of a checked Cesàro mean from the estimate.
    pub spread: f64,
    /// `|C(n*, 0) − C(n₂, 0)|` for the two largest windows.
    pub window_gap: f64,
    /// `max |x_m − estimate|` over the tail.
    pub tail_oscillation: f64,
    /// Tolerance actually applied (inflated by Monte Carlo half-widths).
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<IterateMethod>,
    pub diagnostics: Vec<WindowDiagnostic>,
}

impl AlmostLimitResult {
    pub fn is_certified(&self) -> bool {
        self.status.is_certified()
    }
}

/// `table[i][k] = C(n_i, k)` for the sorted window lengths `n_i` and `k ≤ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroTable {
    pub windows: Vec<usize>,
    pub means: Vec<Vec<f64>>,
}

impl CesaroTable {
    pub fn get(&self, n: usize, k: usize) -> Option<f64> {
        let i = self.windows.iter().position(|w| *w == n)?;
        self.means[i].get(k).copied()
    }
}

/// Means of `seq[k..k+n]` for `k = 0..=count−1`, by a sliding sum of
/// deviations from `seq[0]` (exact on constant runs).
fn sliding_means(seq: &[f64], n: usize, count: usize) -> Vec<f64> {
    let r = seq[0];
    let mut acc: f64 = seq[..n].iter().map(|v| v - r).sum();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k > 0 {
            acc += (seq[k + n - 1] - r) - (seq[k - 1] - r);
        }
        out.push(r + acc / n as f64);
    }
    out
}

pub fn cesaro_table(seq: &[f64], params: &AlmostLimitParams) -> Result<CesaroTable> {
    let needed = params.required_length();
    if seq.len() < needed {
        return Err(Error::InsufficientLength { len: seq.len(), needed });
    }
    let windows = params.sorted_windows();
    let means = windows.iter().map(|&n| sliding_means(seq, n, params.shift_max + 1)).collect();
    Ok(CesaroTable { windows, means })
}

fn window_mean(seq: &[f64], start: usize, n: usize) -> f64 {
    let r = seq[start];
    r + seq[start..start + n].iter().map(|v| v - r).sum::<f64>() / n as f64
}

/// Lorentz-criterion detector on a finite sequence.
pub fn almost_limit(seq: &[f64], params: &AlmostLimitParams) -> Result<AlmostLimitResult> {
    almost_limit_with_tol(seq, params, params.tol, None)
}

fn almost_limit_with_tol(
    seq: &[f64],
    params: &AlmostLimitParams,
    tol: f64,
    method: Option<IterateMethod>,
) -> Result<AlmostLimitResult> {
    let needed = params.required_length();
    if seq.len() < needed {
        return Err(Error::InsufficientLength { len: seq.len(), needed });
    }
    if seq.iter().any(|v| !v.is_finite() || v.abs() > params.bound_cap) {
        return Ok(AlmostLimitResult {
            status: LimitStatus::Unbounded,
            value: None,
            estimate: *seq.last().unwrap(),
            spread: f64::INFINITY,
            window_gap: f64::INFINITY,
            tail_oscillation: f64::INFINITY,
            tol,
            method,
            diagnostics: Vec::new(),
        });
    }
    let len = seq.len();
    let tail = &seq[len - needed..];
    let table = cesaro_table(tail, params)?;
    let top = table.means.len() - 1;
    let n_star = table.windows[top];
    let estimate = table.means[top][0];

    let diagnostics: Vec<WindowDiagnostic> = table
        .windows
        .iter()
        .zip(&table.means)
        .map(|(&n, row)| WindowDiagnostic {
            n,
            mean: row[0],
            shift_spread: row.iter().fold(0.0_f64, |m, c| m.max((c - row[0]).abs())),
        })
        .collect();
    let mut spread = diagnostics[top].shift_spread;
    let window_gap = if top > 0 { (table.means[top - 1][0] - estimate).abs() } else { 0.0 };

    // Long-range sweep: windows of length n* anchored across the last two
    // thirds of the sequence. Catches oscillation on scales longer than K.
    let first_anchor = len / 3;
    if first_anchor + n_star <= len {
        let last_anchor = len - n_star;
        let steps = DRIFT_ANCHORS.min(last_anchor - first_anchor);
        for j in 0..=steps {
            let a = first_anchor + ((last_anchor - first_anchor) * j).checked_div(steps).unwrap_or(0);
            spread = spread.max((window_mean(seq, a, n_star) - estimate).abs());
        }
    }

    let tail_oscillation = tail.iter().fold(0.0_f64, |m, v| m.max((v - estimate).abs()));
    let status = if spread <= tol && window_gap <= tol {
        if tail_oscillation <= tol {
            LimitStatus::Convergent
        } else {
            LimitStatus::AlmostConvergent
        }
    } else {
        LimitStatus::Undecided
    };
    Ok(AlmostLimitResult {
        status,
        value: status.is_certified().then_some(estimate),
        estimate,
        spread,
        window_gap,
        tail_oscillation,
        tol,
        method,
        diagnostics,
    })
}

/// Detector applied to `(T^m h(x))_{m < m_max}`, or to the partial sums
/// `(Σ_{l<k} T^l h(x))_k` when `kind` says so. Monte Carlo half-widths are
/// added to the tolerance.
pub fn almost_limit_of_sequence(
    sys: &WeightedSystem,
    h: &FunctionRep,
    x: f64,
    kind: SequenceKind,
    params: &AlmostLimitParams,
    cfg: &SequenceConfig,
    table: Option<&AlphaTable>,
) -> Result<AlmostLimitResult> {
    params.validate()?;
    let seq = iterate_sequence(sys, h, x, params.m_max, kind, cfg, table)?;
    let tol = params.tol + seq.max_half_width();
    almost_limit_with_tol(&seq.values, params, tol, Some(seq.method))
}

/// Surrogate for `B((T^m h(x))_m)`.
pub fn almost_limit_of_iterates(
    sys: &WeightedSystem,
    h: &FunctionRep,
    x: f64,
    params: &AlmostLimitParams,
    cfg: &SequenceConfig,
    table: Option<&AlphaTable>,
) -> Result<AlmostLimitResult> {
    almost_limit_of_sequence(sys, h, x, SequenceKind::Iterates, params, cfg, table)
}
