use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_boundary_zero, function_from_points, residual_sup, solve_on_points, undecided_points, PointSolution,
    PointValue, SolverParams, ZERO_TERM,
};
use crate::almostlim::{almost_limit, almost_limit_of_sequence, AlmostLimitResult, LimitStatus};
use crate::error::{Error, Result};
use crate::funcspace::{sort_dedup, FunctionRep, SampleGrid};
use crate::transfer::{
    build_alpha_table, iterate_sequence, AlphaTable, IterateMethod, IterateSequence, MethodSelector, SequenceConfig,
    SequenceKind, WeightedSystem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticularMethod {
    /// `T^m g = 0` for some finite `m`; `B_*` is a finite sum.
    NeumannFinite,
    /// The Neumann series converges uniformly.
    NeumannUniform,
    /// Almost-limit of the partial sums `g_k`.
    AlmostLimit,
}

/// Boundedness diagnostic for `G = {g_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFamilyReport {
    /// `max |g_k(x)|` over the probes and `k ≤ k_max`.
    pub bound: f64,
    pub unbounded: bool,
    /// Fitted growth rate of `g_k` at `witness`.
    pub slope: f64,
    /// Probe with the steepest growth.
    pub witness: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgReport {
    /// Sup of `|B_g|` over certified points.
    pub sup: f64,
    pub points: Vec<(f64, PointValue)>,
    pub undecided_points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannFinite {
    /// Least `m` with `sup |T^m g| ≤ 1e-12` on the grid.
    pub m: usize,
    /// `Σ_{l<m} T^l g` on the grid.
    pub b_star: FunctionRep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannUniform {
    /// Index `L` of the last term kept; the sum has `L + 1` terms.
    pub last_term: usize,
    /// Geometric bound on the dropped terms.
    pub tail_bound: f64,
    /// `sup |T^l g|` on the grid for `l ≤ L`.
    pub term_sups: Vec<f64>,
    pub b_star: FunctionRep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticularSolutionReport {
    pub b_star: FunctionRep,
    pub method: ParticularMethod,
    pub g_family: GFamilyReport,
    pub bg: BgReport,
    pub points: Vec<PointSolution>,
    pub residual_sup: f64,
    pub undecided_points: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neumann_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
}

fn table_for(sys: &WeightedSystem, len: usize) -> Result<Option<AlphaTable>> {
    match sys.periodic_order() {
        Some(_) => Ok(Some(build_alpha_table(sys, len.max(2))?)),
        None => Ok(None),
    }
}

fn exact_cfg(params: &SolverParams) -> SequenceConfig {
    SequenceConfig { selector: MethodSelector::ExactTree, ..params.sequence.clone() }
}

/// Exact sequence, or `None` when exact propagation does not fit the budget.
fn exact_sequence(
    sys: &WeightedSystem,
    g: &FunctionRep,
    x: f64,
    len: usize,
    kind: SequenceKind,
    params: &SolverParams,
) -> Result<Option<IterateSequence>> {
    match iterate_sequence(sys, g, x, len, kind, &exact_cfg(params), None) {
        Ok(s) => Ok(Some(s)),
        Err(Error::BudgetExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn probe_points(sys: &WeightedSystem, grid: &SampleGrid) -> Vec<f64> {
    let mut pts = grid.points();
    pts.extend(sys.maps().iter().flat_map(|f| f.feature_points()));
    sort_dedup(&mut pts);
    pts
}

/// `g_k(x) = Σ_{l<k} T^l g(x)`. `g` must vanish at 0 and 1.
pub fn partial_sum_gk(sys: &WeightedSystem, g: &FunctionRep, k: usize, x: f64, cfg: &SequenceConfig) -> Result<f64> {
    check_boundary_zero(g)?;
    if k == 0 {
        return Ok(0.0);
    }
    let seq = iterate_sequence(sys, g, x, k, SequenceKind::PartialSums, cfg, None)?;
    Ok(seq.values[k - 1])
}

/// Late-window slope must keep this fraction of the early-window slope for
/// growth to count as linear.
const STEADY_RATIO: f64 = 0.8;

/// Least-squares slope of `ys` against `0, 1, …`.
fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Checks whether `{g_k}` stays bounded, from `g_1 … g_{k_max}` on the grid
/// and at the feature points of the maps.
///
/// The family is flagged unbounded when some `|g_k|` exceeds `g_cap`, or when
/// `g_k(x)` grows over `k ∈ [k_max/2, k_max]` by more than `growth_ratio` of
/// its level at a rate that does not slow down within the window.
pub fn check_g_bounded(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<GFamilyReport> {
    params.validate()?;
    grid.validate()?;
    let k_max = params.k_max;
    let table = table_for(sys, k_max)?;
    let probes = probe_points(sys, grid);
    let per_point: Vec<(f64, f64, bool)> = probes
        .par_iter()
        .map(|&x| {
            let seq = iterate_sequence(sys, g, x, k_max, SequenceKind::PartialSums, &params.sequence, table.as_ref())?;
            let level = seq.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let lo = k_max / 2 - 1;
            let tail = &seq.values[lo..];
            let s = slope(tail);
            let growth = s.abs() * (tail.len() - 1) as f64;
            // converging sums slow down across the window, linear ones do not
            let (early, late) = tail.split_at(tail.len() / 2);
            let (s1, s2) = (slope(early), slope(late));
            let steady = s1 * s2 > 0.0 && s2.abs() >= STEADY_RATIO * s1.abs();
            let flagged = !level.is_finite()
                || level > params.g_cap
                || (steady && growth > params.growth_ratio * level && growth > 1e-9 * level.max(1.0));
            Ok((level, s, flagged))
        })
        .collect::<Result<_>>()?;

    let bound = per_point.iter().fold(0.0_f64, |m, p| m.max(p.0));
    let unbounded = per_point.iter().any(|p| p.2);
    let (wi, w) = per_point
        .iter()
        .enumerate()
        .filter(|(_, p)| p.2 || !unbounded)
        .max_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()))
        .expect("grid has points");
    Ok(GFamilyReport { bound, unbounded, slope: w.1, witness: probes[wi], k_max })
}

/// `B_g` on the grid. A solution can only exist when this vanishes.
pub fn check_bg_zero(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<BgReport> {
    params.validate()?;
    let table = table_for(sys, params.limit.m_max)?;
    let points: Vec<(f64, PointValue)> = grid
        .points()
        .par_iter()
        .map(|&x| {
            let r = almost_limit_of_sequence(
                sys,
                g,
                x,
                SequenceKind::Iterates,
                &params.limit,
                &params.sequence,
                table.as_ref(),
            )?;
            Ok((x, PointValue::from_limit(&r)))
        })
        .collect::<Result<_>>()?;
    let sup = points.iter().filter(|p| p.1.certified()).fold(0.0_f64, |m, p| m.max(p.1.value.abs()));
    let undecided_points = points.iter().filter(|p| !p.1.certified()).map(|p| p.0).collect();
    Ok(BgReport { sup, points, undecided_points })
}

/// Almost-limit of `(Σ_{l<k} T^{m+l} g(x))_m`, i.e. a surrogate for
/// `B_{g_k}(x)`. Linearity gives `B_{g_k} = k B_g`.
pub fn bgk_surrogate(
    sys: &WeightedSystem,
    g: &FunctionRep,
    k: usize,
    x: f64,
    params: &SolverParams,
) -> Result<AlmostLimitResult> {
    params.validate()?;
    let len = params.limit.m_max;
    let k = k.max(1);
    let seq = iterate_sequence(sys, g, x, len + k - 1, SequenceKind::Iterates, &params.sequence, None)?;
    let mut window: f64 = seq.values[..k].iter().sum();
    let mut sums = Vec::with_capacity(len);
    sums.push(window);
    for m in 1..len {
        window += seq.values[m + k - 1] - seq.values[m - 1];
        sums.push(window);
    }
    let limit = crate::almostlim::AlmostLimitParams {
        tol: params.limit.tol + k as f64 * seq.max_half_width(),
        ..params.limit.clone()
    };
    let mut r = almost_limit(&sums, &limit)?;
    r.method = Some(seq.method);
    Ok(r)
}

/// Looks for the least `m ≤ finite_m_cap` with `sup |T^m g| ≤ 1e-12` on the
/// grid, requiring the later terms up to the cap to vanish as well. Returns
/// `None` when there is none or the iterates cannot be computed exactly.
pub fn neumann_finite(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<Option<NeumannFinite>> {
    grid.validate()?;
    let len = params.finite_m_cap + 1;
    let points = grid.points();
    let seqs: Vec<Option<IterateSequence>> = points
        .par_iter()
        .map(|&x| exact_sequence(sys, g, x, len, SequenceKind::Iterates, params))
        .collect::<Result<_>>()?;
    let Some(seqs) = seqs.into_iter().collect::<Option<Vec<_>>>() else {
        return Ok(None);
    };
    let sups: Vec<f64> = (0..len).map(|l| seqs.iter().fold(0.0_f64, |m, s| m.max(s.values[l].abs()))).collect();
    let Some(m) = (0..len).find(|&m| sups[m..].iter().all(|a| *a <= ZERO_TERM)) else {
        return Ok(None);
    };
    let values: Vec<f64> = seqs.iter().map(|s| s.values[..m].iter().sum()).collect();
    let b_star = grid.function_from_samples(&points, &values, &pinned_zero(&points))?;
    Ok(Some(NeumannFinite { m, b_star }))
}

fn pinned_zero(points: &[f64]) -> Vec<(f64, f64)> {
    let mut pinned = Vec::new();
    if points.first() != Some(&0.0) {
        pinned.push((0.0, 0.0));
    }
    if points.last() != Some(&1.0) {
        pinned.push((1.0, 0.0));
    }
    pinned
}

/// Sums the Neumann series `Σ_l T^l g` once the grid sups `a_l` of its terms
/// decay geometrically: stops at the first `L` with `r = a_L / a_{L−1} < 1`
/// and `a_L r / (1 − r) ≤ series_tol`.
pub fn neumann_uniform(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<NeumannUniform> {
    grid.validate()?;
    let points = grid.points();
    let l_max = params.l_max;
    let mut len = 16.min(l_max + 1);
    loop {
        let seqs: Vec<Option<IterateSequence>> = points
            .par_iter()
            .map(|&x| exact_sequence(sys, g, x, len, SequenceKind::Iterates, params))
            .collect::<Result<_>>()?;
        let Some(seqs) = seqs.into_iter().collect::<Option<Vec<_>>>() else {
            return Err(Error::NoUniformConvergence { l_max });
        };
        let sups: Vec<f64> = (0..len).map(|l| seqs.iter().fold(0.0_f64, |m, s| m.max(s.values[l].abs()))).collect();
        for l in 1..len {
            let (prev, cur) = (sups[l - 1], sups[l]);
            let tail = if cur == 0.0 {
                0.0
            } else if cur < prev {
                let r = cur / prev;
                cur * r / (1.0 - r)
            } else {
                continue;
            };
            if tail <= params.series_tol {
                let values: Vec<f64> = seqs.iter().map(|s| s.values[..=l].iter().sum()).collect();
                let b_star = grid.function_from_samples(&points, &values, &pinned_zero(&points))?;
                return Ok(NeumannUniform { last_term: l, tail_bound: tail, term_sups: sups[..=l].to_vec(), b_star });
            }
        }
        if len > l_max {
            return Err(Error::NoUniformConvergence { l_max });
        }
        len = (2 * len).min(l_max + 1);
    }
}

enum BStar {
    Sum { terms: usize },
    Limit { table: Option<AlphaTable> },
}

fn bstar_at(sys: &WeightedSystem, g: &FunctionRep, how: &BStar, params: &SolverParams, y: f64) -> Result<PointValue> {
    match how {
        BStar::Sum { terms } => {
            if *terms == 0 {
                return Ok(PointValue { method: Some(IterateMethod::ExactTree), ..PointValue::exact(0.0) });
            }
            match exact_sequence(sys, g, y, *terms, SequenceKind::PartialSums, params)? {
                Some(s) => Ok(PointValue { method: Some(s.method), ..PointValue::exact(s.values[terms - 1]) }),
                None => Ok(PointValue { value: f64::NAN, status: LimitStatus::Undecided, tol: 0.0, method: None }),
            }
        }
        BStar::Limit { table } => {
            let r = almost_limit_of_sequence(
                sys,
                g,
                y,
                SequenceKind::PartialSums,
                &params.limit,
                &params.sequence,
                table.as_ref(),
            )?;
            Ok(PointValue::from_limit(&r))
        }
    }
}

/// Builds the particular solution `B_*` with `B_*(0) = B_*(1) = 0`.
///
/// Tries a finite Neumann sum, then a uniformly convergent one, then the
/// almost-limit of the partial sums. Fails with
/// [`Error::NotSolvableGUnbounded`] when `{g_k}` is unbounded.
pub fn solve_particular(
    sys: &WeightedSystem,
    g: &FunctionRep,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<ParticularSolutionReport> {
    params.validate()?;
    grid.validate()?;
    check_boundary_zero(g)?;
    let g_family = check_g_bounded(sys, g, grid, params)?;
    if g_family.unbounded {
        return Err(Error::NotSolvableGUnbounded { x: g_family.witness, slope: g_family.slope });
    }

    let (method, how, neumann_terms, tail_bound) = if let Some(f) = neumann_finite(sys, g, grid, params)? {
        (ParticularMethod::NeumannFinite, BStar::Sum { terms: f.m }, Some(f.m), Some(0.0))
    } else {
        match neumann_uniform(sys, g, grid, params) {
            Ok(u) => (
                ParticularMethod::NeumannUniform,
                BStar::Sum { terms: u.last_term + 1 },
                Some(u.last_term + 1),
                Some(u.tail_bound),
            ),
            Err(Error::NoUniformConvergence { .. }) => {
                (ParticularMethod::AlmostLimit, BStar::Limit { table: table_for(sys, params.limit.m_max)? }, None, None)
            }
            Err(e) => return Err(e),
        }
    };

    let points = solve_on_points(sys, &grid.points(), Some(g), |y| bstar_at(sys, g, &how, params, y))?;
    let b_star = function_from_points(grid, &points, 0.0, 0.0)?;
    let bg = match method {
        ParticularMethod::AlmostLimit => check_bg_zero(sys, g, grid, params)?,
        // the terms of a convergent series tend to zero, so B_g vanishes
        _ => BgReport { sup: 0.0, points: Vec::new(), undecided_points: Vec::new() },
    };
    Ok(ParticularSolutionReport {
        b_star,
        method,
        g_family,
        bg,
        residual_sup: residual_sup(&points),
        undecided_points: undecided_points(&points),
        points,
        neumann_terms,
        tail_bound,
    })
}
