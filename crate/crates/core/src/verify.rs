//! Hypothesis checks on a system, class-membership estimates for functions,
//! and residuals of candidate solutions. All checks are grid estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{jordan_parts, sort_dedup, EndpointPair, FnKind, FunctionRep, SampleGrid};
use crate::solver::{solve_e0, SolverParams};
use crate::transfer::WeightedSystem;

/// Offset used to probe both sides of map feature points.
const PROBE_OFFSET: f64 = 1e-9;

/// Candidate `η` values for the endpoint slope condition: `2^-1 … 2^-10`.
pub fn eta_schedule() -> Vec<f64> {
    (1..=10).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(f64, f64)>,
}

/// `(f_n(x) − f_n(x0)) / (x − x0) ≤ 1` for all `n` and `0 < |x − x0| ≤ η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSlopeCheck {
    pub x0: f64,
    pub pass: bool,
    /// Largest `η` of the schedule that works.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Point violating the bound inside the smallest window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Every map is nondecreasing.
    pub h1_monotone: PointCheck,
    /// `Σ p_n |f_n(x) − f_n(y)| ≤ |x − y|`.
    pub h2_mean_lipschitz: PairCheck,
    pub h3_endpoint_slope: Vec<EndpointSlopeCheck>,
    /// `sup |m(x) − x|`.
    pub mean_identity: f64,
    pub probes: usize,
}

impl HypothesisReport {
    pub fn h3_at(&self, x0: f64) -> Option<&EndpointSlopeCheck> {
        self.h3_endpoint_slope.iter().find(|c| c.x0 == x0)
    }

    pub fn mean_identity_holds(&self) -> bool {
        self.mean_identity <= 1e-12
    }
}

/// Grid points plus both sides of every feature point of the maps.
pub fn probe_points(sys: &WeightedSystem, grid: &SampleGrid) -> Vec<f64> {
    let mut pts = grid.points();
    for f in sys.maps() {
        for p in f.feature_points() {
            pts.extend([p - PROBE_OFFSET, p, p + PROBE_OFFSET].into_iter().filter(|q| (0.0..=1.0).contains(q)));
        }
    }
    sort_dedup(&mut pts);
    pts
}

fn endpoint_slope(sys: &WeightedSystem, probes: &[f64], x0: f64) -> EndpointSlopeCheck {
    let violates = |x: f64| {
        sys.maps().iter().any(|f| {
            let q = (f.apply(x) - f.apply(x0)) / (x - x0);
            q > 1.0 + 1e-12
        })
    };
    let dist = |x: f64| (x - x0).abs();
    let inner: Vec<f64> = probes.iter().copied().filter(|&x| x != x0 && x > 0.0 && x < 1.0).collect();
    let nearest = inner.iter().copied().filter(|&x| violates(x)).min_by(|a, b| dist(*a).total_cmp(&dist(*b)));
    let closest_probe = inner.iter().copied().map(dist).fold(f64::INFINITY, f64::min);
    // an η only counts when its window holds at least one probe
    let eta = eta_schedule().into_iter().find(|&eta| closest_probe <= eta && nearest.is_none_or(|w| dist(w) > eta));
    EndpointSlopeCheck { x0, pass: eta.is_some(), eta, witness: if eta.is_some() { None } else { nearest } }
}

/// Tests (H₁)–(H₃) and the mean identity on the grid and at feature points.
pub fn check_hypotheses(sys: &WeightedSystem, grid: &SampleGrid) -> Result<HypothesisReport> {
    grid.validate()?;
    let probes = probe_points(sys, grid);
    let images: Vec<Vec<f64>> = sys.maps().iter().map(|f| probes.iter().map(|&x| f.apply(x)).collect()).collect();

    let h1_witness = images
        .iter()
        .filter_map(|ys| ys.windows(2).position(|w| w[0] > w[1]).map(|i| probes[i]))
        .min_by(f64::total_cmp);
    let h1_monotone = PointCheck { pass: h1_witness.is_none(), witness: h1_witness };

    let mut worst: Option<(f64, (f64, f64))> = None;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let d = probes[j] - probes[i];
            let lhs: f64 = sys.weights().iter().zip(&images).map(|(p, ys)| p * (ys[j] - ys[i]).abs()).sum();
            let excess = lhs - d;
            if excess > 1e-12 + 1e-9 * d && worst.is_none_or(|w| excess > w.0) {
                worst = Some((excess, (probes[i], probes[j])));
            }
        }
    }
    let h2_mean_lipschitz = PairCheck { pass: worst.is_none(), witness: worst.map(|w| w.1) };

    let h3_endpoint_slope = vec![endpoint_slope(sys, &probes, 0.0), endpoint_slope(sys, &probes, 1.0)];
    let mean_identity = probes.iter().fold(0.0_f64, |m, &x| m.max((sys.mean_map(x) - x).abs()));
    Ok(HypothesisReport { h1_monotone, h2_mean_lipschitz, h3_endpoint_slope, mean_identity, probes: probes.len() })
}

/// `|φ(x) − Σ p_n φ(f_n(x)) − g(x)|` at `x`.
pub fn residual_at<F: Fn(f64) -> f64>(phi: F, sys: &WeightedSystem, g: impl Fn(f64) -> f64, x: f64) -> f64 {
    let t: f64 = sys.maps().iter().zip(sys.weights()).map(|(f, p)| p * phi(f.apply(x))).sum();
    (phi(x) - t - g(x)).abs()
}

/// Sup over the grid of `|φ − Tφ − g|`.
pub fn residual_e(phi: &FunctionRep, sys: &WeightedSystem, g: &FunctionRep, grid: &SampleGrid) -> f64 {
    grid.points().into_iter().map(|x| residual_at(|y| phi.apply(y), sys, |y| g.apply(y), x)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// Uniform grid resolution `M` the estimates were taken at.
    pub grid_m: usize,
    pub sup_norm: f64,
    /// Largest difference quotient between neighbouring samples.
    pub lipschitz_estimate: f64,
    pub total_variation: f64,
    pub monotone: bool,
    pub nondecreasing: bool,
    /// `(η, max |h(x) − h(0)|)` over `0 < x ≤ η`.
    pub endpoint_modulus_0: Vec<(f64, f64)>,
    /// `(η, max |h(x) − h(1)|)` over `1 − η ≤ x < 1`.
    pub endpoint_modulus_1: Vec<(f64, f64)>,
    pub boundary: EndpointPair,
}

impl ClassReport {
    /// Modulus at `x0 ∈ {0, 1}` over the smallest window that holds samples.
    pub fn finest_modulus(&self, x0: f64) -> Option<f64> {
        let m = if x0 == 0.0 { &self.endpoint_modulus_0 } else { &self.endpoint_modulus_1 };
        m.last().map(|p| p.1)
    }
}

fn override_points(kind: &FnKind, out: &mut Vec<f64>) {
    match kind {
        FnKind::GridWithOverrides(g) => out.extend(g.overrides.iter().map(|o| o.0)),
        FnKind::Sum { terms } => terms.iter().for_each(|t| override_points(t.kind(), out)),
        FnKind::Product { factors } => factors.iter().for_each(|t| override_points(t.kind(), out)),
        FnKind::Scale { of, .. } => override_points(of.kind(), out),
        _ => {}
    }
}

/// Sample abscissae for class estimates: the grid, 0 and 1, and any
/// override points of `h`.
pub fn class_samples(h: &FunctionRep, grid: &SampleGrid) -> Vec<f64> {
    let mut xs = grid.points();
    xs.extend([0.0, 1.0]);
    override_points(h.kind(), &mut xs);
    xs.retain(|x| (0.0..=1.0).contains(x));
    sort_dedup(&mut xs);
    xs
}

/// Class estimates from values `vs` at sorted abscissae `xs`.
pub fn class_report_from_samples(xs: &[f64], vs: &[f64], grid_m: usize) -> ClassReport {
    assert_eq!(xs.len(), vs.len());
    let sup_norm = vs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let lipschitz_estimate =
        xs.windows(2).zip(vs.windows(2)).map(|(x, v)| (v[1] - v[0]).abs() / (x[1] - x[0])).fold(0.0, f64::max);
    let total_variation = vs.windows(2).map(|v| (v[1] - v[0]).abs()).sum();
    let nondecreasing = vs.windows(2).all(|v| v[0] <= v[1]);
    let monotone = nondecreasing || vs.windows(2).all(|v| v[0] >= v[1]);
    let value_at = |x0: f64| xs.iter().position(|&x| x == x0).map(|i| vs[i]);
    let modulus = |x0: f64| -> Vec<(f64, f64)> {
        let Some(v0) = value_at(x0) else { return Vec::new() };
        eta_schedule()
            .into_iter()
            .filter_map(|eta| crate::solver::modulus_near(xs, vs, x0, v0, eta).map(|m| (eta, m)))
            .collect()
    };
    ClassReport {
        grid_m,
        sup_norm,
        lipschitz_estimate,
        total_variation,
        monotone,
        nondecreasing,
        endpoint_modulus_0: modulus(0.0),
        endpoint_modulus_1: modulus(1.0),
        boundary: EndpointPair { a: value_at(0.0).unwrap_or(f64::NAN), b: value_at(1.0).unwrap_or(f64::NAN) },
    }
}

pub fn class_report(h: &FunctionRep, grid: &SampleGrid) -> ClassReport {
    let xs = class_samples(h, grid);
    let vs: Vec<f64> = xs.iter().map(|&x| h.apply(x)).collect();
    class_report_from_samples(&xs, &vs, grid.m)
}

/// Grid points together with their images under every map.
pub fn closure_points(sys: &WeightedSystem, grid: &SampleGrid) -> Vec<f64> {
    let base = grid.points();
    let mut pts = base.clone();
    for f in sys.maps() {
        pts.extend(base.iter().map(|&x| f.apply(x)));
    }
    pts.extend([0.0, 1.0]);
    sort_dedup(&mut pts);
    pts
}

/// Homogeneous residuals of the Jordan parts `Φ₊`, `Φ₋` of a solution `φ`.
///
/// The parts are the cumulative positive and negative increments of `φ` over
/// the grid and its images, so every value the residual needs is a sample.
/// Requires every map to be nondecreasing.
pub fn jordan_parts_solve_e0<F>(phi: F, sys: &WeightedSystem, grid: &SampleGrid) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let hyp = check_hypotheses(sys, grid)?;
    if !hyp.h1_monotone.pass {
        return Err(Error::HypothesisNotMet(format!(
            "maps must be nondecreasing (fails near x = {})",
            hyp.h1_monotone.witness.unwrap_or(f64::NAN)
        )));
    }
    let xs = closure_points(sys, grid);
    let vs: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    let (plus, minus) = jordan_parts(&vs);
    let lookup = |table: &[f64], y: f64| {
        let i = xs.partition_point(|&x| x < y);
        debug_assert_eq!(xs[i], y);
        table[i]
    };
    let sup = |table: &[f64]| {
        grid.points().into_iter().map(|x| residual_at(|y| lookup(table, y), sys, |_| 0.0, x)).fold(0.0, f64::max)
    };
    Ok((sup(&plus), sup(&minus)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreasingSolutionCheck {
    pub pass: bool,
    /// Output is nondecreasing on certified points (within `2·tol`).
    pub nondecreasing: bool,
    pub residual_sup: f64,
    pub undecided_points: usize,
}

/// Solves the homogeneous equation for a nondecreasing `h` and checks that
/// the result is nondecreasing with residual at most `10·tol`.
pub fn increasing_solution_check(
    sys: &WeightedSystem,
    h: &FunctionRep,
    grid: &SampleGrid,
    params: &SolverParams,
) -> Result<IncreasingSolutionCheck> {
    let hyp = check_hypotheses(sys, grid)?;
    if !hyp.h1_monotone.pass {
        return Err(Error::HypothesisNotMet("maps must be nondecreasing".into()));
    }
    let pts = grid.points();
    if pts.windows(2).any(|w| h.apply(w[0]) > h.apply(w[1])) {
        return Err(Error::HypothesisNotMet("h must be nondecreasing on the grid".into()));
    }
    let sol = solve_e0(sys, h, grid, params)?;
    let certified: Vec<_> = sol.points.iter().filter(|p| p.value.certified()).collect();
    let nondecreasing =
        certified.windows(2).all(|w| w[0].value.value <= w[1].value.value + w[0].value.tol + w[1].value.tol);
    let limit = 10.0 * (params.tol() + certified.iter().map(|p| p.value.tol).fold(0.0, f64::max));
    Ok(IncreasingSolutionCheck {
        pass: nondecreasing && sol.residual_sup <= limit,
        nondecreasing,
        residual_sup: sol.residual_sup,
        undecided_points: sol.undecided_points.len(),
    })
}
