use serde::{Deserialize, Serialize};

use super::map::UnitMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    #[default]
    Linear,
}

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

/// Values at `values.len()` uniform abscissae spanning `[x_min, x_max]`.
///
/// Outside its span the function is extended by the end values. Off-grid
/// evaluation carries an `O(step · local slope)` interpolation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    pub values: Vec<f64>,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default = "zero")]
    pub x_min: f64,
    #[serde(default = "one")]
    pub x_max: f64,
    /// Exact `(point, value)` pairs that take precedence over interpolation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<(f64, f64)>,
}

impl GridFn {
    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidFunction("grid has no values".into()));
        }
        if !(0.0 <= self.x_min && self.x_min <= self.x_max && self.x_max <= 1.0) {
            return Err(Error::InvalidFunction(format!(
                "grid span [{}, {}] is not inside [0,1]",
                self.x_min, self.x_max
            )));
        }
        if self.values.len() > 1 && self.x_min == self.x_max {
            return Err(Error::InvalidFunction("grid span is empty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction("grid contains non-finite values".into()));
        }
        for &(p, v) in &self.overrides {
            if !(0.0..=1.0).contains(&p) || !v.is_finite() {
                return Err(Error::InvalidFunction(format!("bad override ({p}, {v})")));
            }
        }
        Ok(())
    }

    fn eval(&self, x: f64) -> f64 {
        if let Some(&(_, v)) = self.overrides.iter().find(|(p, _)| *p == x) {
            return v;
        }
        let n = self.values.len();
        if n == 1 || x <= self.x_min {
            return self.values[0];
        }
        if x >= self.x_max {
            return self.values[n - 1];
        }
        let mut t = (x - self.x_min) / (self.x_max - self.x_min) * (n - 1) as f64;
        // grid abscissae recomputed by callers may be off by an ulp
        if (t - t.round()).abs() < 1e-9 {
            t = t.round();
        }
        match self.interpolation {
            Interpolation::Nearest => self.values[(t.round() as usize).min(n - 1)],
            Interpolation::Linear => {
                let i = (t.floor() as usize).min(n - 2);
                let frac = t - i as f64;
                if frac == 0.0 {
                    self.values[i]
                } else {
                    self.values[i] + (self.values[i + 1] - self.values[i]) * frac
                }
            }
        }
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().chain(self.overrides.iter().map(|(_, v)| v)).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// The shape of a [`FunctionRep`]. Everything except the grid variants is a
/// closed form over a small fixed basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FnKind {
    Const {
        value: f64,
    },
    /// `Σ coeffs[i] x^i`.
    Poly {
        coeffs: Vec<f64>,
    },
    /// 1 on `[0, 1)`, 0 at 1.
    IndicatorBelowOne,
    Sum {
        terms: Vec<FunctionRep>,
    },
    Product {
        factors: Vec<FunctionRep>,
    },
    Scale {
        factor: f64,
        of: Box<FunctionRep>,
    },
    /// `outer(map(x))`.
    Compose {
        outer: Box<FunctionRep>,
        map: UnitMap,
    },
    /// `Σ weights[n] · of(maps[n](x))`: one application of a transfer operator.
    Average {
        weights: Vec<f64>,
        maps: Vec<UnitMap>,
        of: Box<FunctionRep>,
    },
    Grid(GridFn),
    GridWithOverrides(GridFn),
}

#[derive(Serialize, Deserialize)]
struct FunctionDesc {
    #[serde(flatten)]
    kind: FnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_bound: Option<f64>,
}

/// A bounded real function on `[0, 1]` together with a known sup-norm bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionDesc", into = "FunctionDesc")]
pub struct FunctionRep {
    kind: FnKind,
    declared_bound: f64,
}

impl TryFrom<FunctionDesc> for FunctionRep {
    type Error = Error;

    fn try_from(desc: FunctionDesc) -> Result<Self> {
        let rep = FunctionRep::from_kind(desc.kind)?;
        match desc.declared_bound {
            Some(bound) => rep.with_bound(bound),
            None => Ok(rep),
        }
    }
}

impl From<FunctionRep> for FunctionDesc {
    fn from(rep: FunctionRep) -> Self {
        let computed = conservative_bound(&rep.kind);
        let declared_bound = (rep.declared_bound != computed).then_some(rep.declared_bound);
        FunctionDesc { kind: rep.kind, declared_bound }
    }
}

fn conservative_bound(kind: &FnKind) -> f64 {
    match kind {
        FnKind::Const { value } => value.abs(),
        FnKind::Poly { coeffs } => coeffs.iter().map(|c| c.abs()).sum(),
        FnKind::IndicatorBelowOne => 1.0,
        FnKind::Sum { terms } => terms.iter().map(|t| t.declared_bound).sum(),
        FnKind::Product { factors } => factors.iter().map(|t| t.declared_bound).product(),
        FnKind::Scale { factor, of } => factor.abs() * of.declared_bound,
        FnKind::Compose { outer, .. } => outer.declared_bound,
        FnKind::Average { of, .. } => of.declared_bound,
        FnKind::Grid(g) | FnKind::GridWithOverrides(g) => g.max_abs(),
    }
}

impl FunctionRep {
    /// Builds a function from its description, validating it and attaching
    /// the default (conservative) bound.
    pub fn from_kind(kind: FnKind) -> Result<Self> {
        match &kind {
            FnKind::Const { value } if !value.is_finite() => {
                return Err(Error::InvalidFunction("non-finite constant".into()))
            }
            FnKind::Poly { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                return Err(Error::InvalidFunction("non-finite polynomial coefficient".into()))
            }
            FnKind::Scale { factor, .. } if !factor.is_finite() => {
                return Err(Error::InvalidFunction("non-finite scale factor".into()))
            }
            FnKind::Compose { map, .. } => map.validate()?,
            FnKind::Average { weights, maps, .. } => {
                if weights.len() != maps.len() || weights.iter().any(|w| !(*w >= 0.0)) {
                    return Err(Error::InvalidFunction("average needs one nonnegative weight per map".into()));
                }
                for m in maps {
                    m.validate()?;
                }
            }
            FnKind::Grid(g) => {
                g.validate()?;
                if !g.overrides.is_empty() {
                    return Err(Error::InvalidFunction("plain grid carries overrides; use grid_with_overrides".into()));
                }
            }
            FnKind::GridWithOverrides(g) => g.validate()?,
            _ => {}
        }
        let declared_bound = conservative_bound(&kind);
        Ok(FunctionRep { kind, declared_bound })
    }

    /// Replaces the declared bound. Grid bounds must dominate every stored value.
    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::InvalidFunction(format!("declared bound {bound} is not a finite nonnegative real")));
        }
        let stored = match &self.kind {
            FnKind::Grid(g) | FnKind::GridWithOverrides(g) => g.max_abs(),
            _ => 0.0,
        };
        if bound < stored {
            return Err(Error::InvalidFunction(format!("declared bound {bound} is below the stored sup {stored}")));
        }
        self.declared_bound = bound;
        Ok(self)
    }

    pub fn constant(value: f64) -> Self {
        Self::from_kind(FnKind::Const { value }).expect("finite constant")
    }

    pub fn poly(coeffs: Vec<f64>) -> Result<Self> {
        Self::from_kind(FnKind::Poly { coeffs })
    }

    /// `a + (b − a) x`.
    pub fn affine(a: f64, b: f64) -> Self {
        Self::poly(vec![a, b - a]).expect("finite coefficients")
    }

    pub fn indicator_below_one() -> Self {
        Self::from_kind(FnKind::IndicatorBelowOne).unwrap()
    }

    pub fn sum(terms: Vec<FunctionRep>) -> Self {
        Self::from_kind(FnKind::Sum { terms }).unwrap()
    }

    pub fn product(factors: Vec<FunctionRep>) -> Self {
        Self::from_kind(FnKind::Product { factors }).unwrap()
    }

    pub fn scale(factor: f64, of: FunctionRep) -> Result<Self> {
        Self::from_kind(FnKind::Scale { factor, of: Box::new(of) })
    }

    pub fn compose(outer: FunctionRep, map: UnitMap) -> Result<Self> {
        Self::from_kind(FnKind::Compose { outer: Box::new(outer), map })
    }

    pub fn grid(values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        Self::grid_on(0.0, 1.0, values, interpolation)
    }

    pub fn grid_on(x_min: f64, x_max: f64, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        Self::from_kind(FnKind::Grid(GridFn { values, interpolation, x_min, x_max, overrides: Vec::new() }))
    }

    pub fn grid_with_overrides(
        values: Vec<f64>,
        interpolation: Interpolation,
        overrides: Vec<(f64, f64)>,
    ) -> Result<Self> {
        Self::from_kind(FnKind::GridWithOverrides(GridFn { values, interpolation, x_min: 0.0, x_max: 1.0, overrides }))
    }

    pub fn kind(&self) -> &FnKind {
        &self.kind
    }

    pub fn declared_bound(&self) -> f64 {
        self.declared_bound
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.kind, FnKind::Grid(_) | FnKind::GridWithOverrides(_))
    }

    /// Evaluates at `x`, rejecting points outside `[0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        Ok(self.apply(x))
    }

    /// Evaluates without the domain check. `x` must lie in `[0, 1]`.
    pub fn apply(&self, x: f64) -> f64 {
        match &self.kind {
            FnKind::Const { value } => *value,
            FnKind::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            FnKind::IndicatorBelowOne => {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            FnKind::Sum { terms } => terms.iter().map(|t| t.apply(x)).sum(),
            FnKind::Product { factors } => factors.iter().map(|t| t.apply(x)).product(),
            FnKind::Scale { factor, of } => factor * of.apply(x),
            FnKind::Compose { outer, map } => outer.apply(map.apply(x)),
            FnKind::Average { weights, maps, of } => {
                let values: Vec<f64> = maps.iter().map(|m| of.apply(m.apply(x))).collect();
                convex_combination(weights, &values)
            }
            FnKind::Grid(g) | FnKind::GridWithOverrides(g) => g.eval(x),
        }
    }

    /// Points where the function is defined by an exact override, plus the
    /// feature points of any map it is composed with.
    pub fn feature_points(&self) -> Vec<f64> {
        match &self.kind {
            FnKind::Grid(g) | FnKind::GridWithOverrides(g) => g.overrides.iter().map(|o| o.0).collect(),
            FnKind::Sum { terms: parts } | FnKind::Product { factors: parts } => {
                parts.iter().flat_map(FunctionRep::feature_points).collect()
            }
            FnKind::Scale { of, .. } => of.feature_points(),
            FnKind::Compose { outer, map } => {
                let mut pts = outer.feature_points();
                pts.extend(map.feature_points());
                pts
            }
            FnKind::Average { maps, of, .. } => {
                let mut pts = of.feature_points();
                pts.extend(maps.iter().flat_map(UnitMap::feature_points));
                pts
            }
            _ => Vec::new(),
        }
    }
}

/// `Σ wᵢ vᵢ` for probability weights, clamped into `[min vᵢ, max vᵢ]`.
///
/// A convex combination always lies in that range; the clamp only removes
/// round-off when the weights do not sum to exactly one in floating point.
pub fn convex_combination(weights: &[f64], values: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for (w, v) in weights.iter().zip(values) {
        if *w == 0.0 {
            continue;
        }
        lo = lo.min(*v);
        hi = hi.max(*v);
        acc += w * v;
    }
    if lo > hi {
        return 0.0;
    }
    acc.clamp(lo, hi)
}
