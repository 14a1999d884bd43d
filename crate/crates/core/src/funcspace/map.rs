use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A self-map of `[0, 1]` that fixes both endpoints.
///
/// The family is closed under composition, which is what allows branch
/// enumeration of the transfer-operator iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitMap {
    /// `x ↦ x^e`, `e ≥ 1`.
    Power {
        exponent: f64,
    },
    /// `x ↦ 1 − (1 − x)^e`, `e ≥ 1`.
    MirrorPower {
        exponent: f64,
    },
    /// Linear interpolation through knots that start at `(0,0)` and end at `(1,1)`.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    /// Swaps each listed `u ↔ v` and is the identity everywhere else.
    PointSwap {
        pairs: Vec<(f64, f64)>,
    },
    Identity,
    /// Applies `maps[0]` first, then `maps[1]`, and so on.
    Composition {
        maps: Vec<UnitMap>,
    },
}

fn pow_unit(x: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent <= i32::MAX as f64 {
        x.powi(exponent as i32)
    } else {
        x.powf(exponent)
    }
}

impl UnitMap {
    pub fn power(exponent: f64) -> Result<Self> {
        let map = UnitMap::Power { exponent };
        map.validate()?;
        Ok(map)
    }

    pub fn mirror_power(exponent: f64) -> Result<Self> {
        let map = UnitMap::MirrorPower { exponent };
        map.validate()?;
        Ok(map)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let map = UnitMap::PiecewiseLinear { knots };
        map.validate()?;
        Ok(map)
    }

    pub fn point_swap(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let map = UnitMap::PointSwap { pairs };
        map.validate()?;
        Ok(map)
    }

    pub fn composition(maps: Vec<UnitMap>) -> Result<Self> {
        let map = UnitMap::Composition { maps };
        map.validate()?;
        Ok(map)
    }

    /// Checks the structural invariants of the map (and of every component of
    /// a composition).
    pub fn validate(&self) -> Result<()> {
        match self {
            UnitMap::Power { exponent } | UnitMap::MirrorPower { exponent } => {
                if !exponent.is_finite() || *exponent < 1.0 {
                    return Err(Error::InvalidMap(format!("exponent must be a finite real >= 1, got {exponent}")));
                }
            }
            UnitMap::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidMap("piecewise_linear needs at least two knots".into()));
                }
                if knots[0] != (0.0, 0.0) || knots[knots.len() - 1] != (1.0, 1.0) {
                    return Err(Error::InvalidMap(
                        "piecewise_linear knots must start at (0,0) and end at (1,1)".into(),
                    ));
                }
                for w in knots.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return Err(Error::InvalidMap(format!(
                            "knot abscissae must be strictly increasing ({} then {})",
                            w[0].0, w[1].0
                        )));
                    }
                }
                if let Some(&(x, y)) = knots.iter().find(|(_, y)| !(0.0..=1.0).contains(y)) {
                    return Err(Error::InvalidMap(format!("knot ({x}, {y}) leaves [0,1]")));
                }
            }
            UnitMap::PointSwap { pairs } => {
                let mut seen: Vec<f64> = Vec::with_capacity(2 * pairs.len());
                for &(u, v) in pairs {
                    for p in [u, v] {
                        if !(p > 0.0 && p < 1.0) {
                            return Err(Error::InvalidMap(format!(
                                "swap point {p} must lie in the open interval (0,1)"
                            )));
                        }
                        if seen.contains(&p) {
                            return Err(Error::InvalidMap(format!("swap point {p} listed twice")));
                        }
                        seen.push(p);
                    }
                    if u == v {
                        return Err(Error::InvalidMap(format!("swap pair ({u}, {v}) is degenerate")));
                    }
                }
            }
            UnitMap::Identity => {}
            UnitMap::Composition { maps } => {
                for m in maps {
                    m.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Evaluates the map, rejecting points outside `[0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        Ok(self.apply(x))
    }

    /// Evaluates the map without the domain check. `x` must lie in `[0, 1]`.
    pub fn apply(&self, x: f64) -> f64 {
        let y = match self {
            UnitMap::Power { exponent } => pow_unit(x, *exponent),
            UnitMap::MirrorPower { exponent } => 1.0 - pow_unit(1.0 - x, *exponent),
            UnitMap::PiecewiseLinear { knots } => {
                // first knot with abscissa >= x
                let i = knots.partition_point(|k| k.0 < x);
                if i == 0 {
                    knots[0].1
                } else if i == knots.len() {
                    knots[knots.len() - 1].1
                } else {
                    let (x0, y0) = knots[i - 1];
                    let (x1, y1) = knots[i];
                    if x == x1 {
                        y1
                    } else {
                        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                    }
                }
            }
            UnitMap::PointSwap { pairs } => {
                let mut y = x;
                for &(u, v) in pairs {
                    if x == u {
                        y = v;
                        break;
                    }
                    if x == v {
                        y = u;
                        break;
                    }
                }
                y
            }
            UnitMap::Identity => x,
            UnitMap::Composition { maps } => maps.iter().fold(x, |acc, m| m.apply(acc)),
        };
        y.clamp(0.0, 1.0)
    }

    /// True when the map is nondecreasing by construction.
    pub fn is_nondecreasing(&self) -> bool {
        match self {
            UnitMap::Power { .. } | UnitMap::MirrorPower { .. } | UnitMap::Identity => true,
            UnitMap::PiecewiseLinear { knots } => knots.windows(2).all(|w| w[0].1 <= w[1].1),
            UnitMap::PointSwap { pairs } => pairs.is_empty(),
            UnitMap::Composition { maps } => maps.iter().all(UnitMap::is_nondecreasing),
        }
    }

    /// Points where the map is non-smooth or acts non-trivially in isolation
    /// (knots, swap points). Grid-based checks add these to their probe sets.
    pub fn feature_points(&self) -> Vec<f64> {
        match self {
            UnitMap::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            UnitMap::PointSwap { pairs } => pairs.iter().flat_map(|&(u, v)| [u, v]).collect(),
            UnitMap::Composition { maps } => maps.iter().flat_map(UnitMap::feature_points).collect(),
            _ => Vec::new(),
        }
    }
}

/// `f^n` as an `n`-fold composition; `f^0` is the identity.
pub fn compose_map_power(f: &UnitMap, n: usize) -> UnitMap {
    match n {
        0 => UnitMap::Identity,
        1 => f.clone(),
        _ => UnitMap::Composition { maps: vec![f.clone(); n] },
    }
}
