use serde::{Deserialize, Serialize};

use super::function::{FnKind, FunctionRep, GridFn, Interpolation};
use crate::error::{Error, Result};

fn default_m() -> usize {
    1024
}

fn one() -> f64 {
    1.0
}

/// Evaluation points: `M + 1` uniform abscissae on `[x_min, x_max]` plus any
/// extra points (orbit points of a swap map, say) that must be hit exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "one")]
    pub x_max: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_points: Vec<f64>,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { m: default_m(), x_min: 0.0, x_max: 1.0, extra_points: Vec::new() }
    }
}

impl SampleGrid {
    pub fn new(m: usize, x_min: f64, x_max: f64) -> Result<Self> {
        let grid = SampleGrid { m, x_min, x_max, extra_points: Vec::new() };
        grid.validate()?;
        Ok(grid)
    }

    pub fn unit(m: usize) -> Self {
        SampleGrid { m, ..SampleGrid::default() }
    }

    pub fn with_extra_points(mut self, extra: impl IntoIterator<Item = f64>) -> Result<Self> {
        self.extra_points.extend(extra);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParams("grid needs M >= 1".into()));
        }
        if !(0.0 <= self.x_min && self.x_min < self.x_max && self.x_max <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "grid span [{}, {}] must be a nonempty subinterval of [0,1]",
                self.x_min, self.x_max
            )));
        }
        if let Some(p) = self.extra_points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParams(format!("extra grid point {p} outside [0,1]")));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / self.m as f64
    }

    pub fn uniform_point(&self, i: usize) -> f64 {
        if i == self.m {
            self.x_max
        } else {
            self.x_min + (self.x_max - self.x_min) * i as f64 / self.m as f64
        }
    }

    pub fn uniform_points(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.uniform_point(i)).collect()
    }

    /// All evaluation points, sorted and deduplicated.
    pub fn points(&self) -> Vec<f64> {
        let mut pts = self.uniform_points();
        pts.extend(self.extra_points.iter().copied());
        sort_dedup(&mut pts);
        pts
    }

    /// Builds a grid function from values at [`SampleGrid::points`]. Points
    /// that are not uniform abscissae become exact overrides, as does every
    /// entry of `pinned`.
    pub fn function_from_samples(&self, points: &[f64], values: &[f64], pinned: &[(f64, f64)]) -> Result<FunctionRep> {
        assert_eq!(points.len(), values.len());
        let uniform = self.uniform_points();
        let mut grid_values = vec![0.0; uniform.len()];
        let mut overrides = Vec::new();
        let mut j = 0;
        for (&p, &v) in points.iter().zip(values) {
            while j < uniform.len() && uniform[j] < p {
                j += 1;
            }
            if j < uniform.len() && uniform[j] == p {
                grid_values[j] = v;
            } else {
                overrides.push((p, v));
            }
        }
        for &(p, v) in pinned {
            if let Some(o) = overrides.iter_mut().find(|o| o.0 == p) {
                o.1 = v;
            } else {
                overrides.push((p, v));
            }
        }
        let g = GridFn {
            values: grid_values,
            interpolation: Interpolation::Linear,
            x_min: self.x_min,
            x_max: self.x_max,
            overrides,
        };
        if g.overrides.is_empty() {
            FunctionRep::from_kind(FnKind::Grid(g))
        } else {
            FunctionRep::from_kind(FnKind::GridWithOverrides(g))
        }
    }
}

pub(crate) fn sort_dedup(pts: &mut Vec<f64>) {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
}
