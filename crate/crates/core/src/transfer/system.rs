use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::funcspace::{compose_map_power, convex_combination, UnitMap};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finite family of unit maps with probability weights: the countable
/// realisation of the random map `f(x, ω)`.
#[derive(Debug, Clone)]
pub struct WeightedSystem {
    maps: Vec<UnitMap>,
    weights: Vec<f64>,
    periodic_order: Option<usize>,
    truncated_mass: f64,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for WeightedSystem {
    fn eq(&self, other: &Self) -> bool {
        self.maps == other.maps
            && self.weights == other.weights
            && self.periodic_order == other.periodic_order
            && self.truncated_mass == other.truncated_mass
    }
}

fn check_points(maps: &[UnitMap]) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
    pts.extend(maps.iter().flat_map(UnitMap::feature_points));
    crate::funcspace::sort_dedup(&mut pts);
    pts
}

impl WeightedSystem {
    pub fn new(maps: Vec<UnitMap>, weights: Vec<f64>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidSystem("system needs at least one map".into()));
        }
        if maps.len() != weights.len() {
            return Err(Error::InvalidSystem(format!("{} maps but {} weights", maps.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSystem(format!("weight {w} is not a finite nonnegative real")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSystem(format!("weights sum {total}, expected 1")));
        }
        for m in &maps {
            m.validate()?;
        }
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidSystem(format!("weights unusable for sampling: {e}")))?;
        Ok(WeightedSystem { maps, weights, periodic_order: None, truncated_mass: 0.0, sampler })
    }

    /// `{f⁰, f¹, …, f^N}` with the given weights, for an `f` with `f^{N+1} = id`.
    pub fn periodic(f: UnitMap, weights: Vec<f64>) -> Result<Self> {
        let maps = (0..weights.len()).map(|n| compose_map_power(&f, n)).collect();
        let order = weights.len();
        WeightedSystem::new(maps, weights)?.with_periodic_order(order)
    }

    /// Declares `maps = {f⁰, …, f^N}` with `f^{N+1} = id`; both facts are
    /// checked on a test grid plus the maps' feature points.
    pub fn with_periodic_order(mut self, order: usize) -> Result<Self> {
        if order != self.maps.len() {
            return Err(Error::InvalidSystem(format!(
                "periodic order {order} must equal the number of maps {}",
                self.maps.len()
            )));
        }
        let pts = check_points(&self.maps);
        let f = if order > 1 { self.maps[1].clone() } else { UnitMap::Identity };
        for (n, map) in self.maps.iter().enumerate() {
            let expected = compose_map_power(&f, n);
            if let Some(x) = pts.iter().find(|&&x| map.apply(x) != expected.apply(x)) {
                return Err(Error::InvalidSystem(format!("map {n} is not f^{n} at x = {x}")));
            }
        }
        let cycle = compose_map_power(&f, order);
        if let Some(x) = pts.iter().find(|&&x| cycle.apply(x) != x) {
            return Err(Error::InvalidSystem(format!("f^{order} is not the identity at x = {x}")));
        }
        self.periodic_order = Some(order);
        Ok(self)
    }

    /// Truncates a countable family: terms are taken until the remaining mass
    /// is at most `tau`, the rest is dropped and the kept weights renormalised.
    /// The induced sup-norm error on `T h` is at most
    /// [`WeightedSystem::truncation_error_bound`].
    pub fn from_countable<I>(terms: I, tau: f64, max_terms: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (UnitMap, f64)>,
    {
        let mut maps = Vec::new();
        let mut weights = Vec::new();
        let mut mass = 0.0;
        for (map, w) in terms.into_iter().take(max_terms) {
            maps.push(map);
            weights.push(w);
            mass += w;
            if 1.0 - mass <= tau {
                break;
            }
        }
        let dropped = (1.0 - mass).max(0.0);
        if dropped > tau {
            return Err(Error::InvalidSystem(format!("{max_terms} terms leave mass {dropped} > tau = {tau}")));
        }
        let weights = weights.iter().map(|w| w / mass).collect();
        let mut sys = WeightedSystem::new(maps, weights)?;
        sys.truncated_mass = dropped;
        Ok(sys)
    }

    pub fn maps(&self) -> &[UnitMap] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn periodic_order(&self) -> Option<usize> {
        self.periodic_order
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn truncation_error_bound(&self, bound: f64) -> f64 {
        2.0 * bound * self.truncated_mass
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.weights.len() as f64;
        self.weights.iter().all(|w| (w - u).abs() <= WEIGHT_SUM_TOL)
    }

    /// Draws a letter index according to the weights.
    pub fn sample_letter<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    /// `Σ p_n f_n(x)`.
    pub fn mean_map(&self, x: f64) -> f64 {
        let images: Vec<f64> = self.maps.iter().map(|m| m.apply(x)).collect();
        convex_combination(&self.weights, &images)
    }
}
