//! Domains and equispaced evaluation grids with trapezoidal weights.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact time interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Equispaced points over an interval with trapezoidal quadrature weights.
///
/// Serialized as `{"domain": [lo, hi], "size": G}`; points and weights are
/// rebuilt on load so they are bit-identical to the originals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct EvalGrid {
    domain: Interval,
    points: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    domain: Interval,
    size: usize,
}

impl TryFrom<GridRepr> for EvalGrid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        make_grid(r.domain, r.size)
    }
}

impl From<EvalGrid> for GridRepr {
    fn from(g: EvalGrid) -> Self {
        GridRepr {
            domain: g.domain,
            size: g.len(),
        }
    }
}

/// `g` equispaced points from `domain.lo` to `domain.hi` inclusive.
pub fn make_grid(domain: Interval, g: usize) -> Result<EvalGrid> {
    if g < 2 {
        return Err(Error::BadGridSize(g));
    }
    let step = domain.length() / (g - 1) as f64;
    let mut points: Vec<f64> = (0..g).map(|k| domain.lo + k as f64 * step).collect();
    points[g - 1] = domain.hi;
    let mut weights = alloc::vec![step; g];
    weights[0] = step / 2.0;
    weights[g - 1] = step / 2.0;
    Ok(EvalGrid {
        domain,
        points,
        weights,
    })
}

impl EvalGrid {
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.domain.length() / (self.len() - 1) as f64
    }

    /// Trapezoidal integral of values tabulated on the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Weighted inner product `sum_g w_g a_g b_g`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Index `k` and fraction `f` with `t ~ points[k] + f * step`, clamped to the domain.
    pub(crate) fn locate(&self, t: f64) -> (usize, f64) {
        let g = self.len();
        let pos = ((t - self.domain.lo) / self.step()).clamp(0.0, (g - 1) as f64);
        let k = libm::floor(pos) as usize;
        let k = k.min(g - 2);
        (k, pos - k as f64)
    }

    /// Linear interpolation of grid-tabulated values at `t` (clamped to the domain).
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let (k, f) = self.locate(t);
        let a = values[k];
        let b = values[k + 1];
        a + (b - a) * f
    }
}

/// Linear interpolation of scattered `(times, values)` at `x`, holding the
/// nearest value constant outside `[times[0], times[last]]`.
pub(crate) fn interpolate_scattered(times: &[f64], values: &[f64], x: f64) -> f64 {
    let n = times.len();
    if x <= times[0] {
        return values[0];
    }
    if x >= times[n - 1] {
        return values[n - 1];
    }
    let j = times.partition_point(|&t| t <= x);
    let (t0, t1) = (times[j - 1], times[j]);
    let (v0, v1) = (values[j - 1], values[j]);
    v0 + (v1 - v0) * ((x - t0) / (t1 - t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_point_grid() {
        let g = make_grid(Interval::new(0.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn two_point_grid() {
        let g = make_grid(Interval::new(0.0, 2.0).unwrap(), 2).unwrap();
        assert_eq!(g.points(), &[0.0, 2.0]);
        assert_eq!(g.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn weights_sum_101() {
        let g = make_grid(Interval::new(0.0, 1.0).unwrap(), 101).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_grid_and_bad_interval() {
        let d = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(make_grid(d, 1), Err(Error::BadGridSize(1)));
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn interpolation_hits_nodes_and_midpoints() {
        let g = make_grid(Interval::new(0.0, 1.0).unwrap(), 3).unwrap();
        let v = [1.0, 3.0, 2.0];
        assert_eq!(g.interpolate(&v, 0.0), 1.0);
        assert_eq!(g.interpolate(&v, 1.0), 2.0);
        assert_eq!(g.interpolate(&v, 0.25), 2.0);
        assert_eq!(g.interpolate(&v, 2.0), 2.0);
        assert_eq!(interpolate_scattered(&[0.2, 0.6], &[1.0, 3.0], 0.4), 2.0);
        assert_eq!(interpolate_scattered(&[0.2, 0.6], &[1.0, 3.0], 0.0), 1.0);
    }

    proptest! {
        #[test]
        fn weights_sum_to_length(lo in -100.0f64..100.0, len in 1e-3f64..50.0, g in 2usize..400) {
            let d = Interval::new(lo, lo + len).unwrap();
            let grid = make_grid(d, g).unwrap();
            let s: f64 = grid.weights().iter().sum();
            prop_assert!((s - d.length()).abs() <= 1e-12 * d.length().max(1.0));
            prop_assert!(grid.weights().iter().all(|&w| w > 0.0));
            prop_assert_eq!(grid.points()[0], d.lo());
            prop_assert_eq!(grid.points()[g - 1], d.hi());
            prop_assert!(grid.points().windows(2).all(|w| w[0] < w[1]));
        }
    }
}
