//! One-dimensional contraction maps carrying a domain interval onto a region
//! interval: affine similitudes for freshly assembled systems, piecewise-affine
//! maps for systems conjugated by an abscissa rescaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Interval, Orientation};

/// Affine map `x -> a x + b` carrying `source` onto `target` with
/// `|a| = |target| / |source| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap1D {
    pub a: f64,
    pub b: f64,
    pub source: Interval,
    pub target: Interval,
}

/// Builds the affine map for one region: endpoints of the domain map onto
/// endpoints of the region, in the order selected by `orientation`.
pub fn build_affine_map(
    domain: Interval,
    region: Interval,
    orientation: Orientation,
) -> Result<AffineMap1D> {
    let ratio = region.len() / domain.len();
    if ratio.is_nan() || ratio >= 1.0 {
        return Err(Error::NotContractive { ratio });
    }
    let (a, b) = match orientation {
        Orientation::Increasing => {
            let a = ratio;
            (a, region.lo - a * domain.lo)
        }
        Orientation::Decreasing => {
            let a = -ratio;
            (a, region.hi - a * domain.lo)
        }
    };
    Ok(AffineMap1D {
        a,
        b,
        source: domain,
        target: region,
    })
}

impl AffineMap1D {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * x + self.b
    }

    pub fn inverse_eval(&self, y: f64) -> f64 {
        (y - self.b) / self.a
    }

    pub fn contraction_ratio(&self) -> f64 {
        self.a.abs()
    }

    pub fn orientation(&self) -> Orientation {
        if self.a >= 0.0 {
            Orientation::Increasing
        } else {
            Orientation::Decreasing
        }
    }
}

/// Strictly monotone piecewise-affine map given by knot pairs
/// `(xs[j], ys[j])`; `xs` increasing, `ys` increasing or decreasing.
///
/// Evaluation is exact at the knots: a knot input returns its stored knot
/// output with no arithmetic applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    increasing: bool,
}

impl PlMap {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::Config(
                "piecewise map needs at least two knot pairs of equal length".into(),
            ));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::OrderViolated);
        }
        let increasing = ys[ys.len() - 1] > ys[0];
        let ordered = if increasing {
            ys.windows(2).all(|w| w[0] < w[1])
        } else {
            ys.windows(2).all(|w| w[0] > w[1])
        };
        if !ordered {
            return Err(Error::OrderViolated);
        }
        Ok(PlMap { xs, ys, increasing })
    }

    /// Identity map on the knots `xs` (used by rescalings with no movement).
    pub fn identity(xs: Vec<f64>) -> Result<Self> {
        let ys = xs.clone();
        PlMap::new(xs, ys)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn source(&self) -> Interval {
        Interval::new(self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn target(&self) -> Interval {
        let (lo, hi) = if self.increasing {
            (self.ys[0], self.ys[self.ys.len() - 1])
        } else {
            (self.ys[self.ys.len() - 1], self.ys[0])
        };
        Interval::new(lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            if x == self.xs[0] {
                return self.ys[0];
            }
            // extrapolate on the first piece
            let w = (x - self.xs[0]) / (self.xs[1] - self.xs[0]);
            return self.ys[0] + w * (self.ys[1] - self.ys[0]);
        }
        if x >= self.xs[n - 1] {
            if x == self.xs[n - 1] {
                return self.ys[n - 1];
            }
            let w = (x - self.xs[n - 2]) / (self.xs[n - 1] - self.xs[n - 2]);
            return self.ys[n - 2] + w * (self.ys[n - 1] - self.ys[n - 2]);
        }
        // segment with xs[j] <= x < xs[j+1]
        let j = self.xs.partition_point(|&v| v <= x) - 1;
        if x == self.xs[j] {
            return self.ys[j];
        }
        let w = (x - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
        self.ys[j] + w * (self.ys[j + 1] - self.ys[j])
    }

    pub fn inverse_eval(&self, y: f64) -> f64 {
        self.inverse().eval(y)
    }

    /// The inverse map, produced by swapping knot roles.
    pub fn inverse(&self) -> PlMap {
        let mut xs: Vec<f64> = self.ys.clone();
        let mut ys: Vec<f64> = self.xs.clone();
        if !self.increasing {
            xs.reverse();
            ys.reverse();
        }
        PlMap {
            xs,
            ys,
            increasing: self.increasing,
        }
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(xw, yw)| ((yw[1] - yw[0]) / (xw[1] - xw[0])).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_abs_slope(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(xw, yw)| ((yw[1] - yw[0]) / (xw[1] - xw[0])).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// A region map: affine in freshly assembled systems, piecewise-affine after
/// conjugation by an abscissa rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Map1D {
    Affine(AffineMap1D),
    Piecewise(PlMap),
}

impl Map1D {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Map1D::Affine(m) => m.eval(x),
            Map1D::Piecewise(m) => m.eval(x),
        }
    }

    pub fn inverse_eval(&self, y: f64) -> f64 {
        match self {
            Map1D::Affine(m) => m.inverse_eval(y),
            Map1D::Piecewise(m) => m.inverse_eval(y),
        }
    }

    pub fn source(&self) -> Interval {
        match self {
            Map1D::Affine(m) => m.source,
            Map1D::Piecewise(m) => m.source(),
        }
    }

    pub fn target(&self) -> Interval {
        match self {
            Map1D::Affine(m) => m.target,
            Map1D::Piecewise(m) => m.target(),
        }
    }

    /// Worst-case |slope|; must be < 1 for a contraction.
    pub fn max_abs_slope(&self) -> f64 {
        match self {
            Map1D::Affine(m) => m.contraction_ratio(),
            Map1D::Piecewise(m) => m.max_abs_slope(),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Map1D::Affine(m) => m.orientation(),
            Map1D::Piecewise(m) => {
                if m.is_increasing() {
                    Orientation::Increasing
                } else {
                    Orientation::Decreasing
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_increasing_basic() {
        let m = build_affine_map(
            Interval::new(0.0, 0.5),
            Interval::new(0.0, 0.25),
            Orientation::Increasing,
        )
        .unwrap();
        assert_eq!(m.a, 0.5);
        assert_eq!(m.b, 0.0);
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(0.5), 0.25);
    }

    #[test]
    fn affine_decreasing_basic() {
        let m = build_affine_map(
            Interval::new(0.0, 0.5),
            Interval::new(0.0, 0.25),
            Orientation::Decreasing,
        )
        .unwrap();
        assert_eq!(m.a, -0.5);
        assert_eq!(m.b, 0.25);
        assert_eq!(m.eval(0.0), 0.25);
        assert_eq!(m.eval(0.5), 0.0);
    }

    #[test]
    fn affine_shifted_target() {
        let m = build_affine_map(
            Interval::new(0.0, 0.5),
            Interval::new(0.25, 0.5),
            Orientation::Increasing,
        )
        .unwrap();
        assert_eq!(m.a, 0.5);
        assert_eq!(m.b, 0.25);
    }

    #[test]
    fn affine_rejects_expansion() {
        let r = build_affine_map(
            Interval::new(0.0, 0.25),
            Interval::new(0.0, 0.5),
            Orientation::Increasing,
        );
        assert!(matches!(r, Err(Error::NotContractive { .. })));
    }

    #[test]
    fn plmap_exact_at_knots() {
        let m = PlMap::new(vec![0.0, 0.3, 1.0], vec![0.0, 0.45, 1.0]).unwrap();
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(0.3), 0.45);
        assert_eq!(m.eval(1.0), 1.0);
        assert!((m.eval(0.15) - 0.225).abs() < 1e-15);
    }

    #[test]
    fn plmap_inverse_round_trip() {
        let m = PlMap::new(vec![0.0, 0.3, 1.0], vec![1.0, 0.4, 0.0]).unwrap();
        assert!(!m.is_increasing());
        for j in 0..=50 {
            let x = j as f64 / 50.0;
            let y = m.eval(x);
            assert!((m.inverse_eval(y) - x).abs() < 1e-14);
        }
    }

    #[test]
    fn plmap_rejects_non_monotone() {
        assert!(matches!(
            PlMap::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.5]),
            Err(Error::OrderViolated)
        ));
    }
}
