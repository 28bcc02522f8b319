use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of `[0, T]` into `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("T", "horizon must be a positive finite number"));
        }
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one step"));
        }
        let nf = n as f64;
        let mut points: Vec<f64> = (0..=n).map(|k| k as f64 * horizon / nf).collect();
        points[n] = horizon;
        Ok(Self { horizon, points })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps (cells).
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn t(&self, k: usize) -> f64 {
        self.points[k]
    }

    /// Index of the grid point equal to `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.step_size()).round();
        if k < 0.0 || k > self.steps() as f64 {
            return None;
        }
        let k = k as usize;
        let tol = 1e-12 * self.horizon.max(1.0);
        ((self.points[k] - t).abs() <= tol).then_some(k)
    }

    /// The grid with half as many steps, sharing every other point.
    pub fn coarsened(&self) -> Option<TimeGrid> {
        let n = self.steps();
        n.is_multiple_of(2)
            .then(|| TimeGrid::new(self.horizon, n / 2).expect("valid grid"))
    }
}

/// Hurst index restricted to the long-memory range `(1/2, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.5 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::invalid(
                "H",
                format!("Hurst index {h} must lie in the open interval (1/2, 1)"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        HurstParam::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = TimeGrid::new(0.3, 7).unwrap();
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[7], 0.3);
        for k in 0..=7 {
            assert_eq!(g.t(k), if k == 7 { 0.3 } else { k as f64 * 0.3 / 7.0 });
        }
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 4).is_err());
    }

    #[test]
    fn index_lookup() {
        let g = TimeGrid::new(1.0, 256).unwrap();
        assert_eq!(g.index_of(0.25), Some(64));
        assert_eq!(g.index_of(1.0), Some(256));
        assert_eq!(g.index_of(0.001), None);
        assert_eq!(g.coarsened().unwrap().steps(), 128);
    }

    #[test]
    fn hurst_open_interval() {
        assert!(HurstParam::new(0.5).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(0.75).is_ok());
        assert!(HurstParam::new(0.501).is_ok());
    }
}
