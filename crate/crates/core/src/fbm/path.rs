use std::io::Write;
use std::path::Path;

use super::grid::{HurstParam, TimeGrid};
use crate::error::{Error, Result};

/// One discretized sample path on a uniform grid.
///
/// `hurst` is `None` for paths drawn from a generic covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    pub grid: TimeGrid,
    pub hurst: Option<HurstParam>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl FbmPath {
    /// `values[k+1] - values[k]` for every cell.
    pub fn increments(&self) -> Vec<f64> {
        increments(&self.values)
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("paths have at least two points")
    }

    /// Value at a grid time; `None` when `t` is not a grid point.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|k| self.values[k])
    }

    /// The same path restricted to every other grid point.
    pub fn coarsened(&self) -> Result<FbmPath> {
        let grid = self
            .grid
            .coarsened()
            .ok_or_else(|| Error::GridMismatch("cannot halve an odd number of steps".into()))?;
        Ok(FbmPath {
            grid,
            hurst: self.hurst,
            values: self.values.iter().step_by(2).copied().collect(),
            seed: self.seed,
            stream: self.stream,
        })
    }

    /// A path that is identically zero, useful as a deterministic probe.
    pub fn zero(grid: TimeGrid, hurst: Option<HurstParam>) -> FbmPath {
        let values = vec![0.0; grid.steps() + 1];
        FbmPath {
            grid,
            hurst,
            values,
            seed: 0,
            stream: 0,
        }
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.grid.points().iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    /// Writes `path_<stream>.csv` into `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let file = dir.join(format!("path_{}.csv", self.stream));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&file)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(file)
    }
}

pub fn increments(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_path_has_zero_increments() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let p = FbmPath::zero(g, None);
        assert!(p.increments().iter().all(|&d| d == 0.0));
        assert_eq!(p.increments().len(), 8);
    }

    #[test]
    fn increments_telescope() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        let p = FbmPath {
            grid: g,
            hurst: None,
            values: vec![0.0, 0.3, -0.2, 1.5, 0.7],
            seed: 1,
            stream: 0,
        };
        let s: f64 = p.increments().iter().sum();
        assert!((s - p.terminal()).abs() < 1e-15);
        let c = p.coarsened().unwrap();
        assert_eq!(c.values, vec![0.0, -0.2, 0.7]);
        assert_eq!(p.value_at(1.0), Some(-0.2));
    }

    #[test]
    fn csv_layout() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let p = FbmPath::zero(g, None);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,value");
        assert_eq!(lines.len(), 4);
    }
}
