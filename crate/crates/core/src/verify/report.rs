use serde::{Deserialize, Deserializer, Serialize};

/// Number of standard errors allowed by the tolerance rule.
pub const STDERR_MULTIPLE: f64 = 4.0;

pub const RULE: &str = "|estimate - target| <= 4*stderr + allowance";

fn nullable<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub check: String,
    #[serde(deserialize_with = "nullable")]
    pub estimate: f64,
    #[serde(deserialize_with = "nullable")]
    pub target: f64,
    #[serde(deserialize_with = "nullable")]
    pub stderr: f64,
    #[serde(deserialize_with = "nullable")]
    pub allowance: f64,
    pub rule: String,
    pub pass: bool,
    pub samples: usize,
    pub grid: usize,
    pub seed: u64,
}

impl McReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check: impl Into<String>,
        estimate: f64,
        target: f64,
        stderr: f64,
        allowance: f64,
        samples: usize,
        grid: usize,
        seed: u64,
    ) -> Self {
        let mut r = Self {
            check: check.into(),
            estimate,
            target,
            stderr,
            allowance,
            rule: RULE.to_string(),
            pass: false,
            samples,
            grid,
            seed,
        };
        r.pass = r.recompute_pass();
        r
    }

    /// A deterministic check: passes when `|estimate - target| <= allowance`.
    pub fn exact(
        check: impl Into<String>,
        estimate: f64,
        target: f64,
        allowance: f64,
        samples: usize,
        grid: usize,
        seed: u64,
    ) -> Self {
        Self::new(check, estimate, target, 0.0, allowance, samples, grid, seed)
    }

    pub fn recompute_pass(&self) -> bool {
        (self.estimate - self.target).abs() <= STDERR_MULTIPLE * self.stderr + self.allowance
    }
}

/// Streaming mean and standard error (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Stat {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Stat {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// NaN below two samples, so that such a report can never pass.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Discretization allowance from the estimates on a grid and on its
/// refinement: twice their difference, capped at 2% of the target.
pub fn refinement_allowance(coarse: f64, fine: f64, target: f64) -> f64 {
    (2.0 * (coarse - fine).abs()).min(0.02 * target.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_follows_rule() {
        let r = McReport::new("x", 1.09, 1.0, 0.02, 0.02, 10, 8, 1);
        assert!(r.pass);
        let r = McReport::new("x", 1.11, 1.0, 0.02, 0.02, 10, 8, 1);
        assert!(!r.pass);
        assert_eq!(r.recompute_pass(), r.pass);
    }

    #[test]
    fn welford_matches_direct() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let mut s = Stat::default();
        xs.iter().for_each(|&x| s.push(x));
        assert_eq!(s.mean(), 3.5);
        let var = xs.iter().map(|x| (x - 3.5f64).powi(2)).sum::<f64>() / 3.0;
        assert!((s.stderr() - (var / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn allowance_is_capped() {
        assert!((refinement_allowance(1.0, 1.001, 1.0) - 0.002).abs() < 1e-12);
        assert_eq!(refinement_allowance(1.0, 2.0, 1.0), 0.02);
        assert_eq!(refinement_allowance(0.1, 0.2, 0.0), 0.0);
    }

    #[test]
    fn null_reads_as_nan() {
        let r: McReport = serde_json::from_str(
            r#"{"check":"c","estimate":null,"target":1,"stderr":0,"allowance":0,"rule":"r","pass":false,"samples":0,"grid":1,"seed":2}"#,
        )
        .unwrap();
        assert!(r.estimate.is_nan());
    }
}
