use serde::{Deserialize, Serialize};

use crate::calculus::RealFunction;
use crate::error::{Error, Result};
use crate::fbm::HurstParam;

/// A time-dependent coefficient: a constant or a linearly interpolated table
/// of `[t, value]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    Constant(f64),
    Table(Vec<[f64; 2]>),
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Table(rows) => {
                let i = rows.partition_point(|r| r[0] <= t);
                if i == 0 {
                    return rows[0][1];
                }
                if i >= rows.len() {
                    return rows[rows.len() - 1][1];
                }
                let ([t0, v0], [t1, v1]) = (rows[i - 1], rows[i]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Table abscissae strictly inside `(lo, hi)`.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            Coefficient::Constant(_) => Vec::new(),
            Coefficient::Table(rows) => rows.iter().map(|r| r[0]).filter(|&t| t > lo && t < hi).collect(),
        }
    }

    /// Minimum over `[0, horizon]`; attained at a node or an end.
    pub fn min_on(&self, horizon: f64) -> f64 {
        let mut m = self.eval(0.0).min(self.eval(horizon));
        for t in self.breakpoints(0.0, horizon) {
            m = m.min(self.eval(t));
        }
        m
    }

    pub fn to_function(&self, horizon: f64) -> Result<RealFunction> {
        match self {
            Coefficient::Constant(v) => RealFunction::constant(*v, 0.0, horizon),
            Coefficient::Table(_) => {
                let mut pts = vec![(0.0, self.eval(0.0))];
                pts.extend(self.breakpoints(0.0, horizon).into_iter().map(|t| (t, self.eval(t))));
                pts.push((horizon, self.eval(horizon)));
                RealFunction::piecewise_linear(pts)
            }
        }
    }

    fn validate(&self, name: &str, horizon: f64) -> Result<()> {
        match self {
            Coefficient::Constant(v) if !v.is_finite() => Err(Error::invalid(name, "must be finite")),
            Coefficient::Constant(_) => Ok(()),
            Coefficient::Table(rows) => {
                if rows.is_empty() {
                    return Err(Error::invalid(name, "table must not be empty"));
                }
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(name, "table entries must be finite"));
                }
                if rows.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::invalid(name, "table times must be strictly increasing"));
                }
                if rows[0][0] > 0.0 || rows[rows.len() - 1][0] < horizon {
                    return Err(Error::invalid(name, format!("table must cover [0, {horizon}]")));
                }
                Ok(())
            }
        }
    }
}

fn default_running() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub alpha: Coefficient,
    pub beta: Coefficient,
    pub c: f64,
    pub b: f64,
    pub gamma: f64,
    /// Players without a running payoff take `u = 0` and only fund the
    /// terminal claim.
    #[serde(default = "default_running")]
    pub running: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub players: Vec<PlayerSpec>,
    pub r: f64,
    pub c: f64,
    pub horizon: f64,
    pub hurst: HurstParam,
    pub gamma_prime: f64,
    pub x: f64,
}

impl GameSpec {
    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// Checks every hypothesis of the existence result, naming the offending
    /// field as it appears in a scenario file.
    pub fn validate(&self) -> Result<()> {
        if self.players.is_empty() {
            return Err(Error::invalid("players", "at least one player is required"));
        }
        if !self.r.is_finite() {
            return Err(Error::invalid("game.r", "must be finite"));
        }
        if !self.c.is_finite() {
            return Err(Error::invalid("game.C", "must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("game.T", "horizon must be positive and finite"));
        }
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(Error::invalid("game.x", "initial state must be positive"));
        }
        if !(self.gamma_prime > 0.0 && self.gamma_prime < 1.0) {
            return Err(Error::invalid("game.gamma_prime", "CRRA exponent must lie in (0,1)"));
        }
        for (i, p) in self.players.iter().enumerate() {
            let name = |f: &str| format!("players[{i}].{f}");
            if !(p.gamma > 0.0 && p.gamma < 1.0) {
                return Err(Error::invalid(name("gamma"), "CRRA exponent must lie in (0,1)"));
            }
            if !(p.c > 0.0 && p.c.is_finite()) {
                return Err(Error::invalid(name("c"), "running weight must be positive"));
            }
            if !(p.b > 0.0 && p.b.is_finite()) {
                return Err(Error::invalid(name("b"), "terminal weight must be positive"));
            }
            p.alpha.validate(&name("alpha"), self.horizon)?;
            p.beta.validate(&name("beta"), self.horizon)?;
            if p.running && !(p.alpha.min_on(self.horizon) > 0.0) {
                return Err(Error::invalid(
                    name("alpha"),
                    "drift-control coefficient must be bounded away from 0",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn player(gamma: f64) -> PlayerSpec {
        PlayerSpec {
            alpha: Coefficient::Constant(1.0),
            beta: Coefficient::Constant(1.0),
            c: 1.0,
            b: 1.0,
            gamma,
            running: true,
        }
    }

    fn spec(players: Vec<PlayerSpec>) -> GameSpec {
        GameSpec {
            players,
            r: 0.0,
            c: 1.0,
            horizon: 1.0,
            hurst: HurstParam::new(0.75).unwrap(),
            gamma_prime: 0.5,
            x: 1.0,
        }
    }

    #[test]
    fn accepts_two_players() {
        assert!(spec(vec![player(0.3), player(0.6)]).validate().is_ok());
    }

    #[test]
    fn rejects_each_violation_by_name() {
        let err = spec(vec![player(0.3), player(1.0)]).validate().unwrap_err();
        assert!(err.to_string().contains("players[1].gamma"));
        assert!(err.to_string().contains("(0,1)"));

        let mut p = player(0.5);
        p.alpha = Coefficient::Constant(0.0);
        let err = spec(vec![p.clone()]).validate().unwrap_err();
        assert!(err.to_string().contains("players[0].alpha"));
        p.running = false;
        assert!(spec(vec![p]).validate().is_ok());

        let mut s = spec(vec![player(0.5)]);
        s.x = 0.0;
        assert!(s.validate().unwrap_err().to_string().contains("game.x"));
        let mut s = spec(vec![player(0.5)]);
        s.gamma_prime = 1.0;
        assert!(s.validate().unwrap_err().to_string().contains("game.gamma_prime"));
    }

    #[test]
    fn table_coefficients() {
        let a = Coefficient::Table(vec![[0.0, 1.0], [1.0, 2.0]]);
        assert_eq!(a.eval(0.5), 1.5);
        assert_eq!(a.min_on(1.0), 1.0);
        let dip = Coefficient::Table(vec![[0.0, 1.0], [0.5, -0.1], [1.0, 2.0]]);
        assert_eq!(dip.min_on(1.0), -0.1);
        let mut p = player(0.5);
        p.alpha = dip;
        assert!(spec(vec![p]).validate().is_err());
        let mut p = player(0.5);
        p.beta = Coefficient::Table(vec![[0.0, 1.0], [0.8, 2.0]]);
        assert!(spec(vec![p])
            .validate()
            .unwrap_err()
            .to_string()
            .contains("players[0].beta"));
    }

    #[test]
    fn coefficient_json_shape() {
        let c: Coefficient = serde_json::from_str(r#"{"constant": 2.5}"#).unwrap();
        assert_eq!(c, Coefficient::Constant(2.5));
        let t: Coefficient = serde_json::from_str(r#"{"table": [[0, 1], [1, 2]]}"#).unwrap();
        assert_eq!(t.eval(0.25), 1.25);
        let p: PlayerSpec = serde_json::from_str(
            r#"{"alpha": {"constant": 1}, "beta": {"constant": 1}, "c": 1, "b": 1, "gamma": 0.5}"#,
        )
        .unwrap();
        assert!(p.running);
    }
}
