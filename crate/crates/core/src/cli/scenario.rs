use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calculus::QuadratureConfig;
use crate::equilibrium::{GameSpec, PlayerSpec, SolverConfig};
use crate::error::{Error, Result};
use crate::fbm::{HurstParam, Method};

use super::report::ReportFormat;

/// Model parameters, keyed by their conventional symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    #[serde(rename = "N")]
    pub n: usize,
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub x: f64,
    pub gamma_prime: f64,
}

fn default_grid() -> usize {
    256
}
fn default_paths() -> usize {
    100_000
}
fn default_quad_tol() -> f64 {
    1e-10
}
fn default_m_tol() -> f64 {
    1e-12
}
fn default_method() -> Method {
    Method::Circulant
}
fn default_sample_paths() -> usize {
    4
}
fn default_endpoint_paths() -> usize {
    1000
}
fn default_argmax_pairs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_m_tol")]
    pub m_tol: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_sample_paths")]
    pub sample_paths: usize,
    #[serde(default = "default_endpoint_paths")]
    pub endpoint_paths: usize,
    #[serde(default = "default_argmax_pairs")]
    pub argmax_pairs: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            paths: default_paths(),
            seed: 0,
            quad_tol: default_quad_tol(),
            m_tol: default_m_tol(),
            method: default_method(),
            sample_paths: default_sample_paths(),
            endpoint_paths: default_endpoint_paths(),
            argmax_pairs: default_argmax_pairs(),
        }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Jsonl, ReportFormat::Table]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// A scenario file: the game, its players, numerical settings and output
/// locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub game: GameSection,
    pub players: Vec<PlayerSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

impl Scenario {
    /// Parses and validates JSON text. Errors name the offending key, e.g.
    /// `game.H` or `players[0].c`.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.game.n != self.players.len() {
            return Err(Error::invalid(
                "game.N",
                format!("declares {} players but {} are listed", self.game.n, self.players.len()),
            ));
        }
        self.spec()?;
        let nm = &self.numerics;
        if nm.grid < 2 {
            return Err(Error::invalid("numerics.grid", "at least two steps are required"));
        }
        if nm.paths < 2 {
            return Err(Error::invalid("numerics.paths", "at least two paths are required"));
        }
        self.solver()?;
        Ok(())
    }

    /// The validated game.
    pub fn spec(&self) -> Result<GameSpec> {
        let g = &self.game;
        let hurst = HurstParam::new(g.hurst).map_err(|_| {
            Error::invalid(
                "game.H",
                format!("Hurst index {} must lie in the open interval (1/2, 1)", g.hurst),
            )
        })?;
        let spec = GameSpec {
            players: self.players.clone(),
            r: g.r,
            c: g.c,
            horizon: g.horizon,
            hurst,
            gamma_prime: g.gamma_prime,
            x: g.x,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let quad = QuadratureConfig::with_tol(self.numerics.quad_tol);
        quad.validate()
            .map_err(|_| Error::invalid("numerics.quad_tol", "must lie in (0, 1e-2]"))?;
        if !(self.numerics.m_tol > 0.0 && self.numerics.m_tol < 1.0) {
            return Err(Error::invalid("numerics.m_tol", "must lie in (0, 1)"));
        }
        Ok(SolverConfig {
            quad,
            m_tol: self.numerics.m_tol,
        })
    }

    /// Builds a scenario around an existing game.
    pub fn from_spec(spec: &GameSpec, numerics: Numerics, outputs: Outputs) -> Self {
        Self {
            game: GameSection {
                n: spec.n_players(),
                r: spec.r,
                c: spec.c,
                horizon: spec.horizon,
                hurst: spec.hurst.value(),
                x: spec.x,
                gamma_prime: spec.gamma_prime,
            },
            players: spec.players.clone(),
            numerics,
            outputs,
        }
    }
}
