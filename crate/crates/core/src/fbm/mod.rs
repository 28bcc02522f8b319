//! Fractional Brownian motion: covariance structure and exact path synthesis.

mod covariance;
mod grid;
mod path;
mod synth;

pub use covariance::{autocov, autocov_raw, fgn_autocov, phi, CovarianceSpec};
pub use grid::{HurstParam, TimeGrid};
pub use path::{increments, FbmPath};
pub use synth::{generate_generic, generate_paths, stream_rng, FbmSampler, GenericSampler, Method};
