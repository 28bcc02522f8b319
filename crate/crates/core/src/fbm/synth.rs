use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::covariance::{fgn_autocov, CovarianceSpec};
use super::grid::{HurstParam, TimeGrid};
use super::path::FbmPath;
use crate::error::{Error, Result};

/// Dense factorizations above this many matrix entries are refused.
const MAX_DENSE_ENTRIES: usize = 1 << 26;

/// Relative threshold below which a negative embedding eigenvalue is an error.
const EMBEDDING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cholesky,
    Circulant,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(Method::Cholesky),
            "circulant" => Ok(Method::Circulant),
            other => Err(Error::invalid(
                "method",
                format!("unknown method `{other}` (expected cholesky or circulant)"),
            )),
        }
    }
}

/// Counter-based normal source: the draw sequence depends only on
/// `(seed, stream)` and the position within the stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn fill_normals(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for z in out {
        *z = rng.sample(StandardNormal);
    }
}

enum Engine {
    Cholesky {
        /// Row-major lower factor of the increment covariance.
        lower: Vec<f64>,
    },
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

/// Exact sampler for fBm on a uniform grid.
///
/// Increments are sampled first and prefix-summed. Path `stream` is a pure
/// function of `(seed, stream)`: with the circulant method, streams `2k` and
/// `2k + 1` are the real and imaginary parts of one transform keyed by `k`.
pub struct FbmSampler {
    grid: TimeGrid,
    hurst: HurstParam,
    seed: u64,
    method: Method,
    engine: Engine,
}

impl FbmSampler {
    pub fn new(grid: TimeGrid, hurst: HurstParam, method: Method, seed: u64) -> Result<Self> {
        let n = grid.steps();
        let h = hurst.value();
        let scale = grid.step_size().powf(2.0 * h);
        let engine = match method {
            Method::Cholesky => {
                if n.saturating_mul(n) > MAX_DENSE_ENTRIES {
                    return Err(Error::GridTooLarge { n });
                }
                let acov: Vec<f64> = (0..n).map(|k| scale * fgn_autocov(k, h)).collect();
                let cov = DMatrix::from_fn(n, n, |i, j| acov[i.abs_diff(j)]);
                let chol = cov
                    .cholesky()
                    .ok_or(Error::NotPositiveSemidefinite { eigenvalue: f64::NAN })?;
                let l = chol.l();
                let mut lower = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..=i {
                        lower[i * n + j] = l[(i, j)];
                    }
                }
                Engine::Cholesky { lower }
            }
            Method::Circulant => {
                let m = (2 * n).next_power_of_two();
                let mut row: Vec<Complex<f64>> = (0..m)
                    .map(|k| Complex::new(scale * fgn_autocov(k.min(m - k), h), 0.0))
                    .collect();
                let fft = FftPlanner::new().plan_fft_forward(m);
                fft.process(&mut row);
                let max = row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
                if let Some((index, c)) = row.iter().enumerate().find(|(_, c)| c.re < -EMBEDDING_TOLERANCE * max) {
                    return Err(Error::EmbeddingFailure {
                        eigenvalue: c.re,
                        index,
                    });
                }
                let mf = m as f64;
                let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / mf).sqrt()).collect();
                Engine::Circulant { sqrt_eig, fft }
            }
        };
        Ok(Self {
            grid,
            hurst,
            seed,
            method,
            engine,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn wrap(&self, stream: u64, incs: &[f64]) -> FbmPath {
        let mut values = Vec::with_capacity(incs.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for d in incs {
            acc += d;
            values.push(acc);
        }
        FbmPath {
            grid: self.grid.clone(),
            hurst: Some(self.hurst),
            values,
            seed: self.seed,
            stream,
        }
    }

    fn cholesky_increments(&self, lower: &[f64], stream: u64) -> Vec<f64> {
        let n = self.grid.steps();
        let mut z = vec![0.0; n];
        fill_normals(&mut stream_rng(self.seed, stream), &mut z);
        (0..n)
            .map(|i| {
                let row = &lower[i * n..i * n + i + 1];
                row.iter().zip(&z).map(|(l, z)| l * z).sum()
            })
            .collect()
    }

    fn circulant_pair(&self, sqrt_eig: &[f64], fft: &Arc<dyn Fft<f64>>, key: u64) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.steps();
        let m = sqrt_eig.len();
        let mut rng = stream_rng(self.seed, key);
        let mut buf: Vec<Complex<f64>> = sqrt_eig
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(s * re, s * im)
            })
            .collect();
        debug_assert_eq!(buf.len(), m);
        fft.process(&mut buf);
        (
            buf[..n].iter().map(|c| c.re).collect(),
            buf[..n].iter().map(|c| c.im).collect(),
        )
    }

    pub fn path(&self, stream: u64) -> FbmPath {
        match &self.engine {
            Engine::Cholesky { lower } => self.wrap(stream, &self.cholesky_increments(lower, stream)),
            Engine::Circulant { sqrt_eig, fft } => {
                let (re, im) = self.circulant_pair(sqrt_eig, fft, stream >> 1);
                self.wrap(stream, if stream & 1 == 0 { &re } else { &im })
            }
        }
    }

    /// Applies `f` to paths `first .. first + count`, returning results in
    /// stream order. Evaluation may be parallel; results do not depend on it.
    pub fn map_paths<T, F>(&self, first: u64, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&FbmPath) -> T + Sync,
    {
        let end = first + count as u64;
        match &self.engine {
            Engine::Cholesky { .. } => (first..end).into_par_iter().map(|s| f(&self.path(s))).collect(),
            Engine::Circulant { sqrt_eig, fft } => {
                let keys: Vec<u64> = ((first >> 1)..end.div_ceil(2)).collect();
                let nested: Vec<Vec<T>> = keys
                    .into_par_iter()
                    .map(|key| {
                        let (re, im) = self.circulant_pair(sqrt_eig, fft, key);
                        let mut out = Vec::with_capacity(2);
                        for (stream, incs) in [(2 * key, re), (2 * key + 1, im)] {
                            if stream >= first && stream < end {
                                out.push(f(&self.wrap(stream, &incs)));
                            }
                        }
                        out
                    })
                    .collect();
                nested.into_iter().flatten().collect()
            }
        }
    }

    pub fn paths(&self, first: u64, count: usize) -> Vec<FbmPath> {
        self.map_paths(first, count, |p| p.clone())
    }
}

/// Draws `count` fBm paths on `grid` (streams `0..count`).
pub fn generate_paths(
    grid: &TimeGrid,
    hurst: HurstParam,
    count: usize,
    seed: u64,
    method: Method,
) -> Result<Vec<FbmPath>> {
    if count == 0 {
        return Err(Error::invalid("count", "at least one path is required"));
    }
    Ok(FbmSampler::new(grid.clone(), hurst, method, seed)?.paths(0, count))
}

/// Exact sampler for an arbitrary covariance evaluated on the grid points.
pub struct GenericSampler {
    grid: TimeGrid,
    hurst: Option<HurstParam>,
    seed: u64,
    /// Grid indices whose values are sampled; the rest are pinned to zero.
    active: Vec<usize>,
    /// Row-major square-root factor, `active.len()` squared.
    factor: Vec<f64>,
}

impl GenericSampler {
    pub fn new(cov: &CovarianceSpec, grid: TimeGrid, seed: u64) -> Result<Self> {
        let pts = grid.points();
        let start = if cov.eval(0.0, 0.0) == 0.0 { 1 } else { 0 };
        let active: Vec<usize> = (start..pts.len()).collect();
        let d = active.len();
        if d.saturating_mul(d) > MAX_DENSE_ENTRIES {
            return Err(Error::GridTooLarge { n: grid.steps() });
        }
        let gram = DMatrix::from_fn(d, d, |i, j| cov.eval(pts[active[i]], pts[active[j]]));
        let sym_err = (&gram - gram.transpose()).amax();
        if sym_err > 1e-12 * gram.amax().max(1.0) {
            return Err(Error::invalid("cov", "covariance function is not symmetric"));
        }
        let root = match gram.clone().cholesky() {
            Some(c) => c.l(),
            None => {
                let eig = gram.symmetric_eigen();
                let max = eig.eigenvalues.max().max(0.0);
                let min = eig.eigenvalues.min();
                if min < -1e-10 * max.max(f64::MIN_POSITIVE) {
                    return Err(Error::NotPositiveSemidefinite { eigenvalue: min });
                }
                let sqrt = DVector::from_iterator(d, eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
                eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
            }
        };
        let mut factor = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                factor[i * d + j] = root[(i, j)];
            }
        }
        Ok(Self {
            grid,
            hurst: cov.hurst(),
            seed,
            active,
            factor,
        })
    }

    pub fn path(&self, stream: u64) -> FbmPath {
        let d = self.active.len();
        let mut z = vec![0.0; d];
        fill_normals(&mut stream_rng(self.seed, stream), &mut z);
        let mut values = vec![0.0; self.grid.steps() + 1];
        for (i, &k) in self.active.iter().enumerate() {
            values[k] = self.factor[i * d..(i + 1) * d].iter().zip(&z).map(|(a, b)| a * b).sum();
        }
        FbmPath {
            grid: self.grid.clone(),
            hurst: self.hurst,
            values,
            seed: self.seed,
            stream,
        }
    }
}

/// Draws `count` paths from a Gaussian law with covariance `cov`.
pub fn generate_generic(cov: &CovarianceSpec, grid: &TimeGrid, count: usize, seed: u64) -> Result<Vec<FbmPath>> {
    if count == 0 {
        return Err(Error::invalid("count", "at least one path is required"));
    }
    let sampler = GenericSampler::new(cov, grid.clone(), seed)?;
    Ok((0..count as u64).into_par_iter().map(|s| sampler.path(s)).collect())
}
