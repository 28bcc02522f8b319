//! Change of measure removing the constant drift `C`: the kernel `K`, the
//! conditioned kernels `zeta_u`, the density `eta(T)` and the martingale
//! density `rho(t)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::beta::{beta, beta_reg};
use statrs::function::gamma::gamma;

use crate::calculus::{cell_weights, phi_inner, wiener_integral_with, QuadratureConfig, RealFunction};
use crate::error::{Error, Result};
use crate::fbm::{FbmPath, HurstParam, TimeGrid};

/// `k_H = 2H(2H-1) Gamma(2-2H) Gamma(2H-1) cos(pi(H-1/2))`.
pub fn k_h(h: HurstParam) -> f64 {
    let h = h.value();
    2.0 * h * (2.0 * h - 1.0) * gamma(2.0 - 2.0 * h) * gamma(2.0 * h - 1.0) * (PI * (h - 0.5)).cos()
}

#[derive(Debug, Clone)]
pub struct GirsanovKernel {
    c: f64,
    horizon: f64,
    hurst: HurstParam,
    k_h: f64,
    norm_sq: f64,
    scaled_norms: Arc<NormTable>,
}

impl GirsanovKernel {
    pub fn new(c: f64, horizon: f64, hurst: HurstParam) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("C", "must be finite"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("T", "horizon must be positive and finite"));
        }
        let k = k_h(hurst);
        let a = 0.5 - hurst.value();
        let norm_sq = c * c / k * beta(a + 1.0, a + 1.0) * horizon.powf(2.0 * a + 1.0);
        Ok(Self {
            c,
            horizon,
            hurst,
            k_h: k,
            norm_sq,
            scaled_norms: NormTable::shared(hurst),
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn k_h(&self) -> f64 {
        self.k_h
    }

    fn exponent(&self) -> f64 {
        0.5 - self.hurst.value()
    }

    /// `|K|^2_phi`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `K(t) = (C/k_H) t^{1/2-H} (T-t)^{1/2-H}`.
    pub fn kernel_k(&self, t: f64) -> Result<f64> {
        self.zeta(self.horizon, t)
    }

    /// `zeta_u(s) = (C/k_H) s^{1/2-H} (u-s)^{1/2-H}` on `(0, u)`, zero outside.
    pub fn zeta(&self, u: f64, s: f64) -> Result<f64> {
        self.check_u(u)?;
        if s == 0.0 || s == u {
            return Err(Error::SingularPoint {
                what: "conditioned kernel",
                at: s,
            });
        }
        if s < 0.0 || s > u {
            return Ok(0.0);
        }
        Ok(self.c / self.k_h * (s * (u - s)).powf(self.exponent()))
    }

    fn check_u(&self, u: f64) -> Result<()> {
        if !(u > 0.0 && u <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::invalid("u", format!("{u} is outside (0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `|zeta_u|^2_phi`, zero at `u = 0`.
    pub fn zeta_norm_sq(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.norm_sq * (u / self.horizon).powf(2.0 * self.exponent() + 1.0)
    }

    /// `|zeta_u 1_{[0,t]}|^2_phi` from a tabulated scale-free profile.
    pub fn truncated_norm_sq(&self, u: f64, t: f64) -> f64 {
        if u <= 0.0 || t <= 0.0 {
            return 0.0;
        }
        if t >= u {
            return self.zeta_norm_sq(u);
        }
        self.c * self.c * u.powf(2.0 * self.exponent() + 1.0) * self.scaled_norms.eval(t / u)
    }

    /// `|K 1_{[0,t]}|^2_phi`.
    pub fn k_truncated_norm_sq(&self, t: f64) -> f64 {
        self.truncated_norm_sq(self.horizon, t)
    }

    /// `|K 1_{[0,t]}|^2_phi` by direct two-dimensional quadrature.
    pub fn k_truncated_norm_sq_quadrature(&self, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
        if t <= 0.0 || self.c == 0.0 {
            return Ok(0.0);
        }
        let k = self.k_function()?;
        phi_inner(&k, &k, 0.0, t.min(self.horizon), self.hurst, cfg)
    }

    /// `int_a^b zeta_u(s) ds` by the incomplete beta function.
    pub fn zeta_integral(&self, u: f64, a: f64, b: f64) -> f64 {
        let (lo, hi) = (a.max(0.0), b.min(u));
        if !(lo < hi) || self.c == 0.0 {
            return 0.0;
        }
        let p = self.exponent() + 1.0;
        let scale = self.c / self.k_h * u.powf(2.0 * p - 1.0) * beta(p, p);
        let ib = |x: f64| beta_reg(p, p, (x / u).clamp(0.0, 1.0));
        // Evaluate the right half through the mirrored variable for accuracy.
        if lo >= 0.5 * u {
            let ibm = |x: f64| beta_reg(p, p, ((u - x) / u).clamp(0.0, 1.0));
            scale * (ibm(lo) - ibm(hi))
        } else {
            scale * (ib(hi) - ib(lo))
        }
    }

    pub fn k_integral(&self, a: f64, b: f64) -> f64 {
        self.zeta_integral(self.horizon, a, b)
    }

    /// `zeta_u` as a function with declared end-point singularities and an
    /// exact antiderivative.
    pub fn zeta_function(&self, u: f64) -> Result<RealFunction> {
        self.check_u(u)?;
        let u = u.min(self.horizon);
        if self.c == 0.0 {
            return RealFunction::constant(0.0, 0.0, u);
        }
        let (c, k, a) = (self.c, self.k_h, self.exponent());
        let me = self.clone();
        Ok(RealFunction::new(0.0, u, move |s| c / k * (s * (u - s)).powf(a))?
            .with_singularities(a, a)?
            .with_offsets(move |l, r| c / k * (l * r).powf(a))
            .with_integral(move |lo, hi| me.zeta_integral(u, lo, hi)))
    }

    pub fn k_function(&self) -> Result<RealFunction> {
        self.zeta_function(self.horizon)
    }

    /// `-int K dB^H` plus `-|K|^2/2`, exponentiated.
    pub fn eta_t(&self, path: &FbmPath) -> Result<f64> {
        self.check_path(path)?;
        let w = cell_weights(&self.k_function()?, &path.grid)?;
        Ok((-wiener_integral_with(&w, path)? - 0.5 * self.norm_sq).exp())
    }

    /// `rho(t) = exp(-int_0^t zeta_t dB^H - |zeta_t|^2/2)`.
    pub fn rho(&self, t: f64, path: &FbmPath) -> Result<f64> {
        self.check_path(path)?;
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::invalid("t", format!("{t} is outside [0, {}]", self.horizon)));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let w = cell_weights(&self.zeta_function(t)?, &path.grid)?;
        Ok((-wiener_integral_with(&w, path)? - 0.5 * self.zeta_norm_sq(t)).exp())
    }

    fn check_path(&self, path: &FbmPath) -> Result<()> {
        if (path.grid.horizon() - self.horizon).abs() > 1e-12 * self.horizon.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "path horizon {} differs from kernel horizon {}",
                path.grid.horizon(),
                self.horizon
            )));
        }
        Ok(())
    }
}

/// `eta(T)` and `rho` at every grid time for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPair {
    pub eta_t: f64,
    pub rho: Vec<f64>,
}

impl DensityPair {
    /// `|log rho(T) - log eta(T)|`, the discretization gap at the horizon.
    pub fn endpoint_gap(&self) -> f64 {
        (self.rho[self.rho.len() - 1].ln() - self.eta_t.ln()).abs()
    }
}

/// Cell weights of `K` and of every `zeta_{t_j}` on a fixed grid, so that
/// densities along many paths cost one dot product each.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    kernel: GirsanovKernel,
    grid: TimeGrid,
    k_weights: Vec<f64>,
    zeta_weights: Vec<Vec<f64>>,
}

impl DensityEvaluator {
    pub fn new(kernel: &GirsanovKernel, grid: &TimeGrid) -> Result<Self> {
        if (grid.horizon() - kernel.horizon()).abs() > 1e-12 * kernel.horizon().max(1.0) {
            return Err(Error::GridMismatch("grid and kernel horizons differ".into()));
        }
        let k_weights = cell_weights(&kernel.k_function()?, grid)?;
        let mut zeta_weights = vec![Vec::new()];
        for j in 1..=grid.steps() {
            let u = grid.t(j);
            let h = grid.step_size();
            let pts = grid.points();
            zeta_weights.push(
                (0..j)
                    .map(|k| kernel.zeta_integral(u, pts[k], pts[k + 1]) / h)
                    .collect(),
            );
        }
        Ok(Self {
            kernel: kernel.clone(),
            grid: grid.clone(),
            k_weights,
            zeta_weights,
        })
    }

    pub fn kernel(&self) -> &GirsanovKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn k_weights(&self) -> &[f64] {
        &self.k_weights
    }

    /// Cell weights of `zeta_{t_j}`.
    pub fn zeta_weights(&self, j: usize) -> &[f64] {
        &self.zeta_weights[j]
    }

    /// `int K dB^H` along the path.
    pub fn k_wiener(&self, path: &FbmPath) -> Result<f64> {
        wiener_integral_with(&self.k_weights, path)
    }

    /// `int_0^{t_j} zeta_{t_j} dB^H` along the path.
    pub fn zeta_wiener(&self, j: usize, path: &FbmPath) -> Result<f64> {
        if path.grid.steps() != self.grid.steps() {
            return Err(Error::GridMismatch("path grid differs from evaluator grid".into()));
        }
        Ok(self.zeta_weights[j]
            .iter()
            .zip(path.values.windows(2))
            .map(|(w, v)| w * (v[1] - v[0]))
            .sum())
    }

    pub fn eta_t(&self, path: &FbmPath) -> Result<f64> {
        Ok((-self.k_wiener(path)? - 0.5 * self.kernel.norm_sq()).exp())
    }

    pub fn rho(&self, j: usize, path: &FbmPath) -> Result<f64> {
        if j == 0 {
            return Ok(1.0);
        }
        let u = self.grid.t(j);
        Ok((-self.zeta_wiener(j, path)? - 0.5 * self.kernel.zeta_norm_sq(u)).exp())
    }

    pub fn pair(&self, path: &FbmPath) -> Result<DensityPair> {
        let rho = (0..=self.grid.steps())
            .map(|j| self.rho(j, path))
            .collect::<Result<_>>()?;
        Ok(DensityPair {
            eta_t: self.eta_t(path)?,
            rho,
        })
    }
}

/// The drifted trace `B_t + C t`.
pub fn apply_drift(path: &FbmPath, kernel: &GirsanovKernel) -> FbmPath {
    let mut out = path.clone();
    for (v, t) in out.values.iter_mut().zip(path.grid.points()) {
        *v += kernel.c() * t;
    }
    out
}

/// `theta -> |zeta_1 1_{[0,theta]}|^2_phi` for `C = 1`, tabulated on a
/// mesh graded toward `theta = 1` and interpolated by cubic Hermite polynomials.
#[derive(Debug)]
struct NormTable {
    hurst: HurstParam,
    grading: f64,
    values: OnceLock<std::result::Result<Vec<f64>, String>>,
}

const TABLE_CELLS: usize = 64;

impl NormTable {
    fn shared(hurst: HurstParam) -> Arc<Self> {
        static TABLES: OnceLock<Mutex<HashMap<u64, Arc<NormTable>>>> = OnceLock::new();
        let map = TABLES.get_or_init(Default::default);
        let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(hurst.value().to_bits())
            .or_insert_with(|| {
                Arc::new(NormTable {
                    hurst,
                    grading: 2.0 / (1.5 - hurst.value()),
                    values: OnceLock::new(),
                })
            })
            .clone()
    }

    fn theta(&self, x: f64) -> f64 {
        1.0 - (1.0 - x).powf(self.grading)
    }

    fn build(&self) -> std::result::Result<Vec<f64>, String> {
        let unit = GirsanovKernel {
            c: 1.0,
            horizon: 1.0,
            hurst: self.hurst,
            k_h: k_h(self.hurst),
            norm_sq: 0.0,
            scaled_norms: Arc::new(NormTable {
                hurst: self.hurst,
                grading: self.grading,
                values: OnceLock::new(),
            }),
        };
        let a = 0.5 - self.hurst.value();
        let full = beta(a + 1.0, a + 1.0) / unit.k_h;
        let cfg = QuadratureConfig::with_tol(1e-9);
        let mut out = vec![0.0];
        for j in 1..TABLE_CELLS {
            let theta = self.theta(j as f64 / TABLE_CELLS as f64);
            out.push(
                unit.k_truncated_norm_sq_quadrature(theta, &cfg)
                    .map_err(|e| e.to_string())?,
            );
        }
        out.push(full);
        Ok(out)
    }

    fn eval(&self, theta: f64) -> f64 {
        let values = match self.values.get_or_init(|| self.build()) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let x = 1.0 - (1.0 - theta.clamp(0.0, 1.0)).powf(1.0 / self.grading);
        hermite(values, x * TABLE_CELLS as f64)
    }
}

/// Cubic Hermite interpolation with second-order finite-difference slopes of
/// values on the integer mesh `0..=n`, evaluated at `s` in `[0, n]`.
fn hermite(y: &[f64], s: f64) -> f64 {
    let n = y.len() - 1;
    let k = (s.floor() as usize).min(n - 1);
    let slope = |i: usize| -> f64 {
        if i == 0 {
            (-3.0 * y[0] + 4.0 * y[1] - y[2]) / 2.0
        } else if i == n {
            (3.0 * y[n] - 4.0 * y[n - 1] + y[n - 2]) / 2.0
        } else {
            (y[i + 1] - y[i - 1]) / 2.0
        }
    };
    let t = s - k as f64;
    let (m0, m1) = (slope(k), slope(k + 1));
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * y[k] + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y[k + 1] + (t3 - t2) * m1
}
