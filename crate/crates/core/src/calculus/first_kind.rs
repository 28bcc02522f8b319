//! The first-kind equation `int_0^tau f(s) phi(s, t) ds = target(t)`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use super::function::RealFunction;
use super::quadrature::{gauss_jacobi, graded_rule, integrate, Grading};
use crate::error::{Error, Result};
use crate::fbm::HurstParam;

const CONDITION_LIMIT: f64 = 1e12;
const RESIDUAL_LIMIT: f64 = 1e-8;

/// Tabulated solution `f(s) = s^a (tau - s)^a g(s)` with `a = 1/2 - H` and
/// `g` piecewise linear on a uniform mesh.
#[derive(Debug, Clone)]
pub struct FirstKindSolution {
    pub tau: f64,
    pub exponent: f64,
    pub nodes: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub condition: f64,
    pub residual: f64,
}

impl FirstKindSolution {
    /// The smooth factor `g`.
    pub fn regular_part(&self, s: f64) -> f64 {
        interpolate(&self.nodes, &self.coefficients, s)
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 || s >= self.tau {
            return if s == 0.0 || s == self.tau { f64::INFINITY } else { 0.0 };
        }
        (s * (self.tau - s)).powf(self.exponent) * self.regular_part(s)
    }

    pub fn to_function(&self) -> Result<RealFunction> {
        let me = self.clone();
        let me2 = self.clone();
        Ok(RealFunction::new(0.0, self.tau, move |s| me.eval(s))?
            .with_singularities(self.exponent, self.exponent)?
            .with_offsets(move |l, r| (l * r).powf(me2.exponent) * me2.regular_part(l)))
    }

    /// Writes `t,value` at the interior mesh nodes.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for &s in &self.nodes[1..self.nodes.len() - 1] {
            writeln!(w, "{:.16e},{:.16e}", s, self.eval(s))?;
        }
        Ok(())
    }
}

fn interpolate(nodes: &[f64], vals: &[f64], s: f64) -> f64 {
    let n = nodes.len() - 1;
    let h = nodes[n] / n as f64;
    let k = ((s / h).floor() as usize).min(n - 1);
    let lam = (s - nodes[k]) / h;
    vals[k] * (1.0 - lam) + vals[k + 1] * lam
}

/// Collocation at `n + 1` uniform nodes with product integration: on each
/// cell the kernel and the end-point weight are integrated by graded
/// Gauss-Jacobi rules against the piecewise-linear factor.
pub fn solve_first_kind(target: &RealFunction, tau: f64, h: HurstParam, n: usize) -> Result<FirstKindSolution> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", "must be positive and finite"));
    }
    if n < 2 {
        return Err(Error::invalid("n", "at least two collocation cells are required"));
    }
    let hv = h.value();
    let a = 0.5 - hv;
    let e = 2.0 * hv - 2.0;
    let c = hv * (2.0 * hv - 1.0);
    let step = tau / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|j| if j == n { tau } else { j as f64 * step }).collect();
    let grading = Grading::default();
    let (gx, gw) = gauss_jacobi(16, 0.0, 0.0);

    let mut mat = DMatrix::<f64>::zeros(n + 1, n + 1);
    for (i, &t) in nodes.iter().enumerate() {
        for k in 0..n {
            let (s0, s1) = (nodes[k], nodes[k + 1]);
            let near = i == k || i == k + 1 || k == 0 || k + 1 == n;
            let weight = |x: f64, from_lo: f64, to_hi: f64| {
                let left = if k == 0 { from_lo } else { x };
                let right = if k + 1 == n { to_hi } else { tau - x };
                let dist = if i == k {
                    from_lo
                } else if i == k + 1 {
                    to_hi
                } else {
                    (x - t).abs()
                };
                (left * right).powf(a) * dist.powf(e)
            };
            let (mut lo_part, mut hi_part) = (0.0, 0.0);
            if near {
                let p = if k == 0 { a } else { 0.0 } + if i == k { e } else { 0.0 };
                let q = if k + 1 == n { a } else { 0.0 } + if i == k + 1 { e } else { 0.0 };
                for nd in graded_rule(s0, s1, p, q, &grading) {
                    let v = nd.w * weight(nd.x, nd.from_lo, nd.to_hi);
                    lo_part += v * nd.to_hi / step;
                    hi_part += v * nd.from_lo / step;
                }
            } else {
                for (x, w) in gx.iter().zip(&gw) {
                    let lam = 0.5 * (1.0 + x);
                    let s = s0 + lam * step;
                    let v = 0.5 * step * w * weight(s, lam * step, (1.0 - lam) * step);
                    lo_part += v * (1.0 - lam);
                    hi_part += v * lam;
                }
            }
            mat[(i, k)] += c * lo_part;
            mat[(i, k + 1)] += c * hi_part;
        }
    }
    let rhs = DVector::from_iterator(n + 1, nodes.iter().map(|&t| target.eval(t)));

    let sv = mat.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let sol = mat
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned { condition })?;
    let residual = (&mat * &sol - &rhs).amax();
    if !(residual <= RESIDUAL_LIMIT * rhs.amax().max(1.0)) {
        return Err(Error::ResidualNotMet {
            residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(FirstKindSolution {
        tau,
        exponent: a,
        nodes,
        coefficients: sol.iter().copied().collect(),
        condition,
        residual,
    })
}

/// Normalizing constant of the explicit inversion formula.
fn d_h(h: f64) -> f64 {
    2.0 * h * (2.0 * h - 1.0) * gamma(1.5 - h).powi(2) * gamma(2.0 * h - 1.0) * (PI * (h - 0.5)).cos()
}

struct Inversion<'a> {
    target: &'a RealFunction,
    tau: f64,
    a: f64,
    h: f64,
    jac: (Vec<f64>, Vec<f64>),
    grading: Grading,
}

impl Inversion<'_> {
    fn target_slope(&self, z: f64) -> f64 {
        let d = 1e-5 * self.tau;
        let lo = (z - d).max(0.0);
        let hi = (z + d).min(self.tau);
        (self.target.eval(hi) - self.target.eval(lo)) / (hi - lo)
    }

    /// Derivative in `w` of `int_0^w z^a (w - z)^a target(z) dz`, written as
    /// `w^{2a+1} int_0^1 v^a (1-v)^a target(w v) dv` and differentiated under
    /// the integral.
    fn inner_slope(&self, w: f64) -> f64 {
        let (xs, ws) = &self.jac;
        let (mut m0, mut m1) = (0.0, 0.0);
        for (x, wt) in xs.iter().zip(ws) {
            let v = 0.5 * (1.0 + x);
            m0 += wt * self.target.eval(w * v);
            m1 += wt * v * self.target_slope(w * v);
        }
        let scale = 0.5f64.powf(2.0 * self.a + 1.0);
        scale * ((2.0 * self.a + 1.0) * w.powf(2.0 * self.a) * m0 + w.powf(2.0 * self.a + 1.0) * m1)
    }

    /// `int_t^tau w^{2H-1} (w - t)^a (d/dw inner)(w) dw`.
    fn outer(&self, t: f64) -> f64 {
        let nodes = graded_rule(t, self.tau, self.a, 0.0, &self.grading);
        integrate(&nodes, |n| {
            n.x.powf(2.0 * self.h - 1.0) * n.from_lo.powf(self.a) * self.inner_slope(n.x)
        })
    }

    /// Central difference of `outer` with Richardson extrapolation over a
    /// decreasing step sequence. The stopping test is relative to the slope
    /// scale `|outer(t)| / tau`, so that isolated zeros of the slope converge.
    fn outer_slope(&self, t: f64) -> Result<f64> {
        let mut step = 0.25 * t.min(self.tau - t).min(0.05 * self.tau);
        let scale = self.outer(t).abs() / self.tau;
        let mut prev: Option<f64> = None;
        for _ in 0..8 {
            let d1 = (self.outer(t + step) - self.outer(t - step)) / (2.0 * step);
            let d2 = (self.outer(t + 0.5 * step) - self.outer(t - 0.5 * step)) / step;
            let rich = (4.0 * d2 - d1) / 3.0;
            if let Some(p) = prev {
                if (rich - p).abs() <= 1e-6 * rich.abs().max(scale).max(1e-300) {
                    return Ok(rich);
                }
            }
            prev = Some(rich);
            step *= 0.5;
        }
        Err(Error::DifferentiationUnstable { at: t })
    }
}

/// Evaluates the closed-form inversion at `m - 1` interior points of a
/// uniform mesh and interpolates the smooth factor between them.
pub fn explicit_inversion(target: &RealFunction, tau: f64, h: HurstParam) -> Result<RealFunction> {
    explicit_inversion_with(target, tau, h, 64)
}

pub fn explicit_inversion_with(target: &RealFunction, tau: f64, h: HurstParam, m: usize) -> Result<RealFunction> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", "must be positive and finite"));
    }
    if m < 4 {
        return Err(Error::invalid("m", "at least four mesh cells are required"));
    }
    let hv = h.value();
    let a = 0.5 - hv;
    let inv = Inversion {
        target,
        tau,
        a,
        h: hv,
        jac: gauss_jacobi(24, a, a),
        grading: Grading::default(),
    };
    let dh = d_h(hv);
    let mut pts = Vec::with_capacity(m - 1);
    for j in 1..m {
        let t = tau * j as f64 / m as f64;
        let fhat = -t.powf(a) * inv.outer_slope(t)? / dh;
        pts.push((t, fhat / (t * (tau - t)).powf(a)));
    }
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let g = RealFunction::piecewise_linear(pts)?;
    let g2 = g.clone();
    Ok(RealFunction::new(0.0, tau, move |s| {
        let s_clamped = s.clamp(first.0, last.0);
        (s * (tau - s)).powf(a) * g.eval(s_clamped)
    })?
    .with_singularities(a, a)?
    .with_offsets(move |l, r| (l * r).powf(a) * g2.eval(l.clamp(first.0, last.0))))
}
