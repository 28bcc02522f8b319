//! Integrals against the kernel `phi(s, t) = H(2H - 1)|s - t|^{2H - 2}` and
//! the related fractional operators.

use std::f64::consts::PI;

use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use super::function::RealFunction;
use super::quadrature::{converge, graded_rule, integrate, Grading, QuadratureConfig};
use crate::error::{Error, Result};
use crate::fbm::HurstParam;

/// `B(x, y) = Gamma(x)Gamma(y)/Gamma(x + y)`.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::invalid("beta", format!("arguments ({x}, {y}) must be positive")));
    }
    Ok(beta(x, y))
}

/// `int f(s) |s - x|^{2H - 2} ds` over the support of `f`.
fn smooth_at(f: &RealFunction, x: f64, h: f64, g: &Grading) -> Result<f64> {
    let e = 2.0 * h - 2.0;
    let (lo, hi) = f.support();
    let (p, q) = f.exponents();
    if x <= lo {
        let gap = lo - x;
        if gap == 0.0 && p + e <= -1.0 {
            return Err(Error::SingularPoint {
                what: "kernel potential at a singular end point",
                at: x,
            });
        }
        let nodes = graded_rule(lo, hi, if gap == 0.0 { p + e } else { p }, q, g);
        return Ok(integrate(&nodes, |n| {
            f.eval_node(n.x, lo, n.from_lo, hi, n.to_hi) * (gap + n.from_lo).powf(e)
        }));
    }
    if x >= hi {
        let gap = x - hi;
        if gap == 0.0 && q + e <= -1.0 {
            return Err(Error::SingularPoint {
                what: "kernel potential at a singular end point",
                at: x,
            });
        }
        let nodes = graded_rule(lo, hi, p, if gap == 0.0 { q + e } else { q }, g);
        return Ok(integrate(&nodes, |n| {
            f.eval_node(n.x, lo, n.from_lo, hi, n.to_hi) * (gap + n.to_hi).powf(e)
        }));
    }
    let left = graded_rule(lo, x, p, e, g);
    let right = graded_rule(x, hi, e, q, g);
    Ok(
        integrate(&left, |n| f.eval_node(n.x, lo, n.from_lo, x, n.to_hi) * n.to_hi.powf(e))
            + integrate(&right, |n| {
                f.eval_node(n.x, x, n.from_lo, hi, n.to_hi) * n.from_lo.powf(e)
            }),
    )
}

/// `(Phi f)(x) = int phi(x, t) f(t) dt`.
pub fn potential(f: &RealFunction, x: f64, h: HurstParam, cfg: &QuadratureConfig) -> Result<f64> {
    let hv = h.value();
    let c = hv * (2.0 * hv - 1.0);
    converge(cfg, |g| Ok(c * smooth_at(f, x, hv, g)?))
}

/// Riesz-type potential `(2 Gamma(2H-1) cos(pi(H-1/2)))^{-1} int |x-t|^{2H-2} f(t) dt`.
pub fn riesz_potential(f: &RealFunction, x: f64, h: HurstParam, cfg: &QuadratureConfig) -> Result<f64> {
    let hv = h.value();
    let c = 1.0 / (2.0 * gamma(2.0 * hv - 1.0) * (PI * (hv - 0.5)).cos());
    converge(cfg, |g| Ok(c * smooth_at(f, x, hv, g)?))
}

/// `int int f(s) g(t) phi(s, t) ds dt` over `[a, b]^2`.
pub fn phi_inner(
    f: &RealFunction,
    g: &RealFunction,
    a: f64,
    b: f64,
    h: HurstParam,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(a < b) {
        return Err(Error::invalid("interval", format!("[{a}, {b}] is empty")));
    }
    let (Some(f), Some(g)) = (f.restricted(a, b), g.restricted(a, b)) else {
        return Ok(0.0);
    };
    let hv = h.value();
    let c = hv * (2.0 * hv - 1.0);
    let (gl, gh) = g.support();
    let (gp, gq) = g.exponents();
    let mut cuts = vec![gl];
    let (fl, fh) = f.support();
    cuts.extend([fl, fh].into_iter().filter(|&x| x > gl && x < gh));
    cuts.push(gh);
    cuts.dedup();
    converge(cfg, |res| {
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let p = if w[0] == gl { gp } else { 0.0 };
            let q = if w[1] == gh { gq } else { 0.0 };
            for n in graded_rule(w[0], w[1], p, q, res) {
                total += n.w * g.eval_node(n.x, w[0], n.from_lo, w[1], n.to_hi) * smooth_at(&f, n.x, hv, res)?;
            }
        }
        Ok(c * total)
    })
}

fn c_h(h: f64) -> f64 {
    (h * (2.0 * h - 1.0) * gamma(1.5 - h) / (gamma(h - 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// `int_u^inf (t - u)^{H - 3/2} f(t) dt` without the normalizing constant.
fn i_phi_raw(f: &RealFunction, u: f64, h: f64, g: &Grading) -> Result<f64> {
    let e = h - 1.5;
    let (lo, hi) = f.support();
    let (p, q) = f.exponents();
    if u >= hi {
        return Ok(0.0);
    }
    if u <= lo {
        let gap = lo - u;
        if gap == 0.0 && p + e <= -1.0 {
            return Err(Error::SingularPoint {
                what: "fractional integral at a singular end point",
                at: u,
            });
        }
        let nodes = graded_rule(lo, hi, if gap == 0.0 { p + e } else { p }, q, g);
        return Ok(integrate(&nodes, |n| {
            f.eval_node(n.x, lo, n.from_lo, hi, n.to_hi) * (gap + n.from_lo).powf(e)
        }));
    }
    let nodes = graded_rule(u, hi, e, q, g);
    Ok(integrate(&nodes, |n| {
        f.eval_node(n.x, u, n.from_lo, hi, n.to_hi) * n.from_lo.powf(e)
    }))
}

/// `(I_phi f)(u) = c_H int_u^inf (t - u)^{H - 3/2} f(t) dt`.
pub fn i_phi(f: &RealFunction, u: f64, h: HurstParam, cfg: &QuadratureConfig) -> Result<f64> {
    let hv = h.value();
    let c = c_h(hv);
    converge(cfg, |g| Ok(c * i_phi_raw(f, u, hv, g)?))
}

/// `int_R (I_phi f)(u) (I_phi g)(u) du`, which equals the phi inner product.
pub fn i_phi_inner(f: &RealFunction, g: &RealFunction, h: HurstParam, cfg: &QuadratureConfig) -> Result<f64> {
    let hv = h.value();
    let c2 = c_h(hv).powi(2);
    let (fl, fh) = f.support();
    let (gl, gh) = g.support();
    let start = fl.min(gl);
    let end = fh.min(gh);
    let mut cuts = vec![start, fl.max(gl), end, fh.max(gh)];
    cuts.retain(|&x| x <= end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let tail_exp = 1.0 - 2.0 * hv;
    converge(cfg, |res| {
        // (-inf, start] mapped to v in (0, 1] by u = start - (1 - v)/v.
        let mut total = 0.0;
        for n in graded_rule(0.0, 1.0, tail_exp, 0.0, res) {
            let v = n.from_lo;
            let u = start - n.to_hi / v;
            total += n.w / (v * v) * i_phi_raw(f, u, hv, res)? * i_phi_raw(g, u, hv, res)?;
        }
        for w in cuts.windows(2) {
            for n in graded_rule(w[0], w[1], 0.0, 0.0, res) {
                total += n.w * i_phi_raw(f, n.x, hv, res)? * i_phi_raw(g, n.x, hv, res)?;
            }
        }
        Ok(c2 * total)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn beta_values() {
        assert_relative_eq!(beta_fn(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(beta_fn(0.75, 0.75).unwrap(), 1.694_426_169_3, max_relative = 1e-9);
        assert_relative_eq!(
            beta_fn(0.3, 2.5).unwrap(),
            beta_fn(2.5, 0.3).unwrap(),
            max_relative = 1e-14
        );
        assert!(beta_fn(0.0, 1.0).is_err());
        assert!(beta_fn(1.0, -2.0).is_err());
    }

    #[test]
    fn indicator_norms_match_variance() {
        let cfg = QuadratureConfig::with_tol(1e-9);
        for t in [0.25, 0.5, 1.0] {
            let f = RealFunction::indicator(0.0, t).unwrap();
            let v = phi_inner(&f, &f, 0.0, 1.0, h(0.75), &cfg).unwrap();
            assert_relative_eq!(v, t.powf(1.5), max_relative = 1e-7);
        }
    }

    #[test]
    fn inner_product_of_disjoint_indicators_is_the_increment_covariance() {
        let cfg = QuadratureConfig::default();
        let f = RealFunction::indicator(0.0, 0.4).unwrap();
        let g = RealFunction::indicator(0.6, 1.0).unwrap();
        let v = phi_inner(&f, &g, 0.0, 1.0, h(0.7), &cfg).unwrap();
        // Cov(B_0.4, B_1 - B_0.6)
        let r = |s: f64, t: f64| crate::fbm::autocov_raw(s, t, 0.7);
        let exact = r(0.4, 1.0) - r(0.4, 0.6);
        assert_relative_eq!(v, exact, max_relative = 1e-7);
        let w = phi_inner(&g, &f, 0.0, 1.0, h(0.7), &cfg).unwrap();
        assert_relative_eq!(v, w, max_relative = 1e-7);
    }

    #[test]
    fn riesz_matches_scaled_phi_smoothing() {
        let cfg = QuadratureConfig::with_tol(1e-10);
        let hv = 0.75;
        let f = RealFunction::indicator(0.0, 1.0).unwrap();
        let r = riesz_potential(&f, 0.3, h(hv), &cfg).unwrap();
        let p = potential(&f, 0.3, h(hv), &cfg).unwrap();
        let scale = 1.0 / (2.0 * hv * (2.0 * hv - 1.0) * gamma(2.0 * hv - 1.0) * (PI * (hv - 0.5)).cos());
        assert_relative_eq!(r, scale * p, max_relative = 1e-6);
        // closed form: H (x^{2H-1} + (1-x)^{2H-1})
        assert_relative_eq!(p, hv * (0.3f64.sqrt() + 0.7f64.sqrt()), max_relative = 1e-9);
    }

    #[test]
    fn zero_function_gives_zero() {
        let cfg = QuadratureConfig::default();
        let z = RealFunction::constant(0.0, 0.0, 1.0).unwrap();
        assert_eq!(i_phi(&z, 0.2, h(0.8), &cfg).unwrap(), 0.0);
        assert_eq!(riesz_potential(&z, 0.2, h(0.8), &cfg).unwrap(), 0.0);
    }

    #[test]
    fn i_phi_preserves_the_inner_product() {
        let cfg = QuadratureConfig::with_tol(1e-6);
        let f = RealFunction::indicator(0.0, 1.0).unwrap();
        let g = RealFunction::indicator(0.5, 1.5).unwrap();
        let direct = phi_inner(&f, &g, 0.0, 1.5, h(0.75), &cfg).unwrap();
        let via = i_phi_inner(&f, &g, h(0.75), &cfg).unwrap();
        assert_relative_eq!(via, direct, max_relative = 1e-3);
    }

    #[test]
    fn i_phi_is_linear() {
        let cfg = QuadratureConfig::default();
        let f = RealFunction::indicator(0.0, 1.0).unwrap();
        let g = RealFunction::new(0.0, 1.0, |t| t * t).unwrap();
        let sum = RealFunction::new(0.0, 1.0, |t| 2.0 - 3.0 * t * t).unwrap();
        let lhs = i_phi(&sum, 0.25, h(0.65), &cfg).unwrap();
        let rhs = 2.0 * i_phi(&f, 0.25, h(0.65), &cfg).unwrap() - 3.0 * i_phi(&g, 0.25, h(0.65), &cfg).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
    }

    #[test]
    fn singular_end_point_is_reported() {
        let cfg = QuadratureConfig::default();
        let k = RealFunction::new(0.0, 1.0, |t: f64| t.powf(-0.25) * (1.0 - t).powf(-0.25))
            .unwrap()
            .with_singularities(-0.25, -0.25)
            .unwrap();
        assert!(matches!(
            i_phi(&k, 0.0, h(0.75), &cfg),
            Err(Error::SingularPoint { .. })
        ));
        assert!(i_phi(&k, -0.5, h(0.75), &cfg).is_ok());
    }
}
