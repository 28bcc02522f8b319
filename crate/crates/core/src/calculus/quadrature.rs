//! Gauss-Jacobi rules and geometrically graded composite rules for
//! integrands with algebraic end-point singularities.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]` for the weight `(1 - x)^alpha (1 + x)^beta`,
/// computed with the Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jac[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab)
                    / ((2.0 * j + ab).powi(2) * (2.0 * j + ab + 1.0) * (2.0 * j + ab - 1.0))
            };
            let b = b2.sqrt();
            jac[(k, k + 1)] = b;
            jac[(k + 1, k)] = b;
        }
    }
    let mu0 =
        ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0)).exp();
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

type RuleKey = (usize, u64, u64);
type Rule = Rc<(Vec<f64>, Vec<f64>)>;

thread_local! {
    static RULES: RefCell<HashMap<RuleKey, Rule>> = RefCell::new(HashMap::new());
}

fn cached_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    let key = (n, alpha.to_bits(), beta.to_bits());
    RULES.with(|cache| {
        cache
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| Rc::new(gauss_jacobi(n, alpha, beta)))
            .clone()
    })
}

/// A quadrature node. `from_lo` and `to_hi` are the distances to the ends of
/// the interval the rule was built for, computed without cancellation so
/// that singular factors can be evaluated accurately near the ends.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub from_lo: f64,
    pub to_hi: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityRule {
    /// Gauss-Jacobi end panels whose weight matches the declared exponent.
    JacobiWeighted,
    /// Geometric grading with plain Gauss-Legendre panels everywhere.
    DiagonalSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub order: usize,
    pub rule: SingularityRule,
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 10,
            rule: SingularityRule::JacobiWeighted,
            tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::invalid("tol", "quadrature tolerance must lie in (0, 1e-2]"));
        }
        if self.order < 2 {
            return Err(Error::invalid("order", "at least two nodes per panel are required"));
        }
        Ok(())
    }

    /// Resolution used at refinement step `step` (0 is the coarsest).
    pub fn grading(&self, step: usize) -> Grading {
        Grading {
            order: self.order + 4 * step,
            levels: 10 + 5 * step,
            ratio: 0.2,
            jacobi: self.rule == SingularityRule::JacobiWeighted,
        }
    }
}

/// Resolution of a graded composite rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub order: usize,
    pub levels: usize,
    pub ratio: f64,
    pub jacobi: bool,
}

impl Default for Grading {
    fn default() -> Self {
        QuadratureConfig::default().grading(1)
    }
}

/// Composite rule on `[lo, hi]` for an integrand `G` behaving like
/// `(t - lo)^p (hi - t)^q` times a smooth factor. Panels shrink
/// geometrically toward both ends; the two innermost panels carry the
/// Jacobi weight so that `sum w G(x)` integrates the singular factor exactly.
pub fn graded_rule(lo: f64, hi: f64, p: f64, q: f64, g: &Grading) -> Vec<Node> {
    let len = hi - lo;
    let mut nodes = Vec::with_capacity(2 * (g.levels + 1) * g.order);
    if len <= 0.0 {
        return nodes;
    }
    let half = 0.5 * len;
    let legendre = cached_jacobi(g.order, 0.0, 0.0);

    // Offsets from `lo` of the left-half breakpoints, descending.
    let offsets: Vec<f64> = (0..=g.levels).map(|k| half * g.ratio.powi(k as i32)).collect();

    let mut push_panel = |a_off: f64, b_off: f64, from_left: bool, weight_exp: f64| {
        // Panel [a_off, b_off] measured from the end selected by `from_left`.
        let plen = b_off - a_off;
        let (xs, ws, scale) = if weight_exp != 0.0 && a_off == 0.0 && g.jacobi {
            let r = cached_jacobi(g.order, 0.0, weight_exp);
            let scale = (0.5 * plen).powf(weight_exp + 1.0);
            (r, true, scale)
        } else {
            (legendre.clone(), false, 0.5 * plen)
        };
        for (x, w) in xs.0.iter().zip(&xs.1) {
            let off = a_off + 0.5 * (1.0 + x) * plen;
            let mut w = w * scale;
            if ws {
                w /= off.powf(weight_exp);
            }
            let (pos, from_lo, to_hi) = if from_left {
                (lo + off, off, len - off)
            } else {
                (hi - off, len - off, off)
            };
            nodes.push(Node {
                x: pos,
                from_lo,
                to_hi,
                w,
            });
        }
    };

    for side in [true, false] {
        let exp = if side { p } else { q };
        for k in 0..g.levels {
            push_panel(offsets[k + 1], offsets[k], side, 0.0);
        }
        push_panel(0.0, offsets[g.levels], side, exp);
    }
    nodes
}

pub fn integrate(nodes: &[Node], mut f: impl FnMut(&Node) -> f64) -> f64 {
    nodes.iter().map(|n| n.w * f(n)).sum()
}

/// Evaluates `estimate` at increasing resolution until two successive
/// values agree to the configured relative tolerance.
pub fn converge(cfg: &QuadratureConfig, mut estimate: impl FnMut(&Grading) -> Result<f64>) -> Result<f64> {
    cfg.validate()?;
    const STEPS: usize = 4;
    let mut prev = estimate(&cfg.grading(0))?;
    for step in 1..=STEPS {
        let cur = estimate(&cfg.grading(step))?;
        if (cur - prev).abs() <= cfg.tol * cur.abs().max(1e-15) {
            return Ok(cur);
        }
        if step == STEPS {
            return Err(Error::QuadratureNonConvergence {
                previous: prev,
                last: cur,
            });
        }
        prev = cur;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_jacobi(5, 0.0, 0.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_relative_eq!(s, 2.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_moment_matches_beta_function() {
        // int_{-1}^{1} (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)
        let (a, b) = (-0.5, -0.25);
        let (x, w) = gauss_jacobi(8, a, b);
        let m0: f64 = w.iter().sum();
        let exact = (2f64).powf(a + b + 1.0) * statrs::function::beta::beta(a + 1.0, b + 1.0);
        assert_relative_eq!(m0, exact, max_relative = 1e-13);
        // first moment: int x w(x) = 2^{a+b+1} B(a+1,b+1) (b-a)/(a+b+2)
        let m1: f64 = x.iter().zip(&w).map(|(x, w)| w * x).sum();
        assert_relative_eq!(m1, exact * (b - a) / (a + b + 2.0), max_relative = 1e-12);
    }

    #[test]
    fn graded_rule_handles_endpoint_singularity() {
        // int_0^2 t^{-0.4} (2-t)^{-0.3} dt = 2^{0.3} B(0.6, 0.7)
        let g = Grading::default();
        let nodes = graded_rule(0.0, 2.0, -0.4, -0.3, &g);
        let v = integrate(&nodes, |n| n.from_lo.powf(-0.4) * n.to_hi.powf(-0.3));
        let exact = 2f64.powf(0.3) * statrs::function::beta::beta(0.6, 0.7);
        assert_relative_eq!(v, exact, max_relative = 1e-12);
    }

    #[test]
    fn plain_grading_still_converges() {
        let cfg = QuadratureConfig {
            rule: SingularityRule::DiagonalSplit,
            tol: 1e-4,
            order: 10,
        };
        let v = converge(&cfg, |g| {
            let nodes = graded_rule(0.0, 1.0, -0.25, 0.0, g);
            Ok(integrate(&nodes, |n| n.from_lo.powf(-0.25)))
        })
        .unwrap();
        assert_relative_eq!(v, 4.0 / 3.0, max_relative = 1e-4);
    }

    #[test]
    fn tolerance_bounds_are_enforced() {
        assert!(QuadratureConfig::with_tol(0.0).validate().is_err());
        assert!(QuadratureConfig::with_tol(0.1).validate().is_err());
        assert!(QuadratureConfig::with_tol(1e-2).validate().is_ok());
    }
}
