use std::fmt;
use std::sync::Arc;

use super::quadrature::{graded_rule, integrate, Grading};
use crate::error::{Error, Result};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Antiderivative = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type OffsetEval = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A real function supported on `[lo, hi]` (zero outside), optionally
/// singular at the support ends like `(t - lo)^p (hi - t)^q` with
/// `p, q` in `(-1/2, 0]`, which keeps its phi-norm finite.
#[derive(Clone)]
pub struct RealFunction {
    lo: f64,
    hi: f64,
    lo_exp: f64,
    hi_exp: f64,
    eval: Eval,
    // Distances passed to `by_offsets` are measured from these ends, which
    // stay fixed under restriction.
    anchors: (f64, f64),
    by_offsets: Option<OffsetEval>,
    integral: Option<Antiderivative>,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("support", &(self.lo, self.hi))
            .field("exponents", &(self.lo_exp, self.hi_exp))
            .field("exact_integral", &self.integral.is_some())
            .finish()
    }
}

impl RealFunction {
    pub fn new(lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(
                "support",
                format!("[{lo}, {hi}] is not a proper interval"),
            ));
        }
        Ok(Self {
            lo,
            hi,
            lo_exp: 0.0,
            hi_exp: 0.0,
            eval: Arc::new(f),
            anchors: (lo, hi),
            by_offsets: None,
            integral: None,
        })
    }

    pub fn constant(value: f64, lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::new(lo, hi, move |_| value)?.with_integral(move |a, b| value * (b - a)))
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::constant(1.0, lo, hi)
    }

    /// Linear interpolation through `(t, v)` pairs sorted by `t`.
    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("table", "at least two points are required"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::invalid("table", "abscissae must be strictly increasing"));
        }
        let lo = points[0].0;
        let hi = points[points.len() - 1].0;
        let pts = Arc::new(points);
        let p2 = pts.clone();
        Ok(
            Self::new(lo, hi, move |t| interpolate(&pts, t))?.with_integral(move |a, b| {
                // Exact trapezoid over the breakpoints inside [a, b].
                let mut xs = vec![a];
                xs.extend(p2.iter().map(|p| p.0).filter(|&x| x > a && x < b));
                xs.push(b);
                xs.windows(2)
                    .map(|w| 0.5 * (w[1] - w[0]) * (interpolate(&p2, w[0]) + interpolate(&p2, w[1])))
                    .sum()
            }),
        )
    }

    pub fn with_singularities(mut self, lo_exp: f64, hi_exp: f64) -> Result<Self> {
        for (name, e) in [("lo_exp", lo_exp), ("hi_exp", hi_exp)] {
            if !(e > -0.5 && e <= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("singularity exponent {e} must lie in (-1/2, 0]"),
                ));
            }
        }
        self.lo_exp = lo_exp;
        self.hi_exp = hi_exp;
        Ok(self)
    }

    /// Attaches an evaluation in terms of the distances `(t - lo, hi - t)` to
    /// the current support ends, used by quadrature next to singular ends where `t`
    /// itself cannot resolve the distance.
    pub fn with_offsets(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.anchors = (self.lo, self.hi);
        self.by_offsets = Some(Arc::new(f));
        self
    }

    /// Attaches an exact `(a, b) -> int_a^b f` valid for `lo <= a <= b <= hi`.
    pub fn with_integral(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.integral = Some(Arc::new(f));
        self
    }

    /// Restriction to `[lo, hi]` intersected with the current support; an end
    /// that moves inside the support becomes regular. `None` if empty.
    pub fn restricted(&self, lo: f64, hi: f64) -> Option<Self> {
        let new_lo = lo.max(self.lo);
        let new_hi = hi.min(self.hi);
        if !(new_lo < new_hi) {
            return None;
        }
        let mut out = self.clone();
        if new_lo > self.lo {
            out.lo_exp = 0.0;
        }
        if new_hi < self.hi {
            out.hi_exp = 0.0;
        }
        out.lo = new_lo;
        out.hi = new_hi;
        Some(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.eval.clone();
        let mut out = self.clone();
        out.eval = Arc::new(move |t| c * f(t));
        out.by_offsets = self.by_offsets.clone().map(|g| {
            let g: OffsetEval = Arc::new(move |l, r| c * g(l, r));
            g
        });
        out.integral = self.integral.clone().map(|g| {
            let g: Antiderivative = Arc::new(move |a, b| c * g(a, b));
            g
        });
        out
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.lo_exp, self.hi_exp)
    }

    pub fn is_singular(&self) -> bool {
        self.lo_exp != 0.0 || self.hi_exp != 0.0
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < self.lo || t > self.hi {
            0.0
        } else {
            (self.eval)(t)
        }
    }

    /// Evaluates at a quadrature node of the interval `[a, b]` whose exact
    /// distances to `a` and `b` are `from_a` and `to_b`.
    pub fn eval_node(&self, x: f64, a: f64, from_a: f64, b: f64, to_b: f64) -> f64 {
        let Some(g) = &self.by_offsets else {
            return self.eval(x);
        };
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let (lo, hi) = self.anchors;
        let d_lo = if a == lo { from_a } else { x - lo };
        let d_hi = if b == hi { to_b } else { hi - x };
        if d_lo < 0.0 || d_hi < 0.0 {
            0.0
        } else {
            g(d_lo, d_hi)
        }
    }

    /// `int_a^b f(t) dt` (support taken into account).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_by(a, b, false)
    }

    fn integral_by(&self, a: f64, b: f64, midpoint: bool) -> f64 {
        let lo = a.max(self.lo);
        let hi = b.min(self.hi);
        if !(lo < hi) {
            return 0.0;
        }
        if let Some(g) = &self.integral {
            return g(lo, hi);
        }
        let p = if lo == self.lo { self.lo_exp } else { 0.0 };
        let q = if hi == self.hi { self.hi_exp } else { 0.0 };
        if p == 0.0 && q == 0.0 && midpoint {
            return (hi - lo) * (self.eval)(0.5 * (lo + hi));
        }
        let nodes = graded_rule(lo, hi, p, q, &Grading::default());
        integrate(&nodes, |n| self.eval_node(n.x, lo, n.from_lo, hi, n.to_hi))
    }

    /// Average of `f` over the full cell `[a, b]`: the exact integral when
    /// one is attached, graded quadrature next to a singular end, otherwise
    /// the midpoint value of the overlap with the support.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        self.integral_by(a, b, true) / (b - a)
    }
}

fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 <= t);
    if i == 0 {
        return pts[0].1;
    }
    if i >= pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (t0, v0) = pts[i - 1];
    let (t1, v1) = pts[i];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}
