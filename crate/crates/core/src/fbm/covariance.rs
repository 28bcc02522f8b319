use std::fmt;
use std::sync::Arc;

use super::grid::HurstParam;
use crate::error::{Error, Result};

/// Covariance `E[B_s B_t] = (|s|^{2H} + |t|^{2H} - |t-s|^{2H}) / 2`.
pub fn autocov(s: f64, t: f64, h: HurstParam) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * (s.abs().powf(two_h) + t.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// Same formula without the `(1/2, 1)` restriction; used for the Brownian
/// reference case `H = 1/2` in tests and checks.
pub fn autocov_raw(s: f64, t: f64, h: f64) -> f64 {
    let two_h = 2.0 * h;
    0.5 * (s.abs().powf(two_h) + t.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// The kernel `phi(s,t) = H(2H-1)|s-t|^{2H-2}`; singular on the diagonal.
pub fn phi(s: f64, t: f64, h: HurstParam) -> Result<f64> {
    if s == t {
        return Err(Error::SingularPoint { what: "phi", at: s });
    }
    let h = h.value();
    Ok(h * (2.0 * h - 1.0) * (s - t).abs().powf(2.0 * h - 2.0))
}

/// Autocovariance of unit-spaced fractional Gaussian noise at lag `k`.
pub fn fgn_autocov(k: usize, h: f64) -> f64 {
    let two_h = 2.0 * h;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

/// A covariance function `R(s, t)` on `[0, T]^2`.
#[derive(Clone)]
pub enum CovarianceSpec {
    Fbm(HurstParam),
    Generic(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl CovarianceSpec {
    pub fn generic(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        CovarianceSpec::Generic(Arc::new(f))
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            CovarianceSpec::Fbm(h) => autocov(s, t, *h),
            CovarianceSpec::Generic(f) => f(s, t),
        }
    }

    pub fn hurst(&self) -> Option<HurstParam> {
        match self {
            CovarianceSpec::Fbm(h) => Some(*h),
            CovarianceSpec::Generic(_) => None,
        }
    }
}

impl fmt::Debug for CovarianceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceSpec::Fbm(h) => write!(f, "Fbm({})", h.value()),
            CovarianceSpec::Generic(_) => f.write_str("Generic(..)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn autocov_examples() {
        assert_relative_eq!(autocov(1.0, 1.0, h(0.7)), 1.0, epsilon = 1e-15);
        assert_relative_eq!(autocov_raw(1.0, 2.0, 0.5), 1.0, epsilon = 1e-15);
        assert_relative_eq!(autocov(1.0, 2.0, h(0.75)), 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(autocov(0.5, 1.0, h(0.75)), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn phi_examples() {
        assert_relative_eq!(phi(0.0, 1.0, h(0.75)).unwrap(), 0.375, epsilon = 1e-15);
        assert_relative_eq!(phi(0.0, 0.25, h(0.75)).unwrap(), 0.75, epsilon = 1e-14);
        assert!(matches!(phi(0.3, 0.3, h(0.75)), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn fgn_lag_zero_is_unit() {
        assert_eq!(fgn_autocov(0, 0.8), 1.0);
        assert!(fgn_autocov(3, 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn autocov_symmetric_with_power_diagonal(s in 0.0f64..5.0, t in 0.0f64..5.0, hv in 0.51f64..0.99) {
            let hp = h(hv);
            prop_assert!((autocov(s, t, hp) - autocov(t, s, hp)).abs() < 1e-12);
            prop_assert!((autocov(t, t, hp) - t.powf(2.0 * hv)).abs() <= 1e-12 * (1.0 + t.powf(2.0 * hv)));
        }

        #[test]
        fn phi_symmetric(s in 0.0f64..5.0, t in 0.0f64..5.0, hv in 0.51f64..0.99) {
            prop_assume!((s - t).abs() > 1e-9);
            let hp = h(hv);
            prop_assert_eq!(phi(s, t, hp).unwrap(), phi(t, s, hp).unwrap());
        }
    }
}
