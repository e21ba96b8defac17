//! Symmetric dispersal kernels parameterized by their variance.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{ModelError, Result};
use crate::habitat::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Gaussian,
    Laplace,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
        }
    }
}

/// Difference kernel `K(x − y)` with variance in km²/generation.
///
/// The Laplace rate is derived from the variance as `α = √(2 / variance)`, so
/// both families can be swept along the same variance axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersalKernel {
    family: KernelFamily,
    variance: f64,
}

impl DispersalKernel {
    pub fn new(family: KernelFamily, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(ModelError::invalid(
                "variance",
                format!("kernel variance must be finite and > 0, got {variance}"),
            ));
        }
        Ok(Self { family, variance })
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, variance)
    }

    pub fn laplace(variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplace, variance)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Laplace rate `α`; `None` for the Gaussian.
    pub fn laplace_rate(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian => None,
            KernelFamily::Laplace => Some((2.0 / self.variance).sqrt()),
        }
    }

    /// `K(x)`.
    pub fn density(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                (-0.5 * x * x / self.variance).exp() / (2.0 * PI * self.variance).sqrt()
            }
            KernelFamily::Laplace => {
                let alpha = (2.0 / self.variance).sqrt();
                0.5 * alpha * (-alpha * x.abs()).exp()
            }
        }
    }

    /// Half-width `w` with `∫_{|z| > w} K < 1e-12`.
    pub fn tail_half_width(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian => 7.5 * self.std_dev(),
            KernelFamily::Laplace => 28.0 * self.std_dev() / SQRT_2,
        }
    }

    /// `sup K = K(0)`.
    pub fn peak_density(&self) -> f64 {
        self.density(0.0)
    }

    /// `∫_{−∞}^x K`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => 0.5 * libm::erfc(-x / (SQRT_2 * self.std_dev())),
            KernelFamily::Laplace => {
                let alpha = (2.0 / self.variance).sqrt();
                if x < 0.0 {
                    0.5 * (alpha * x).exp()
                } else {
                    1.0 - 0.5 * (-alpha * x).exp()
                }
            }
        }
    }

    /// `∫_x^∞ K`, accurate in the far right tail.
    pub fn survival(&self, x: f64) -> f64 {
        self.cdf(-x)
    }

    /// Probability mass of `K` on `[lo, hi]`, without cancellation in the tails.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if lo > 0.0 {
            self.survival(lo) - self.survival(hi)
        } else {
            self.cdf(hi) - self.cdf(lo)
        }
    }

    /// Dispersal success `s(y) = ∫_a^b K(x − y) dx` from closed-form CDFs.
    pub fn dispersal_success(&self, domain: Interval, y: f64) -> f64 {
        self.mass_between(domain.start - y, domain.end - y)
    }

    /// Upper end of the moment generating function's domain: `α` for Laplace,
    /// `None` (unbounded) for the Gaussian.
    pub fn mgf_abscissa(&self) -> Option<f64> {
        self.laplace_rate()
    }

    /// `M(s) = ∫ e^{sz} K(z) dz`, or `None` when the integral diverges
    /// (Laplace with `|s| ≥ α`).
    pub fn mgf(&self, s: f64) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian => Some((0.5 * self.variance * s * s).exp()),
            KernelFamily::Laplace => {
                let alpha2 = 2.0 / self.variance;
                (s * s < alpha2).then(|| alpha2 / (alpha2 - s * s))
            }
        }
    }

    /// `ln M(s)`, evaluated without forming `M` for the Gaussian.
    pub fn log_mgf(&self, s: f64) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian => Some(0.5 * self.variance * s * s),
            KernelFamily::Laplace => {
                let alpha2 = 2.0 / self.variance;
                (s * s < alpha2).then(|| -(1.0 - s * s / alpha2).ln())
            }
        }
    }
}
