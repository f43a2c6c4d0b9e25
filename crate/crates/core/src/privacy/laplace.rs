use rand_core::RngCore;

use super::rng::centered_uniform;
use crate::error::{Error, Result};

/// Zero-mean Laplace distribution with scale `b`: density `exp(−|x|/b) / 2b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidInput(format!("Laplace scale must be positive, got {scale}")));
        }
        Ok(Laplace { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale
    }

    pub fn density(&self, x: f64) -> f64 {
        (-x.abs() / self.scale).exp() / (2.0 * self.scale)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x / self.scale).exp()
        } else {
            1.0 - 0.5 * (-x / self.scale).exp()
        }
    }

    /// Inverse CDF at `u − ½` for `u` uniform, i.e. `u ∈ (−½, ½)`.
    pub fn quantile_centered(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        -self.scale * u.signum() * (-2.0 * u.abs()).ln_1p()
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_centered(centered_uniform(rng))
    }
}

/// One Laplace draw at scale `b`.
pub fn laplace_sample<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    Ok(Laplace::new(scale)?.sample(rng))
}
