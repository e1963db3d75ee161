//! Scaled-Beta sender-type distribution on `[0, zbar]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::special::{beta_reg, beta_reg_upper, ln_beta};
use crate::EFFECTIVE_ZERO;

/// Distance from `zbar` inside which the upper tail is treated as empty.
pub const TAIL_SNAP: f64 = 1e-9;
/// Smallest survival mass a truncated mean may be conditioned on.
pub const MIN_TAIL_MASS: f64 = 1e-12;

const MOMENT_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-11,
    max_depth: 60,
};

/// `zbar * Beta(alpha, beta_shape)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct SenderDist {
    alpha: f64,
    beta_shape: f64,
    zbar: f64,
    ln_b: f64,
}

/// Wire form of [`SenderDist`]: `{"alpha": .., "beta": .., "zbar": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    pub alpha: f64,
    #[serde(rename = "beta")]
    pub beta_shape: f64,
    pub zbar: f64,
}

impl TryFrom<DistSpec> for SenderDist {
    type Error = Error;
    fn try_from(s: DistSpec) -> Result<Self> {
        SenderDist::new(s.alpha, s.beta_shape, s.zbar)
    }
}

impl From<SenderDist> for DistSpec {
    fn from(d: SenderDist) -> Self {
        DistSpec {
            alpha: d.alpha,
            beta_shape: d.beta_shape,
            zbar: d.zbar,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

impl SenderDist {
    pub fn new(alpha: f64, beta_shape: f64, zbar: f64) -> Result<Self> {
        let alpha = positive("alpha", alpha)?;
        let beta_shape = positive("beta_shape", beta_shape)?;
        let zbar = positive("zbar", zbar)?;
        Ok(SenderDist {
            alpha,
            beta_shape,
            zbar,
            ln_b: ln_beta(alpha, beta_shape),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta_shape(&self) -> f64 {
        self.beta_shape
    }

    pub fn zbar(&self) -> f64 {
        self.zbar
    }

    /// Unconditional mean `zbar * alpha / (alpha + beta)`.
    pub fn mean(&self) -> f64 {
        self.zbar * self.alpha / (self.alpha + self.beta_shape)
    }

    /// Density without domain checking; zero outside the support.
    pub fn density(&self, z: f64) -> f64 {
        if !(0.0..=self.zbar).contains(&z) {
            return 0.0;
        }
        let x = z / self.zbar;
        let mut ln = -self.ln_b - self.zbar.ln();
        if self.alpha != 1.0 {
            if x == 0.0 {
                return if self.alpha > 1.0 { 0.0 } else { f64::INFINITY };
            }
            ln += (self.alpha - 1.0) * x.ln();
        }
        if self.beta_shape != 1.0 {
            if x == 1.0 {
                return if self.beta_shape > 1.0 { 0.0 } else { f64::INFINITY };
            }
            ln += (self.beta_shape - 1.0) * (1.0 - x).ln();
        }
        ln.exp()
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        let slack = 1e-12 * self.zbar.max(1.0);
        if !(z >= -slack && z <= self.zbar + slack) {
            return Err(Error::Domain {
                what: "pdf",
                value: z,
                lo: 0.0,
                hi: self.zbar,
            });
        }
        Ok(self.density(z.clamp(0.0, self.zbar)))
    }

    pub fn cdf(&self, z: f64) -> f64 {
        beta_reg(self.alpha, self.beta_shape, z / self.zbar)
    }

    /// `1 - cdf(z)`, computed without cancellation in the upper tail.
    pub fn survival(&self, z: f64) -> f64 {
        beta_reg_upper(self.alpha, self.beta_shape, z / self.zbar)
    }

    /// Inverse CDF by bisection; diagnostics only.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain {
                what: "quantile",
                value: p,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let (mut lo, mut hi) = (0.0, self.zbar);
        while hi - lo > 1e-12 * self.zbar.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `∫_c^zbar z^p g(z) dz`.
    ///
    /// For `p < 0` the lower limit is raised to [`EFFECTIVE_ZERO`].
    pub fn partial_moment(&self, c: f64, p: f64) -> Result<f64> {
        if !(c >= 0.0 && c <= self.zbar) {
            return Err(Error::Domain {
                what: "partial_moment lower limit",
                value: c,
                lo: 0.0,
                hi: self.zbar,
            });
        }
        if !(p >= -1.0) {
            return Err(Error::Domain {
                what: "partial_moment power",
                value: p,
                lo: -1.0,
                hi: f64::INFINITY,
            });
        }
        let lower = if p < 0.0 { c.max(EFFECTIVE_ZERO) } else { c };
        if lower >= self.zbar {
            return Ok(0.0);
        }
        if p == 0.0 {
            return Ok(self.survival(lower));
        }
        integrate(|z| z.powf(p) * self.density(z), lower, self.zbar, MOMENT_TOL)
    }

    /// `E[z | z >= c]`.
    pub fn trunc_mean(&self, c: f64) -> Result<f64> {
        if !(c >= 0.0 && c <= self.zbar) {
            return Err(Error::Domain {
                what: "trunc_mean",
                value: c,
                lo: 0.0,
                hi: self.zbar,
            });
        }
        if c >= self.zbar - TAIL_SNAP {
            return Ok(self.zbar);
        }
        if c == 0.0 {
            return Ok(self.mean());
        }
        let mass = self.survival(c);
        if mass < MIN_TAIL_MASS {
            return Err(Error::DegenerateTail { c, mass });
        }
        Ok((self.partial_moment(c, 1.0)? / mass).clamp(c, self.zbar))
    }
}
