//! Market primitives: match surplus `v = A s^a x z`, signaling cost
//! `c = beta s^2 / z` and the sender-to-receiver map `n(z) = k z^q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::EFFECTIVE_ZERO;

/// Scalar primitives of the parametrized market.
///
/// Serialized with the short keys `A`, `beta`, `a`, `k`, `q`; missing keys
/// fall back to the baseline `A = 1, beta = 0.5, a = 0.5, k = 1, q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    /// Surplus scale `A`.
    pub surplus_scale: f64,
    /// Cost scale `beta`.
    pub cost_scale: f64,
    /// Signal productivity `a` in `[0, 1)`.
    pub signal_power: f64,
    /// Receiver scale `k`.
    pub receiver_scale: f64,
    /// Relative spacing `q`.
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "A", default = "one")]
    surplus_scale: f64,
    #[serde(rename = "beta", default = "half")]
    cost_scale: f64,
    #[serde(rename = "a", default = "half")]
    signal_power: f64,
    #[serde(rename = "k", default = "one")]
    receiver_scale: f64,
    #[serde(rename = "q", default = "one")]
    spacing: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.surplus_scale, r.cost_scale, r.signal_power, r.receiver_scale, r.spacing)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            surplus_scale: p.surplus_scale,
            cost_scale: p.cost_scale,
            signal_power: p.signal_power,
            receiver_scale: p.receiver_scale,
            spacing: p.spacing,
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::BASELINE
    }
}

impl ModelParams {
    pub const BASELINE: ModelParams = ModelParams {
        surplus_scale: 1.0,
        cost_scale: 0.5,
        signal_power: 0.5,
        receiver_scale: 1.0,
        spacing: 1.0,
    };

    pub fn new(surplus_scale: f64, cost_scale: f64, signal_power: f64, receiver_scale: f64, spacing: f64) -> Result<Self> {
        let p = ModelParams {
            surplus_scale,
            cost_scale,
            signal_power,
            receiver_scale,
            spacing,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name, value: f64, ok: bool, reason| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value, reason })
            }
        };
        check("A", self.surplus_scale, self.surplus_scale > 0.0, "must be positive")?;
        check("beta", self.cost_scale, self.cost_scale > 0.0, "must be positive")?;
        check(
            "a",
            self.signal_power,
            (0.0..1.0).contains(&self.signal_power),
            "must lie in [0, 1)",
        )?;
        check("k", self.receiver_scale, self.receiver_scale > 0.0, "must be positive")?;
        check("q", self.spacing, self.spacing >= 0.0, "must be nonnegative")
    }

    pub fn with_signal_power(self, a: f64) -> Self {
        ModelParams { signal_power: a, ..self }
    }

    pub fn with_spacing(self, q: f64) -> Self {
        ModelParams { spacing: q, ..self }
    }

    pub fn with_receiver_scale(self, k: f64) -> Self {
        ModelParams { receiver_scale: k, ..self }
    }

    /// `A k`, the combination that appears throughout the closed forms.
    pub fn ak(&self) -> f64 {
        self.surplus_scale * self.receiver_scale
    }

    /// Gross match surplus `A s^a x z` (with `0^0 = 1`).
    pub fn surplus_v(&self, x: f64, s: f64, z: f64) -> f64 {
        self.surplus_scale * s.powf(self.signal_power) * x * z
    }

    /// Signaling cost `beta s^2 / z`; zero for `s = 0` whatever `z` is.
    pub fn cost_c(&self, s: f64, z: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        if z < EFFECTIVE_ZERO {
            return Err(Error::Singularity { s, z });
        }
        Ok(self.cost_scale * s * s / z)
    }

    /// Receiver type matched with sender type `z` under assortative matching.
    pub fn match_n(&self, z: f64) -> f64 {
        self.receiver_scale * z.powf(self.spacing)
    }

    pub fn v_s(&self, x: f64, s: f64, z: f64) -> f64 {
        let a = self.signal_power;
        if a == 0.0 {
            return 0.0;
        }
        a * self.surplus_scale * s.powf(a - 1.0) * x * z
    }

    pub fn v_z(&self, x: f64, s: f64, _z: f64) -> f64 {
        self.surplus_scale * s.powf(self.signal_power) * x
    }

    pub fn c_s(&self, s: f64, z: f64) -> f64 {
        2.0 * self.cost_scale * s / z
    }

    pub fn c_z(&self, s: f64, z: f64) -> f64 {
        -self.cost_scale * s * s / (z * z)
    }
}
