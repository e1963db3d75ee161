//! Aggregate net surplus of a well-behaved equilibrium.
//!
//! Transfers cancel between the two market sides, so the objective depends on
//! the thresholds only through actions: separating types `z in [z_l, z_h]`
//! contribute `A k z^(q+1) sigma(z)^a - beta sigma(z)^2 / z` and the pooled
//! block above `z_h` contributes `A k s_h^a E[z | z >= z_h] E[z^q; z >= z_h]
//! - beta s_h^2 E[1/z; z >= z_h]`.

use std::cell::RefCell;

use serde::Serialize;

use crate::distributions::SenderDist;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate, Tolerance};
use crate::separating::SeparatingPath;
use crate::thresholds::{pooled_action, pooling_star, tail_is_degenerate};
use crate::EFFECTIVE_ZERO;

const SEPARATING_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 1e-11,
    max_depth: 60,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurplusBreakdown {
    pub z_l: f64,
    pub z_h: f64,
    /// Pooled action used for the block above `z_h` (zero when it is empty).
    pub s_h: f64,
    pub separating_part: f64,
    pub pooling_part: f64,
    pub total: f64,
}

impl SurplusBreakdown {
    fn new(z_l: f64, z_h: f64, s_h: f64, separating_part: f64, pooling_part: f64) -> Self {
        SurplusBreakdown {
            z_l,
            z_h,
            s_h,
            separating_part,
            pooling_part,
            total: separating_part + pooling_part,
        }
    }
}

/// Upper-tail moments at a pooling threshold; they depend on `z_h` alone and
/// can be shared by every entry threshold below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMoments {
    pub z_h: f64,
    /// `E[z | z >= z_h]`
    pub mean: f64,
    /// `E[z^q; z >= z_h]`
    pub power: f64,
    /// `E[1/z; z >= max(z_h, EFFECTIVE_ZERO)]`
    pub inverse: f64,
}

impl TailMoments {
    pub fn at(p: &ModelParams, d: &SenderDist, z_h: f64) -> Result<Self> {
        Ok(TailMoments {
            z_h,
            mean: d.trunc_mean(z_h)?,
            power: d.partial_moment(z_h, p.spacing)?,
            inverse: d.partial_moment(z_h.max(EFFECTIVE_ZERO), -1.0)?,
        })
    }

    /// Surplus of the pooled block when every type above `z_h` takes `s_h`.
    pub fn pooled_surplus(&self, p: &ModelParams, s_h: f64) -> f64 {
        let gross = p.ak() * s_h.powf(p.signal_power) * self.mean * self.power;
        if s_h == 0.0 {
            gross
        } else {
            gross - p.cost_scale * s_h * s_h * self.inverse
        }
    }
}

/// `∫_lo^hi [A k z^(q+1) sigma(z)^a - beta sigma(z)^2 / z] g(z) dz` along `path`.
pub fn separating_part(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let (ak, a, q, beta) = (p.ak(), p.signal_power, p.spacing, p.cost_scale);
    let value = integrate(
        |z| match path.sigma_tilde(z) {
            Ok(s) => {
                let cost = if s == 0.0 { 0.0 } else { beta * s * s / z };
                (ak * z.powf(q + 1.0) * s.powf(a) - cost) * d.density(z)
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        SEPARATING_TOL,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Aggregate net surplus for entry threshold `path.z_l()` and pooling
/// threshold `z_h`.
pub fn pi_w(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, z_h: f64) -> Result<SurplusBreakdown> {
    let z_l = path.z_l();
    let zbar = d.zbar();
    if !(z_h >= z_l - EFFECTIVE_ZERO && z_h <= zbar + EFFECTIVE_ZERO) {
        return Err(Error::Domain {
            what: "pi_w pooling threshold",
            value: z_h,
            lo: z_l,
            hi: zbar,
        });
    }
    if z_h - z_l < EFFECTIVE_ZERO {
        let pooled = pi_p_detail(p, d, z_l)?;
        return Ok(SurplusBreakdown { z_h: z_l, ..pooled });
    }
    let z_h = z_h.min(zbar);
    let sep = separating_part(p, d, path, z_l, z_h)?;
    if tail_is_degenerate(d, z_h) {
        return Ok(SurplusBreakdown::new(z_l, z_h, 0.0, sep, 0.0));
    }
    let s_h = pooled_action(p, d, path, z_h)?;
    let pool = TailMoments::at(p, d, z_h)?.pooled_surplus(p, s_h);
    Ok(SurplusBreakdown::new(z_l, z_h, s_h, sep, pool))
}

fn pi_p_detail(p: &ModelParams, d: &SenderDist, z_star: f64) -> Result<SurplusBreakdown> {
    let (s_star, _) = pooling_star(p, d, z_star)?;
    let pool = TailMoments::at(p, d, z_star)?.pooled_surplus(p, s_star);
    Ok(SurplusBreakdown::new(z_star, z_star, s_star, 0.0, pool))
}

/// Surplus of single-reaction pooling: every type from `z_star` up takes `s*`.
pub fn pi_p(p: &ModelParams, d: &SenderDist, z_star: f64) -> Result<f64> {
    Ok(pi_p_detail(p, d, z_star)?.total)
}

/// Surplus under full delegation along `path` (no pooling block).
pub fn pi_s(p: &ModelParams, d: &SenderDist, path: &SeparatingPath) -> Result<f64> {
    Ok(pi_w(p, d, path, d.zbar())?.total)
}

/// `Pi_w(0, z_h) - Pi_s` at small spacing and signal power.
///
/// As `(q, a, z_h) -> 0` the gap tends to `A k mu_z / 2`: pooling almost
/// everybody at a negligible action keeps the gross surplus and sheds the
/// signaling cost that full separation burns.
pub fn theorem_gap(p: &ModelParams, d: &SenderDist, q_small: f64, a_small: f64, z_h_small: f64) -> Result<f64> {
    let small = p.with_spacing(q_small).with_signal_power(a_small);
    small.validate()?;
    let path = SeparatingPath::new(&small, d, 0.0)?;
    Ok(pi_w(&small, d, &path, z_h_small)?.total - pi_s(&small, d, &path)?)
}
