//! Bottom and top threshold systems.
//!
//! The bottom system ties the entry type `z_l` to the entry action and the
//! reaction floor `(s_l, t_l)`. The top system ties the pooling threshold
//! `z_h` to the pooled action and the reaction cap `(s_h, t_h)`: the pooled
//! action is the larger root of the summed indifference conditions, and `t_h`
//! follows from either indifference condition alone.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::{SenderDist, MIN_TAIL_MASS, TAIL_SNAP};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::roots::{bisect, brent};
use crate::separating::{s_lower, SeparatingPath};
use crate::EFFECTIVE_ZERO;

/// Relative disagreement tolerated between the two cap retrievals.
pub const CAP_AGREEMENT: f64 = 1e-6;
const ROOT_RTOL: f64 = 1e-13;
const BISECTION_XTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumClass {
    Pooling,
    StrictlyWellBehaved,
    Separating,
}

impl fmt::Display for EquilibriumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumClass::Pooling => "Pooling",
            EquilibriumClass::StrictlyWellBehaved => "StrictlyWellBehaved",
            EquilibriumClass::Separating => "Separating",
        })
    }
}

impl EquilibriumClass {
    /// Classify a threshold pair, snapping gaps below [`EFFECTIVE_ZERO`].
    pub fn of(z_l: f64, z_h: f64, zbar: f64) -> Self {
        if z_h - z_l < EFFECTIVE_ZERO {
            EquilibriumClass::Pooling
        } else if zbar - z_h < EFFECTIVE_ZERO {
            EquilibriumClass::Separating
        } else {
            EquilibriumClass::StrictlyWellBehaved
        }
    }
}

/// Threshold types of a well-behaved equilibrium with the actions and
/// reactions they induce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub z_l: f64,
    pub z_h: f64,
    pub s_l: f64,
    pub s_h: f64,
    pub t_l: f64,
    pub t_h: f64,
    pub x_h: f64,
    pub class: EquilibriumClass,
}

/// `(s_l, t_l)` for entry type `z_l`.
///
/// At `z_l = 0` both vanish; above it both entry conditions bind and
/// `t_l = c(s_l, z_l) = v(n(z_l), s_l, z_l)`.
pub fn solve_bottom(p: &ModelParams, d: &SenderDist, z_l: f64) -> Result<(f64, f64)> {
    if !(z_l >= 0.0 && z_l < d.zbar()) {
        return Err(Error::Domain {
            what: "solve_bottom",
            value: z_l,
            lo: 0.0,
            hi: d.zbar(),
        });
    }
    if z_l == 0.0 {
        return Ok((0.0, 0.0));
    }
    let s_l = s_lower(p, z_l);
    let t_l = if z_l < EFFECTIVE_ZERO {
        p.surplus_v(p.match_n(z_l), s_l, z_l)
    } else {
        p.cost_c(s_l, z_l)?
    };
    Ok((s_l, t_l))
}

/// Entry type induced by reaction floor `t_l` (inverse of [`solve_bottom`]).
pub fn invert_floor(p: &ModelParams, d: &SenderDist, t_l: f64) -> Result<f64> {
    if !(t_l >= 0.0) {
        return Err(Error::Domain {
            what: "invert_floor",
            value: t_l,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if t_l == 0.0 {
        return Ok(0.0);
    }
    let floor_at = |z: f64| -> Result<f64> { Ok(solve_bottom(p, d, z)?.1) };
    let hi = d.zbar() * (1.0 - 1e-12);
    let max_floor = floor_at(hi)?;
    if t_l >= max_floor {
        return Err(Error::Domain {
            what: "invert_floor: floor excludes every sender",
            value: t_l,
            lo: 0.0,
            hi: max_floor,
        });
    }
    bisect(|z| Ok(floor_at(z)? - t_l), 0.0, hi, BISECTION_XTOL)
}

/// Whether the upper tail above `z_h` carries too little mass to pool.
pub fn tail_is_degenerate(d: &SenderDist, z_h: f64) -> bool {
    z_h >= d.zbar() - TAIL_SNAP || d.survival(z_h) < MIN_TAIL_MASS
}

/// Single-reaction pooling at entry type `z_star`: `(s*, t*)`.
///
/// `s* = (z*^(q+1) A k E[z | z >= z*] / beta)^(1/(2-a))` and `t* = c(s*, z*)`.
pub fn pooling_star(p: &ModelParams, d: &SenderDist, z_star: f64) -> Result<(f64, f64)> {
    if !(z_star >= 0.0 && z_star < d.zbar()) {
        return Err(Error::Domain {
            what: "pooling_star",
            value: z_star,
            lo: 0.0,
            hi: d.zbar(),
        });
    }
    if z_star < EFFECTIVE_ZERO {
        return Ok((0.0, 0.0));
    }
    let tail_mean = d.trunc_mean(z_star)?;
    let s = (z_star.powf(p.spacing + 1.0) * p.ak() * tail_mean / p.cost_scale)
        .powf(1.0 / (2.0 - p.signal_power));
    Ok((s, p.cost_c(s, z_star)?))
}

/// Both retrievals of the cap for a pooling threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopSolution {
    pub s_h: f64,
    /// From sender indifference at `z_h` (canonical).
    pub t_h: f64,
    /// From receiver indifference at `n(z_h)`.
    pub t_h_receiver: f64,
    pub sigma_zh: f64,
}

fn check_top_domain(path: &SeparatingPath, d: &SenderDist, z_h: f64) -> Result<()> {
    if !(z_h > path.z_l() && z_h < d.zbar() - TAIL_SNAP) {
        return Err(Error::Domain {
            what: "pooling threshold",
            value: z_h,
            lo: path.z_l(),
            hi: d.zbar(),
        });
    }
    Ok(())
}

/// Pooled action `s_h(z_h)`: the root above `sigma(z_h)` of
/// `A k s^a z_h^q E[z|z>=z_h] - beta s^2/z_h = A k sigma^a z_h^(1+q) - beta sigma^2/z_h`.
pub fn pooled_action(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, z_h: f64) -> Result<f64> {
    check_top_domain(path, d, z_h)?;
    let sigma = path.sigma_tilde(z_h)?;
    pooled_action_from(p, d, z_h, sigma)
}

fn pooled_action_from(p: &ModelParams, d: &SenderDist, z_h: f64, sigma: f64) -> Result<f64> {
    pooled_root(p, z_h, sigma, d.trunc_mean(z_h)?)
}

/// Pooled action given `sigma(z_h)` and a precomputed `E[z | z >= z_h]`.
pub(crate) fn pooled_root(p: &ModelParams, z_h: f64, sigma: f64, tail_mean: f64) -> Result<f64> {
    let (a, q, beta) = (p.signal_power, p.spacing, p.cost_scale);
    let ak = p.ak();
    let pooled_gain = ak * z_h.powf(q) * tail_mean;
    let rhs = ak * sigma.powf(a) * z_h.powf(1.0 + q) - beta * sigma * sigma / z_h;
    let residual = |s: f64| pooled_gain * s.powf(a) - beta * s * s / z_h - rhs;

    let lo = sigma * (1.0 + 1e-10);
    if residual(lo) <= 0.0 {
        // both roots have merged into sigma (tail mean ~ z_h)
        return Ok(sigma);
    }
    let mut hi = 2.0 * sigma.max(f64::MIN_POSITIVE);
    let mut expansions = 0;
    while residual(hi) > 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2100 || !hi.is_finite() {
            return Err(Error::convergence(
                "pooled action",
                format!("could not bracket the upper root at z_h = {z_h}"),
            ));
        }
    }
    brent(residual, lo, hi, ROOT_RTOL, 0.0)
}

/// `(s_h, t_h)` for pooling threshold `z_h in (z_l, zbar)` with both cap
/// retrievals cross-checked.
pub fn solve_top_detail(
    p: &ModelParams,
    d: &SenderDist,
    path: &SeparatingPath,
    z_h: f64,
) -> Result<TopSolution> {
    check_top_domain(path, d, z_h)?;
    let sigma = path.sigma_tilde(z_h)?;
    let s_h = pooled_action_from(p, d, z_h, sigma)?;
    let wage = path.tau_tilde(sigma)?;
    let x_h = p.match_n(z_h);

    let t_h = p.cost_c(s_h, z_h)? + wage - p.cost_c(sigma, z_h)?;
    let pooled_value = p.surplus_scale * s_h.powf(p.signal_power) * x_h * d.trunc_mean(z_h)?;
    let t_h_receiver = pooled_value - p.surplus_v(x_h, sigma, z_h) + wage;

    if (t_h - t_h_receiver).abs() > CAP_AGREEMENT * t_h.abs().max(1.0) {
        return Err(Error::Inconsistency(format!(
            "cap retrievals disagree at z_h = {z_h}: sender side {t_h}, receiver side {t_h_receiver}"
        )));
    }
    Ok(TopSolution {
        s_h,
        t_h,
        t_h_receiver,
        sigma_zh: sigma,
    })
}

pub fn solve_top(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, z_h: f64) -> Result<(f64, f64)> {
    let top = solve_top_detail(p, d, path, z_h)?;
    Ok((top.s_h, top.t_h))
}

/// Limit of the cap as `z_h` decreases to `z_l`.
///
/// Equals `t_l` when `z_l = 0`; for interior `z_l` the pooled action tends
/// to `s*` from [`pooling_star`] rather than `s_l`.
pub fn cap_floor(p: &ModelParams, d: &SenderDist, path: &SeparatingPath) -> Result<f64> {
    let z_l = path.z_l();
    if z_l < EFFECTIVE_ZERO {
        return Ok(path.t_l());
    }
    let (s_star, _) = pooling_star(p, d, z_l)?;
    Ok(p.cost_c(s_star, z_l)? + path.t_l() - p.cost_c(path.s_l(), z_l)?)
}

/// Full threshold record for the pair `(path.z_l, z_h)`.
pub fn evaluate(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, z_h: f64) -> Result<Thresholds> {
    let zbar = d.zbar();
    let z_l = path.z_l();
    if !(z_h >= z_l - EFFECTIVE_ZERO && z_h <= zbar + EFFECTIVE_ZERO) {
        return Err(Error::Domain {
            what: "evaluate",
            value: z_h,
            lo: z_l,
            hi: zbar,
        });
    }
    let mut class = EquilibriumClass::of(z_l, z_h, zbar);
    if class == EquilibriumClass::StrictlyWellBehaved && tail_is_degenerate(d, z_h) {
        class = EquilibriumClass::Separating;
    }
    Ok(match class {
        EquilibriumClass::Pooling => {
            let (s_star, t_star) = pooling_star(p, d, z_l)?;
            Thresholds {
                z_l,
                z_h: z_l,
                s_l: s_star,
                s_h: s_star,
                t_l: t_star,
                t_h: t_star,
                x_h: p.match_n(z_l),
                class,
            }
        }
        EquilibriumClass::Separating => Thresholds {
            z_l,
            z_h: zbar,
            s_l: path.s_l(),
            s_h: path.top_action(),
            t_l: path.t_l(),
            t_h: path.top_wage()?,
            x_h: p.match_n(zbar),
            class,
        },
        EquilibriumClass::StrictlyWellBehaved => {
            let (s_h, t_h) = solve_top(p, d, path, z_h)?;
            Thresholds {
                z_l,
                z_h,
                s_l: path.s_l(),
                s_h,
                t_l: path.t_l(),
                t_h,
                x_h: p.match_n(z_h),
                class,
            }
        }
    })
}

// t_h as a function of z_h on [z_l, zbar], continuous at both ends.
fn cap_at(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, z_h: f64, floor: f64) -> Result<f64> {
    if z_h <= path.z_l() {
        return Ok(floor);
    }
    if tail_is_degenerate(d, z_h) {
        return path.top_wage();
    }
    Ok(solve_top(p, d, path, z_h)?.1)
}

/// Equilibrium induced by the cap `t_h` on top of `path`.
pub fn invert_cap(p: &ModelParams, d: &SenderDist, path: &SeparatingPath, t_h: f64) -> Result<Thresholds> {
    let zbar = d.zbar();
    let z_l = path.z_l();
    let slack = 1e-12 * path.t_l().abs().max(1.0);
    if !(t_h >= path.t_l() - slack) {
        return Err(Error::Domain {
            what: "invert_cap",
            value: t_h,
            lo: path.t_l(),
            hi: f64::INFINITY,
        });
    }
    let top = path.top_wage()?;
    if t_h >= top {
        return Ok(Thresholds {
            z_l,
            z_h: zbar,
            s_l: path.s_l(),
            s_h: path.top_action(),
            t_l: path.t_l(),
            t_h,
            x_h: p.match_n(zbar),
            class: EquilibriumClass::Separating,
        });
    }
    let floor = cap_floor(p, d, path)?;
    if t_h <= floor {
        let (s_star, _) = pooling_star(p, d, z_l)?;
        return Ok(Thresholds {
            z_l,
            z_h: z_l,
            s_l: s_star,
            s_h: s_star,
            t_l: t_h,
            t_h,
            x_h: p.match_n(z_l),
            class: EquilibriumClass::Pooling,
        });
    }
    let z_h = bisect(
        |z| Ok(cap_at(p, d, path, z, floor)? - t_h),
        z_l,
        zbar,
        BISECTION_XTOL * zbar.max(1.0),
    )?;
    let mut out = evaluate(p, d, path, z_h)?;
    if out.class != EquilibriumClass::Pooling {
        out.t_h = t_h;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn uniform() -> SenderDist {
        SenderDist::new(1.0, 1.0, 3.0).unwrap()
    }

    #[test]
    fn classification_rules() {
        use EquilibriumClass::*;
        assert_eq!(EquilibriumClass::of(0.0, 0.0, 3.0), Pooling);
        assert_eq!(EquilibriumClass::of(0.5, 0.5 + 5e-7, 3.0), Pooling);
        assert_eq!(EquilibriumClass::of(0.0, 1.75, 3.0), StrictlyWellBehaved);
        assert_eq!(EquilibriumClass::of(0.0, 3.0 - 5e-7, 3.0), Separating);
    }

    #[test]
    fn bottom_examples() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        assert_eq!(solve_bottom(&p, &d, 0.0).unwrap(), (0.0, 0.0));
        let (s, t) = solve_bottom(&p, &d, 1.0).unwrap();
        close(s, 1.587_401_051_968_199_4, 1e-13);
        close(t, 1.259_921_049_894_873_2, 1e-13);
        close(p.surplus_v(p.match_n(1.0), s, 1.0) - t, 0.0, 1e-13);

        let pure = p.with_signal_power(0.0).with_spacing(1.5);
        let (s, t) = solve_bottom(&pure, &d, 0.5).unwrap();
        close(s, 0.420_448_207_626_856_8, 1e-13);
        close(t, 0.176_776_695_296_636_9, 1e-13);
        assert!(solve_bottom(&p, &d, 3.0).is_err());
    }

    #[test]
    fn floor_inverts_bottom() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        for &z in &[0.2, 1.0, 2.4] {
            let (_, t) = solve_bottom(&p, &d, z).unwrap();
            close(invert_floor(&p, &d, t).unwrap(), z, 1e-10);
        }
        assert_eq!(invert_floor(&p, &d, 0.0).unwrap(), 0.0);
        assert!(invert_floor(&p, &d, 1e6).is_err());
    }

    #[test]
    fn top_baseline_uniform() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        let path = SeparatingPath::new(&p, &d, 0.0).unwrap();
        let top = solve_top_detail(&p, &d, &path, 1.75).unwrap();
        assert!(top.s_h > 4.71 && top.s_h < 4.73, "{}", top.s_h);
        assert!(top.s_h > path.sigma_tilde(1.75).unwrap());
        close(top.t_h, top.t_h_receiver, 1e-9);
    }

    #[test]
    fn top_pure_signaling_cross_validated() {
        let p = ModelParams::BASELINE.with_signal_power(0.0);
        let d = uniform();
        let path = SeparatingPath::new(&p, &d, 0.0).unwrap();
        let top = solve_top_detail(&p, &d, &path, 0.3827).unwrap();
        close(top.s_h, 0.6487, 1e-3);
        close(top.t_h, 0.574, 3e-3);
        close(top.t_h, top.t_h_receiver, 1e-9);
    }

    #[test]
    fn top_domain_errors() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        let path = SeparatingPath::new(&p, &d, 0.5).unwrap();
        assert!(solve_top(&p, &d, &path, 0.5).is_err());
        assert!(solve_top(&p, &d, &path, 3.0).is_err());
    }

    #[test]
    fn pooling_star_examples() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        assert_eq!(pooling_star(&p, &d, 0.0).unwrap(), (0.0, 0.0));
        let (s, t) = pooling_star(&p, &d, 1.0).unwrap();
        close(s, 4f64.powf(2.0 / 3.0), 1e-12);
        close(t, 0.5 * s * s, 1e-12);
        // receiver participation binds
        close(p.surplus_scale * s.sqrt() * p.match_n(1.0) * 2.0 - t, 0.0, 1e-11);

        let pure = p.with_signal_power(0.0);
        let (s, t) = pooling_star(&pure, &d, 0.8).unwrap();
        let e = d.trunc_mean(0.8).unwrap();
        close(s, (0.64 * e / 0.5f64).sqrt(), 1e-12);
        close(pure.match_n(0.8) * e - t, 0.0, 1e-12);
    }

    #[test]
    fn cap_round_trip() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        let path = SeparatingPath::new(&p, &d, 0.0).unwrap();
        let (_, t_h) = solve_top(&p, &d, &path, 1.75).unwrap();
        let th = invert_cap(&p, &d, &path, t_h).unwrap();
        close(th.z_h, 1.75, 1e-8);
        assert_eq!(th.class, EquilibriumClass::StrictlyWellBehaved);

        let pool = invert_cap(&p, &d, &path, 0.0).unwrap();
        assert_eq!(pool.class, EquilibriumClass::Pooling);
        assert_eq!(pool.z_h, 0.0);

        let top = path.top_wage().unwrap();
        let sep = invert_cap(&p, &d, &path, top + 1.0).unwrap();
        assert_eq!(sep.class, EquilibriumClass::Separating);
        assert_eq!(sep.z_h, 3.0);
        assert!(invert_cap(&p, &d, &path, -1.0).is_err());
    }

    #[test]
    fn cap_round_trip_with_entry_threshold() {
        let p = ModelParams::BASELINE;
        let d = SenderDist::new(5.0, 5.0, 3.0).unwrap();
        let path = SeparatingPath::new(&p, &d, 0.4).unwrap();
        for &z_h in &[0.6, 1.3, 2.5] {
            let (_, t_h) = solve_top(&p, &d, &path, z_h).unwrap();
            close(invert_cap(&p, &d, &path, t_h).unwrap().z_h, z_h, 1e-8);
        }
    }

    #[test]
    fn evaluate_snaps_boundaries() {
        let p = ModelParams::BASELINE;
        let d = uniform();
        let path = SeparatingPath::new(&p, &d, 0.0).unwrap();
        let pool = evaluate(&p, &d, &path, 4e-7).unwrap();
        assert_eq!(pool.class, EquilibriumClass::Pooling);
        assert_eq!((pool.z_h, pool.s_h, pool.t_h), (0.0, 0.0, 0.0));
        let sep = evaluate(&p, &d, &path, 3.0 - 1e-7).unwrap();
        assert_eq!(sep.class, EquilibriumClass::Separating);
        close(sep.t_h, 18.0, 1e-10);
    }
}
