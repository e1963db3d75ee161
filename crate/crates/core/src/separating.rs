//! Separating backbone of a well-behaved equilibrium.
//!
//! Beliefs solve the first-order ODE
//! `v_s + v_z mu' = c_s` along `x = n(mu(s))` with `mu(s_l) = z_l`. For the
//! multiplicative primitives this has the closed form
//!
//! ```text
//! mu(s)^(2+q) = L s^(2-a) + D (s_l / s)^(a(2+q))
//! L = 2 beta (2+q) / (A k (2+a+aq))
//! D = z_l^(2+q) - L s_l^(2-a)
//! ```
//!
//! The action schedule `sigma` inverts `mu` (closed form only when `z_l = 0`)
//! and the market wage `tau` integrates the sender's marginal cost along the
//! path.

use serde::Serialize;

use crate::distributions::SenderDist;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate, Tolerance};
use crate::thresholds::solve_bottom;

const WAGE_TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-11,
    max_depth: 60,
};
const INVERSION_RTOL: f64 = 1e-13;
const DOMAIN_SLACK: f64 = 1e-9;

/// Entry action of the lowest matched sender type.
///
/// Zero at `z_l = 0`; otherwise the positive root of `v(n(z_l), s, z_l) = c(s, z_l)`,
/// i.e. `(A k z_l^(q+2) / beta)^(1/(2-a))`.
pub fn s_lower(p: &ModelParams, z_l: f64) -> f64 {
    if z_l <= 0.0 {
        return 0.0;
    }
    (p.ak() / p.cost_scale * z_l.powf(p.spacing + 2.0)).powf(1.0 / (2.0 - p.signal_power))
}

/// Immutable belief/action/wage schedule anchored at `(z_l, s_l, t_l)`.
#[derive(Debug, Clone)]
pub struct SeparatingPath {
    params: ModelParams,
    zbar: f64,
    z_l: f64,
    s_l: f64,
    t_l: f64,
    lead: f64,
    offset: f64,
    s_top: f64,
}

/// One row of the diagnostic path dump.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathPoint {
    pub z: f64,
    pub action: f64,
    pub wage: f64,
    pub sender_rent: f64,
    pub receiver_rent: f64,
}

impl SeparatingPath {
    /// Path for entry threshold `z_l`, anchored at the bottom-system solution.
    pub fn new(params: &ModelParams, dist: &SenderDist, z_l: f64) -> Result<Self> {
        let (s_l, t_l) = solve_bottom(params, dist, z_l)?;
        Self::with_anchor(params, dist.zbar(), z_l, s_l, t_l)
    }

    /// Path through an arbitrary anchor `mu(s_l) = z_l` with wage `t_l` there.
    pub fn with_anchor(params: &ModelParams, zbar: f64, z_l: f64, s_l: f64, t_l: f64) -> Result<Self> {
        params.validate()?;
        if !(z_l >= 0.0 && z_l < zbar) {
            return Err(Error::Domain {
                what: "separating path entry type",
                value: z_l,
                lo: 0.0,
                hi: zbar,
            });
        }
        let (a, q) = (params.signal_power, params.spacing);
        let lead = 2.0 * params.cost_scale * (2.0 + q) / (params.ak() * (2.0 + a + a * q));
        let offset = if z_l == 0.0 {
            0.0
        } else {
            z_l.powf(2.0 + q) - lead * s_l.powf(2.0 - a)
        };
        let mut path = SeparatingPath {
            params: *params,
            zbar,
            z_l,
            s_l,
            t_l,
            lead,
            offset,
            s_top: f64::NAN,
        };
        path.s_top = path.invert(zbar)?;
        Ok(path)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn zbar(&self) -> f64 {
        self.zbar
    }

    pub fn z_l(&self) -> f64 {
        self.z_l
    }

    pub fn s_l(&self) -> f64 {
        self.s_l
    }

    pub fn t_l(&self) -> f64 {
        self.t_l
    }

    /// `sigma(zbar)`, the largest separating action.
    pub fn top_action(&self) -> f64 {
        self.s_top
    }

    /// `tau(sigma(zbar))`: any cap at or above this leaves the path intact.
    pub fn top_wage(&self) -> Result<f64> {
        self.tau_tilde(self.s_top)
    }

    fn exponent(&self) -> f64 {
        self.params.signal_power * (2.0 + self.params.spacing)
    }

    // mu^(2+q)
    fn belief_power(&self, s: f64) -> f64 {
        let a = self.params.signal_power;
        let mut w = self.lead * s.powf(2.0 - a);
        if self.offset != 0.0 {
            w += self.offset * (self.s_l / s).powf(self.exponent());
        }
        w.max(0.0)
    }

    fn belief_power_prime(&self, s: f64) -> f64 {
        let a = self.params.signal_power;
        let mut dw = self.lead * (2.0 - a) * s.powf(1.0 - a);
        if self.offset != 0.0 {
            let e = self.exponent();
            dw -= e * self.offset * (self.s_l / s).powf(e) / s;
        }
        dw
    }

    fn check_action(&self, what: &'static str, s: f64, hi: f64) -> Result<f64> {
        let lo = self.s_l;
        let scale = if hi.is_finite() { hi } else { lo };
        let slack = DOMAIN_SLACK * scale.max(1.0);
        if !(s >= lo - slack && s <= hi + slack) {
            return Err(Error::Domain { what, value: s, lo, hi });
        }
        Ok(s.clamp(lo, hi.max(lo)))
    }

    /// Belief `mu(s)` for `s >= s_l`.
    pub fn mu_tilde(&self, s: f64) -> Result<f64> {
        let s = self.check_action("mu_tilde", s, f64::INFINITY)?;
        Ok(self.mu(s))
    }

    pub(crate) fn mu(&self, s: f64) -> f64 {
        if s == self.s_l {
            return self.z_l;
        }
        self.belief_power(s).powf(1.0 / (2.0 + self.params.spacing))
    }

    /// Analytic `mu'(s)`.
    pub fn mu_prime(&self, s: f64) -> Result<f64> {
        let s = self.check_action("mu_prime", s, f64::INFINITY)?;
        Ok(self.dmu(s))
    }

    fn dmu(&self, s: f64) -> f64 {
        let r = 1.0 / (2.0 + self.params.spacing);
        let w = self.belief_power(s);
        r * w.powf(r - 1.0) * self.belief_power_prime(s)
    }

    /// Equilibrium action `sigma(z)` for `z in [z_l, zbar]`.
    pub fn sigma_tilde(&self, z: f64) -> Result<f64> {
        let slack = DOMAIN_SLACK * self.zbar.max(1.0);
        if !(z >= self.z_l - slack && z <= self.zbar + slack) {
            return Err(Error::Domain {
                what: "sigma_tilde",
                value: z,
                lo: self.z_l,
                hi: self.zbar,
            });
        }
        self.invert(z.clamp(self.z_l, self.zbar))
    }

    /// Closed-form action for the `z_l = 0` path.
    pub fn sigma_from_origin(p: &ModelParams, z: f64) -> f64 {
        let (a, q) = (p.signal_power, p.spacing);
        let coeff = (p.ak() / (2.0 * p.cost_scale) * (a * q + a + 2.0) / (q + 2.0)).powf(1.0 / (2.0 - a));
        coeff * z.powf((q + 2.0) / (2.0 - a))
    }

    fn invert(&self, z: f64) -> Result<f64> {
        if z <= self.z_l {
            return Ok(self.s_l);
        }
        let a = self.params.signal_power;
        let target = z.powf(2.0 + self.params.spacing);
        let unshifted = (target / self.lead).powf(1.0 / (2.0 - a));
        if self.offset == 0.0 {
            return Ok(unshifted);
        }
        // offset < 0 and (s_l/s)^e in (0, 1] bound the root on both sides
        let mut lo = unshifted.max(self.s_l);
        let mut hi = ((target - self.offset.min(0.0)) / self.lead).powf(1.0 / (2.0 - a));
        if hi < lo {
            std::mem::swap(&mut lo, &mut hi);
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..200 {
            let h = self.belief_power(s) - target;
            if h == 0.0 {
                return Ok(s);
            }
            if h < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let slope = self.belief_power_prime(s);
            let mut next = s - h / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= INVERSION_RTOL * s || hi - lo <= INVERSION_RTOL * s {
                return Ok(next);
            }
            s = next;
        }
        Err(Error::convergence("sigma_tilde", format!("inversion at z = {z}")))
    }

    /// Market wage `tau(s)` for `s in [s_l, sigma(zbar)]`.
    pub fn tau_tilde(&self, s: f64) -> Result<f64> {
        let s = self.check_action("tau_tilde", s, self.s_top)?;
        if self.z_l == 0.0 {
            return Ok(self.t_l + self.wage_from_origin(s));
        }
        self.tau_tilde_quadrature(s)
    }

    // tau(s) = 2 beta s^(2-m) / (B (2-m)) with mu(s) = B s^m
    fn wage_from_origin(&self, s: f64) -> f64 {
        let (a, q) = (self.params.signal_power, self.params.spacing);
        let m = (2.0 - a) / (2.0 + q);
        let b = self.lead.powf(1.0 / (2.0 + q));
        2.0 * self.params.cost_scale * s.powf(2.0 - m) / (b * (2.0 - m))
    }

    /// `t_l + ∫ c_s(y, mu(y)) dy` by quadrature, bypassing any closed form.
    pub fn tau_tilde_quadrature(&self, s: f64) -> Result<f64> {
        let s = self.check_action("tau_tilde", s, self.s_top)?;
        let beta = self.params.cost_scale;
        let integral = integrate(|y| 2.0 * beta * y / self.mu(y), self.s_l, s, WAGE_TOL)?;
        Ok(self.t_l + integral)
    }

    /// Marginal wage from the receiver side: `v_s + v_z mu'` along the path.
    pub fn receiver_integrand(&self, y: f64) -> f64 {
        let z = self.mu(y);
        let x = self.params.match_n(z);
        self.params.v_s(x, y, z) + self.params.v_z(x, y, z) * self.dmu(y)
    }

    /// Marginal wage from the sender side: `c_s(y, mu(y))`.
    pub fn sender_integrand(&self, y: f64) -> f64 {
        self.params.c_s(y, self.mu(y))
    }

    /// `tau(s)` integrating the receiver-side marginal value.
    pub fn tau_tilde_receiver(&self, s: f64) -> Result<f64> {
        let s = self.check_action("tau_tilde", s, self.s_top)?;
        let integral = integrate(|y| self.receiver_integrand(y), self.s_l, s, WAGE_TOL)?;
        Ok(self.t_l + integral)
    }

    /// `tau(sigma(z))`.
    pub fn wage_at_type(&self, z: f64) -> Result<f64> {
        self.tau_tilde(self.sigma_tilde(z)?)
    }

    /// Sender rent `tau(sigma(z)) - c(sigma(z), z)`.
    pub fn sender_rent(&self, z: f64) -> Result<f64> {
        let s = self.sigma_tilde(z)?;
        Ok(self.tau_tilde(s)? - self.params.cost_c(s, z)?)
    }

    /// Receiver rent `v(n(z), sigma(z), z) - tau(sigma(z))`.
    pub fn receiver_rent(&self, z: f64) -> Result<f64> {
        let s = self.sigma_tilde(z)?;
        Ok(self.params.surplus_v(self.params.match_n(z), s, z) - self.tau_tilde(s)?)
    }

    /// Path sampled at `points` evenly spaced types on `[z_l, zbar]`.
    pub fn profile(&self, points: usize) -> Result<Vec<PathPoint>> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let z = self.z_l + (self.zbar - self.z_l) * i as f64 / (n - 1) as f64;
                let s = self.sigma_tilde(z)?;
                let t = self.tau_tilde(s)?;
                Ok(PathPoint {
                    z,
                    action: s,
                    wage: t,
                    sender_rent: t - self.params.cost_c(s, z)?,
                    receiver_rent: self.params.surplus_v(self.params.match_n(z), s, z) - t,
                })
            })
            .collect()
    }
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

    fn pure_signal(q: f64) -> ModelParams {
        ModelParams::BASELINE.with_signal_power(0.0).with_spacing(q)
    }

    // Bisection on v(n(z), s, z) - c(s, z), which is positive below the root.
    fn entry_by_bisection(p: &ModelParams, z: f64) -> f64 {
        let f = |s: f64| p.surplus_v(p.match_n(z), s, z) - p.cost_c(s, z).unwrap();
        let (mut lo, mut hi) = (1e-12, 1.0);
        while f(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn s_lower_examples() {
        let p = ModelParams::BASELINE;
        assert_eq!(s_lower(&p, 0.0), 0.0);
        close(s_lower(&p, 1.0), 2f64.powf(2.0 / 3.0), 1e-14);
        close(s_lower(&p, 1.0), entry_by_bisection(&p, 1.0), 1e-12);
        let q = pure_signal(1.5);
        close(s_lower(&q, 0.5), 0.420_448_207_626_856_8, 1e-12);
        close(s_lower(&q, 0.5), entry_by_bisection(&q, 0.5), 1e-12);
    }

    #[test]
    fn baseline_origin_path() {
        let path = SeparatingPath::new(&ModelParams::BASELINE, &uniform(), 0.0).unwrap();
        close(path.mu_tilde(4.0).unwrap(), 2.0, 1e-14);
        close(path.sigma_tilde(1.75).unwrap(), 3.0625, 1e-13);
        close(path.mu_tilde(3.0625).unwrap(), 1.75, 1e-13);
        close(path.tau_tilde(3.0625).unwrap(), 2.0 / 3.0 * 3.0625f64.powf(1.5), 1e-12);
        close(path.tau_tilde(3.0625).unwrap(), 3.572_916_666_666_667, 1e-12);
        assert_eq!(path.tau_tilde(0.0).unwrap(), 0.0);
        assert_eq!(path.sigma_tilde(0.0).unwrap(), 0.0);
    }

    #[test]
    fn baseline_entry_path() {
        let path = SeparatingPath::new(&ModelParams::BASELINE, &uniform(), 1.0).unwrap();
        let s_l = 2f64.powf(2.0 / 3.0);
        close(path.s_l(), s_l, 1e-14);
        close(path.mu_tilde(s_l).unwrap(), 1.0, 1e-14);
        for &s in &[1.7, 2.5, 4.0, 8.0] {
            let cube = path.mu_tilde(s).unwrap().powi(3);
            close(cube, s.powf(1.5) - 2.0 * s.powf(-1.5), 1e-12);
        }
        close(path.tau_tilde(s_l).unwrap(), path.t_l(), 0.0);
        close(path.sigma_tilde(1.0).unwrap(), s_l, 0.0);
    }

    #[test]
    fn pure_signaling_examples() {
        let p = pure_signal(1.0);
        let path = SeparatingPath::new(&p, &uniform(), 0.0).unwrap();
        let s = path.sigma_tilde(0.38).unwrap();
        close(s, (2.0f64 / 3.0).sqrt() * 0.38f64.powf(1.5), 1e-14);
        close(s, 0.191_262, 5e-7);
        close(path.tau_tilde(s).unwrap(), 0.38 * 0.38 / 2.0, 1e-12);
    }

    #[test]
    fn origin_closed_form_matches_inverse() {
        let p = ModelParams::new(1.4, 0.8, 0.3, 1.7, 1.6).unwrap();
        let path = SeparatingPath::new(&p, &uniform(), 0.0).unwrap();
        for i in 1..=10 {
            let z = 0.3 * i as f64;
            let s = SeparatingPath::sigma_from_origin(&p, z);
            close(path.mu_tilde(s).unwrap(), z, 1e-12);
        }
    }

    #[test]
    fn fast_wage_matches_quadrature() {
        for p in [ModelParams::BASELINE, pure_signal(1.3), ModelParams::new(2.0, 0.3, 0.8, 1.5, 0.4).unwrap()] {
            let path = SeparatingPath::new(&p, &uniform(), 0.0).unwrap();
            for i in 1..=6 {
                let s = path.top_action() * i as f64 / 6.0;
                let fast = path.tau_tilde(s).unwrap();
                let quad = path.tau_tilde_quadrature(s).unwrap();
                assert!((fast - quad).abs() <= 1e-9 * fast.max(1.0), "{fast} vs {quad}");
            }
        }
    }

    #[test]
    fn two_wage_forms_agree() {
        for z_l in [0.0, 0.4, 1.2] {
            let path = SeparatingPath::new(&ModelParams::BASELINE, &uniform(), z_l).unwrap();
            let s = 0.5 * (path.s_l() + path.top_action());
            let a = path.tau_tilde_quadrature(s).unwrap();
            let b = path.tau_tilde_receiver(s).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.max(1.0), "z_l={z_l}: {a} vs {b}");
        }
    }

    #[test]
    fn domain_errors() {
        let path = SeparatingPath::new(&ModelParams::BASELINE, &uniform(), 1.0).unwrap();
        assert!(matches!(path.mu_tilde(1.0), Err(Error::Domain { .. })));
        assert!(matches!(path.sigma_tilde(0.5), Err(Error::Domain { .. })));
        assert!(matches!(path.sigma_tilde(3.5), Err(Error::Domain { .. })));
        assert!(matches!(path.tau_tilde(path.top_action() * 1.01), Err(Error::Domain { .. })));
        assert!(SeparatingPath::new(&ModelParams::BASELINE, &uniform(), 3.0).is_err());
    }

    #[test]
    fn rents_on_origin_path() {
        let path = SeparatingPath::new(&ModelParams::BASELINE, &uniform(), 0.0).unwrap();
        let prof = path.profile(31).unwrap();
        for w in prof.windows(2) {
            assert!(w[1].sender_rent >= w[0].sender_rent - 1e-12);
            assert!(w[1].receiver_rent >= w[0].receiver_rent - 1e-12);
            assert!(w[0].receiver_rent >= -1e-12);
        }
        close(prof[0].sender_rent, 0.0, 0.0);
    }

    #[test]
    fn entry_rent_binds() {
        let path = SeparatingPath::new(&ModelParams::BASELINE, &uniform(), 0.7).unwrap();
        close(path.sender_rent(0.7).unwrap(), 0.0, 1e-12);
        let mut prev = 0.0;
        for i in 0..=20 {
            let z = 0.7 + 2.3 * i as f64 / 20.0;
            let u = path.sender_rent(z).unwrap();
            assert!(u >= prev - 1e-10);
            prev = u;
        }
    }
}
