use delegation_core::separating::SeparatingPath;
use delegation_core::surplus::pi_w;
use delegation_core::thresholds::{invert_cap, solve_top, solve_top_detail, EquilibriumClass};
use delegation_core::{ModelParams, SenderDist};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.5..2.0f64, 0.2..1.0f64, 0.0..0.9f64, 0.5..3.0f64, 0.0..2.0f64)
        .prop_map(|(a_, b, a, k, q)| ModelParams::new(a_, b, a, k, q).unwrap())
}

fn dist() -> impl Strategy<Value = SenderDist> {
    (1.0..6.0f64, 1.0..6.0f64, 1.0..3.0f64).prop_map(|(a, b, z)| SenderDist::new(a, b, z).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn belief_inverts_action(p in params(), d in dist(), frac in 0.0..0.6f64) {
        let path = SeparatingPath::new(&p, &d, frac * d.zbar()).unwrap();
        for i in 0..=20 {
            let z = path.z_l() + (d.zbar() - path.z_l()) * i as f64 / 20.0;
            let s = path.sigma_tilde(z).unwrap();
            let back = path.mu_tilde(s).unwrap();
            prop_assert!((back - z).abs() <= 1e-8 * z.max(1.0), "z={z} back={back}");
        }
    }

    #[test]
    fn belief_solves_the_ode(p in params(), d in dist(), frac in 0.0..0.6f64) {
        let path = SeparatingPath::new(&p, &d, frac * d.zbar()).unwrap();
        let (lo, hi) = (path.s_l(), path.top_action());
        for i in 1..=50 {
            let s = lo + (hi - lo) * i as f64 / 50.0;
            let receiver = path.receiver_integrand(s);
            let sender = path.sender_integrand(s);
            prop_assert!((receiver - sender).abs() <= 1e-6 * sender.abs().max(1.0), "s={s}: {receiver} vs {sender}");
        }
    }

    #[test]
    fn wage_increases_from_the_floor(p in params(), d in dist(), frac in 0.0..0.6f64) {
        let path = SeparatingPath::new(&p, &d, frac * d.zbar()).unwrap();
        prop_assert_eq!(path.tau_tilde(path.s_l()).unwrap(), path.t_l());
        let mut last = path.t_l();
        for i in 1..=10 {
            let s = path.s_l() + (path.top_action() - path.s_l()) * i as f64 / 10.0;
            let t = path.tau_tilde(s).unwrap();
            prop_assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn cap_retrievals_agree_and_rise(p in params(), d in dist(), frac in 0.0..0.4f64) {
        let z_l = frac * d.zbar();
        let path = SeparatingPath::new(&p, &d, z_l).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 1..20 {
            let z_h = z_l + (d.zbar() - z_l) * i as f64 / 20.0;
            let top = solve_top_detail(&p, &d, &path, z_h).unwrap();
            prop_assert!((top.t_h - top.t_h_receiver).abs() <= 1e-6 * top.t_h.abs().max(1.0));
            prop_assert!(top.s_h >= top.sigma_zh);
            prop_assert!(top.t_h > last, "t_h not increasing at z_h={z_h}");
            last = top.t_h;
        }
    }

    #[test]
    fn cap_inversion_round_trips(p in params(), d in dist(), frac in 0.0..0.3f64, pos in 0.1..0.9f64) {
        let z_l = frac * d.zbar();
        let path = SeparatingPath::new(&p, &d, z_l).unwrap();
        let z_h = z_l + pos * (d.zbar() - z_l);
        let (_, t_h) = solve_top(&p, &d, &path, z_h).unwrap();
        let th = invert_cap(&p, &d, &path, t_h).unwrap();
        prop_assert_eq!(th.class, EquilibriumClass::StrictlyWellBehaved);
        prop_assert!((th.z_h - z_h).abs() < 1e-6, "{} vs {z_h}", th.z_h);
    }

    #[test]
    fn truncated_mean_is_bounded_and_monotone(d in dist()) {
        let mut last = d.mean();
        for i in 1..40 {
            let c = d.zbar() * i as f64 / 40.0;
            if let Ok(m) = d.trunc_mean(c) {
                prop_assert!(m >= c && m <= d.zbar());
                prop_assert!(m >= last - 1e-12);
                last = m;
            }
        }
    }

    #[test]
    fn surplus_parts_add_and_scale(p in params(), d in dist(), pos in 0.05..0.95f64, lambda in 0.5..4.0f64) {
        let path = SeparatingPath::new(&p, &d, 0.0).unwrap();
        let z_h = pos * d.zbar();
        let out = pi_w(&p, &d, &path, z_h).unwrap();
        prop_assert!((out.total - out.separating_part - out.pooling_part).abs() <= 1e-12 * out.total.abs().max(1.0));
        let scaled = ModelParams { surplus_scale: lambda * p.surplus_scale, cost_scale: lambda * p.cost_scale, ..p };
        let path2 = SeparatingPath::new(&scaled, &d, 0.0).unwrap();
        let out2 = pi_w(&scaled, &d, &path2, z_h).unwrap();
        prop_assert!((out2.total - lambda * out.total).abs() <= 1e-10 * out2.total.abs().max(1.0));
    }
}
