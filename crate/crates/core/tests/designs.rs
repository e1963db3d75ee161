use std::sync::OnceLock;

use delegation_core::harness::{rows_to_csv, run_design, DesignRow, SHAPES};
use delegation_core::optimizer::OptimizerOptions;
use delegation_core::thresholds::EquilibriumClass;
use delegation_core::{optimize, ModelParams, SenderDist};

fn rows(id: u8) -> &'static [DesignRow] {
    static TABLES: [OnceLock<Vec<DesignRow>>; 5] = [const { OnceLock::new() }; 5];
    TABLES[id as usize - 1].get_or_init(|| run_design(id, &SHAPES, &OptimizerOptions::default()).unwrap())
}

fn panel(id: u8, shape: (f64, f64)) -> Vec<&'static DesignRow> {
    rows(id)
        .iter()
        .filter(|r| (r.alpha, r.beta_shape) == shape)
        .collect()
}

#[test]
fn no_design_excludes_anyone() {
    for id in 1..=5 {
        for r in rows(id) {
            assert_eq!((r.z_l, r.t_l), (0.0, 0.0), "{r:?}");
            assert!((r.xbar - r.k * r.zbar.powf(r.q)).abs() < 1e-9);
            assert!((r.x_h - r.k * r.z_h.powf(r.q)).abs() < 1e-9);
            assert!(r.pi_w >= r.pi_s - 1e-9);
        }
    }
}

#[test]
fn support_sweep_is_monotone_with_constant_percentile() {
    for shape in SHAPES {
        let p = panel(1, shape);
        for w in p.windows(2) {
            assert!(w[1].z_h > w[0].z_h && w[1].t_h > w[0].t_h);
        }
        let lo = p.iter().map(|r| r.percentile_zh).fold(f64::INFINITY, f64::min);
        let hi = p.iter().map(|r| r.percentile_zh).fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 0.01, "{shape:?}: {lo}..{hi}");
    }
    let uniform = panel(1, (1.0, 1.0));
    assert!((uniform[0].percentile_zh - 0.585).abs() < 0.01);
}

#[test]
fn receiver_scale_leaves_threshold_unchanged() {
    for shape in SHAPES {
        let p = panel(2, shape);
        let base = panel(1, shape).last().unwrap().z_h;
        for w in p.windows(2) {
            assert!(w[1].t_h > w[0].t_h);
        }
        for r in &p {
            assert!((r.z_h - base).abs() < 0.01, "{shape:?} k={}: {} vs {base}", r.k, r.z_h);
        }
    }
}

#[test]
fn spacing_sweep_is_monotone() {
    for shape in SHAPES {
        for w in panel(3, shape).windows(2) {
            assert!(w[1].z_h > w[0].z_h && w[1].t_h > w[0].t_h);
        }
    }
}

#[test]
fn signal_power_raises_thresholds() {
    for shape in SHAPES {
        let p = panel(4, shape);
        for q_index in 0..11 {
            let by_a: Vec<&DesignRow> = p.iter().skip(11 + q_index).step_by(11).copied().collect();
            assert_eq!(by_a.len(), 3);
            for w in by_a.windows(2) {
                assert!(w[1].z_h >= w[0].z_h && w[1].t_h >= w[0].t_h, "{shape:?}");
            }
        }
        for r in p.iter().filter(|r| r.a > 0.0) {
            assert_eq!(r.class, EquilibriumClass::StrictlyWellBehaved);
        }
    }
    for r in panel(4, (5.0, 5.0)).iter().filter(|r| r.a == 0.0) {
        assert_eq!((r.z_h, r.s_h, r.t_h, r.class), (0.0, 0.0, 0.0, EquilibriumClass::Pooling));
    }
}

#[test]
fn dominance_ordering_is_not_monotone() {
    let r = rows(5);
    assert_eq!(r.len(), 3);
    let (b35, b55, b53) = (r[0].z_h, r[1].z_h, r[2].z_h);
    assert!(b35 > b55 && b35 > b53);
}

#[test]
fn tables_do_not_depend_on_thread_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| rows_to_csv(&run_design(5, &SHAPES, &OptimizerOptions::default()).unwrap()).unwrap())
    };
    let single = run(1);
    assert_eq!(single, run(4));
    assert_eq!(single, rows_to_csv(rows(5)).unwrap());
}

#[test]
fn refined_optimum_beats_fine_grid() {
    let p = ModelParams::BASELINE.with_spacing(1.4);
    let d = SenderDist::new(3.0, 5.0, 2.0).unwrap();
    let out = optimize(&p, &d, &OptimizerOptions::default()).unwrap();
    let fine = delegation_core::optimizer::surplus_grid(&p, &d, 121).unwrap();
    let (i, j) = fine.argmax();
    assert!(out.surplus.total >= fine.value(i, j) - 1e-8);
}
