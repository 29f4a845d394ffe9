use aloha_control::latency::{expected_paoi, expected_peak_latency};
use aloha_control::plant::PlantModel;
use aloha_control::{
    advance_state, evaluate_candidate, first_time_controllability, pcl_pmf, truncated_geometric_mean,
    AccessPolicy, BlockHistory, BlockShape, NetworkParams, OptimizerConfig, VirtualBlock,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = BlockShape> {
    (1usize..=14)
        .prop_flat_map(|t| (Just(t), 1..=t))
        .prop_map(|(t, v)| BlockShape::new(t, v).unwrap())
}

fn policy() -> impl Strategy<Value = AccessPolicy> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(b, s, c)| AccessPolicy::new(b, s, c).unwrap())
}

fn mode() -> impl Strategy<Value = VirtualBlock> {
    prop_oneof![Just(VirtualBlock::ExtendFirst), Just(VirtualBlock::BoundarySuccess)]
}

proptest! {
    #[test]
    fn chi_matches_enumeration(s in shape(), x in 0.0..=1.0f64) {
        let chi = s.chi(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&chi));
        prop_assert!((chi - s.chi_bruteforce(x).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn chi_monotone(s in shape(), x in 0.0..=1.0f64, dx in 0.0..=0.2f64) {
        let y = (x + dx).min(1.0);
        prop_assert!(s.chi(y).unwrap() >= s.chi(x).unwrap() - 1e-15);
        if s.run() < s.slots() {
            let longer_run = BlockShape::new(s.slots(), s.run() + 1).unwrap();
            prop_assert!(longer_run.chi(x).unwrap() <= s.chi(x).unwrap() + 1e-15);
        }
        let longer_block = BlockShape::new(s.slots() + 1, s.run()).unwrap();
        prop_assert!(longer_block.chi(x).unwrap() >= s.chi(x).unwrap() - 1e-15);
    }

    #[test]
    fn truncated_geometric_bounds(p in 0.001..=1.0f64, dp in 0.0..=0.3f64, t in 1usize..40) {
        let m = truncated_geometric_mean(p, t).unwrap();
        prop_assert!((0.0..=(t - 1) as f64 + 1e-12).contains(&m));
        let q = (p + dp).min(1.0);
        prop_assert!(truncated_geometric_mean(q, t).unwrap() <= m + 1e-12);
    }

    #[test]
    fn first_time_between_regimes(s in shape(), d_b in 0.01..0.99f64, d_s in 0.0..0.99f64, rho in 0.05..=1.0f64) {
        let pi = first_time_controllability(&s, &AccessPolicy::new(d_b, d_s, 0.0).unwrap(), rho).unwrap();
        let lo = s.chi(d_s * rho).unwrap();
        let hi = s.chi(rho).unwrap();
        prop_assert!(lo - 1e-15 <= pi && pi <= hi + 1e-15);
        if hi - lo > 1e-9 {
            prop_assert!(lo < pi && pi < hi);
        }
    }

    #[test]
    fn cumulative_nondecreasing(s in shape(), steps in prop::collection::vec((policy(), 0.0..=1.0f64), 1..30)) {
        let mut po = None;
        for (p, rho) in steps {
            let pi = first_time_controllability(&s, &p, rho).unwrap();
            let next = advance_state(po, pi).unwrap();
            prop_assert!(next >= po.unwrap_or(0.0));
            prop_assert!(next <= 1.0);
            po = Some(next);
        }
        prop_assert_eq!(advance_state(Some(1.0), 0.3).unwrap(), 1.0);
    }

    #[test]
    fn latency_lower_bounds(t in 1usize..8, p in prop::collection::vec(0.02..=1.0f64, 1..30), m in mode()) {
        let h = BlockHistory::from_success(t, &p).unwrap();
        let pl = expected_peak_latency(&h, m).unwrap();
        let pa = expected_paoi(&h, m).unwrap();
        // with p0 := p1 the gap law misses the mass of no success before block k
        let deficit = match m {
            VirtualBlock::BoundarySuccess => 0.0,
            VirtualBlock::ExtendFirst => {
                let k = p.len();
                let fail = |x: f64| (1.0 - x).powi(t as i32);
                fail(p[0]) * p[..k - 1].iter().map(|&x| fail(x)).product::<f64>()
            }
        };
        let slack = t as f64 * deficit;
        prop_assert!(pl >= 1.0 - slack - 1e-9, "peak latency {}", pl);
        prop_assert!(pa >= (t + 1) as f64 - slack - 1e-9, "peak aoi {}", pa);
    }

    #[test]
    fn cost_within_scale(p in policy(), po_prev in 0.0..=1.0f64, prior in prop::collection::vec((0.05..=1.0f64, 0.05..=1.0f64, 0.05..=1.0f64), 0..6)) {
        let cfg = OptimizerConfig::default();
        let s = BlockShape::new(5, 3).unwrap();
        let mut h = BlockHistory::new(5);
        for (a, b, c) in prior {
            h.push(a, b, c).unwrap();
        }
        let r = evaluate_candidate(&NetworkParams::default(), &s, &cfg, &p, po_prev, &h).unwrap();
        prop_assert!(r.cost >= 0.0 && r.cost <= 1.0 + cfg.rho1 + cfg.rho2 + 1e-12);
        prop_assert!((r.cost - r.recompute_cost(cfg.rho1, cfg.rho2)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pcl_pmf_normalized(hist in prop::collection::vec((0.01..=1.0f64, 0.01..=1.0f64, 0.01..=1.0f64), 1..=50)) {
        let (p, rest): (Vec<f64>, Vec<(f64, f64)>) = hist.into_iter().map(|(a, b, c)| (a, (b, c))).unzip();
        let (inst, post) = rest.into_iter().unzip();
        let h = BlockHistory::from_parts(5, p, inst, post).unwrap();
        let pmf = pcl_pmf(&h).unwrap();
        prop_assert!(pmf.iter().all(|&x| x >= 0.0));
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

fn matrix(n: usize, m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, n * m).prop_map(move |v| DMatrix::from_row_slice(n, m, &v))
}

proptest! {
    #[test]
    fn plant_reaches_target_after_run(
        (_n, m, a, b, x0, xd, v, g) in (1usize..=3, 1usize..=2).prop_flat_map(|(n, m)| (
            Just(n),
            Just(m),
            matrix(n, n),
            matrix(n, m),
            prop::collection::vec(-3.0..3.0f64, n),
            prop::collection::vec(-3.0..3.0f64, n),
            n..=n + 1,
            prop::collection::vec(any::<bool>(), 6),
        ))
    ) {
        let _ = m;
        let Ok(plant) = PlantModel::new(a, b, DVector::from_vec(xd.clone()), v, 0.0) else {
            return Ok(());
        };
        let s = BlockShape::new(g.len(), v).unwrap();
        let trace = plant.run_block(&s, &DVector::from_vec(x0), &g).unwrap();
        prop_assert_eq!(trace.controllable, aloha_control::has_run(&g, v));
        if let Some(est) = &trace.target_estimate {
            let err = est.iter().zip(&xd).map(|(e, d)| (e - d).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9 * (1.0 + plant.target().amax()), "miss {}", err);
        }
    }
}
