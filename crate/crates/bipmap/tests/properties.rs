use std::sync::Arc;

use bipmap::bdg::{map_checks, phi_build};
use bipmap::finite::{sample_mobile_n, sample_sgt_n};
use bipmap::labels::{assign_labels, is_valid_labeling, read_bridges, sample_bridge, BridgeMethod};
use bipmap::laws::offspring_laws;
use bipmap::limit::LimitMobile;
use bipmap::psi::{psi_forward, psi_inverse};
use bipmap::resistance::{ResistorNetwork, SharpBall, Solver};
use bipmap::rng::RngStream;
use bipmap::tree::{Colour, NodeId};
use bipmap::weights::{derive_tree_weights, FaceWeights};
use proptest::prelude::*;

fn power_law() -> FaceWeights {
    FaceWeights::PowerLaw { c: 1.0, beta: 5.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_round_trips_and_moves_degrees(seed in any::<u64>(), n in 1usize..40) {
        let tw = derive_tree_weights(&FaceWeights::uniform()).unwrap();
        let t = sample_sgt_n(&tw, n, &mut RngStream::new(seed, 1)).unwrap();
        let (m, trace) = psi_forward(&t).unwrap();
        prop_assert_eq!(m.edges(), n);
        prop_assert!(psi_inverse(&m).unwrap().same_shape(&t));
        for v in 0..t.len() as NodeId {
            if t.out(v) > 0 {
                let w = trace.image[v as usize];
                prop_assert_eq!(m.colour(w), Colour::Black);
                prop_assert_eq!(m.deg(w), t.out(v));
            }
        }
    }

    #[test]
    fn bridges_have_zero_sum_and_steps_at_least_minus_one(seed in any::<u64>(), r in 0usize..60, sb in any::<bool>()) {
        let method = if sb { BridgeMethod::StarsAndBars } else { BridgeMethod::Rejection };
        let x = sample_bridge(r, &mut RngStream::new(seed, 2), method);
        prop_assert_eq!(x.len(), r);
        prop_assert_eq!(x.iter().sum::<i32>(), 0);
        prop_assert!(x.iter().all(|&d| d >= -1));
    }

    #[test]
    fn labels_and_bridges_determine_each_other(seed in any::<u64>(), n in 1usize..60) {
        let tw = derive_tree_weights(&power_law()).unwrap();
        let m = sample_mobile_n(&tw, n, &mut RngStream::new(seed, 3), BridgeMethod::StarsAndBars).unwrap();
        prop_assert!(is_valid_labeling(&m.tree, &m.labels));
        let bridges = read_bridges(&m.tree, &m.labels);
        prop_assert_eq!(assign_labels(&m.tree, &bridges, 0).unwrap(), m.labels.clone());
    }

    #[test]
    fn bdg_maps_pass_their_checks(seed in any::<u64>(), n in 1usize..80) {
        let tw = derive_tree_weights(&FaceWeights::uniform()).unwrap();
        let m = sample_mobile_n(&tw, n, &mut RngStream::new(seed, 4), BridgeMethod::Rejection).unwrap();
        let (map, _) = phi_build(&m).unwrap();
        prop_assert_eq!(map.num_edges(), n);
        let report = map_checks(&m, &map);
        prop_assert!(report.all(), "{:?}", report);
    }

    #[test]
    fn raising_a_conductance_never_raises_resistance(
        edges in prop::collection::vec((0u32..12, 0u32..12, 0.1f64..10.0), 12..40),
        pick in any::<prop::sample::Index>(),
        factor in 1.0f64..20.0,
    ) {
        let edges: Vec<_> = edges.into_iter().filter(|e| e.0 != e.1).collect();
        prop_assume!(!edges.is_empty());
        let build = |k: Option<usize>| {
            let mut net = ResistorNetwork::new(12);
            for (i, &(u, v, c)) in edges.iter().enumerate() {
                net.add(u, v, if Some(i) == k { c * factor } else { c });
            }
            net
        };
        let k = pick.index(edges.len());
        let before = build(None).effective_resistance(&[0], &[11], Solver::Dense).unwrap();
        let after = build(Some(k)).effective_resistance(&[0], &[11], Solver::Dense).unwrap();
        if before.is_finite() {
            prop_assert!(after <= before * (1.0 + 1e-12), "{after} > {before}");
        } else {
            prop_assert!(after.is_infinite() || after <= before);
        }
    }

    #[test]
    fn dense_and_iterative_solvers_agree(
        edges in prop::collection::vec((0u32..30, 0u32..30, 0.1f64..10.0), 40..120),
    ) {
        let mut net = ResistorNetwork::new(30);
        for &(u, v, c) in &edges {
            if u != v {
                net.add(u, v, c);
            }
        }
        let d = net.effective_resistance(&[0, 1], &[29], Solver::Dense).unwrap();
        let cg = net.effective_resistance(&[0, 1], &[29], Solver::ConjugateGradient).unwrap();
        if d.is_finite() {
            prop_assert!((d - cg).abs() <= 1e-9 * d.max(1.0), "{d} vs {cg}");
        } else {
            prop_assert!(cg.is_infinite());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sharp_distance_is_a_metric_on_the_ball(seed in any::<u64>()) {
        let laws = Arc::new(offspring_laws(&power_law()).unwrap().sampler().unwrap());
        let mut lm = LimitMobile::new(laws, &RngStream::new(seed, 5), BridgeMethod::StarsAndBars, 1 << 22).unwrap();
        let ball = SharpBall::build(&mut lm, 4).unwrap();
        let m = &ball.members;
        for &u in m {
            for &v in m {
                let duv = ball.dsharp_between(u, v).unwrap();
                prop_assert_eq!(duv, ball.dsharp_between(v, u).unwrap());
                prop_assert_eq!(duv == 0, u == v);
                for &w in m.iter().step_by(m.len() / 8 + 1) {
                    let s = ball.dsharp_between(u, w).unwrap() + ball.dsharp_between(w, v).unwrap();
                    prop_assert!(duv <= s, "d#({u},{v}) = {duv} > {s} via {w}");
                }
            }
        }
    }
}
