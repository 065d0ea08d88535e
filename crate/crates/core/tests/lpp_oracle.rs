use lppsim::lpp::{
    coupled_mgs_check, generate_graph, longest_path_between, longest_path_dp, longest_path_enum,
    negative_support_limit_check, ChargedGraph,
};
use lppsim::stats::dkw_epsilon;
use lppsim::{Charge, ChargeDistribution, StreamKey};
use proptest::prelude::*;

fn laws() -> Vec<ChargeDistribution> {
    vec![
        ChargeDistribution::two_point_inf(0.3).unwrap(),
        ChargeDistribution::two_point(0.5, Charge::ZERO).unwrap(),
        ChargeDistribution::shifted_exponential(),
        ChargeDistribution::point_mixture([
            (Charge::ONE, 0.2),
            (Charge::from(0.25), 0.3),
            (Charge::from(-2.0), 0.3),
            (Charge::NEG_INF, 0.2),
        ])
        .unwrap(),
        ChargeDistribution::inverse_cdf(vec![(0.0, -3.0), (0.5, 0.0), (1.0, 1.0)]).unwrap(),
    ]
}

fn instance(max_n: usize) -> impl Strategy<Value = ChargedGraph> {
    (0..laws().len(), 1..=max_n, any::<u64>()).prop_map(|(k, n, seed)| {
        generate_graph(n, &laws()[k], &mut StreamKey::new(seed).rng(0)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dp_equals_enumeration(g in instance(12)) {
        prop_assert_eq!(longest_path_dp(&g), longest_path_enum(&g).unwrap());
    }

    #[test]
    fn running_max_is_bounded(g in instance(60)) {
        let p = longest_path_dp(&g);
        prop_assert_eq!(p.w[0], Charge::ZERO);
        prop_assert!(p.m.windows(2).all(|w| w[0] <= w[1]));
        for (k, &m) in p.m.iter().enumerate() {
            prop_assert!(m <= Charge::from(k as f64));
            prop_assert_eq!(m, p.w[..=k].iter().copied().max().unwrap());
        }
    }

    #[test]
    fn superadditive(g in instance(40), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let n_total = g.n();
        let n = (a * n_total as f64) as usize;
        let m = ((n_total - n) as f64 * b) as usize;
        let w = longest_path_dp(&g).w;
        let split = w[n] + longest_path_between(&g, n, n + m);
        // The split path is summed in a different order than the DP.
        let slack = if split.is_neg_inf() {
            0.0
        } else {
            1e-12 * (1.0 + split.value().abs())
        };
        prop_assert!(w[n + m].value() >= split.value() - slack);
    }

    #[test]
    fn superadditive_exactly_on_dyadic_charges(
        n in 1usize..30,
        cut in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let d = ChargeDistribution::point_mixture([
            (Charge::ONE, 0.25),
            (Charge::from(0.375), 0.25),
            (Charge::from(-1.5), 0.25),
            (Charge::NEG_INF, 0.25),
        ])
        .unwrap();
        let g = generate_graph(n, &d, &mut StreamKey::new(seed).rng(0)).unwrap();
        let k = (cut * n as f64) as usize;
        let w = longest_path_dp(&g).w;
        prop_assert!(w[n] >= w[k] + longest_path_between(&g, k, n));
    }

    #[test]
    fn mgs_coupling_holds(g in instance(120)) {
        prop_assert!(coupled_mgs_check(&g));
    }

    #[test]
    fn csv_round_trip(g in instance(15)) {
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        prop_assert_eq!(ChargedGraph::read_csv(buf.as_slice()).unwrap(), g);
    }
}

#[test]
fn coupling_on_unit_edges_builds_the_staircase() {
    let g = generate_graph(
        5,
        &ChargeDistribution::two_point_inf(1.0).unwrap(),
        &mut StreamKey::new(0).rng(0),
    )
    .unwrap();
    assert!(coupled_mgs_check(&g));
    let w = longest_path_dp(&g).w;
    assert_eq!(
        w,
        (0..=5).map(|k| Charge::from(k as f64)).collect::<Vec<_>>()
    );
}

#[test]
fn negative_support_shifted_uniform() {
    // Uniform on [-2, -1]: every path with two or more edges costs <= -2, so
    // W_n = w_{0,n} and the limit law max(w, 2L) is the law of w itself.
    let d = ChargeDistribution::inverse_cdf(vec![(0.0, -2.0), (1.0, -1.0)]).unwrap();
    let report = negative_support_limit_check(&d, 30, 2000, 5).unwrap();
    assert_eq!(report.two_l, -2.0);
    assert!(report.ks_distance < dkw_epsilon(2000, 0.01), "{report:?}");
    assert_eq!(report.quantiles.len(), report.reference_cdf.len());
    for ((_, q), (x, f)) in report.quantiles.iter().zip(&report.reference_cdf) {
        assert_eq!(q, x);
        assert!((f - (x + 2.0)).abs() < 1e-12);
    }
}

#[test]
fn negative_support_at_zero_stays_below_the_atom() {
    // Uniform on [-1, 0] has L = 0, so max(w, 2L) = δ_0, while W_n < 0 almost
    // surely. The distance to the reference law does not shrink.
    let d = ChargeDistribution::inverse_cdf(vec![(0.0, -1.0), (1.0, 0.0)]).unwrap();
    let report = negative_support_limit_check(&d, 200, 200, 9).unwrap();
    assert!(report.quantiles.iter().all(|&(_, x)| x < 0.0));
    assert!(report.ks_distance > 0.99, "{report:?}");
}
