use lppsim::stats::dkw_epsilon;
use lppsim::{Charge, ChargeDistribution, Normalized, StreamKey};
use proptest::prelude::*;

const N: usize = 100_000;

fn kinds() -> Vec<(&'static str, ChargeDistribution)> {
    vec![
        (
            "two_point_inf",
            ChargeDistribution::two_point_inf(0.3).unwrap(),
        ),
        (
            "two_point",
            ChargeDistribution::two_point(0.5, Charge::from(-0.4)).unwrap(),
        ),
        (
            "shifted_exponential",
            ChargeDistribution::shifted_exponential(),
        ),
        (
            "point_mixture",
            ChargeDistribution::point_mixture([
                (Charge::ONE, 0.1),
                (Charge::from(0.5), 0.2),
                (Charge::from(-1.0), 0.3),
                (Charge::NEG_INF, 0.4),
            ])
            .unwrap(),
        ),
        (
            "inverse_cdf",
            ChargeDistribution::inverse_cdf(vec![(0.0, -2.0), (0.3, -0.5), (0.9, 0.5), (1.0, 1.0)])
                .unwrap(),
        ),
    ]
}

#[test]
fn empirical_law_within_dkw_band() {
    let eps = dkw_epsilon(N, 0.01);
    for (name, d) in kinds() {
        let mut rng = StreamKey::new(17).rng(0);
        let mut xs: Vec<f64> = (0..N).map(|_| d.sample(&mut rng).value()).collect();
        xs.sort_by(f64::total_cmp);
        assert!(xs.iter().all(|&x| x <= 1.0), "{name}");
        for i in 0..20 {
            let a = -2.5 + 3.5 * i as f64 / 19.0;
            let at_most = xs.partition_point(|&x| x <= a) as f64 / N as f64;
            let at_least = (N - xs.partition_point(|&x| x < a)) as f64 / N as f64;
            assert!((at_most - d.cdf(a)).abs() <= eps, "{name}: cdf at {a}");
            assert!(
                (at_least - d.tail(a).unwrap()).abs() <= eps,
                "{name}: tail at {a}"
            );
        }
    }
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(lo) + inner + f(hi)) * h / 3.0
}

#[test]
fn shifted_exponential_mean_matches_quadrature() {
    let density = |x: f64| (x - 1.0).exp();
    let mean = simpson(|x| x * density(x), -60.0, 1.0, 200_000);
    let second = simpson(|x| x * x * density(x), -60.0, 1.0, 200_000);
    assert!(mean.abs() < 1e-9, "quadrature mean {mean}");
    let sd = (second - mean * mean).sqrt();

    let d = ChargeDistribution::shifted_exponential();
    let mut rng = StreamKey::new(3).rng(0);
    let sample_mean = (0..N).map(|_| d.sample(&mut rng).value()).sum::<f64>() / N as f64;
    assert!(
        (sample_mean - mean).abs() < 4.0 * sd / (N as f64).sqrt(),
        "{sample_mean}"
    );
}

#[test]
fn tail_examples() {
    let d = ChargeDistribution::two_point_inf(0.3).unwrap();
    assert_eq!(d.tail(0.5).unwrap(), 0.3);
    let e = ChargeDistribution::shifted_exponential();
    assert_eq!(e.tail(1.0).unwrap(), 0.0);
    let reference = simpson(|x| (x - 1.0).exp(), 0.0, 1.0, 1000);
    assert!((e.tail(0.0).unwrap() - reference).abs() < 1e-12);
    assert!((e.tail(0.0).unwrap() - 0.632_121).abs() < 1e-6);
}

#[test]
fn bernoulli_frequency() {
    let d = ChargeDistribution::two_point_inf(0.3).unwrap();
    let mut rng = StreamKey::new(8).rng(0);
    let ones = (0..N).filter(|_| d.sample(&mut rng) == Charge::ONE).count();
    let freq = ones as f64 / N as f64;
    assert!(
        (freq - 0.3).abs() <= 3.0 * (0.21f64 / N as f64).sqrt(),
        "{freq}"
    );
}

proptest! {
    #[test]
    fn tail_is_nonincreasing(k in 0..5usize, a in -5.0f64..1.0, b in -5.0f64..1.0) {
        let d = &kinds()[k].1;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.tail(lo).unwrap() >= d.tail(hi).unwrap());
        prop_assert!(d.tail(lo).unwrap() <= 1.0);
    }

    #[test]
    fn normalize_is_idempotent(scale in 0.01f64..50.0, lo in -10.0f64..0.0) {
        let d = ChargeDistribution::inverse_cdf(vec![(0.0, lo * scale), (1.0, scale)]).unwrap();
        let Normalized::Scaled(once) = d.normalize() else {
            panic!("positive support must scale");
        };
        prop_assert_eq!(once.ess_sup(), Charge::ONE);
        prop_assert_eq!(once.normalize(), Normalized::Scaled(once.clone()));
    }
}
