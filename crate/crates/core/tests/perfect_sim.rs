use lppsim::perfect::{forward_from, trace_run, AccessClass};
use lppsim::stats::chi_square_two_sample;
use lppsim::validate::{
    brute_force_t_star, chain_samples, random_origin_measure, reference_laws, ValidateConfig,
};
use lppsim::{
    find_t_star, forward_sample, sample_mbar, Charge, ChargeDistribution, ChargeTable,
    EllParameter, SimOptions, StreamKey,
};

fn ell(d: &ChargeDistribution, x: f64) -> EllParameter {
    EllParameter::new(d, x).unwrap()
}

#[test]
fn distinct_entries_are_uncorrelated() {
    let d = ChargeDistribution::shifted_exponential();
    let mut table = ChargeTable::new(&d, StreamKey::new(21));
    let pairs: Vec<(f64, f64)> = (0..10_000)
        .map(|i| {
            let t = -(i as i64 % 100);
            let j = 1 + i / 100;
            (
                table.charge_at(t, j).value(),
                table.charge_at(t - 1, j + 1).value(),
            )
        })
        .collect();
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let cov = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
    let vx = pairs.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>() / n;
    let vy = pairs.iter().map(|(_, y)| (y - my).powi(2)).sum::<f64>() / n;
    let r = cov / (vx * vy).sqrt();
    assert!(r.abs() < 0.03, "correlation {r}");
}

#[test]
fn same_seed_same_table() {
    let d = ChargeDistribution::two_point(0.5, Charge::ZERO).unwrap();
    let run = |seed| {
        let mut table = ChargeTable::new(&d, StreamKey::new(seed));
        let r = find_t_star(&mut table, ell(&d, 0.5), &SimOptions::default()).unwrap();
        forward_sample(&mut table, r).unwrap()
    };
    assert_eq!(run(4), run(4));
}

#[test]
fn t_star_matches_brute_force() {
    for (name, d, l) in reference_laws() {
        for r in 0..300 {
            let mut table = ChargeTable::new(&d, StreamKey::new(31).with_replica(r));
            let run = find_t_star(&mut table, ell(&d, l), &SimOptions::default()).unwrap();
            let brute = brute_force_t_star(&mut table, l, 1_000_000).unwrap();
            assert_eq!(run.t_star, brute, "{name} replica {r}");
            assert_eq!(run.trajectory.len(), run.t_star.unsigned_abs() as usize + 1);
            assert_eq!(run.trajectory.last(), Some(&0));
            assert!(run.trajectory[..run.trajectory.len() - 1]
                .iter()
                .all(|&x| x >= 1));
        }
    }
}

#[test]
fn t_star_is_not_later_than_any_detected_regeneration() {
    // Every t with R_t realized on the window up to 0 satisfies t <= T*.
    let d = ChargeDistribution::two_point_inf(0.3).unwrap();
    let e = ell(&d, 0.5);
    for r in 0..200 {
        let mut table = ChargeTable::new(&d, StreamKey::new(32).with_replica(r));
        let t_star = find_t_star(&mut table, e, &SimOptions::default())
            .unwrap()
            .t_star;
        for t in (t_star - 5..=-1).rev() {
            let depth = t.unsigned_abs() as usize;
            let row0 = [table.charge_at(t, 1)];
            let rows: Vec<Vec<Charge>> = (1..=depth)
                .map(|k| table.prefix(t + k as i64, k).to_vec())
                .collect();
            if lppsim::mgs::regeneration_holds(&row0, &rows, 0.5, depth).unwrap() {
                assert!(t <= t_star, "replica {r}: R_{t} holds but T* = {t_star}");
            }
        }
    }
}

#[test]
fn start_state_does_not_matter() {
    for (name, d, l) in reference_laws() {
        for r in 0..100 {
            let mut table = ChargeTable::new(&d, StreamKey::new(33).with_replica(r));
            let run = find_t_star(&mut table, ell(&d, l), &SimOptions::default()).unwrap();
            let t_star = run.t_star;
            let rec = forward_sample(&mut table, run).unwrap();
            let mut rng = StreamKey::new(34).rng(r);
            for _ in 0..20 {
                let start = random_origin_measure(&mut rng);
                assert_eq!(
                    forward_from(&mut table, t_star, &start).unwrap(),
                    rec.m_bar,
                    "{name} {r}"
                );
            }
        }
    }
}

#[test]
fn forward_pass_stays_in_the_triangle() {
    for (name, d, l) in reference_laws() {
        for r in 0..300 {
            let (rec, log) = trace_run(
                &d,
                ell(&d, l),
                StreamKey::new(35).with_replica(r),
                &SimOptions::default(),
            )
            .unwrap();
            let depth = rec.t_star.unsigned_abs() as usize;
            for a in &log {
                let inside = match a.class {
                    AccessClass::Forward if a.t == 0 => a.j <= depth,
                    AccessClass::Forward => a.j as i64 <= a.t - rec.t_star,
                    AccessClass::StopCheck => a.j == 1,
                    AccessClass::RowCheck => a.j <= depth,
                };
                assert!(inside, "{name} {r}: {a:?} with T* = {}", rec.t_star);
                assert!(a.t >= rec.t_star);
            }
            let stop = log
                .iter()
                .rfind(|a| a.class == AccessClass::StopCheck)
                .unwrap();
            assert_eq!((stop.t, stop.j), (rec.t_star, 1));
        }
    }
}

#[test]
fn work_is_quadratic_in_t_star() {
    let d = ChargeDistribution::shifted_exponential();
    let e = ell(&d, 0.7);
    for r in 0..10_000 {
        let rec = sample_mbar(
            &d,
            e,
            StreamKey::new(36).with_replica(r),
            &SimOptions::default(),
        )
        .unwrap();
        let bound = 3 * (rec.t_star.unsigned_abs() + 1).pow(2);
        assert!(
            rec.variates_drawn <= bound,
            "replica {r}: {} > {bound}",
            rec.variates_drawn
        );
        assert_eq!(rec.steps_executed, rec.t_star.unsigned_abs());
        assert!(rec.m_bar <= Charge::ONE);
    }
}

#[test]
fn sample_ranges() {
    let d = ChargeDistribution::two_point_inf(0.3).unwrap();
    for r in 0..2000 {
        let rec = sample_mbar(
            &d,
            ell(&d, 0.5),
            StreamKey::new(37).with_replica(r),
            &SimOptions::default(),
        )
        .unwrap();
        assert!(rec.m_bar <= Charge::ONE);
        assert!((0.0..=1.0).contains(&rec.m_bar_plus));
        assert_eq!(rec.m_bar_plus, rec.m_bar.positive_part());
        // Row 0 is covered within its first |T*| entries, so some atom
        // receives a finite charge.
        assert!(!rec.m_bar.is_neg_inf());
    }
}

#[test]
fn chain_hitting_time_matches_t_star() {
    let (algo, chain) = chain_samples(&ValidateConfig {
        seed: 38,
        chain_runs: 10_000,
        ..ValidateConfig::default()
    })
    .unwrap();
    let test = chi_square_two_sample(&algo, &chain, 20).unwrap();
    assert!(!test.rejects_at(0.01), "{test:?}");
}

#[test]
fn t_star_tail_decays() {
    // Diagnostic: log P(|T*| > m) should fall roughly linearly in m.
    let d = ChargeDistribution::two_point_inf(0.3).unwrap();
    let e = ell(&d, 0.5);
    let depths: Vec<u64> = (0..20_000)
        .map(|r| {
            let mut table = ChargeTable::new(&d, StreamKey::new(39).with_replica(r));
            find_t_star(&mut table, e, &SimOptions::default())
                .unwrap()
                .t_star
                .unsigned_abs()
        })
        .collect();
    let survival = |m: u64| depths.iter().filter(|&&x| x > m).count() as f64 / depths.len() as f64;
    let mut logs = Vec::new();
    for m in (10..=40).step_by(10) {
        let s = survival(m);
        if s > 0.0 {
            logs.push(s.ln());
        }
        println!("P(|T*| > {m}) = {s:.5}");
    }
    assert!(logs.windows(2).all(|w| w[1] < w[0]));
}
