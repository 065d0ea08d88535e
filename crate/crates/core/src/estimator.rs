//! Monte Carlo estimation of `C(F)` from independent perfect samples.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use serde::Serialize;

use crate::charge::{default_ell, ChargeDistribution, EllParameter, Normalized};
use crate::error::{Error, Result};
use crate::mgs::PointMeasure;
use crate::par::map_replicas;
use crate::perfect::{sample_mbar, SampleRecord, SimOptions};
use crate::stats::mean_and_stderr;
use crate::stream::StreamKey;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub c_hat: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub mean_tstar_sq: f64,
    pub tstar_sq_stderr: f64,
    pub mean_variates: f64,
    /// Seconds; excluded from every CSV so outputs stay reproducible.
    pub wall_time: f64,
    pub seed: u64,
    /// `ℓ` used, or `None` when the law short-circuited.
    pub ell: Option<f64>,
    /// `L <= 0`: `C(F) = 0` without simulation.
    pub degenerate: bool,
}

impl EstimateResult {
    fn degenerate(seed: u64) -> Self {
        Self {
            c_hat: 0.0,
            stderr: 0.0,
            n_samples: 0,
            mean_tstar_sq: 0.0,
            tstar_sq_stderr: 0.0,
            mean_variates: 0.0,
            wall_time: 0.0,
            seed,
            ell: None,
            degenerate: true,
        }
    }

    /// Half-width of the normal 95% interval.
    pub fn half_width_95(&self) -> f64 {
        1.96 * self.stderr
    }
}

/// Settings shared by the estimator entry points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSettings {
    pub seed: u64,
    /// 0 lets the pool decide, 1 runs sequentially.
    pub workers: usize,
    pub sim: SimOptions,
}

impl RunSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            workers: 1,
            sim: SimOptions::default(),
        }
    }

    pub fn workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    pub fn budget(self, budget: u64) -> Self {
        Self {
            sim: SimOptions { budget, ..self.sim },
            ..self
        }
    }

    pub fn cap(self, cap: u64) -> Self {
        Self {
            sim: SimOptions { cap, ..self.sim },
            ..self
        }
    }
}

/// Mean of `n_samples` draws of `m̄(0)^+`. The law is normalized first; a law
/// with `L <= 0` returns `c_hat = 0` at once. `ell = None` uses [`default_ell`].
/// Replica `i` draws from `(seed, lane, i)` and results are reduced in index
/// order, so the output does not depend on `workers`.
pub fn estimate_c(
    dist: &ChargeDistribution,
    ell: Option<f64>,
    n_samples: usize,
    settings: RunSettings,
) -> Result<EstimateResult> {
    estimate_on_lane(dist, ell, n_samples, settings, 0)
}

fn estimate_on_lane(
    dist: &ChargeDistribution,
    ell: Option<f64>,
    n_samples: usize,
    settings: RunSettings,
    lane: u64,
) -> Result<EstimateResult> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "n_samples must be at least 1".into(),
        ));
    }
    let dist = match dist.normalize() {
        Normalized::Scaled(d) => d,
        Normalized::Degenerate { .. } => return Ok(EstimateResult::degenerate(settings.seed)),
    };
    let ell = match ell {
        Some(x) => EllParameter::new(&dist, x)?,
        None => default_ell(&dist)?,
    };
    let started = Instant::now();
    let key = StreamKey::new(settings.seed).with_lane(lane);
    // After the first failure the remaining replicas are skipped.
    let failed = AtomicBool::new(false);
    let outcomes = map_replicas(n_samples, settings.workers, |i| {
        if failed.load(Ordering::Relaxed) {
            return None;
        }
        let r = sample_mbar(&dist, ell, key.with_replica(i as u64), &settings.sim);
        if r.is_err() {
            failed.store(true, Ordering::Relaxed);
        }
        Some(r)
    });
    let records: Vec<SampleRecord> = outcomes.into_iter().flatten().collect::<Result<_>>()?;

    let plus: Vec<f64> = records.iter().map(|r| r.m_bar_plus).collect();
    let tsq: Vec<f64> = records.iter().map(SampleRecord::t_star_sq).collect();
    let (c_hat, stderr) = mean_and_stderr(&plus);
    let (mean_tstar_sq, tstar_sq_stderr) = mean_and_stderr(&tsq);
    let mean_variates =
        records.iter().map(|r| r.variates_drawn as f64).sum::<f64>() / n_samples as f64;
    Ok(EstimateResult {
        c_hat,
        stderr,
        n_samples,
        mean_tstar_sq,
        tstar_sq_stderr,
        mean_variates,
        wall_time: started.elapsed().as_secs_f64(),
        seed: settings.seed,
        ell: Some(ell.ell()),
        degenerate: false,
    })
}

/// Biased comparator: `ν_1(n) / n` after `n` steps from `δ_0` with fresh rows.
pub fn mcmc_estimate(dist: &ChargeDistribution, n_steps: usize, seed: u64) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let key = StreamKey::new(seed);
    let mut nu = PointMeasure::origin();
    let mut row = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let mut rng = key.rng(step as u64);
        row.clear();
        row.extend((0..nu.mass()).map(|_| dist.sample(&mut rng)));
        nu.step_in_place(&row)?;
    }
    let front = nu.front().ok_or(Error::ZeroMeasure)?;
    Ok(front.value() / n_steps as f64)
}

/// Which parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Ell,
    P,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Ell => "ell",
            SweepParam::P => "p",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub c_hat: f64,
    pub stderr: f64,
    pub mean_tstar_sq: f64,
    pub tstar_sq_stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// `None` on success, otherwise the error for this grid point.
    pub failure: Option<String>,
}

impl SweepRow {
    fn from_result(
        param: SweepParam,
        value: f64,
        n: usize,
        seed: u64,
        r: Result<EstimateResult>,
    ) -> Self {
        match r {
            Ok(e) => Self {
                param,
                value,
                c_hat: e.c_hat,
                stderr: e.stderr,
                mean_tstar_sq: e.mean_tstar_sq,
                tstar_sq_stderr: e.tstar_sq_stderr,
                n_samples: e.n_samples,
                seed,
                failure: None,
            },
            Err(e) => Self {
                param,
                value,
                c_hat: f64::NAN,
                stderr: f64::NAN,
                mean_tstar_sq: f64::NAN,
                tstar_sq_stderr: f64::NAN,
                n_samples: n,
                seed,
                failure: Some(failure_text(&e)),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Which replica trips a limit first can depend on scheduling, so limit
/// aborts are reported without the replica counters.
fn failure_text(e: &Error) -> String {
    match e {
        Error::CapExceeded { cap, .. } => format!("aborted: |t| exceeded cap {cap}"),
        Error::BudgetExceeded { budget, .. } => {
            format!("aborted: more than {budget} charges drawn")
        }
        e => e.to_string(),
    }
}

/// One row per `ℓ` in grid order. Grid point `k` uses lane `k`, so rows are
/// independent and each is reproducible on its own.
pub fn sweep_ell(
    dist: &ChargeDistribution,
    grid: &[f64],
    n_per_point: usize,
    settings: RunSettings,
) -> Vec<SweepRow> {
    grid.iter()
        .enumerate()
        .map(|(k, &ell)| {
            let r = estimate_on_lane(dist, Some(ell), n_per_point, settings, k as u64);
            SweepRow::from_result(SweepParam::Ell, ell, n_per_point, settings.seed, r)
        })
        .collect()
}

/// Sweep over `F = p δ_1 + (1-p) δ_{-inf}` at fixed `ℓ`.
pub fn sweep_p(grid: &[f64], ell: f64, n_per_point: usize, settings: RunSettings) -> Vec<SweepRow> {
    grid.iter()
        .enumerate()
        .map(|(k, &p)| {
            let r = ChargeDistribution::two_point_inf(p)
                .and_then(|d| estimate_on_lane(&d, Some(ell), n_per_point, settings, k as u64));
            SweepRow::from_result(SweepParam::P, p, n_per_point, settings.seed, r)
        })
        .collect()
}

/// `ψ(q) = Σ_{k>=0} q^{k(k+1)/2}`, stopping once the next term is below `tol`.
pub fn ramanujan_psi(q: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "ramanujan_psi needs 0 <= q < 1, got {q}"
        )));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut k = 0u32;
    while term >= tol {
        sum += term;
        k += 1;
        // q^{k(k+1)/2} = q^{(k-1)k/2} * q^k
        term *= q.powi(k as i32);
    }
    Ok(sum)
}

/// Parses `start:stop:count` into `count` evenly spaced points, endpoints
/// included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("grid {spec:?} is not start:stop:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count < 2 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid {spec:?} needs finite endpoints and count >= 2"
        )));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                stop
            } else {
                start + i as f64 * step
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::Charge;

    #[test]
    fn point_mass_estimate_is_exact() {
        let d = ChargeDistribution::point_mixture([(Charge::ONE, 1.0)]).unwrap();
        let r = estimate_c(&d, None, 10, RunSettings::new(0)).unwrap();
        assert_eq!((r.c_hat, r.stderr, r.mean_tstar_sq), (1.0, 0.0, 1.0));
        assert_eq!(r.ell, Some(0.5));
    }

    #[test]
    fn nonpositive_support_short_circuits() {
        let d = ChargeDistribution::point_mixture([(Charge::from(-1.0), 1.0)]).unwrap();
        let r = estimate_c(&d, Some(0.7), 1_000_000_000, RunSettings::new(0)).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.c_hat, r.n_samples), (0.0, 0));
    }

    #[test]
    fn estimate_rejects_zero_samples() {
        let d = ChargeDistribution::shifted_exponential();
        assert!(estimate_c(&d, None, 0, RunSettings::new(0)).is_err());
    }

    #[test]
    fn scaled_law_matches_normalized_law() {
        let big =
            ChargeDistribution::point_mixture([(Charge::from(2.0), 0.5), (Charge::ZERO, 0.5)])
                .unwrap();
        let unit = ChargeDistribution::two_point(0.5, Charge::ZERO).unwrap();
        let a = estimate_c(&big, Some(0.5), 200, RunSettings::new(9)).unwrap();
        let b = estimate_c(&unit, Some(0.5), 200, RunSettings::new(9)).unwrap();
        assert_eq!(a.c_hat, b.c_hat);
    }

    #[test]
    fn workers_do_not_change_results() {
        let d = ChargeDistribution::shifted_exponential();
        let base = estimate_c(&d, Some(0.7), 300, RunSettings::new(7)).unwrap();
        for w in [0, 2, 4] {
            let r = estimate_c(&d, Some(0.7), 300, RunSettings::new(7).workers(w)).unwrap();
            assert_eq!(r.c_hat.to_bits(), base.c_hat.to_bits());
            assert_eq!(r.stderr.to_bits(), base.stderr.to_bits());
            assert_eq!(r.mean_tstar_sq.to_bits(), base.mean_tstar_sq.to_bits());
        }
    }

    #[test]
    fn cap_error_propagates() {
        let d = ChargeDistribution::two_point_inf(0.05).unwrap();
        let r = estimate_c(&d, Some(0.5), 50, RunSettings::new(1).cap(1));
        assert!(matches!(r, Err(Error::CapExceeded { cap: 1, .. })));
    }

    #[test]
    fn mcmc_examples() {
        let one = ChargeDistribution::two_point_inf(1.0).unwrap();
        assert_eq!(mcmc_estimate(&one, 100, 3).unwrap(), 1.0);
        let e = ChargeDistribution::shifted_exponential();
        assert!(mcmc_estimate(&e, 300, 3).unwrap() <= 1.0);
        assert!(mcmc_estimate(&e, 0, 3).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(ramanujan_psi(0.0, 1e-12).unwrap(), 1.0);
        let v = ramanujan_psi(0.5, 1e-12).unwrap();
        assert!((v - 1.641_632).abs() < 1e-6, "{v}");
        assert!(ramanujan_psi(1.0, 1e-12).is_err());
        let mut prev = 0.0;
        for i in 0..20 {
            let x = ramanujan_psi(i as f64 * 0.05, 1e-12).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("0.05:0.95:19").unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[18], 0.95);
        for bad in ["0:1:1", "0:1", "a:1:3", "0:1:3:4", "0:inf:3"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sweeps_record_failures_and_continue() {
        let rows = sweep_p(&[0.0, 1.0], 0.5, 5, RunSettings::new(2));
        assert_eq!(rows.len(), 2);
        assert!(!rows[0].is_ok());
        assert!(rows[1].is_ok());
        assert_eq!(rows[1].mean_tstar_sq, 1.0);

        let d = ChargeDistribution::shifted_exponential();
        let rows = sweep_ell(&d, &[0.7, 1.5], 5, RunSettings::new(2));
        assert!(rows[0].is_ok() && !rows[1].is_ok());
    }
}
