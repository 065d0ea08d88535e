//! Self-checks comparing each algorithm with an independent oracle.

use std::fmt;

use rand::RngCore;

use crate::charge::{Charge, ChargeDistribution, EllParameter};
use crate::error::{Error, Result};
use crate::lpp::{coupling_mismatch, generate_graph, longest_path_dp, longest_path_enum};
use crate::mgs::{regeneration_holds, PointMeasure};
use crate::perfect::{
    find_t_star, forward_from, forward_sample, x_chain_simulate, ChargeTable, Fault, SimOptions,
    XChainParams,
};
use crate::stats::chi_square_two_sample;
use crate::stream::{unit_uniform, StreamKey};

/// The three reference laws with the `ℓ` used for each.
pub fn reference_laws() -> Vec<(&'static str, ChargeDistribution, f64)> {
    vec![
        (
            "two_point_inf(0.3)",
            ChargeDistribution::two_point_inf(0.3).expect("valid law"),
            0.5,
        ),
        (
            "two_point(0.5, 0)",
            ChargeDistribution::two_point(0.5, Charge::ZERO).expect("valid law"),
            0.5,
        ),
        (
            "shifted_exponential",
            ChargeDistribution::shifted_exponential(),
            0.7,
        ),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidateConfig {
    pub seed: u64,
    pub fault: Option<Fault>,
    /// Graphs per `(n, law)` pair for the DP/enumeration comparison.
    pub dp_instances: usize,
    pub dp_sizes: [usize; 3],
    /// Graphs for the coupling check, spread over the three laws.
    pub coupling_instances: usize,
    pub coupling_n: usize,
    /// Tables for the start-state and `T*` checks.
    pub cftp_tables: usize,
    pub start_states: usize,
    /// Runs of each side of the x-chain comparison.
    pub chain_runs: usize,
    pub chain_level: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            fault: None,
            dp_instances: 100,
            dp_sizes: [5, 8, 12],
            coupling_instances: 200,
            coupling_n: 200,
            cftp_tables: 1000,
            start_states: 20,
            chain_runs: 10_000,
            chain_level: 0.01,
        }
    }
}

impl ValidateConfig {
    /// Small sizes for smoke tests.
    pub fn quick(seed: u64) -> Self {
        Self {
            seed,
            dp_instances: 10,
            coupling_instances: 15,
            coupling_n: 60,
            cftp_tables: 60,
            start_states: 5,
            chain_runs: 2000,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<18} instances={} failures={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.failures
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Suite lanes keep the random inputs of different suites apart.
const LANE_DP: u64 = 101;
const LANE_COUPLING: u64 = 102;
const LANE_CFTP: u64 = 103;
const LANE_START: u64 = 104;
const LANE_CHAIN_TABLE: u64 = 105;
const LANE_CHAIN: u64 = 106;

pub fn run_all(cfg: &ValidateConfig) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        dp_vs_enum(cfg)?,
        coupling(cfg)?,
        cftp_start_state(cfg)?,
        tstar_brute_force(cfg)?,
        x_chain(cfg)?,
    ])
}

/// `longest_path_dp` against exhaustive path enumeration, tolerance 0.
pub fn dp_vs_enum(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let key = StreamKey::new(cfg.seed).with_lane(LANE_DP);
    let mut instances = 0;
    let mut failures = 0;
    let mut first = String::new();
    for (li, (name, dist, _)) in reference_laws().into_iter().enumerate() {
        for &n in &cfg.dp_sizes {
            for i in 0..cfg.dp_instances {
                let stream = ((li * 64 + n) * 1_000_000 + i) as u64;
                let g = generate_graph(n, &dist, &mut key.rng(stream))?;
                instances += 1;
                if longest_path_dp(&g) != longest_path_enum(&g)? {
                    failures += 1;
                    if first.is_empty() {
                        first = format!("first mismatch: {name}, n = {n}, instance {i}");
                    }
                }
            }
        }
    }
    Ok(SuiteReport {
        name: "dp_vs_enum",
        instances,
        failures,
        detail: first,
    })
}

/// Graph-driven MGS reproduces `{W_j}` and the increments of `M`.
pub fn coupling(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let key = StreamKey::new(cfg.seed).with_lane(LANE_COUPLING);
    let laws = reference_laws();
    let mut failures = 0;
    let mut first = String::new();
    for i in 0..cfg.coupling_instances {
        let (name, dist, _) = &laws[i % laws.len()];
        let g = generate_graph(cfg.coupling_n, dist, &mut key.rng(i as u64))?;
        if let Some(m) = coupling_mismatch(&g) {
            failures += 1;
            if first.is_empty() {
                first = format!("{name}, instance {i}, t = {}: {}", m.t, m.reason);
            }
        }
    }
    Ok(SuiteReport {
        name: "coupling",
        instances: cfg.coupling_instances,
        failures,
        detail: first,
    })
}

/// A random element of `N_0`: front at 0, up to 11 more atoms in `[-3, 0]`
/// or at `-inf`.
pub fn random_origin_measure<R: RngCore + ?Sized>(rng: &mut R) -> PointMeasure {
    let extra = (unit_uniform(rng) * 12.0) as usize;
    let mut atoms = vec![Charge::ZERO];
    for _ in 0..extra {
        let u = unit_uniform(rng);
        atoms.push(if u < 0.15 {
            Charge::NEG_INF
        } else {
            Charge::from(-3.0 * unit_uniform(rng))
        });
    }
    PointMeasure::from_atoms(atoms)
}

/// `m̄(0)` does not depend on the configuration before `T*`.
pub fn cftp_start_state(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let laws = reference_laws();
    let key = StreamKey::new(cfg.seed).with_lane(LANE_CFTP);
    let start_key = StreamKey::new(cfg.seed).with_lane(LANE_START);
    let opts = SimOptions::default();
    let mut failures = 0;
    let mut first = String::new();
    for i in 0..cfg.cftp_tables {
        let (name, dist, ell) = &laws[i % laws.len()];
        let ell = EllParameter::new(dist, *ell)?;
        let mut table = ChargeTable::new(dist, key.with_replica(i as u64));
        let run = find_t_star(&mut table, ell, &opts)?;
        let t_star = run.t_star;
        let record = forward_sample(&mut table, run)?;
        let mut rng = start_key.rng(i as u64);
        for s in 0..cfg.start_states {
            let start = random_origin_measure(&mut rng);
            let other = forward_from(&mut table, t_star, &start)?;
            if other != record.m_bar {
                failures += 1;
                if first.is_empty() {
                    first = format!(
                        "{name}, table {i}, start {s}: {} vs {}",
                        other, record.m_bar
                    );
                }
            }
        }
    }
    Ok(SuiteReport {
        name: "cftp_start_state",
        instances: cfg.cftp_tables * cfg.start_states,
        failures,
        detail: first,
    })
}

/// `T* = sup{t <= -1 : R_t holds on the window up to 0}` by direct scan.
pub fn brute_force_t_star(table: &mut ChargeTable<'_>, ell: f64, cap: u64) -> Result<i64> {
    let mut t: i64 = -1;
    loop {
        let depth = t.unsigned_abs() as usize;
        let row0 = [table.charge_at(t, 1)];
        let rows: Vec<Vec<Charge>> = (1..=depth)
            .map(|k| table.prefix(t + k as i64, k).to_vec())
            .collect();
        if regeneration_holds(&row0, &rows, ell, depth)? {
            return Ok(t);
        }
        t -= 1;
        if t.unsigned_abs() > cap {
            return Err(Error::CapExceeded {
                cap,
                replica: table.key().replica,
                variates: table.drawn(),
            });
        }
    }
}

/// Backward-search `T*` against the brute-force scan of the same table.
pub fn tstar_brute_force(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let laws = reference_laws();
    let key = StreamKey::new(cfg.seed).with_lane(LANE_CFTP);
    let opts = SimOptions {
        fault: cfg.fault,
        ..SimOptions::default()
    };
    let mut failures = 0;
    let mut first = String::new();
    for i in 0..cfg.cftp_tables {
        let (name, dist, ell) = &laws[i % laws.len()];
        let ell = EllParameter::new(dist, *ell)?;
        let mut table = ChargeTable::new(dist, key.with_replica(i as u64));
        let run = find_t_star(&mut table, ell, &opts)?;
        let brute = brute_force_t_star(&mut table, ell.ell(), opts.cap)?;
        if brute != run.t_star {
            failures += 1;
            if first.is_empty() {
                first = format!(
                    "{name}, table {i}: algorithm {} vs brute force {brute}",
                    run.t_star
                );
            }
        }
    }
    Ok(SuiteReport {
        name: "tstar_brute_force",
        instances: cfg.cftp_tables,
        failures,
        detail: first,
    })
}

/// `|T*|` samples from the backward search and chain hitting times for
/// `two_point_inf(0.3)` at `ℓ = 0.5`.
pub fn chain_samples(cfg: &ValidateConfig) -> Result<(Vec<u64>, Vec<u64>)> {
    let dist = ChargeDistribution::two_point_inf(0.3)?;
    let ell = EllParameter::new(&dist, 0.5)?;
    let params = XChainParams::from_distribution(&dist, ell)?;
    let table_key = StreamKey::new(cfg.seed).with_lane(LANE_CHAIN_TABLE);
    let chain_key = StreamKey::new(cfg.seed).with_lane(LANE_CHAIN);
    let opts = SimOptions::default();
    let mut algo = Vec::with_capacity(cfg.chain_runs);
    let mut chain = Vec::with_capacity(cfg.chain_runs);
    for i in 0..cfg.chain_runs {
        let mut table = ChargeTable::new(&dist, table_key.with_replica(i as u64));
        algo.push(find_t_star(&mut table, ell, &opts)?.t_star.unsigned_abs());
        chain.push(x_chain_simulate(&params, &mut chain_key.rng(i as u64)).0);
    }
    Ok((algo, chain))
}

pub fn x_chain(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let (algo, chain) = chain_samples(cfg)?;
    let test = chi_square_two_sample(&algo, &chain, 20)?;
    Ok(SuiteReport {
        name: "x_chain",
        instances: cfg.chain_runs,
        failures: usize::from(test.rejects_at(cfg.chain_level)),
        detail: format!(
            "chi2 = {:.2}, df = {}, p = {:.4}",
            test.statistic, test.df, test.p_value
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for report in run_all(&ValidateConfig::quick(1)).unwrap() {
            assert!(report.passed(), "{report}");
            assert!(report.instances > 0);
        }
    }

    #[test]
    fn skipped_stop_check_is_caught() {
        let cfg = ValidateConfig {
            fault: Some(Fault::SkipStopCheck),
            ..ValidateConfig::quick(1)
        };
        let report = tstar_brute_force(&cfg).unwrap();
        assert!(!report.passed(), "{report}");
    }

    #[test]
    fn random_measures_are_in_n0() {
        let mut rng = StreamKey::new(5).rng(0);
        let mut saw_inf = false;
        for _ in 0..200 {
            let nu = random_origin_measure(&mut rng);
            assert!(nu.is_front_at_origin());
            saw_inf |= nu.atoms().any(Charge::is_neg_inf);
        }
        assert!(saw_inf);
    }

    #[test]
    fn report_line_format() {
        let r = SuiteReport {
            name: "x",
            instances: 3,
            failures: 0,
            detail: String::new(),
        };
        assert!(r.to_string().starts_with("PASS x"));
        assert!(r.to_string().contains("instances=3"));
    }
}
