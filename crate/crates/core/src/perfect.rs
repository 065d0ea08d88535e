//! Coupling from the past for the stationary relative increment `m̄(0)`.
//!
//! Time runs over `t <= 0` and coordinates over `j >= 1`. The backward pass
//! walks the lazily drawn array `w_j(t)` until the regeneration time `T*` is
//! detected; the forward pass rebuilds `Ψ^{T*,-1} δ_0` from the same array and
//! evaluates the increment against row 0.

use std::io::Write;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::charge::{Charge, ChargeDistribution, EllParameter};
use crate::error::{Error, Result};
use crate::mgs::PointMeasure;
use crate::stream::{unit_uniform, StreamKey};

/// Default bound on `|t|` for the backward search.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Default limit on charges realized by one replica. The table keeps every
/// drawn entry, about `|T*|^2 / 2` of them, so this bounds memory at 256 MiB
/// per replica (`|T*|` up to roughly 8000).
pub const DEFAULT_BUDGET: u64 = 1 << 25;

/// Why an entry of the table was read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessClass {
    /// Coverage check `max_{j <= J} w_j(t) >= 1 - ℓ`.
    RowCheck,
    /// Stop check `w_1(t) >= ℓ`.
    StopCheck,
    /// Read by the forward reconstruction.
    Forward,
}

impl AccessClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessClass::RowCheck => "row_check",
            AccessClass::StopCheck => "stop_check",
            AccessClass::Forward => "forward",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Access {
    pub t: i64,
    pub j: usize,
    pub value: Charge,
    pub class: AccessClass,
}

/// Deliberate defects for negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Stop at the first `J = 1` time without testing `w_1(t) >= ℓ`.
    SkipStopCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    pub cap: u64,
    /// Abort once a replica has drawn more than this many charges.
    pub budget: u64,
    pub fault: Option<Fault>,
    pub log_access: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            budget: DEFAULT_BUDGET,
            fault: None,
            log_access: false,
        }
    }
}

/// The array `{w_j(t)}`, realized on demand. Row `t` is drawn sequentially
/// from stream `|t|` of the table's key, so an entry's value depends only on
/// `(key, t, j)` and never on the order in which rows are visited.
pub struct ChargeTable<'a> {
    dist: &'a ChargeDistribution,
    key: StreamKey,
    rows: Vec<Vec<Charge>>,
    cursor: Option<(usize, ChaCha8Rng)>,
    drawn: u64,
    log: Option<Vec<Access>>,
}

impl<'a> ChargeTable<'a> {
    pub fn new(dist: &'a ChargeDistribution, key: StreamKey) -> Self {
        Self {
            dist,
            key,
            rows: Vec::new(),
            cursor: None,
            drawn: 0,
            log: None,
        }
    }

    pub fn with_access_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Number of variates drawn so far.
    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    /// Entries realized so far in row `t`.
    pub fn row_len(&self, t: i64) -> usize {
        self.rows.get(t.unsigned_abs() as usize).map_or(0, Vec::len)
    }

    pub fn access_log(&self) -> Option<&[Access]> {
        self.log.as_deref()
    }

    /// `w_j(t)`, drawn on first access. Requires `t <= 0` and `j >= 1`.
    pub fn charge_at(&mut self, t: i64, j: usize) -> Charge {
        assert!(
            t <= 0 && j >= 1,
            "charge_at({t}, {j}) outside t <= 0, j >= 1"
        );
        let r = t.unsigned_abs() as usize;
        self.ensure(r, j);
        self.rows[r][j - 1]
    }

    /// `w_1(t), ..., w_len(t)`.
    pub fn prefix(&mut self, t: i64, len: usize) -> &[Charge] {
        let r = t.unsigned_abs() as usize;
        self.ensure(r, len);
        &self.rows[r][..len]
    }

    fn read(&mut self, t: i64, j: usize, class: AccessClass) -> Charge {
        let value = self.charge_at(t, j);
        if let Some(log) = self.log.as_mut() {
            log.push(Access { t, j, value, class });
        }
        value
    }

    fn read_prefix(&mut self, t: i64, len: usize, class: AccessClass) -> Vec<Charge> {
        let row = self.prefix(t, len).to_vec();
        if let Some(log) = self.log.as_mut() {
            log.extend(row.iter().enumerate().map(|(i, &value)| Access {
                t,
                j: i + 1,
                value,
                class,
            }));
        }
        row
    }

    fn ensure(&mut self, r: usize, len: usize) {
        if self.rows.len() <= r {
            self.rows.resize_with(r + 1, Vec::new);
        }
        let have = self.rows[r].len();
        if have >= len {
            return;
        }
        let rng = match &mut self.cursor {
            Some((row, rng)) if *row == r => rng,
            slot => {
                let rng = self.key.rng_at(r as u64, have as u64);
                &mut slot.insert((r, rng)).1
            }
        };
        let row = &mut self.rows[r];
        for _ in have..len {
            row.push(self.dist.sample(rng));
        }
        self.drawn += (len - have) as u64;
    }
}

/// Output of the backward search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackwardRun {
    /// `T* <= -1`.
    pub t_star: i64,
    /// `(X_0, X_1, ..., X_{|T*|})`, ending at 0.
    pub trajectory: Vec<usize>,
}

/// Backward search for the regeneration time: `X_n` is the value of `J` when the search
/// leaves row `-n`.
pub fn find_t_star(
    table: &mut ChargeTable<'_>,
    ell: EllParameter,
    opts: &SimOptions,
) -> Result<BackwardRun> {
    let ell = ell.ell();
    let cover = Charge::from(1.0 - ell);
    let stop = Charge::from(ell);

    let mut t: i64 = 0;
    let mut trajectory = Vec::new();
    table.read(0, 1, AccessClass::RowCheck);

    // Smallest J' >= j with max_{i <= J'} w_i(t) >= 1 - ℓ.
    let extend = |table: &mut ChargeTable<'_>, t: i64, j: usize| -> usize {
        let mut best = (1..=j)
            .map(|i| table.read(t, i, AccessClass::RowCheck))
            .fold(Charge::NEG_INF, Charge::max);
        let mut j = j;
        while best < cover {
            j += 1;
            best = best.max(table.read(t, j, AccessClass::RowCheck));
        }
        j
    };
    let check_cap = |table: &ChargeTable<'_>, t: i64| -> Result<()> {
        if t.unsigned_abs() > opts.cap {
            return Err(Error::CapExceeded {
                cap: opts.cap,
                replica: table.key.replica,
                variates: table.drawn,
            });
        }
        if table.drawn > opts.budget {
            return Err(Error::BudgetExceeded {
                budget: opts.budget,
                replica: table.key.replica,
                t,
            });
        }
        Ok(())
    };

    let mut j = 1;
    loop {
        j = extend(table, t, j);
        while j > 1 {
            trajectory.push(j);
            j -= 1;
            t -= 1;
            check_cap(table, t)?;
            j = extend(table, t, j);
        }
        trajectory.push(1);
        t -= 1;
        check_cap(table, t)?;
        let w1 = table.read(t, 1, AccessClass::StopCheck);
        if opts.fault == Some(Fault::SkipStopCheck) || w1 >= stop {
            trajectory.push(0);
            return Ok(BackwardRun {
                t_star: t,
                trajectory,
            });
        }
    }
}

/// One exact draw of `m̄(0)` with its work counters.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub m_bar: Charge,
    /// `max(m_bar, 0)`, with `-inf` mapped to 0.
    pub m_bar_plus: f64,
    pub t_star: i64,
    pub j_trajectory: Vec<usize>,
    pub variates_drawn: u64,
    /// Number of `m` evaluations in the forward pass (`|T*|`).
    pub steps_executed: u64,
}

impl SampleRecord {
    pub fn t_star_sq(&self) -> f64 {
        (self.t_star as f64).powi(2)
    }
}

/// Forward pass: `ν = δ_0` at `T*`, one step per row
/// `T*+1, ..., -1`, then `m(ν, w(0)) - ν_1`.
pub fn forward_sample(table: &mut ChargeTable<'_>, run: BackwardRun) -> Result<SampleRecord> {
    let mut nu = PointMeasure::origin();
    let mut steps = 0;
    for s in run.t_star + 1..0 {
        let row = table.read_prefix(s, nu.mass(), AccessClass::Forward);
        nu.step_in_place(&row)?;
        steps += 1;
    }
    let row0 = table.read_prefix(0, nu.mass(), AccessClass::Forward);
    let m_bar = nu.relative_increment(&row0)?;
    Ok(SampleRecord {
        m_bar,
        m_bar_plus: m_bar.positive_part(),
        t_star: run.t_star,
        j_trajectory: run.trajectory,
        variates_drawn: table.drawn(),
        steps_executed: steps + 1,
    })
}

/// Runs the dynamics on the same table from an arbitrary `start ∈ N_0` placed
/// just before `T*`: one step with row `T*`, a front shift, then unshifted
/// steps up to row `-1` and the increment against row 0. On the regeneration
/// event the result equals [`forward_sample`]'s `m_bar` whatever `start` is.
pub fn forward_from(
    table: &mut ChargeTable<'_>,
    t_star: i64,
    start: &PointMeasure,
) -> Result<Charge> {
    if !start.is_front_at_origin() {
        return Err(Error::InvalidArgument(
            "starting measure must have its front atom at 0".into(),
        ));
    }
    let mut nu = start.clone();
    let row = table.read_prefix(t_star, nu.mass(), AccessClass::Forward);
    nu.step_in_place(&row)?;
    nu = nu.shift_front()?;
    for s in t_star + 1..0 {
        let row = table.read_prefix(s, nu.mass(), AccessClass::Forward);
        nu.step_in_place(&row)?;
    }
    let row0 = table.read_prefix(0, nu.mass(), AccessClass::Forward);
    nu.relative_increment(&row0)
}

/// Backward search and forward pass on a fresh table keyed by `key`.
pub fn sample_mbar(
    dist: &ChargeDistribution,
    ell: EllParameter,
    key: StreamKey,
    opts: &SimOptions,
) -> Result<SampleRecord> {
    if !dist.is_normalized() {
        return Err(Error::NotNormalized(dist.ess_sup().value()));
    }
    let mut table = ChargeTable::new(dist, key);
    let run = find_t_star(&mut table, ell, opts)?;
    forward_sample(&mut table, run)
}

/// Like [`sample_mbar`] but also returns every table access in order.
pub fn trace_run(
    dist: &ChargeDistribution,
    ell: EllParameter,
    key: StreamKey,
    opts: &SimOptions,
) -> Result<(SampleRecord, Vec<Access>)> {
    if !dist.is_normalized() {
        return Err(Error::NotNormalized(dist.ess_sup().value()));
    }
    let mut table = ChargeTable::new(dist, key).with_access_log();
    let run = find_t_star(&mut table, ell, opts)?;
    let record = forward_sample(&mut table, run)?;
    let log = table.log.take().unwrap_or_default();
    Ok((record, log))
}

/// Writes accesses as CSV `t,j,value,class`.
pub fn write_trace_csv<W: Write>(accesses: &[Access], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "j", "value", "class"])?;
    for a in accesses {
        wtr.write_record([
            a.t.to_string(),
            a.j.to_string(),
            a.value.to_string(),
            a.class.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Transition law of the chain whose hitting time of 0 has the law of `|T*|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XChainParams {
    p: f64,
    q_stop: f64,
    q_mid: f64,
}

/// Allowed deviation from 1 of the total mass leaving state 1.
const STATE_ONE_TOLERANCE: f64 = 1e-9;

impl XChainParams {
    /// `p = P(w >= 1-ℓ)`, `q_stop = P(w >= ℓ)`, `q_mid = P(1-ℓ <= w < ℓ)`.
    pub fn new(p: f64, q_stop: f64, q_mid: f64) -> Result<Self> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(p) || !unit(q_stop) || !(0.0..=1.0).contains(&q_mid) {
            return Err(Error::ChainParams(format!(
                "need p, q_stop in (0, 1] and q_mid in [0, 1], got p = {p}, q_stop = {q_stop}, q_mid = {q_mid}"
            )));
        }
        // Leaving state 1: q_stop + q_mid + Σ_{j>=2} p(1-p)^{j-1} = q_stop + q_mid + 1 - p.
        let total = q_stop + q_mid + (1.0 - p);
        if (total - 1.0).abs() > STATE_ONE_TOLERANCE {
            return Err(Error::ChainParams(format!(
                "state 1 transition mass is {total}, expected 1"
            )));
        }
        Ok(Self { p, q_stop, q_mid })
    }

    /// Parameters induced by `dist` and `ℓ`; requires `ℓ >= 1/2`.
    pub fn from_distribution(dist: &ChargeDistribution, ell: EllParameter) -> Result<Self> {
        let l = ell.ell();
        if l < 0.5 {
            return Err(Error::InvalidEll {
                ell: l,
                reason: "the x-chain state-1 law needs ell >= 1/2",
            });
        }
        let q_stop = dist.tail(l)?;
        Self::new(ell.p(), q_stop, ell.p() - q_stop)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q_stop(&self) -> f64 {
        self.q_stop
    }

    pub fn q_mid(&self) -> f64 {
        self.q_mid
    }

    /// `P(j, i)`.
    pub fn transition(&self, j: usize, i: usize) -> f64 {
        let p = self.p;
        let geom = |k: usize| p * (1.0 - p).powi(k as i32 - 1);
        match j {
            0 => f64::from(u8::from(i == 0)),
            1 => match i {
                0 => self.q_stop,
                1 => self.q_mid,
                _ => geom(i),
            },
            _ if i + 1 == j => 1.0 - (1.0 - p).powi(j as i32 - 1),
            _ if i >= j => geom(i),
            _ => 0.0,
        }
    }

    /// Geometric on `{1, 2, ...}` with success probability `p`.
    fn geometric<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        if self.p >= 1.0 {
            return 1;
        }
        let u = 1.0 - unit_uniform(rng);
        1 + (u.ln() / (-self.p).ln_1p()).floor() as usize
    }
}

/// Runs the chain from `X_0 ~ Geom(p)` until it hits 0. Returns the hitting
/// time and the path `(X_0, ..., 0)`.
pub fn x_chain_simulate<R: RngCore + ?Sized>(
    params: &XChainParams,
    rng: &mut R,
) -> (u64, Vec<usize>) {
    let mut x = params.geometric(rng);
    let mut path = vec![x];
    while x != 0 {
        x = if x == 1 {
            let u = unit_uniform(rng);
            if u < params.q_stop {
                0
            } else if u < params.q_stop + params.q_mid {
                1
            } else {
                1 + params.geometric(rng)
            }
        } else {
            let down = 1.0 - (1.0 - params.p).powi(x as i32 - 1);
            if unit_uniform(rng) < down {
                x - 1
            } else {
                x - 1 + params.geometric(rng)
            }
        };
        path.push(x);
    }
    ((path.len() - 1) as u64, path)
}
