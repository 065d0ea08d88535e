//! Exact last passage percolation on the charged complete DAG.
//!
//! Vertices are `0..=n` and every pair `i < j` carries an i.i.d. charge
//! `w_{i,j}`. `W_k` is the maximal path charge from 0 to `k` and `M_k` its
//! running maximum. Two independent computations are provided (dynamic
//! programming and brute-force enumeration), plus the pathwise coupling
//! between the graph and the Max Growth System.

use std::io::{Read, Write};

use rand::RngCore;

use crate::charge::{Charge, ChargeDistribution};
use crate::error::{Error, Result};
use crate::mgs::PointMeasure;
use crate::stats::ks_distance;
use crate::stream::StreamKey;

/// Largest `n` accepted by [`longest_path_enum`].
pub const MAX_ENUM_N: usize = 20;

/// Edge charges `w_{i,j}`, `0 <= i < j <= n`, stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargedGraph {
    n: usize,
    weights: Vec<Charge>,
}

#[inline]
fn edge_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

impl ChargedGraph {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Charge) -> Self {
        let mut weights = Vec::with_capacity(n * (n + 1) / 2);
        for j in 1..=n {
            for i in 0..j {
                weights.push(f(i, j));
            }
        }
        Self { n, weights }
    }

    /// Largest vertex index.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Charge {
        self.weights[edge_index(i, j)]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: Charge) {
        self.weights[edge_index(i, j)] = w;
    }

    /// Writes the edge list as CSV `i,j,w`, with `-inf` for missing edges.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["i", "j", "w"])?;
        for j in 1..=self.n {
            for i in 0..j {
                let w = self.weight(i, j);
                let text = if w.is_neg_inf() {
                    "-inf".to_string()
                } else {
                    format!("{:e}", w.value())
                };
                wtr.write_record([i.to_string(), j.to_string(), text])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads an edge list written by [`ChargedGraph::write_csv`]. Every pair
    /// `i < j <= n` must appear exactly once.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut edges = Vec::new();
        let mut n = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "edge record has {} fields, expected 3",
                    rec.len()
                )));
            }
            let parse = |k: usize| -> Result<usize> {
                rec[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad vertex index {:?}", &rec[k])))
            };
            let (i, j) = (parse(0)?, parse(1)?);
            if i >= j {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i},{j}) is not forward"
                )));
            }
            let w = Charge::parse(&rec[2])?;
            n = n.max(j);
            edges.push((i, j, w));
        }
        let mut slots: Vec<Option<Charge>> = vec![None; n * (n + 1) / 2];
        for (i, j, w) in edges {
            let slot = &mut slots[edge_index(i, j)];
            if slot.replace(w).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i},{j}) listed twice"
                )));
            }
        }
        let weights = slots
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidArgument("edge list is incomplete".into()))?;
        if n == 0 {
            return Err(Error::InvalidArgument("edge list is empty".into()));
        }
        Ok(Self { n, weights })
    }
}

/// I.i.d. charges from `dist`, drawn column by column (`j` outer, `i` inner).
pub fn generate_graph<R: RngCore + ?Sized>(
    n: usize,
    dist: &ChargeDistribution,
    rng: &mut R,
) -> Result<ChargedGraph> {
    if n == 0 {
        return Err(Error::InvalidArgument("graph needs n >= 1".into()));
    }
    Ok(ChargedGraph::from_fn(n, |_, _| dist.sample(rng)))
}

/// `W_k` and `M_k` for `k = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathProfile {
    pub w: Vec<Charge>,
    pub m: Vec<Charge>,
}

impl PathProfile {
    fn from_w(w: Vec<Charge>) -> Self {
        let mut m = Vec::with_capacity(w.len());
        let mut best = Charge::NEG_INF;
        for &x in &w {
            best = best.max(x);
            m.push(best);
        }
        Self { w, m }
    }
}

/// `W_k = max_{j<k} (W_j + w_{j,k})` with `W_0 = 0`, in `O(n^2)`.
pub fn longest_path_dp(g: &ChargedGraph) -> PathProfile {
    let mut w = Vec::with_capacity(g.n + 1);
    w.push(Charge::ZERO);
    for k in 1..=g.n {
        let best = (0..k)
            .map(|j| w[j] + g.weight(j, k))
            .fold(Charge::NEG_INF, Charge::max);
        w.push(best);
    }
    PathProfile::from_w(w)
}

/// Maximal path charge from `from` to `to` on the induced subgraph.
#[doc(hidden)]
pub fn longest_path_between(g: &ChargedGraph, from: usize, to: usize) -> Charge {
    debug_assert!(from <= to && to <= g.n);
    let mut w = vec![Charge::ZERO];
    for k in from + 1..=to {
        let best = (from..k)
            .map(|j| w[j - from] + g.weight(j, k))
            .fold(Charge::NEG_INF, Charge::max);
        w.push(best);
    }
    w[to - from]
}

/// Enumerates all `2^{k-1}` paths from 0 to each `k`. Path charges are summed
/// from vertex 0 upward, matching the order of additions in the DP.
pub fn longest_path_enum(g: &ChargedGraph) -> Result<PathProfile> {
    if g.n > MAX_ENUM_N {
        return Err(Error::TooLarge {
            n: g.n,
            max: MAX_ENUM_N,
        });
    }
    let mut w = vec![Charge::ZERO];
    for k in 1..=g.n {
        let inner = k - 1;
        let mut best = Charge::NEG_INF;
        // bit b of `mask` set <=> vertex b + 1 is on the path
        for mask in 0u32..(1u32 << inner) {
            let mut total = Charge::ZERO;
            let mut prev = 0;
            for v in 1..k {
                if mask & (1 << (v - 1)) != 0 {
                    total = total + g.weight(prev, v);
                    prev = v;
                }
            }
            total = total + g.weight(prev, k);
            best = best.max(total);
        }
        w.push(best);
    }
    Ok(PathProfile::from_w(w))
}

/// First disagreement found by [`coupling_mismatch`].
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMismatch {
    pub t: usize,
    pub reason: String,
}

/// Runs the MGS from `δ_0` driven by the graph's own charges: at step `t`
/// the rank-`k` atom receives `w_{v(k), t}`, where `v(k)` is the vertex whose
/// `W` value sits at rank `k` (ties go to the smaller vertex). Returns true
/// iff `ν(t) = Σ_{j<=t} δ_{W_j}` for all `t` and every increment of `M`
/// equals the positive part of the MGS relative increment.
pub fn coupled_mgs_check(g: &ChargedGraph) -> bool {
    coupling_mismatch(g).is_none()
}

pub fn coupling_mismatch(g: &ChargedGraph) -> Option<CouplingMismatch> {
    let profile = longest_path_dp(g);
    let mut nu = PointMeasure::origin();
    // (value, vertex) in rank order
    let mut ranked: Vec<(Charge, usize)> = vec![(Charge::ZERO, 0)];
    let fail = |t: usize, reason: String| Some(CouplingMismatch { t, reason });

    for t in 1..=g.n {
        let row: Vec<Charge> = ranked.iter().map(|&(_, v)| g.weight(v, t)).collect();

        let increment = match nu.relative_increment(&row) {
            Ok(x) => x,
            Err(e) => return fail(t, e.to_string()),
        };
        let dm = profile.m[t].relative_to(profile.m[t - 1]);
        if dm.value() != increment.positive_part() {
            return fail(
                t,
                format!("M increment {dm} differs from relative increment {increment}"),
            );
        }

        // m(σν, w) evaluated on the translated measure agrees up to rounding.
        let shifted = nu.shift_front().and_then(|s| s.m_value(&row));
        match shifted {
            Ok(s) if close_after_translation(s, increment, &nu) => {}
            Ok(s) => return fail(t, format!("m(σν, w) = {s} but m(ν, w) - ν_1 = {increment}")),
            Err(e) => return fail(t, e.to_string()),
        }

        let m = match nu.step_in_place(&row) {
            Ok(m) => m,
            Err(e) => return fail(t, e.to_string()),
        };
        let pos = ranked.partition_point(|&(x, _)| x >= m);
        ranked.insert(pos, (m, t));

        let mut expected = profile.w[..=t].to_vec();
        expected.sort_by(|a, b| b.cmp(a));
        if nu.to_vec() != expected {
            return fail(t, format!("atoms differ from W_0..W_{t}"));
        }
    }
    None
}

/// Rounding allowance between `m(σν, w)` and `m(ν, w) - ν_1`: both routes
/// round twice on operands bounded by `4 · max|atom|`, so they agree within
/// 4 ulp at that magnitude.
fn close_after_translation(a: Charge, b: Charge, nu: &PointMeasure) -> bool {
    if a.is_neg_inf() || b.is_neg_inf() {
        return a == b;
    }
    let scale = nu
        .atoms()
        .filter(|x| !x.is_neg_inf())
        .map(|x| x.value().abs())
        .fold(1.0, f64::max);
    (a.value() - b.value()).abs() <= 4.0 * f64::EPSILON * 4.0 * scale
}

/// Empirical law of `W_n` for a law with `L <= 0`, compared with the weak
/// limit `max(w, 2L)`.
#[derive(Clone, Debug)]
pub struct NegativeSupportReport {
    pub n: usize,
    pub replicas: usize,
    pub two_l: f64,
    pub ks_distance: f64,
    /// `(level, sample quantile)`.
    pub quantiles: Vec<(f64, f64)>,
    /// `(x, P(max(w, 2L) <= x))` at the sample quantiles.
    pub reference_cdf: Vec<(f64, f64)>,
}

const REPORT_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Diagnostic only: simulates `replicas` graphs of size `n` and reports the
/// Kolmogorov–Smirnov distance of `W_n` to `max(w, 2L)`.
pub fn negative_support_limit_check(
    dist: &ChargeDistribution,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<NegativeSupportReport> {
    let l = dist.ess_sup();
    if l > Charge::ZERO {
        return Err(Error::InvalidArgument(format!(
            "essential supremum {l} is positive; the limit law applies only to L <= 0"
        )));
    }
    if replicas == 0 {
        return Err(Error::InvalidArgument("need at least one replica".into()));
    }
    let two_l = 2.0 * l.value();
    let key = StreamKey::new(seed);
    let mut samples = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = key.with_replica(r as u64).rng(0);
        let g = generate_graph(n, dist, &mut rng)?;
        samples.push(longest_path_dp(&g).w[n].value());
    }

    let cdf = |x: f64| if x < two_l { 0.0 } else { dist.cdf(x) };
    let cdf_left = |x: f64| {
        if x <= two_l {
            0.0
        } else if x > l.value() {
            1.0
        } else {
            1.0 - dist.tail(x).unwrap_or(0.0)
        }
    };
    let ks = ks_distance(&samples, cdf, cdf_left);

    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles: Vec<(f64, f64)> = REPORT_LEVELS
        .iter()
        .map(|&q| {
            let idx = ((q * replicas as f64).ceil() as usize).clamp(1, replicas) - 1;
            (q, sorted[idx])
        })
        .collect();
    let reference_cdf = quantiles.iter().map(|&(_, x)| (x, cdf(x))).collect();
    Ok(NegativeSupportReport {
        n,
        replicas,
        two_l,
        ks_distance: ks,
        quantiles,
        reference_cdf,
    })
}
