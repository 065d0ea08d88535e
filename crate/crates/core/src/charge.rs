//! Edge charges and the charge law `F`.
//!
//! A [`Charge`] is an extended real in `[-inf, +inf)` where `-inf` marks a
//! missing edge and absorbs addition. A [`ChargeDistribution`] bundles a
//! sampler with the exact tail `F([a, 1])` and the essential supremum.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::unit_uniform;

/// Tolerance on the total mass of a point mixture.
pub const MIXTURE_MASS_TOLERANCE: f64 = 1e-12;

/// A single charge: a finite real or the absorbing `-inf` sentinel. Never NaN
/// and never `+inf`, so the ordering is total.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Charge(f64);

impl Charge {
    pub const NEG_INF: Charge = Charge(f64::NEG_INFINITY);
    pub const ZERO: Charge = Charge(0.0);
    pub const ONE: Charge = Charge(1.0);

    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() || x == f64::INFINITY {
            return Err(Error::InvalidArgument(format!("{x} is not a valid charge")));
        }
        Ok(Charge(x))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `max(x, 0)`, with `-inf` mapped to 0.
    #[inline]
    pub fn positive_part(self) -> f64 {
        if self.0 > 0.0 {
            self.0
        } else {
            0.0
        }
    }

    /// Translation `x - origin`; `origin` must be finite.
    #[inline]
    pub fn relative_to(self, origin: Charge) -> Charge {
        debug_assert!(!origin.is_neg_inf());
        Charge(self.0 - origin.0)
    }

    /// Parses a finite number or the literal `-inf`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("-inf") {
            return Ok(Charge::NEG_INF);
        }
        let x: f64 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse charge {s:?}")))?;
        Charge::new(x)
    }
}

impl From<f64> for Charge {
    /// Panics on NaN or `+inf`; use [`Charge::new`] for untrusted input.
    fn from(x: f64) -> Self {
        Charge::new(x).expect("charge must not be NaN or +inf")
    }
}

impl Eq for Charge {}

impl PartialOrd for Charge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Charge {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("charges are never NaN")
    }
}

impl Add for Charge {
    type Output = Charge;

    #[inline]
    fn add(self, rhs: Charge) -> Charge {
        // -inf + x stays -inf; +inf never occurs, so no NaN can appear.
        Charge(self.0 + rhs.0)
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_neg_inf() {
            f.write_str("-inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    /// `p δ_1 + (1-p) δ_{-inf}`.
    TwoPointInf { p: f64 },
    /// `p δ_1 + (1-p) δ_x`.
    TwoPoint { p: f64, x: Charge },
    /// Density `e^{x-1}` on `(-inf, 1]`.
    ShiftedExponential,
    /// Atoms sorted by decreasing location, zero-mass atoms dropped.
    PointMixture { atoms: Vec<(Charge, f64)> },
    /// Piecewise-linear quantile function through `(u_i, x_i)` knots.
    InverseCdf { grid: Vec<(f64, f64)> },
}

/// The law `F` of a single edge charge. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeDistribution {
    kind: Kind,
    ess_sup: Charge,
}

/// Outcome of [`ChargeDistribution::normalize`].
#[derive(Clone, Debug, PartialEq)]
pub enum Normalized {
    /// The law of `w / L`, with essential supremum exactly 1.
    Scaled(ChargeDistribution),
    /// `L <= 0`: the constant is 0 and nothing needs simulating.
    Degenerate { ess_sup: Charge },
}

fn check_probability(name: &str, p: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&p)
    } else {
        p > 0.0 && p <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} = {p} is outside {}",
            if allow_zero { "[0, 1]" } else { "(0, 1]" }
        )))
    }
}

impl ChargeDistribution {
    pub fn two_point_inf(p: f64) -> Result<Self> {
        check_probability("p", p, false)?;
        Ok(Self {
            kind: Kind::TwoPointInf { p },
            ess_sup: Charge::ONE,
        })
    }

    pub fn two_point(p: f64, x: Charge) -> Result<Self> {
        check_probability("p", p, false)?;
        if x >= Charge::ONE {
            return Err(Error::InvalidDistribution(format!(
                "two_point requires x < 1, got {x}"
            )));
        }
        Ok(Self {
            kind: Kind::TwoPoint { p, x },
            ess_sup: Charge::ONE,
        })
    }

    pub fn shifted_exponential() -> Self {
        Self {
            kind: Kind::ShiftedExponential,
            ess_sup: Charge::ONE,
        }
    }

    pub fn point_mixture(atoms: impl IntoIterator<Item = (Charge, f64)>) -> Result<Self> {
        let mut kept = Vec::new();
        let mut total = 0.0;
        for (loc, prob) in atoms {
            check_probability("atom probability", prob, true)?;
            total += prob;
            if prob > 0.0 {
                kept.push((loc, prob));
            }
        }
        if (total - 1.0).abs() > MIXTURE_MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "point mixture probabilities sum to {total}, expected 1"
            )));
        }
        if kept.is_empty() {
            return Err(Error::InvalidDistribution(
                "point mixture has no atoms".into(),
            ));
        }
        // Stable sort keeps the caller's order among atoms at one location.
        kept.sort_by_key(|a| std::cmp::Reverse(a.0));
        let ess_sup = kept[0].0;
        Ok(Self {
            kind: Kind::PointMixture { atoms: kept },
            ess_sup,
        })
    }

    /// Knots `(u_i, x_i)` with `u` strictly increasing from 0 to 1 and `x`
    /// finite and nondecreasing.
    pub fn inverse_cdf(grid: Vec<(f64, f64)>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidDistribution(
                "inverse_cdf needs at least two knots".into(),
            ));
        }
        if grid[0].0 != 0.0 || grid[grid.len() - 1].0 != 1.0 {
            return Err(Error::InvalidDistribution(
                "inverse_cdf knots must start at u = 0 and end at u = 1".into(),
            ));
        }
        for w in grid.windows(2) {
            let ((u0, x0), (u1, x1)) = (w[0], w[1]);
            if u1.partial_cmp(&u0) != Some(Ordering::Greater) {
                return Err(Error::InvalidDistribution(
                    "inverse_cdf u values must be strictly increasing".into(),
                ));
            }
            if !matches!(
                x1.partial_cmp(&x0),
                Some(Ordering::Greater | Ordering::Equal)
            ) {
                return Err(Error::InvalidDistribution(
                    "inverse_cdf x values must be nondecreasing".into(),
                ));
            }
        }
        if grid.iter().any(|&(_, x)| !x.is_finite()) {
            return Err(Error::InvalidDistribution(
                "inverse_cdf x values must be finite".into(),
            ));
        }
        let ess_sup = Charge(grid[grid.len() - 1].1);
        Ok(Self {
            kind: Kind::InverseCdf { grid },
            ess_sup,
        })
    }

    /// Essential supremum `L = inf{z : P(w > z) = 0}`.
    pub fn ess_sup(&self) -> Charge {
        self.ess_sup
    }

    pub fn is_normalized(&self) -> bool {
        self.ess_sup == Charge::ONE
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::TwoPointInf { .. } => "two_point_inf",
            Kind::TwoPoint { .. } => "two_point",
            Kind::ShiftedExponential => "shifted_exponential",
            Kind::PointMixture { .. } => "point_mixture",
            Kind::InverseCdf { .. } => "inverse_cdf",
        }
    }

    /// True for laws built only from atoms.
    pub fn is_discrete(&self) -> bool {
        matches!(
            self.kind,
            Kind::TwoPointInf { .. } | Kind::TwoPoint { .. } | Kind::PointMixture { .. }
        )
    }

    /// One draw from `F`, consuming exactly one `u64` from `rng`.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Charge {
        let u = unit_uniform(rng);
        self.quantile(u)
    }

    /// Left-continuous quantile at `u` in [0, 1); the sampler is `quantile(U)`.
    fn quantile(&self, u: f64) -> Charge {
        match &self.kind {
            Kind::TwoPointInf { p } => {
                if u < *p {
                    Charge::ONE
                } else {
                    Charge::NEG_INF
                }
            }
            Kind::TwoPoint { p, x } => {
                if u < *p {
                    Charge::ONE
                } else {
                    *x
                }
            }
            // 1 + ln(1 - u), with 1 - u in (0, 1].
            Kind::ShiftedExponential => Charge(1.0 + (-u).ln_1p()),
            Kind::PointMixture { atoms } => {
                let mut acc = 0.0;
                for &(loc, prob) in atoms {
                    acc += prob;
                    if u < acc {
                        return loc;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            Kind::InverseCdf { grid } => {
                let i = grid
                    .partition_point(|&(ui, _)| ui <= u)
                    .clamp(1, grid.len() - 1);
                let (u0, x0) = grid[i - 1];
                let (u1, x1) = grid[i];
                Charge(x0 + (u - u0) / (u1 - u0) * (x1 - x0))
            }
        }
    }

    /// Exact `F([a, 1]) = P(w >= a)`. Rejects `a` above the essential supremum.
    pub fn tail(&self, a: f64) -> Result<f64> {
        if a.is_nan() || a > self.ess_sup.0 {
            return Err(Error::TailDomain {
                a,
                ess_sup: self.ess_sup.0,
            });
        }
        let a = Charge(a);
        Ok(match &self.kind {
            Kind::TwoPointInf { p } => {
                if a.is_neg_inf() {
                    1.0
                } else {
                    *p
                }
            }
            Kind::TwoPoint { p, x } => {
                if *x >= a {
                    1.0
                } else {
                    *p
                }
            }
            Kind::ShiftedExponential => {
                if a.is_neg_inf() {
                    1.0
                } else {
                    -(a.0 - 1.0).exp_m1()
                }
            }
            Kind::PointMixture { atoms } => atoms
                .iter()
                .take_while(|(loc, _)| *loc >= a)
                .map(|(_, prob)| prob)
                .sum(),
            Kind::InverseCdf { grid } => 1.0 - first_crossing(grid, a.0),
        })
    }

    /// `P(w <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.strict_tail(x)
    }

    /// `P(w > a)`.
    fn strict_tail(&self, a: f64) -> f64 {
        if a >= self.ess_sup.0 {
            return 0.0;
        }
        let a = Charge(a);
        match &self.kind {
            Kind::TwoPointInf { p } => *p,
            Kind::TwoPoint { p, x } => {
                if *x > a {
                    1.0
                } else {
                    *p
                }
            }
            Kind::ShiftedExponential => {
                if a.is_neg_inf() {
                    1.0
                } else {
                    -(a.0 - 1.0).exp_m1()
                }
            }
            Kind::PointMixture { atoms } => atoms
                .iter()
                .take_while(|(loc, _)| *loc > a)
                .map(|(_, prob)| prob)
                .sum(),
            Kind::InverseCdf { grid } => 1.0 - last_crossing(grid, a.0),
        }
    }

    /// Scales to essential supremum 1, or reports the degenerate case `L <= 0`.
    pub fn normalize(&self) -> Normalized {
        let l = self.ess_sup;
        if l <= Charge::ZERO {
            return Normalized::Degenerate { ess_sup: l };
        }
        if l == Charge::ONE {
            return Normalized::Scaled(self.clone());
        }
        let s = l.0;
        let kind = match &self.kind {
            Kind::PointMixture { atoms } => Kind::PointMixture {
                atoms: atoms
                    .iter()
                    .map(|&(loc, prob)| (scale(loc, s), prob))
                    .collect(),
            },
            Kind::InverseCdf { grid } => Kind::InverseCdf {
                grid: grid.iter().map(|&(u, x)| (u, x / s)).collect(),
            },
            // The remaining kinds always have L = 1.
            other => other.clone(),
        };
        Normalized::Scaled(Self {
            kind,
            ess_sup: Charge::ONE,
        })
    }

    /// Normalized copy, or `NotNormalized` when `L <= 0`.
    pub fn normalized(&self) -> Result<Self> {
        match self.normalize() {
            Normalized::Scaled(d) => Ok(d),
            Normalized::Degenerate { ess_sup } => Err(Error::NotNormalized(ess_sup.0)),
        }
    }

    /// JSON-facing description of this law.
    pub fn spec(&self) -> DistSpec {
        match &self.kind {
            Kind::TwoPointInf { p } => DistSpec::TwoPointInf { p: *p },
            Kind::TwoPoint { p, x } => DistSpec::TwoPoint {
                p: *p,
                x: Location(*x),
            },
            Kind::ShiftedExponential => DistSpec::ShiftedExponential,
            Kind::PointMixture { atoms } => DistSpec::PointMixture {
                atoms: atoms.iter().map(|&(l, p)| (Location(l), p)).collect(),
            },
            Kind::InverseCdf { grid } => DistSpec::InverseCdf { grid: grid.clone() },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DistSpec = serde_json::from_str(text)?;
        Self::try_from(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec()).expect("distribution specs always serialize")
    }
}

fn scale(loc: Charge, s: f64) -> Charge {
    if loc.is_neg_inf() {
        loc
    } else {
        Charge(loc.0 / s)
    }
}

/// `inf{u : Q(u) >= a}` for the piecewise-linear quantile `Q`.
fn first_crossing(grid: &[(f64, f64)], a: f64) -> f64 {
    if grid[0].1 >= a {
        return 0.0;
    }
    let i = grid.partition_point(|&(_, x)| x < a);
    // grid[i-1].1 < a <= grid[i].1; i < len because a <= ess_sup.
    let (u0, x0) = grid[i - 1];
    let (u1, x1) = grid[i];
    u0 + (a - x0) / (x1 - x0) * (u1 - u0)
}

/// `sup{u : Q(u) <= a}` for the piecewise-linear quantile `Q`.
fn last_crossing(grid: &[(f64, f64)], a: f64) -> f64 {
    let i = grid.partition_point(|&(_, x)| x <= a);
    if i == 0 {
        return 0.0;
    }
    if i == grid.len() {
        return 1.0;
    }
    let (u0, x0) = grid[i - 1];
    let (u1, x1) = grid[i];
    u0 + (a - x0) / (x1 - x0) * (u1 - u0)
}

/// Threshold `ℓ` of the regeneration event together with `p = F([1-ℓ, 1])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllParameter {
    ell: f64,
    p: f64,
}

impl EllParameter {
    pub fn new(dist: &ChargeDistribution, ell: f64) -> Result<Self> {
        if !dist.is_normalized() {
            return Err(Error::NotNormalized(dist.ess_sup().value()));
        }
        if !(0.0..1.0).contains(&ell) {
            return Err(Error::InvalidEll {
                ell,
                reason: "must lie in [0, 1)",
            });
        }
        let p = dist.tail(1.0 - ell)?;
        if p <= 0.0 {
            return Err(Error::InvalidEll {
                ell,
                reason: "F([1-ell, 1]) is zero",
            });
        }
        Ok(Self { ell, p })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

const ELL_STEP: f64 = 0.05;

/// Heuristic `ℓ`: 0.5 for atomic laws, 0.7 otherwise, raised in steps of
/// 0.05 until `F([1-ℓ, 1]) > 0`.
pub fn default_ell(dist: &ChargeDistribution) -> Result<EllParameter> {
    if !dist.is_normalized() {
        return Err(Error::NotNormalized(dist.ess_sup().value()));
    }
    let base = if dist.is_discrete() { 0.5 } else { 0.7 };
    let mut k = 0u32;
    loop {
        let ell = base + f64::from(k) * ELL_STEP;
        if ell >= 1.0 {
            return Err(Error::NoValidEll);
        }
        if dist.tail(1.0 - ell)? > 0.0 {
            return EllParameter::new(dist, ell);
        }
        k += 1;
    }
}

/// Atom location in JSON: a number or the string `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location(pub Charge);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LocationRepr {
    Number(f64),
    Text(String),
}

impl Serialize for Location {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_neg_inf() {
            LocationRepr::Text("-inf".into()).serialize(s)
        } else {
            LocationRepr::Number(self.0.value()).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for Location {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match LocationRepr::deserialize(d)? {
            LocationRepr::Number(x) => Charge::new(x)
                .map(Location)
                .map_err(serde::de::Error::custom),
            LocationRepr::Text(s) if s == "-inf" => Ok(Location(Charge::NEG_INF)),
            LocationRepr::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"-inf\", got {s:?}"
            ))),
        }
    }
}

/// JSON document describing a charge law, e.g. `{"kind": "two_point_inf", "p": 0.3}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    TwoPointInf { p: f64 },
    TwoPoint { p: f64, x: Location },
    ShiftedExponential,
    PointMixture { atoms: Vec<(Location, f64)> },
    InverseCdf { grid: Vec<(f64, f64)> },
}

impl TryFrom<DistSpec> for ChargeDistribution {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::TwoPointInf { p } => Self::two_point_inf(p),
            DistSpec::TwoPoint { p, x } => Self::two_point(p, x.0),
            DistSpec::ShiftedExponential => Ok(Self::shifted_exponential()),
            DistSpec::PointMixture { atoms } => {
                Self::point_mixture(atoms.into_iter().map(|(l, p)| (l.0, p)))
            }
            DistSpec::InverseCdf { grid } => Self::inverse_cdf(grid),
        }
    }
}
