//! Max Growth System: finite point measures and their deterministic dynamics.
//!
//! A [`PointMeasure`] is a finite multiset of atoms on `R ∪ {-inf}`. Ranks are
//! 1-based and count from the rightmost atom: `ν_1 >= ν_2 >= ... >= ν_m`.
//! One step of the system inserts an atom at `m(ν, w) = max_k (ν_k + w_k)`.

use crate::charge::Charge;
use crate::error::{Error, Result};

/// Finite point measure. Atoms are kept in a sorted array (ascending in
/// memory, so the front `ν_1` is the last element and insertions near the
/// front move few elements).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PointMeasure {
    asc: Vec<Charge>,
}

impl PointMeasure {
    /// The zero measure.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(x: Charge) -> Self {
        Self { asc: vec![x] }
    }

    /// `δ_0`.
    pub fn origin() -> Self {
        Self::dirac(Charge::ZERO)
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Charge>) -> Self {
        let mut asc: Vec<Charge> = atoms.into_iter().collect();
        asc.sort();
        Self { asc }
    }

    /// `‖ν‖`, counted with multiplicity.
    pub fn mass(&self) -> usize {
        self.asc.len()
    }

    pub fn is_zero(&self) -> bool {
        self.asc.is_empty()
    }

    /// `ν_1`, the rightmost atom.
    pub fn front(&self) -> Option<Charge> {
        self.asc.last().copied()
    }

    /// `ν_k` for a 1-based rank `k`.
    pub fn atom(&self, k: usize) -> Option<Charge> {
        if k == 0 || k > self.asc.len() {
            return None;
        }
        Some(self.asc[self.asc.len() - k])
    }

    /// Atoms in rank order (nonincreasing).
    pub fn atoms(&self) -> impl ExactSizeIterator<Item = Charge> + '_ {
        self.asc.iter().rev().copied()
    }

    pub fn to_vec(&self) -> Vec<Charge> {
        self.atoms().collect()
    }

    /// Whether `ν ∈ N_0`, i.e. `ν_1 = 0`.
    pub fn is_front_at_origin(&self) -> bool {
        self.front() == Some(Charge::ZERO)
    }

    pub fn insert(&mut self, x: Charge) {
        let at = self.asc.partition_point(|a| *a <= x);
        self.asc.insert(at, x);
    }

    /// `m(ν, w) = max_{1<=k<=‖ν‖} (ν_k + w_k)`; `row` must cover every rank.
    pub fn m_value(&self, row: &[Charge]) -> Result<Charge> {
        if self.is_zero() {
            return Err(Error::ZeroMeasure);
        }
        if row.len() < self.mass() {
            return Err(Error::ShortRow {
                have: row.len(),
                need: self.mass(),
            });
        }
        Ok(self
            .atoms()
            .zip(row)
            .map(|(a, &w)| a + w)
            .fold(Charge::NEG_INF, Charge::max))
    }

    /// `m(ν, w) - ν_1`, which equals `m(σν, w)`. Evaluates on the untranslated
    /// atoms and subtracts the front once.
    pub fn relative_increment(&self, row: &[Charge]) -> Result<Charge> {
        let m = self.m_value(row)?;
        let front = self.front().ok_or(Error::ZeroMeasure)?;
        if front.is_neg_inf() {
            return Err(Error::InfiniteFront);
        }
        Ok(m.relative_to(front))
    }

    /// `Ψ_w ν = ν + δ_{m(ν, w)}`, returned as a new measure.
    pub fn step(&self, row: &[Charge]) -> Result<PointMeasure> {
        let mut next = self.clone();
        next.step_in_place(row)?;
        Ok(next)
    }

    /// In-place `Ψ_w`; returns the inserted atom.
    pub fn step_in_place(&mut self, row: &[Charge]) -> Result<Charge> {
        let m = self.m_value(row)?;
        self.insert(m);
        Ok(m)
    }

    /// `σν`: every atom translated by `-ν_1`.
    pub fn shift_front(&self) -> Result<PointMeasure> {
        let front = self.front().ok_or(Error::ZeroMeasure)?;
        if front.is_neg_inf() {
            return Err(Error::InfiniteFront);
        }
        Ok(Self {
            asc: self.asc.iter().map(|a| a.relative_to(front)).collect(),
        })
    }
}

/// Applies `Ψ` once per row, in order.
pub fn run<R: AsRef<[Charge]>>(start: &PointMeasure, rows: &[R]) -> Result<PointMeasure> {
    let mut nu = start.clone();
    for row in rows {
        nu.step_in_place(row.as_ref())?;
    }
    Ok(nu)
}

fn row_max(row: &[Charge], width: usize) -> Result<Charge> {
    if row.len() < width {
        return Err(Error::ShortRow {
            have: row.len(),
            need: width,
        });
    }
    Ok(row[..width]
        .iter()
        .copied()
        .fold(Charge::NEG_INF, Charge::max))
}

/// Triangular condition: the row at offset `t` (stored at `rows[t-1]`) has a
/// charge `>= 1 - ℓ` among its first `t` entries, for every `t`.
pub fn triangular_holds<R: AsRef<[Charge]>>(rows: &[R], ell: f64) -> Result<bool> {
    let threshold = Charge::from(1.0 - ell);
    for (i, row) in rows.iter().enumerate() {
        if row_max(row.as_ref(), i + 1)? < threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Regeneration condition at time `T`: `w_1(T) >= ℓ` and the triangular
/// condition over the first `n` rows after `T`.
pub fn regeneration_holds<R: AsRef<[Charge]>>(
    row0: &[Charge],
    rows: &[R],
    ell: f64,
    n: usize,
) -> Result<bool> {
    let first = *row0.first().ok_or(Error::ShortRow { have: 0, need: 1 })?;
    if n > rows.len() {
        return Err(Error::ShortRow {
            have: rows.len(),
            need: n,
        });
    }
    if first < Charge::from(ell) {
        return Ok(false);
    }
    triangular_holds(&rows[..n], ell)
}
