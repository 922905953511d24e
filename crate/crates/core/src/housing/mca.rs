use std::collections::BTreeMap;

use super::{HousingError, HousingRecord, Profile, Variable};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::scalar::Scalar;

/// Leading dimension of an indicator-matrix correspondence analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct McaModel<T> {
    active: Vec<Variable>,
    dropped: Vec<Variable>,
    columns: Vec<(Variable, u8)>,
    /// Standard coordinates of the columns on the leading dimension.
    coordinates: Vec<T>,
    masses: Vec<T>,
    singular_values: Vec<T>,
    flipped: bool,
}

impl<T: Scalar> McaModel<T> {
    pub fn active_variables(&self) -> &[Variable] {
        &self.active
    }

    /// Variables left out because a single category was observed.
    pub fn dropped_variables(&self) -> &[Variable] {
        &self.dropped
    }

    pub fn columns(&self) -> &[(Variable, u8)] {
        &self.columns
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// Non-trivial singular values in decreasing order.
    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    /// True when the raw leading axis was reversed to orient it.
    pub fn flipped(&self) -> bool {
        self.flipped
    }

    pub fn coordinate(&self, v: Variable, code: u8) -> Option<T> {
        self.columns.iter().position(|c| *c == (v, code)).map(|j| self.coordinates[j])
    }

    /// Principal coordinate of a profile on the leading dimension: the mean of
    /// its active categories' standard coordinates. `None` when a category
    /// was not seen at fit time.
    pub fn score(&self, p: &Profile) -> Option<T> {
        let mut s = T::zero();
        for &v in &self.active {
            s += self.coordinate(v, p.code(v))?;
        }
        Some(s / T::of_usize(self.active.len()))
    }

    /// Like [`score`](Self::score) but skipping unseen categories.
    fn partial_score(&self, p: &Profile) -> T {
        self.active.iter().filter_map(|&v| self.coordinate(v, p.code(v))).sum::<T>() / T::of_usize(self.active.len())
    }
}

/// Fits the leading dimension over household-weighted profiles.
///
/// The axis is oriented so the profile with soil floor, reed or straw roof and
/// no ceiling scores positive.
pub fn fit_mca<T: Scalar>(records: &[HousingRecord]) -> Result<McaModel<T>, HousingError> {
    let mut profiles: BTreeMap<Profile, T> = BTreeMap::new();
    for r in records {
        *profiles.entry(r.profile).or_insert(T::zero()) += T::of(r.households as f64);
    }
    profiles.retain(|_, w| *w > T::zero());

    let mut active = Vec::new();
    let mut dropped = Vec::new();
    for v in Variable::ALL {
        let mut seen: Vec<u8> = profiles.keys().map(|p| p.code(v)).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() >= 2 {
            active.push(v);
        } else {
            log::warn!("{}", HousingError::ConstantVariable(v));
            dropped.push(v);
        }
    }
    if active.is_empty() || profiles.len() < 2 {
        return Err(HousingError::RankDeficient);
    }

    let mut columns: Vec<(Variable, u8)> = Vec::new();
    for &v in &active {
        let mut codes: Vec<u8> = profiles.keys().map(|p| p.code(v)).collect();
        codes.sort_unstable();
        codes.dedup();
        columns.extend(codes.into_iter().map(|c| (v, c)));
    }
    let q = T::of_usize(active.len());
    let total: T = profiles.values().copied().sum();
    let rows: Vec<(Vec<usize>, T)> = profiles
        .iter()
        .map(|(p, &w)| {
            let cols = active
                .iter()
                .map(|&v| columns.iter().position(|c| *c == (v, p.code(v))).unwrap())
                .collect();
            (cols, w / total)
        })
        .collect();
    let nc = columns.len();
    let mut masses = vec![T::zero(); nc];
    for (cols, r) in &rows {
        for &j in cols {
            masses[j] += *r / q;
        }
    }

    // Residual matrix, then the cross-product whose leading eigenvector is the
    // right singular vector.
    let residual: Vec<Vec<T>> = rows
        .iter()
        .map(|(cols, r)| {
            (0..nc)
                .map(|j| {
                    let p = if cols.contains(&j) { *r / q } else { T::zero() };
                    (p - *r * masses[j]) / (*r * masses[j]).sqrt()
                })
                .collect()
        })
        .collect();
    let cross = SquareMatrix::from_fn(nc, |a, b| residual.iter().map(|row| row[a] * row[b]).sum::<T>());
    let eig = symmetric_eigen(&cross);
    let scale = eig.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::of(1e-12).max(T::epsilon() * T::of(64.0));
    let singular_values: Vec<T> = eig.values.iter().filter(|v| **v > tol).map(|v| v.sqrt()).collect();
    if singular_values.is_empty() || scale <= tol {
        return Err(HousingError::RankDeficient);
    }
    let axis = &eig.vectors[0];
    let coordinates: Vec<T> = axis.iter().zip(&masses).map(|(v, m)| *v / m.sqrt()).collect();

    let mut model = McaModel { active, dropped, columns, coordinates, masses, singular_values, flipped: false };
    if model.partial_score(&Profile::FAVOURABLE) < T::zero() {
        for c in model.coordinates.iter_mut() {
            *c = -*c;
        }
        model.flipped = true;
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockHousing<T> {
    pub score: T,
    pub households: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockScores<T> {
    pub blocks: BTreeMap<String, BlockHousing<T>>,
    /// Records skipped for carrying a category unseen at fit time.
    pub skipped_records: usize,
    pub skipped_households: u64,
}

/// Household-weighted mean profile score per block.
pub fn score_blocks<T: Scalar>(model: &McaModel<T>, records: &[HousingRecord]) -> BlockScores<T> {
    let mut acc: BTreeMap<&str, (T, T)> = BTreeMap::new();
    let mut out = BlockScores { blocks: BTreeMap::new(), skipped_records: 0, skipped_households: 0 };
    for r in records {
        match model.score(&r.profile) {
            Some(s) => {
                let h = T::of(r.households as f64);
                let e = acc.entry(r.block.as_str()).or_insert((T::zero(), T::zero()));
                e.0 += s * h;
                e.1 += h;
            }
            None => {
                out.skipped_records += 1;
                out.skipped_households += r.households as u64;
            }
        }
    }
    for (b, (sw, w)) in acc {
        if w > T::zero() {
            out.blocks.insert(b.to_string(), BlockHousing { score: sw / w, households: w });
        }
    }
    out
}
