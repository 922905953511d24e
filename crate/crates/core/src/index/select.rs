use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::IndexError;
use crate::scalar::Scalar;
use crate::stats::quantile;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityBlock<T> {
    pub block: String,
    pub locality: String,
    pub province: String,
    pub population: T,
    pub area_km2: T,
    pub ai: T,
    pub endemic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams<T> {
    pub min_block_pop: T,
    /// Inhabitants per km².
    pub min_density: T,
    /// Probability level of the national affinity quantile that marks a
    /// block as extreme.
    pub extreme_percentile: T,
    pub top_n: usize,
}

impl<T: Scalar> Default for SelectionParams<T> {
    fn default() -> Self {
        SelectionParams { min_block_pop: T::of(350.0), min_density: T::of(350.0), extreme_percentile: T::of(0.95), top_n: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LocalityType {
    HighMean,
    ExtremeBlocks,
    Both,
}

impl LocalityType {
    pub fn as_str(self) -> &'static str {
        match self {
            LocalityType::HighMean => "high_mean",
            LocalityType::ExtremeBlocks => "extreme_blocks",
            LocalityType::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport<T> {
    pub locality: String,
    pub province: String,
    /// Population-weighted mean affinity of the surviving blocks.
    pub metric1: T,
    /// Mean affinity of the surviving extreme blocks, if any.
    pub metric2: Option<T>,
    pub surviving_blocks: usize,
    pub kind: Option<LocalityType>,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    /// One entry per locality with surviving blocks, by province then id.
    pub reports: Vec<LocalityReport<T>>,
    /// Affinity above which a block counts as extreme.
    pub extreme_threshold: T,
    /// Provinces with no surviving block at all.
    pub empty_provinces: Vec<String>,
}

fn survives<T: Scalar>(b: &LocalityBlock<T>, p: &SelectionParams<T>) -> bool {
    !b.endemic && b.population >= p.min_block_pop && b.area_km2 > T::zero() && b.population / b.area_km2 >= p.min_density
}

/// Ranks localities outside the endemic region within each province by
/// weighted mean affinity and by the mean of their extreme blocks, keeping
/// the top `top_n` of each list.
pub fn select_localities<T: Scalar>(blocks: &[LocalityBlock<T>], params: &SelectionParams<T>) -> Result<Selection<T>, IndexError> {
    if !(params.extreme_percentile >= T::zero() && params.extreme_percentile <= T::one()) {
        return Err(IndexError::InvalidParameter(format!("extreme percentile {}", params.extreme_percentile)));
    }
    let national: Vec<T> = blocks.iter().filter(|b| !b.endemic && b.ai.is_finite()).map(|b| b.ai).collect();
    if national.is_empty() {
        return Err(IndexError::DegenerateInputs("no blocks outside the endemic region".into()));
    }
    let threshold = quantile(&national, params.extreme_percentile);

    struct Acc<T> {
        province: String,
        weighted: T,
        population: T,
        extreme_sum: T,
        extreme_count: usize,
        blocks: usize,
    }
    let mut provinces: BTreeMap<&str, ()> = BTreeMap::new();
    let mut acc: BTreeMap<(&str, &str), Acc<T>> = BTreeMap::new();
    for b in blocks.iter().filter(|b| !b.endemic) {
        provinces.insert(&b.province, ());
        if !survives(b, params) {
            continue;
        }
        let a = acc.entry((&b.province, &b.locality)).or_insert_with(|| Acc {
            province: b.province.clone(),
            weighted: T::zero(),
            population: T::zero(),
            extreme_sum: T::zero(),
            extreme_count: 0,
            blocks: 0,
        });
        a.weighted += b.population * b.ai;
        a.population += b.population;
        a.blocks += 1;
        if b.ai > threshold {
            a.extreme_sum += b.ai;
            a.extreme_count += 1;
        }
    }

    let mut reports: Vec<LocalityReport<T>> = acc
        .into_iter()
        .map(|((_, loc), a)| LocalityReport {
            locality: loc.to_string(),
            province: a.province,
            metric1: a.weighted / a.population,
            metric2: (a.extreme_count > 0).then(|| a.extreme_sum / T::of_usize(a.extreme_count)),
            surviving_blocks: a.blocks,
            kind: None,
            selected: false,
        })
        .collect();

    let desc = |x: T, y: T| y.partial_cmp(&x).unwrap_or(Ordering::Equal);
    let mut start = 0;
    while start < reports.len() {
        let end = start + reports[start..].iter().take_while(|r| r.province == reports[start].province).count();
        let group = &mut reports[start..end];
        let mut by_mean: Vec<usize> = (0..group.len()).collect();
        by_mean.sort_by(|&i, &j| desc(group[i].metric1, group[j].metric1).then(group[i].locality.cmp(&group[j].locality)));
        let mut by_extreme: Vec<usize> = (0..group.len()).filter(|&i| group[i].metric2.is_some()).collect();
        by_extreme.sort_by(|&i, &j| {
            desc(group[i].metric2.unwrap(), group[j].metric2.unwrap()).then(group[i].locality.cmp(&group[j].locality))
        });
        for &i in by_mean.iter().take(params.top_n) {
            group[i].kind = Some(LocalityType::HighMean);
        }
        for &i in by_extreme.iter().take(params.top_n) {
            group[i].kind = Some(match group[i].kind {
                Some(LocalityType::HighMean) => LocalityType::Both,
                _ => LocalityType::ExtremeBlocks,
            });
        }
        for r in group.iter_mut() {
            r.selected = r.kind.is_some();
        }
        start = end;
    }

    let with_reports: BTreeMap<&str, ()> = reports.iter().map(|r| (r.province.as_str(), ())).collect();
    let empty_provinces = provinces.keys().filter(|p| !with_reports.contains_key(*p)).map(|p| p.to_string()).collect();
    Ok(Selection { reports, extreme_threshold: threshold, empty_provinces })
}
