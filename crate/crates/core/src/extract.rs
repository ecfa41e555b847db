//! Claim-specific data extraction over measure slices.
//!
//! Six strategies, one per claim type: top/bottom-k rankings per year,
//! sustained strictly-monotone runs, historical extremes, substantial
//! rank shifts, and the value-change / single-point samples derived from
//! the rank-shift endpoints. Every sample carries the evidence points it
//! was built from.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExtractConfig;
use crate::hash::content_id;
use crate::preprocess::{MeasureCombination, MeasureSlice};

/// One country's time series within a slice: strictly increasing years.
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    pub reference_area: String,
    pub points: Vec<(i32, f64)>,
}

impl CountrySeries {
    /// Splits a slice into per-country series. Slice rows are unique per
    /// (country, year), so years are strictly increasing after sorting.
    pub fn from_slice(slice: &MeasureSlice) -> Vec<CountrySeries> {
        let mut by_area: BTreeMap<&str, Vec<(i32, f64)>> = BTreeMap::new();
        for row in &slice.rows {
            by_area
                .entry(row.reference_area.as_str())
                .or_default()
                .push((row.year, row.value));
        }
        by_area
            .into_iter()
            .map(|(area, mut points)| {
                points.sort_by_key(|&(y, _)| y);
                CountrySeries {
                    reference_area: area.to_string(),
                    points,
                }
            })
            .collect()
    }
}

/// The six claim types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClaimType {
    TopK,
    ConstantChange,
    HistoricalExtreme,
    ChangeInRank,
    ChangeOverTime,
    HaveTrait,
}

impl ClaimType {
    pub const ALL: [ClaimType; 6] = [
        ClaimType::TopK,
        ClaimType::ConstantChange,
        ClaimType::HistoricalExtreme,
        ClaimType::ChangeInRank,
        ClaimType::ChangeOverTime,
        ClaimType::HaveTrait,
    ];
}

impl std::fmt::Display for ClaimType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ClaimType::TopK => "TopK",
            ClaimType::ConstantChange => "ConstantChange",
            ClaimType::HistoricalExtreme => "HistoricalExtreme",
            ClaimType::ChangeInRank => "ChangeInRank",
            ClaimType::ChangeOverTime => "ChangeOverTime",
            ClaimType::HaveTrait => "HaveTrait",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankDirection {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendDirection {
    Increase,
    Decrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremeDirection {
    Highest,
    Lowest,
}

/// Claim-type-specific payload. `rank` in a `TopK` payload counts from
/// the sample's own end of the ranking (1 = most extreme), so it always
/// lies in 1..=k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "claim_type", content = "payload")]
pub enum SamplePayload {
    TopK {
        country: String,
        year: i32,
        k: u32,
        direction: RankDirection,
        rank: u32,
        value: f64,
        n_countries: u32,
    },
    ConstantChange {
        country: String,
        direction: TrendDirection,
        n_years: u32,
        start: (i32, f64),
        end: (i32, f64),
    },
    HistoricalExtreme {
        country: String,
        year: i32,
        value: f64,
        direction: ExtremeDirection,
        n_years: u32,
    },
    ChangeInRank {
        country: String,
        year_a: i32,
        year_b: i32,
        rank_a: u32,
        rank_b: u32,
        n_countries_a: u32,
        n_countries_b: u32,
    },
    ChangeOverTime {
        country: String,
        year_a: i32,
        year_b: i32,
        value_a: f64,
        value_b: f64,
    },
    HaveTrait {
        country: String,
        year: i32,
        value: f64,
    },
}

impl SamplePayload {
    pub fn claim_type(&self) -> ClaimType {
        match self {
            SamplePayload::TopK { .. } => ClaimType::TopK,
            SamplePayload::ConstantChange { .. } => ClaimType::ConstantChange,
            SamplePayload::HistoricalExtreme { .. } => ClaimType::HistoricalExtreme,
            SamplePayload::ChangeInRank { .. } => ClaimType::ChangeInRank,
            SamplePayload::ChangeOverTime { .. } => ClaimType::ChangeOverTime,
            SamplePayload::HaveTrait { .. } => ClaimType::HaveTrait,
        }
    }

    pub fn country(&self) -> &str {
        match self {
            SamplePayload::TopK { country, .. }
            | SamplePayload::ConstantChange { country, .. }
            | SamplePayload::HistoricalExtreme { country, .. }
            | SamplePayload::ChangeInRank { country, .. }
            | SamplePayload::ChangeOverTime { country, .. }
            | SamplePayload::HaveTrait { country, .. } => country,
        }
    }
}

/// One evidence point behind a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub country: String,
    pub year: i32,
    pub value: f64,
}

/// A claim-ready data sample with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSample {
    pub sample_id: String,
    pub table_id: String,
    pub combination: MeasureCombination,
    #[serde(flatten)]
    pub payload: SamplePayload,
    pub evidence_rows: Vec<EvidenceRow>,
}

impl DataSample {
    pub fn new(
        table_id: &str,
        combination: &MeasureCombination,
        payload: SamplePayload,
        evidence_rows: Vec<EvidenceRow>,
    ) -> Self {
        let payload_json = serde_json::to_string(&payload).expect("payload serializes");
        let combo_json = serde_json::to_string(combination).expect("combination serializes");
        let sample_id = content_id([
            table_id.as_bytes(),
            combo_json.as_bytes(),
            payload_json.as_bytes(),
        ]);
        Self {
            sample_id,
            table_id: table_id.to_string(),
            combination: combination.clone(),
            payload,
            evidence_rows,
        }
    }

    pub fn claim_type(&self) -> ClaimType {
        self.payload.claim_type()
    }
}

/// All samples extracted from one slice, sorted by sample id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractionBatch {
    pub samples: Vec<DataSample>,
}

impl ExtractionBatch {
    pub fn count_by_type(&self) -> BTreeMap<ClaimType, usize> {
        let mut counts = BTreeMap::new();
        for sample in &self.samples {
            *counts.entry(sample.claim_type()).or_insert(0) += 1;
        }
        counts
    }
}

/// Descending ranking of one year's reporting countries: value desc,
/// ties by country code. Returns (country, value) in rank order.
pub fn year_ranking(slice: &MeasureSlice, year: i32) -> Vec<(&str, f64)> {
    let mut entries: Vec<(&str, f64)> = slice
        .rows
        .iter()
        .filter(|r| r.year == year)
        .map(|r| (r.reference_area.as_str(), r.value))
        .collect();
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite values")
            .then_with(|| a.0.cmp(b.0))
    });
    entries
}

/// Top/bottom-k per year. Years with fewer than the configured minimum
/// of reporting countries are skipped; k depends on the year's count.
pub fn extract_top_k(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    let mut samples = Vec::new();
    for year in slice.window.start_year..=slice.window.end_year {
        let ranking = year_ranking(slice, year);
        let n = ranking.len() as u32;
        if n < config.topk_min_countries {
            continue;
        }
        let k = if n > config.topk_large_cutoff {
            config.topk_large_k
        } else {
            config.topk_small_k
        };
        for rank in 1..=k {
            let (country, value) = ranking[(rank - 1) as usize];
            samples.push(topk_sample(slice, country, year, k, RankDirection::Top, rank, value, n));
        }
        // Bottom ranks count from the small end: ascending value, ties by
        // country code.
        let mut ascending: Vec<(&str, f64)> = ranking.clone();
        ascending.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("finite values")
                .then_with(|| a.0.cmp(b.0))
        });
        for rank in 1..=k {
            let (country, value) = ascending[(rank - 1) as usize];
            samples.push(topk_sample(
                slice,
                country,
                year,
                k,
                RankDirection::Bottom,
                rank,
                value,
                n,
            ));
        }
    }
    samples
}

#[allow(clippy::too_many_arguments)]
fn topk_sample(
    slice: &MeasureSlice,
    country: &str,
    year: i32,
    k: u32,
    direction: RankDirection,
    rank: u32,
    value: f64,
    n_countries: u32,
) -> DataSample {
    DataSample::new(
        &slice.table_id,
        &slice.combination,
        SamplePayload::TopK {
            country: country.to_string(),
            year,
            k,
            direction,
            rank,
            value,
            n_countries,
        },
        vec![EvidenceRow {
            country: country.to_string(),
            year,
            value,
        }],
    )
}

/// Maximal runs of consecutive years with strictly monotone values, at
/// least the configured length. Plateaus and year gaps break runs; an
/// increasing and a decreasing run may share their pivot point.
pub fn extract_constant_change(
    series: &CountrySeries,
    table_id: &str,
    combination: &MeasureCombination,
    config: &ExtractConfig,
) -> Vec<DataSample> {
    let points = &series.points;
    let mut samples = Vec::new();
    if points.len() < 2 {
        return samples;
    }
    let mut emit = |start: usize, end: usize, direction: TrendDirection| {
        let n_years = (points[end].0 - points[start].0 + 1) as u32;
        if n_years < config.constant_change_min_years {
            return;
        }
        samples.push(DataSample::new(
            table_id,
            combination,
            SamplePayload::ConstantChange {
                country: series.reference_area.clone(),
                direction,
                n_years,
                start: points[start],
                end: points[end],
            },
            vec![
                EvidenceRow {
                    country: series.reference_area.clone(),
                    year: points[start].0,
                    value: points[start].1,
                },
                EvidenceRow {
                    country: series.reference_area.clone(),
                    year: points[end].0,
                    value: points[end].1,
                },
            ],
        ));
    };

    let step = |i: usize| -> Option<TrendDirection> {
        if points[i + 1].0 != points[i].0 + 1 {
            return None; // calendar gap
        }
        if points[i + 1].1 > points[i].1 {
            Some(TrendDirection::Increase)
        } else if points[i + 1].1 < points[i].1 {
            Some(TrendDirection::Decrease)
        } else {
            None // plateau
        }
    };

    let mut run_start = 0;
    let mut run_dir: Option<TrendDirection> = None;
    for i in 0..points.len() - 1 {
        let dir = step(i);
        match (run_dir, dir) {
            (None, Some(d)) => {
                run_start = i;
                run_dir = Some(d);
            }
            (Some(current), Some(d)) if current == d => {}
            (Some(current), other) => {
                emit(run_start, i, current);
                run_dir = other;
                if other.is_some() {
                    run_start = i; // pivot point opens the next run
                }
            }
            (None, None) => {}
        }
    }
    if let Some(current) = run_dir {
        emit(run_start, points.len() - 1, current);
    }
    samples
}

/// Historical extremes: points at least the configured number of years
/// past the last strict exceedance, or strict all-time records on series
/// with that much history. Ties without an exceedance yield nothing.
pub fn extract_historical_extreme(
    series: &CountrySeries,
    table_id: &str,
    combination: &MeasureCombination,
    config: &ExtractConfig,
) -> Vec<DataSample> {
    let points = &series.points;
    let mut samples = Vec::new();
    if points.len() < 2 {
        return samples;
    }
    let first_year = points[0].0;
    for idx in 1..points.len() {
        let (year, value) = points[idx];
        for direction in [ExtremeDirection::Highest, ExtremeDirection::Lowest] {
            let exceeds = |other: f64| match direction {
                ExtremeDirection::Highest => other > value,
                ExtremeDirection::Lowest => other < value,
            };
            // Walk backwards to the latest strict exceedance.
            let mut last_exceedance: Option<i32> = None;
            let mut tied = false;
            for &(prior_year, prior_value) in points[..idx].iter().rev() {
                if exceeds(prior_value) {
                    last_exceedance = Some(prior_year);
                    break;
                }
                if prior_value == value {
                    tied = true;
                }
            }
            let n_years = match last_exceedance {
                Some(y) => (year - y) as u32,
                None if !tied => (year - first_year) as u32,
                None => continue,
            };
            if n_years < config.extreme_min_years {
                continue;
            }
            samples.push(DataSample::new(
                table_id,
                combination,
                SamplePayload::HistoricalExtreme {
                    country: series.reference_area.clone(),
                    year,
                    value,
                    direction,
                    n_years,
                },
                vec![EvidenceRow {
                    country: series.reference_area.clone(),
                    year,
                    value,
                }],
            ));
        }
    }
    samples
}

fn qualifies_rank_shift(rank_a: u32, rank_b: u32, n_countries_a: u32, config: &ExtractConfig) -> bool {
    let delta = rank_a.abs_diff(rank_b);
    let flat_floor = (config.rank_shift_fraction * f64::from(n_countries_a)).ceil() as u32;
    let flat = delta >= config.rank_shift_floor.max(flat_floor);
    let (hi, lo) = (rank_a.max(rank_b), rank_a.min(rank_b));
    let ratio = f64::from(hi) >= config.rank_ratio * f64::from(lo);
    flat || ratio
}

/// Substantial rank shifts: per country, the qualifying year pair with
/// the largest rank delta (ties: widest span, then earliest start year).
pub fn extract_rank_shifts(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    // rank and country count per year, computed once
    let mut years: Vec<i32> = slice.rows.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    let mut rank_of: BTreeMap<(i32, &str), u32> = BTreeMap::new();
    let mut count_of: BTreeMap<i32, u32> = BTreeMap::new();
    let mut value_of: BTreeMap<(i32, &str), f64> = BTreeMap::new();
    for &year in &years {
        let ranking = year_ranking(slice, year);
        count_of.insert(year, ranking.len() as u32);
        for (pos, (country, value)) in ranking.iter().enumerate() {
            rank_of.insert((year, country), pos as u32 + 1);
            value_of.insert((year, country), *value);
        }
    }

    let mut countries: Vec<&str> = slice.rows.iter().map(|r| r.reference_area.as_str()).collect();
    countries.sort_unstable();
    countries.dedup();

    let mut samples = Vec::new();
    for country in countries {
        let reported: Vec<i32> = years
            .iter()
            .copied()
            .filter(|&y| rank_of.contains_key(&(y, country)))
            .collect();
        let mut best: Option<(u32, i32, i32, i32)> = None; // (delta, span, -year_a proxy via ordering below)
        for (i, &year_a) in reported.iter().enumerate() {
            for &year_b in &reported[i + 1..] {
                let rank_a = rank_of[&(year_a, country)];
                let rank_b = rank_of[&(year_b, country)];
                if !qualifies_rank_shift(rank_a, rank_b, count_of[&year_a], config) {
                    continue;
                }
                let delta = rank_a.abs_diff(rank_b);
                let span = year_b - year_a;
                let candidate = (delta, span, year_a, year_b);
                let better = match best {
                    None => true,
                    Some((bd, bs, by, _)) => {
                        (delta, span).cmp(&(bd, bs)).is_gt()
                            || (delta == bd && span == bs && year_a < by)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        if let Some((_, _, year_a, year_b)) = best {
            let rank_a = rank_of[&(year_a, country)];
            let rank_b = rank_of[&(year_b, country)];
            samples.push(DataSample::new(
                &slice.table_id,
                &slice.combination,
                SamplePayload::ChangeInRank {
                    country: country.to_string(),
                    year_a,
                    year_b,
                    rank_a,
                    rank_b,
                    n_countries_a: count_of[&year_a],
                    n_countries_b: count_of[&year_b],
                },
                vec![
                    EvidenceRow {
                        country: country.to_string(),
                        year: year_a,
                        value: value_of[&(year_a, country)],
                    },
                    EvidenceRow {
                        country: country.to_string(),
                        year: year_b,
                        value: value_of[&(year_b, country)],
                    },
                ],
            ));
        }
    }
    samples
}

/// One value-change sample per rank-shift sample, over the same points.
pub fn derive_change_over_time(rank_samples: &[DataSample]) -> Vec<DataSample> {
    rank_samples
        .iter()
        .filter_map(|sample| {
            let SamplePayload::ChangeInRank {
                country,
                year_a,
                year_b,
                ..
            } = &sample.payload
            else {
                return None;
            };
            let value_at = |year: i32| {
                sample
                    .evidence_rows
                    .iter()
                    .find(|e| e.year == year && e.country == *country)
                    .map(|e| e.value)
            };
            let (value_a, value_b) = (value_at(*year_a)?, value_at(*year_b)?);
            Some(DataSample::new(
                &sample.table_id,
                &sample.combination,
                SamplePayload::ChangeOverTime {
                    country: country.clone(),
                    year_a: *year_a,
                    year_b: *year_b,
                    value_a,
                    value_b,
                },
                sample.evidence_rows.clone(),
            ))
        })
        .collect()
}

/// One single-point sample per distinct endpoint of the rank-shift and
/// value-change samples, deduplicated by sample id.
pub fn derive_have_trait(
    rank_samples: &[DataSample],
    cot_samples: &[DataSample],
) -> Vec<DataSample> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for sample in rank_samples.iter().chain(cot_samples) {
        if !matches!(
            sample.payload,
            SamplePayload::ChangeInRank { .. } | SamplePayload::ChangeOverTime { .. }
        ) {
            continue;
        }
        for evidence in &sample.evidence_rows {
            let point = DataSample::new(
                &sample.table_id,
                &sample.combination,
                SamplePayload::HaveTrait {
                    country: evidence.country.clone(),
                    year: evidence.year,
                    value: evidence.value,
                },
                vec![evidence.clone()],
            );
            if seen.insert(point.sample_id.clone()) {
                out.push(point);
            }
        }
    }
    out
}

/// Runs all six extractors over a slice in canonical order.
pub fn extract_all(slice: &MeasureSlice, config: &ExtractConfig) -> ExtractionBatch {
    let mut samples = extract_top_k(slice, config);
    for series in CountrySeries::from_slice(slice) {
        samples.extend(extract_constant_change(
            &series,
            &slice.table_id,
            &slice.combination,
            config,
        ));
        samples.extend(extract_historical_extreme(
            &series,
            &slice.table_id,
            &slice.combination,
            config,
        ));
    }
    let rank_samples = extract_rank_shifts(slice, config);
    let cot_samples = derive_change_over_time(&rank_samples);
    let trait_samples = derive_have_trait(&rank_samples, &cot_samples);
    samples.extend(rank_samples);
    samples.extend(cot_samples);
    samples.extend(trait_samples);
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    samples.dedup_by(|a, b| a.sample_id == b.sample_id);
    ExtractionBatch { samples }
}

/// Checks the type invariants every emitted sample must satisfy; returns
/// a description of the first violation.
pub fn check_sample_invariants(sample: &DataSample, config: &ExtractConfig) -> Result<(), String> {
    match &sample.payload {
        SamplePayload::TopK {
            k,
            rank,
            n_countries,
            ..
        } => {
            if !(1..=*k).contains(rank) {
                return Err(format!("TopK rank {rank} outside 1..={k}"));
            }
            if *n_countries < config.topk_min_countries {
                return Err(format!("TopK n_countries {n_countries} below minimum"));
            }
            let expected_k = if *n_countries > config.topk_large_cutoff {
                config.topk_large_k
            } else {
                config.topk_small_k
            };
            if *k != expected_k {
                return Err(format!("TopK k {k} does not match n_countries {n_countries}"));
            }
        }
        SamplePayload::ConstantChange {
            n_years,
            start,
            end,
            ..
        } => {
            if *n_years < config.constant_change_min_years {
                return Err(format!("ConstantChange n_years {n_years} below minimum"));
            }
            if end.0 - start.0 + 1 != *n_years as i32 {
                return Err("ConstantChange span does not match n_years".to_string());
            }
        }
        SamplePayload::HistoricalExtreme { n_years, .. } => {
            if *n_years < config.extreme_min_years {
                return Err(format!("HistoricalExtreme n_years {n_years} below minimum"));
            }
        }
        SamplePayload::ChangeInRank {
            year_a,
            year_b,
            rank_a,
            rank_b,
            n_countries_a,
            ..
        } => {
            if year_a >= year_b {
                return Err("ChangeInRank years out of order".to_string());
            }
            if !qualifies_rank_shift(*rank_a, *rank_b, *n_countries_a, config) {
                return Err("ChangeInRank shift below thresholds".to_string());
            }
        }
        SamplePayload::ChangeOverTime { year_a, year_b, .. } => {
            if year_a >= year_b {
                return Err("ChangeOverTime years out of order".to_string());
            }
        }
        SamplePayload::HaveTrait { .. } => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::TimeWindow;

    fn window(start: i32, end: i32) -> TimeWindow {
        TimeWindow {
            start_year: start,
            end_year: end,
            max_coverage: 60,
            per_year_coverage: BTreeMap::new(),
        }
    }

    fn slice_from_points(points: &[(&str, i32, f64)], start: i32, end: i32) -> MeasureSlice {
        MeasureSlice {
            table_id: "t".to_string(),
            combination: MeasureCombination::default(),
            window: window(start, end),
            rows: points
                .iter()
                .map(|&(c, y, v)| crate::preprocess::SlicePoint {
                    reference_area: c.to_string(),
                    year: y,
                    value: v,
                })
                .collect(),
        }
    }

    fn year_of_countries(n: u32, year: i32) -> Vec<(String, i32, f64)> {
        (1..=n)
            .map(|i| (format!("C{i:03}"), year, f64::from(i)))
            .collect()
    }

    fn owned(points: &[(String, i32, f64)], start: i32, end: i32) -> MeasureSlice {
        let borrowed: Vec<(&str, i32, f64)> =
            points.iter().map(|(c, y, v)| (c.as_str(), *y, *v)).collect();
        slice_from_points(&borrowed, start, end)
    }

    fn series(area: &str, points: &[(i32, f64)]) -> CountrySeries {
        CountrySeries {
            reference_area: area.to_string(),
            points: points.to_vec(),
        }
    }

    #[test]
    fn top_k_sixty_countries_uses_k5() {
        let points = year_of_countries(60, 2020);
        let slice = owned(&points, 2020, 2021);
        let samples = extract_top_k(&slice, &ExtractConfig::default());
        let tops: Vec<f64> = samples
            .iter()
            .filter_map(|s| match &s.payload {
                SamplePayload::TopK {
                    direction: RankDirection::Top,
                    value,
                    rank,
                    ..
                } => Some((*rank, *value)),
                _ => None,
            })
            .map(|(r, v)| {
                assert!((1..=5).contains(&r));
                v
            })
            .collect();
        let mut tops_sorted = tops.clone();
        tops_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(tops_sorted, vec![60.0, 59.0, 58.0, 57.0, 56.0]);
        let bottoms: Vec<f64> = samples
            .iter()
            .filter_map(|s| match &s.payload {
                SamplePayload::TopK {
                    direction: RankDirection::Bottom,
                    value,
                    ..
                } => Some(*value),
                _ => None,
            })
            .collect();
        let mut bottoms_sorted = bottoms.clone();
        bottoms_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(bottoms_sorted, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn top_k_skips_years_under_twenty_countries() {
        let points = year_of_countries(19, 2020);
        let slice = owned(&points, 2020, 2021);
        assert!(extract_top_k(&slice, &ExtractConfig::default()).is_empty());
    }

    #[test]
    fn top_k_mid_size_uses_k3() {
        let points = year_of_countries(35, 2020);
        let slice = owned(&points, 2020, 2021);
        let samples = extract_top_k(&slice, &ExtractConfig::default());
        assert_eq!(samples.len(), 6); // 3 top + 3 bottom
        assert!(samples.iter().all(|s| matches!(
            s.payload,
            SamplePayload::TopK { k: 3, .. }
        )));
    }

    #[test]
    fn constant_change_minimal_eight_year_run() {
        let points: Vec<(i32, f64)> = (0..8).map(|i| (2010 + i, f64::from(i + 1))).collect();
        let s = series("SWE", &points);
        let samples = extract_constant_change(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default(),
        );
        assert_eq!(samples.len(), 1);
        match &samples[0].payload {
            SamplePayload::ConstantChange {
                direction,
                n_years,
                start,
                end,
                ..
            } => {
                assert_eq!(*direction, TrendDirection::Increase);
                assert_eq!(*n_years, 8);
                assert_eq!(*start, (2010, 1.0));
                assert_eq!(*end, (2017, 8.0));
            }
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn constant_change_seven_years_is_too_short() {
        let points: Vec<(i32, f64)> = (0..7).map(|i| (2010 + i, f64::from(i + 1))).collect();
        let s = series("SWE", &points);
        assert!(extract_constant_change(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default()
        )
        .is_empty());
    }

    #[test]
    fn constant_change_plateau_and_gap_break_runs() {
        // 9 increasing years, but a plateau at index 4 splits them.
        let mut points: Vec<(i32, f64)> = (0..9).map(|i| (2010 + i, f64::from(i + 1))).collect();
        points[4].1 = points[3].1;
        let s = series("SWE", &points);
        assert!(extract_constant_change(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default()
        )
        .is_empty());

        // A gap in calendar years also breaks.
        let gapped: Vec<(i32, f64)> = (0..9)
            .map(|i| (2010 + i + i32::from(i >= 5), f64::from(i + 1)))
            .collect();
        let s = series("SWE", &gapped);
        assert!(extract_constant_change(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default()
        )
        .is_empty());
    }

    #[test]
    fn constant_change_pivot_shared_by_two_runs() {
        let mut points: Vec<(i32, f64)> = Vec::new();
        for i in 0..9 {
            points.push((2000 + i, f64::from(i)));
        }
        for i in 1..9 {
            points.push((2008 + i, f64::from(8 - i)));
        }
        let s = series("SWE", &points);
        let samples = extract_constant_change(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default(),
        );
        assert_eq!(samples.len(), 2);
        let dirs: Vec<TrendDirection> = samples
            .iter()
            .map(|s| match s.payload {
                SamplePayload::ConstantChange { direction, .. } => direction,
                _ => unreachable!(),
            })
            .collect();
        assert!(dirs.contains(&TrendDirection::Increase));
        assert!(dirs.contains(&TrendDirection::Decrease));
    }

    #[test]
    fn historical_extreme_counts_years_since_exceedance() {
        let mut points: Vec<(i32, f64)> = Vec::new();
        for year in 2000..=2015 {
            let value = match year {
                2003 => 100.0,
                2015 => 90.0,
                y => 40.0 + f64::from(y - 2000),
            };
            points.push((year, value));
        }
        let s = series("SWE", &points);
        let samples = extract_historical_extreme(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default(),
        );
        let hit = samples.iter().any(|s| {
            matches!(
                s.payload,
                SamplePayload::HistoricalExtreme {
                    year: 2015,
                    direction: ExtremeDirection::Highest,
                    n_years: 12,
                    ..
                }
            )
        });
        assert!(hit, "expected 2015 highest with N=12, got {samples:?}");
    }

    #[test]
    fn historical_extreme_recent_exceedance_blocks() {
        let mut points: Vec<(i32, f64)> = Vec::new();
        for year in 2000..=2015 {
            let value = match year {
                2010 => 100.0,
                2015 => 90.0,
                y => 40.0 + f64::from(y - 2000) * 0.1,
            };
            points.push((year, value));
        }
        let s = series("SWE", &points);
        let samples = extract_historical_extreme(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default(),
        );
        assert!(!samples.iter().any(|s| matches!(
            s.payload,
            SamplePayload::HistoricalExtreme {
                year: 2015,
                direction: ExtremeDirection::Highest,
                ..
            }
        )));
    }

    #[test]
    fn historical_extreme_constant_series_yields_nothing() {
        let points: Vec<(i32, f64)> = (2000..=2015).map(|y| (y, 5.0)).collect();
        let s = series("SWE", &points);
        assert!(extract_historical_extreme(
            &s,
            "t",
            &MeasureCombination::default(),
            &ExtractConfig::default()
        )
        .is_empty());
    }

    /// Builds a two-year slice with explicit per-country ranks: value is
    /// `100 - rank`, so rank r holds the r-th largest value.
    fn two_year_rank_slice(ranks: &[(&str, u32, u32)]) -> MeasureSlice {
        let mut points = Vec::new();
        for &(country, rank_a, rank_b) in ranks {
            points.push((country.to_string(), 2010, 100.0 - f64::from(rank_a)));
            points.push((country.to_string(), 2018, 100.0 - f64::from(rank_b)));
        }
        owned(&points, 2010, 2018)
    }

    #[test]
    fn rank_shift_ratio_branch_qualifies() {
        // 30 countries; MOV moves rank 10 -> 5 (ratio 2.0, delta 5 < 10).
        let mut ranks: Vec<(String, u32, u32)> = Vec::new();
        for i in 1..=30u32 {
            let (a, b) = match i {
                10 => (10, 5),
                i if (5..10).contains(&i) => (i, i + 1),
                i => (i, i),
            };
            ranks.push((if i == 10 { "MOV".to_string() } else { format!("C{i:03}") }, a, b));
        }
        let borrowed: Vec<(&str, u32, u32)> =
            ranks.iter().map(|(c, a, b)| (c.as_str(), *a, *b)).collect();
        let slice = two_year_rank_slice(&borrowed);
        let samples = extract_rank_shifts(&slice, &ExtractConfig::default());
        let mov = samples
            .iter()
            .find(|s| s.payload.country() == "MOV")
            .expect("MOV qualifies via ratio");
        match &mov.payload {
            SamplePayload::ChangeInRank {
                rank_a,
                rank_b,
                n_countries_a,
                ..
            } => {
                assert_eq!((*rank_a, *rank_b), (10, 5));
                assert_eq!(*n_countries_a, 30);
            }
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn rank_shift_below_both_thresholds_not_emitted() {
        // 40 countries; MOV moves rank 20 -> 29: delta 9 < max(10, 8),
        // ratio 1.45 < 2.
        let mut ranks: Vec<(String, u32, u32)> = Vec::new();
        for i in 1..=40u32 {
            let (a, b) = match i {
                20 => (20, 29),
                i if (21..=29).contains(&i) => (i, i - 1),
                i => (i, i),
            };
            ranks.push((if i == 20 { "MOV".to_string() } else { format!("C{i:03}") }, a, b));
        }
        let borrowed: Vec<(&str, u32, u32)> =
            ranks.iter().map(|(c, a, b)| (c.as_str(), *a, *b)).collect();
        let slice = two_year_rank_slice(&borrowed);
        let samples = extract_rank_shifts(&slice, &ExtractConfig::default());
        assert!(samples.iter().all(|s| s.payload.country() != "MOV"));
    }

    #[test]
    fn change_over_time_projects_rank_samples() {
        let rank = DataSample::new(
            "t",
            &MeasureCombination::default(),
            SamplePayload::ChangeInRank {
                country: "SWE".to_string(),
                year_a: 2010,
                year_b: 2018,
                rank_a: 12,
                rank_b: 2,
                n_countries_a: 30,
                n_countries_b: 30,
            },
            vec![
                EvidenceRow {
                    country: "SWE".to_string(),
                    year: 2010,
                    value: 3.4,
                },
                EvidenceRow {
                    country: "SWE".to_string(),
                    year: 2018,
                    value: 9.1,
                },
            ],
        );
        let cot = derive_change_over_time(&[rank]);
        assert_eq!(cot.len(), 1);
        match &cot[0].payload {
            SamplePayload::ChangeOverTime { value_a, value_b, .. } => {
                assert_eq!((*value_a, *value_b), (3.4, 9.1));
            }
            other => panic!("unexpected payload {other:?}"),
        }
        assert!(derive_change_over_time(&[]).is_empty());
    }

    #[test]
    fn have_trait_deduplicates_shared_endpoints() {
        let make_rank = |year_a: i32, year_b: i32| {
            DataSample::new(
                "t",
                &MeasureCombination::default(),
                SamplePayload::ChangeInRank {
                    country: "SWE".to_string(),
                    year_a,
                    year_b,
                    rank_a: 20,
                    rank_b: 2,
                    n_countries_a: 30,
                    n_countries_b: 30,
                },
                vec![
                    EvidenceRow {
                        country: "SWE".to_string(),
                        year: year_a,
                        value: f64::from(year_a),
                    },
                    EvidenceRow {
                        country: "SWE".to_string(),
                        year: year_b,
                        value: f64::from(year_b),
                    },
                ],
            )
        };
        let one = derive_have_trait(&[make_rank(2010, 2018)], &[]);
        assert_eq!(one.len(), 2);
        // Two samples sharing the 2018 endpoint yield three points.
        let shared = derive_have_trait(&[make_rank(2010, 2018), make_rank(2012, 2018)], &[]);
        assert_eq!(shared.len(), 3);
    }

    #[test]
    fn extract_all_is_deterministic() {
        let mut points = Vec::new();
        for i in 1..=25u32 {
            for year in 2005..=2020 {
                points.push((
                    format!("C{i:03}"),
                    year,
                    f64::from(i) * 3.0 + f64::from((year * i as i32) % 17),
                ));
            }
        }
        let slice = owned(&points, 2005, 2020);
        let a = extract_all(&slice, &ExtractConfig::default());
        let b = extract_all(&slice, &ExtractConfig::default());
        let ser_a = serde_json::to_string(&a).unwrap();
        let ser_b = serde_json::to_string(&b).unwrap();
        assert_eq!(ser_a, ser_b);
        for sample in &a.samples {
            check_sample_invariants(sample, &ExtractConfig::default()).unwrap();
        }
    }

    #[test]
    fn extract_all_matches_reference_on_small_slice() {
        let mut points = Vec::new();
        for i in 1..=24u32 {
            for year in 2000..=2019 {
                let base = f64::from(i) * 2.0;
                let wobble = f64::from((i as i32 * 7 + year * 3) % 11);
                points.push((format!("C{i:03}"), year, base + wobble));
            }
        }
        let slice = owned(&points, 2000, 2019);
        let fast = extract_all(&slice, &ExtractConfig::default());
        let slow = crate::oracle::extract_all(&slice, &ExtractConfig::default());
        assert_eq!(fast.samples, slow);
    }
}
