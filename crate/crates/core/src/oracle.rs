//! Brute-force reference extractors.
//!
//! Independent, exhaustive re-implementations of the six extraction
//! strategies. The fixture generator uses them to compute expected
//! counts, and tests cross-check the optimized extractors against them.
//! They share no code path with `crate::extract` beyond the sample
//! types themselves.

use std::collections::BTreeSet;

use crate::config::ExtractConfig;
use crate::extract::{
    CountrySeries, DataSample, EvidenceRow, ExtremeDirection, RankDirection, SamplePayload,
    TrendDirection,
};
use crate::preprocess::MeasureSlice;

/// Full descending ranking of one year, recomputed from scratch.
fn ranking_for_year(slice: &MeasureSlice, year: i32) -> Vec<(String, f64)> {
    let mut entries: Vec<(String, f64)> = slice
        .rows
        .iter()
        .filter(|r| r.year == year)
        .map(|r| (r.reference_area.clone(), r.value))
        .collect();
    // selection-style ordering: repeatedly pull the largest remaining
    let mut ordered = Vec::with_capacity(entries.len());
    while !entries.is_empty() {
        let mut best = 0;
        for i in 1..entries.len() {
            let better = entries[i].1 > entries[best].1
                || (entries[i].1 == entries[best].1 && entries[i].0 < entries[best].0);
            if better {
                best = i;
            }
        }
        ordered.push(entries.remove(best));
    }
    ordered
}

fn years_of(slice: &MeasureSlice) -> Vec<i32> {
    let years: BTreeSet<i32> = slice.rows.iter().map(|r| r.year).collect();
    years.into_iter().collect()
}

pub fn top_k(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    let mut out = Vec::new();
    for year in years_of(slice) {
        let descending = ranking_for_year(slice, year);
        let n = descending.len() as u32;
        if n < config.topk_min_countries {
            continue;
        }
        let k = if n > config.topk_large_cutoff {
            config.topk_large_k
        } else {
            config.topk_small_k
        } as usize;
        for (pos, (country, value)) in descending.iter().take(k).enumerate() {
            out.push(make_topk(
                slice,
                country,
                year,
                k as u32,
                RankDirection::Top,
                pos as u32 + 1,
                *value,
                n,
            ));
        }
        let mut ascending: Vec<(String, f64)> = descending.clone();
        ascending.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        for (pos, (country, value)) in ascending.iter().take(k).enumerate() {
            out.push(make_topk(
                slice,
                country,
                year,
                k as u32,
                RankDirection::Bottom,
                pos as u32 + 1,
                *value,
                n,
            ));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn make_topk(
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

/// Enumerates every index pair and keeps maximal monotone consecutive
/// spans of sufficient length.
pub fn constant_change(
    series: &CountrySeries,
    table_id: &str,
    combination: &crate::preprocess::MeasureCombination,
    config: &ExtractConfig,
) -> Vec<DataSample> {
    let points = &series.points;
    let span_direction = |i: usize, j: usize| -> Option<TrendDirection> {
        let mut direction = None;
        for idx in i..j {
            if points[idx + 1].0 != points[idx].0 + 1 {
                return None;
            }
            let step = if points[idx + 1].1 > points[idx].1 {
                TrendDirection::Increase
            } else if points[idx + 1].1 < points[idx].1 {
                TrendDirection::Decrease
            } else {
                return None;
            };
            match direction {
                None => direction = Some(step),
                Some(d) if d != step => return None,
                Some(_) => {}
            }
        }
        direction
    };

    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let Some(direction) = span_direction(i, j) else { continue };
            let n_years = (points[j].0 - points[i].0 + 1) as u32;
            if n_years < config.constant_change_min_years {
                continue;
            }
            // maximality: extending one point in either direction must fail
            let extends_left = i > 0 && span_direction(i - 1, j) == Some(direction);
            let extends_right = j + 1 < points.len() && span_direction(i, j + 1) == Some(direction);
            if extends_left || extends_right {
                continue;
            }
            out.push(DataSample::new(
                table_id,
                combination,
                SamplePayload::ConstantChange {
                    country: series.reference_area.clone(),
                    direction,
                    n_years,
                    start: points[i],
                    end: points[j],
                },
                vec![
                    EvidenceRow {
                        country: series.reference_area.clone(),
                        year: points[i].0,
                        value: points[i].1,
                    },
                    EvidenceRow {
                        country: series.reference_area.clone(),
                        year: points[j].0,
                        value: points[j].1,
                    },
                ],
            ));
        }
    }
    out
}

pub fn historical_extreme(
    series: &CountrySeries,
    table_id: &str,
    combination: &crate::preprocess::MeasureCombination,
    config: &ExtractConfig,
) -> Vec<DataSample> {
    let points = &series.points;
    let mut out = Vec::new();
    for idx in 0..points.len() {
        let (year, value) = points[idx];
        let priors = &points[..idx];
        if priors.is_empty() {
            continue;
        }
        for direction in [ExtremeDirection::Highest, ExtremeDirection::Lowest] {
            let mut exceed_years: Vec<i32> = Vec::new();
            let mut any_tie = false;
            for &(py, pv) in priors {
                let exceeds = match direction {
                    ExtremeDirection::Highest => pv > value,
                    ExtremeDirection::Lowest => pv < value,
                };
                if exceeds {
                    exceed_years.push(py);
                } else if pv == value {
                    any_tie = true;
                }
            }
            let n_years = if let Some(&latest) = exceed_years.iter().max() {
                (year - latest) as u32
            } else if !any_tie {
                (year - points[0].0) as u32
            } else {
                continue;
            };
            if n_years >= config.extreme_min_years {
                out.push(DataSample::new(
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
    }
    out
}

pub fn rank_shifts(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    let years = years_of(slice);
    let mut countries: BTreeSet<String> =
        slice.rows.iter().map(|r| r.reference_area.clone()).collect();
    let rankings: std::collections::BTreeMap<i32, Vec<(String, f64)>> = years
        .iter()
        .map(|&year| (year, ranking_for_year(slice, year)))
        .collect();
    let rank_in = |year: i32, country: &str| -> Option<(u32, u32, f64)> {
        let ranking = &rankings[&year];
        let n = ranking.len() as u32;
        ranking
            .iter()
            .position(|(c, _)| c == country)
            .map(|pos| (pos as u32 + 1, n, ranking[pos].1))
    };

    let mut out = Vec::new();
    for country in std::mem::take(&mut countries) {
        let mut qualifying: Vec<(u32, i32, i32, i32)> = Vec::new();
        for (i, &year_a) in years.iter().enumerate() {
            let Some((rank_a, n_a, _)) = rank_in(year_a, &country) else { continue };
            for &year_b in &years[i + 1..] {
                let Some((rank_b, _, _)) = rank_in(year_b, &country) else { continue };
                let delta = rank_a.abs_diff(rank_b);
                let floor =
                    (config.rank_shift_fraction * f64::from(n_a)).ceil() as u32;
                let flat_ok = delta >= config.rank_shift_floor.max(floor);
                let ratio_ok = f64::from(rank_a.max(rank_b))
                    >= config.rank_ratio * f64::from(rank_a.min(rank_b));
                if flat_ok || ratio_ok {
                    qualifying.push((delta, year_b - year_a, year_a, year_b));
                }
            }
        }
        // best by delta desc, span desc, year_a asc
        qualifying.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        let Some(&(_, _, year_a, year_b)) = qualifying.first() else { continue };
        let (rank_a, n_a, value_a) = rank_in(year_a, &country).expect("qualified pair");
        let (rank_b, n_b, value_b) = rank_in(year_b, &country).expect("qualified pair");
        out.push(DataSample::new(
            &slice.table_id,
            &slice.combination,
            SamplePayload::ChangeInRank {
                country: country.clone(),
                year_a,
                year_b,
                rank_a,
                rank_b,
                n_countries_a: n_a,
                n_countries_b: n_b,
            },
            vec![
                EvidenceRow {
                    country: country.clone(),
                    year: year_a,
                    value: value_a,
                },
                EvidenceRow {
                    country: country.clone(),
                    year: year_b,
                    value: value_b,
                },
            ],
        ));
    }
    out
}

/// Value-change samples rebuilt from the slice rows rather than the rank
/// samples' evidence.
pub fn change_over_time(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    rank_shifts(slice, config)
        .into_iter()
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
            let lookup = |year: i32| {
                slice
                    .rows
                    .iter()
                    .find(|r| r.reference_area == *country && r.year == year)
                    .map(|r| r.value)
            };
            let (value_a, value_b) = (lookup(*year_a)?, lookup(*year_b)?);
            Some(DataSample::new(
                &slice.table_id,
                &slice.combination,
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

/// Single-point samples: the distinct endpoints of all rank-shift pairs.
pub fn have_trait(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    let mut endpoints: BTreeSet<(String, i32)> = BTreeSet::new();
    for sample in rank_shifts(slice, config) {
        let SamplePayload::ChangeInRank {
            country,
            year_a,
            year_b,
            ..
        } = &sample.payload
        else {
            continue;
        };
        endpoints.insert((country.clone(), *year_a));
        endpoints.insert((country.clone(), *year_b));
    }
    let mut out = Vec::new();
    for (country, year) in endpoints {
        let value = slice
            .rows
            .iter()
            .find(|r| r.reference_area == country && r.year == year)
            .map(|r| r.value)
            .expect("endpoint exists in slice");
        out.push(DataSample::new(
            &slice.table_id,
            &slice.combination,
            SamplePayload::HaveTrait {
                country: country.clone(),
                year,
                value,
            },
            vec![EvidenceRow {
                country,
                year,
                value,
            }],
        ));
    }
    out
}

/// All six reference extractors over one slice, sorted by sample id.
pub fn extract_all(slice: &MeasureSlice, config: &ExtractConfig) -> Vec<DataSample> {
    let mut samples = top_k(slice, config);
    for series in CountrySeries::from_slice(slice) {
        samples.extend(constant_change(
            &series,
            &slice.table_id,
            &slice.combination,
            config,
        ));
        samples.extend(historical_extreme(
            &series,
            &slice.table_id,
            &slice.combination,
            config,
        ));
    }
    samples.extend(rank_shifts(slice, config));
    samples.extend(change_over_time(slice, config));
    samples.extend(have_trait(slice, config));
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    samples.dedup_by(|a, b| a.sample_id == b.sample_id);
    samples
}
