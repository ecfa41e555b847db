//! Synthetic corpus generator.
//!
//! Emits a deterministic set of long-format tables with planted
//! phenomena (monotone runs, rank climbers, spikes) plus a manifest of
//! ground-truth counts. The manifest numbers come from naive recounts of
//! the generated rows and the brute-force reference extractors, not from
//! the production ingestion or extraction paths, so they can be asserted
//! against both.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ExtractConfig, PreprocessConfig};
use crate::extract::ClaimType;
use crate::hash::derive_seed;
use crate::preprocess::{
    ideal_window_from_coverage, MeasureCombination, MeasureSlice, SlicePoint, TimeWindow,
};
use crate::store::{write_csv, ColumnRole, CorpusManifest, ManifestEntry};

const COUNTRY_NAMES: [&str; 40] = [
    "Australia", "Austria", "Belgium", "Bulgaria", "Canada", "Chile", "Colombia", "Croatia",
    "Czechia", "Denmark", "Estonia", "Finland", "France", "Germany", "Greece", "Hungary",
    "Iceland", "Ireland", "Israel", "Italy", "Japan", "Korea", "Latvia", "Lithuania",
    "Luxembourg", "Mexico", "Netherlands", "Norway", "Poland", "Portugal", "Romania",
    "Slovakia", "Slovenia", "Spain", "Sweden", "Switzerland", "Turkiye", "Ukraine",
    "Uruguay", "Zambia",
];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FixtureParams {
    pub n_tables: usize,
    pub n_countries: u32,
    pub n_years: u32,
    pub seed: u64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            n_tables: 3,
            n_countries: 20,
            n_years: 30,
            seed: 7,
        }
    }
}

/// Ground truth for one generated table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableExpectation {
    pub table_id: String,
    pub path: String,
    pub raw_rows: u64,
    /// Rows surviving the naive clean filter (non-null value, normal
    /// status, area and period present).
    pub clean_rows: usize,
    pub window: Option<(i32, i32)>,
    pub combination_count: usize,
    pub measure_columns: usize,
    pub identifier_columns: usize,
    /// Distinct non-null values per column, from a naive scan.
    pub distinct_counts: BTreeMap<String, usize>,
    /// Reference-extractor sample counts per claim type.
    pub expected_counts: BTreeMap<ClaimType, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub params: FixtureParams,
    pub tables: Vec<TableExpectation>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture parameters must be positive")]
    InvalidParams,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

struct Theme {
    id: &'static str,
    name: &'static str,
    description: &'static str,
    /// (column name, values) for each measure axis.
    axes: &'static [(&'static str, &'static [&'static str])],
    metadata: &'static [(&'static str, &'static str)],
    with_identifier: bool,
}

const THEMES: [Theme; 5] = [
    Theme {
        id: "transport",
        name: "Road transport accidents",
        description: "Road accident casualties and crash counts by transport mode.",
        axes: &[
            ("MEASURE", &["Fatalities", "Injury crash"]),
            ("UNIT_MEASURE", &["Crashes", "Persons"]),
            ("TRANSPORT_MODE", &["Road"]),
        ],
        metadata: &[("DATAFLOW", "DF_TRANSPORT")],
        with_identifier: true,
    },
    Theme {
        id: "health",
        name: "Hospital care outcomes",
        description: "Hospital admissions and fatalities across care settings.",
        axes: &[
            ("MEASURE", &["Fatalities", "Hospital admissions"]),
            ("UNIT_MEASURE", &["Persons", "Rate per 100000"]),
        ],
        metadata: &[("DATAFLOW", "DF_HEALTH"), ("FREQ", "A")],
        with_identifier: true,
    },
    // Same measure vocabulary as transport on purpose: claims built from
    // these combinations cannot be disambiguated lexically, which keeps
    // table retrieval honestly fallible on the synthetic corpus.
    Theme {
        id: "transport_regional",
        name: "Road transport accidents in eastern regions",
        description: "Road accident casualties and crash counts, eastern regional breakdown.",
        axes: &[
            ("MEASURE", &["Fatalities", "Injury crash"]),
            ("UNIT_MEASURE", &["Crashes", "Persons"]),
            ("TRANSPORT_MODE", &["Road"]),
        ],
        metadata: &[("DATAFLOW", "DF_TRANSPORT")],
        with_identifier: true,
    },
    Theme {
        id: "energy",
        name: "Energy supply indicators",
        description: "Share of renewables and coal in total energy supply.",
        axes: &[("MEASURE", &["Coal share", "Renewable share"])],
        metadata: &[],
        with_identifier: false,
    },
    Theme {
        id: "trade",
        name: "International trade flows",
        description: "Merchandise exports and imports with the world.",
        axes: &[
            ("MEASURE", &["Exports", "Imports"]),
            ("PARTNER", &["World"]),
        ],
        metadata: &[("DATAFLOW", "DF_TRADE")],
        with_identifier: false,
    },
];

/// One generated record kept in memory for the manifest recounts.
struct GeneratedRow {
    country: String,
    period: String,
    measures: Vec<(String, String)>,
    value: Option<f64>,
    status: String,
}

/// Writes the corpus CSVs plus `corpus.json` (ingestion manifest) and
/// `fixture_manifest.json` (ground-truth counts) into `out_dir`.
pub fn generate_fixture(
    params: &FixtureParams,
    out_dir: &Path,
) -> Result<(CorpusManifest, FixtureManifest), FixtureError> {
    if params.n_tables == 0 || params.n_countries == 0 || params.n_years < 2 {
        return Err(FixtureError::InvalidParams);
    }
    std::fs::create_dir_all(out_dir)?;

    let mut corpus = CorpusManifest::default();
    let mut manifest = FixtureManifest {
        params: *params,
        tables: Vec::new(),
    };

    for table_index in 0..params.n_tables {
        let theme = &THEMES[table_index % THEMES.len()];
        let table_id = if table_index < THEMES.len() {
            theme.id.to_string()
        } else {
            format!("{}_{}", theme.id, table_index)
        };
        let rows = synthesize_rows(params, table_index, theme);
        let (headers, records) = render_rows(theme, &rows);
        let file_name = format!("{table_id}.csv");
        write_csv(&out_dir.join(&file_name), &headers, &records)?;

        corpus.tables.push(ManifestEntry {
            table_id: table_id.clone(),
            path: file_name.clone(),
            name: theme.name.to_string(),
            description: theme.description.to_string(),
            role_hints: BTreeMap::new(),
        });
        manifest
            .tables
            .push(expectation(&table_id, &file_name, theme, &rows));
    }

    crate::jsonl::write_json_pretty(&out_dir.join("corpus.json"), &corpus)?;
    crate::jsonl::write_json_pretty(&out_dir.join("fixture_manifest.json"), &manifest)?;
    Ok((corpus, manifest))
}

/// Planted series shapes by country index; everything else is bounded
/// noise around a per-country base.
fn synthesize_rows(params: &FixtureParams, table_index: usize, theme: &Theme) -> Vec<GeneratedRow> {
    let n_countries = params.n_countries as usize;
    let n_years = params.n_years as i32;
    let start_year = 2020 - n_years + 1;
    let countries: Vec<String> = (0..n_countries)
        .map(|i| {
            let name = COUNTRY_NAMES[i % COUNTRY_NAMES.len()];
            if i < COUNTRY_NAMES.len() {
                name.to_string()
            } else {
                format!("{name}{}", i / COUNTRY_NAMES.len() + 1)
            }
        })
        .collect();

    let mut combos: Vec<Vec<(String, String)>> = vec![vec![]];
    for (column, values) in theme.axes {
        let mut next = Vec::new();
        for combo in &combos {
            for value in *values {
                let mut extended = combo.clone();
                extended.push((column.to_string(), value.to_string()));
                next.push(extended);
            }
        }
        combos = next;
    }

    let mut rows = Vec::new();
    for (combo_index, combo) in combos.iter().enumerate() {
        for (country_index, country) in countries.iter().enumerate() {
            let series_seed = derive_seed(
                params.seed,
                &[
                    "series",
                    &table_index.to_string(),
                    &combo_index.to_string(),
                    &country_index.to_string(),
                ],
            );
            let mut rng = ChaCha20Rng::seed_from_u64(series_seed);
            let base = 20.0 + 6.0 * country_index as f64 + 3.0 * combo_index as f64;
            let values = plant_series(country_index, n_years, base, &mut rng);
            for (offset, value) in values.into_iter().enumerate() {
                // quantize to the CSV's 3-decimal precision so in-memory
                // recounts and ingested values compare identically
                let value = (value * 1000.0).round() / 1000.0;
                let year = start_year + offset as i32;
                // sparse nulls and non-normal statuses
                let null_here = rng.gen_bool(0.05);
                let estimated_here = !null_here && rng.gen_bool(0.03);
                rows.push(GeneratedRow {
                    country: country.clone(),
                    period: year.to_string(),
                    measures: combo.clone(),
                    value: if null_here { None } else { Some(value) },
                    status: if estimated_here {
                        "Estimated".to_string()
                    } else {
                        "normal".to_string()
                    },
                });
            }
        }
    }

    // sub-annual duplicates for one country-year, on non-transport tables
    if !table_index.is_multiple_of(THEMES.len()) {
        let combo = combos[0].clone();
        let year = start_year + 1;
        for (tag, value) in [("Q2", 400.5), ("Q4", 401.5)] {
            rows.push(GeneratedRow {
                country: countries[0].clone(),
                period: format!("{year}-{tag}"),
                measures: combo.clone(),
                value: Some(value),
                status: "normal".to_string(),
            });
        }
    }
    rows
}

fn plant_series(country_index: usize, n_years: i32, base: f64, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let n = n_years as usize;
    let run_len = 12.min(n.saturating_sub(4)).max(8);
    let mut values: Vec<f64> = (0..n)
        .map(|_| (base + rng.gen_range(-4.0..4.0)).max(1.0))
        .collect();
    match country_index % 10 {
        0 | 1 => {
            // strictly increasing run in the middle of the window
            for (step, value) in values.iter_mut().skip(2).take(run_len).enumerate() {
                *value = base + step as f64 * (1.0 + rng.gen_range(0.0..0.5));
            }
        }
        2 | 3 => {
            for (step, value) in values.iter_mut().skip(2).take(run_len).enumerate() {
                *value = (base + run_len as f64 - step as f64 * (1.0 + rng.gen_range(0.0..0.5)))
                    .max(1.0);
            }
        }
        4 => {
            // rank climber: from the bottom of the field to far above it
            for (offset, value) in values.iter_mut().enumerate() {
                *value = 2.0 + (offset as f64 / n as f64) * 40.0 * base / 10.0;
            }
        }
        5 => {
            for (offset, value) in values.iter_mut().enumerate() {
                *value = (2.0 + ((n - offset) as f64 / n as f64) * 40.0 * base / 10.0).max(1.0);
            }
        }
        6 if n >= 6 => {
            // early exceedance then a late near-record spike
            values[2] = base * 3.0;
            values[n - 3] = base * 2.9;
        }
        7 if n >= 6 => {
            values[2] = (base * 0.2).max(1.0);
            values[n - 3] = (base * 0.25).max(1.0);
        }
        _ => {}
    }
    values
}

fn render_rows(theme: &Theme, rows: &[GeneratedRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut headers: Vec<String> = Vec::new();
    for (name, _) in theme.metadata {
        headers.push(name.to_string());
    }
    headers.push("REF_AREA".to_string());
    if theme.with_identifier {
        headers.push("REF_AREA_ID".to_string());
    }
    headers.push("TIME_PERIOD".to_string());
    for (column, _) in theme.axes {
        headers.push(column.to_string());
    }
    headers.push("obs_value".to_string());
    headers.push("OBS_STATUS".to_string());

    let records = rows
        .iter()
        .map(|row| {
            let mut record: Vec<String> = Vec::with_capacity(headers.len());
            for (_, value) in theme.metadata {
                record.push(value.to_string());
            }
            record.push(row.country.clone());
            if theme.with_identifier {
                record.push(country_code(&row.country));
            }
            record.push(row.period.clone());
            for (column, _) in theme.axes {
                let value = row
                    .measures
                    .iter()
                    .find(|(c, _)| c == column)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default();
                record.push(value);
            }
            record.push(row.value.map(|v| format!("{v:.3}")).unwrap_or_default());
            record.push(row.status.clone());
            record
        })
        .collect();
    (headers, records)
}

fn country_code(name: &str) -> String {
    let letters: String = name
        .chars()
        .filter(char::is_ascii_alphabetic)
        .take(3)
        .collect();
    letters.to_uppercase()
}

/// Naive recounts over the generated rows, independent of the store and
/// preprocessing code paths.
fn expectation(
    table_id: &str,
    path: &str,
    theme: &Theme,
    rows: &[GeneratedRow],
) -> TableExpectation {
    let clean: Vec<&GeneratedRow> = rows
        .iter()
        .filter(|r| r.value.is_some() && r.status == "normal")
        .collect();

    // distinct values per column from the rendered cells
    let (headers, records) = render_rows(theme, rows);
    let mut distinct_counts = BTreeMap::new();
    for (i, header) in headers.iter().enumerate() {
        let values: BTreeSet<&str> = records
            .iter()
            .map(|r| r[i].as_str())
            .filter(|v| !v.is_empty())
            .collect();
        distinct_counts.insert(header.clone(), values.len());
    }

    // coverage and window from a naive scan
    let mut coverage_sets: BTreeMap<i32, BTreeSet<&str>> = BTreeMap::new();
    for row in &clean {
        let year: i32 = row.period[..4].parse().expect("generated year");
        coverage_sets.entry(year).or_default().insert(&row.country);
    }
    let coverage: BTreeMap<i32, u32> = coverage_sets
        .into_iter()
        .map(|(y, s)| (y, s.len() as u32))
        .collect();
    let window = ideal_window_from_coverage(&coverage, &PreprocessConfig::default());

    // reference extraction counts per combination, inside the window
    let mut expected_counts: BTreeMap<ClaimType, usize> = BTreeMap::new();
    if let Some(window) = &window {
        let mut combos: BTreeSet<Vec<(String, String)>> = BTreeSet::new();
        for row in &clean {
            combos.insert(row.measures.clone());
        }
        for combo in combos {
            let slice = naive_slice(table_id, &clean, &combo, window);
            for sample in crate::oracle::extract_all(&slice, &ExtractConfig::default()) {
                *expected_counts.entry(sample.claim_type()).or_insert(0) += 1;
            }
        }
    }

    TableExpectation {
        table_id: table_id.to_string(),
        path: path.to_string(),
        raw_rows: rows.len() as u64,
        clean_rows: clean.len(),
        window: window.as_ref().map(|w| (w.start_year, w.end_year)),
        combination_count: {
            let combos: BTreeSet<&[(String, String)]> =
                clean.iter().map(|r| r.measures.as_slice()).collect();
            combos.len().max(usize::from(!clean.is_empty() && theme.axes.is_empty()))
        },
        measure_columns: theme.axes.len(),
        identifier_columns: usize::from(theme.with_identifier),
        distinct_counts,
        expected_counts,
    }
}

/// Duplicate rule, re-implemented naively: latest sub-annual tag wins,
/// untagged rows lose to tagged ones, later rows win ties.
fn naive_slice(
    table_id: &str,
    clean: &[&GeneratedRow],
    combo: &[(String, String)],
    window: &TimeWindow,
) -> MeasureSlice {
    let mut chosen: BTreeMap<(String, i32), (Option<String>, usize, f64)> = BTreeMap::new();
    for (order, row) in clean.iter().enumerate() {
        if row.measures != combo {
            continue;
        }
        let year: i32 = row.period[..4].parse().expect("generated year");
        if !(window.start_year..=window.end_year).contains(&year) {
            continue;
        }
        let tag = row.period.get(5..).map(str::to_string);
        let value = row.value.expect("clean rows have values");
        let key = (row.country.clone(), year);
        let replace = match chosen.get(&key) {
            None => true,
            Some((old_tag, old_order, _)) => match (old_tag, &tag) {
                (Some(old), Some(new)) => {
                    new > old || (new == old && order > *old_order)
                }
                (None, Some(_)) => true,
                (Some(_), None) => false,
                (None, None) => order > *old_order,
            },
        };
        if replace {
            chosen.insert(key, (tag, order, value));
        }
    }
    MeasureSlice {
        table_id: table_id.to_string(),
        combination: MeasureCombination {
            assignments: combo.to_vec(),
        },
        window: window.clone(),
        rows: chosen
            .into_iter()
            .map(|((country, year), (_, _, value))| SlicePoint {
                reference_area: country,
                year,
                value,
            })
            .collect(),
    }
}

/// The columns a theme's tables expose, for tests that assert roles.
pub fn theme_roles(table_index: usize) -> Vec<(String, ColumnRole)> {
    let theme = &THEMES[table_index % THEMES.len()];
    let mut out = Vec::new();
    for (name, _) in theme.metadata {
        out.push((name.to_string(), ColumnRole::Metadata));
    }
    out.push(("REF_AREA".to_string(), ColumnRole::ReferenceArea));
    if theme.with_identifier {
        out.push(("REF_AREA_ID".to_string(), ColumnRole::MeasureIdentifier));
    }
    out.push(("TIME_PERIOD".to_string(), ColumnRole::TimePeriod));
    for (column, _) in theme.axes {
        out.push((column.to_string(), ColumnRole::Measure));
    }
    out.push(("obs_value".to_string(), ColumnRole::ObservationValue));
    out.push(("OBS_STATUS".to_string(), ColumnRole::ObservationStatus));
    out
}
