//! Table-level filters and the analyzable slices extraction runs on.
//!
//! Cleaning removes metadata and identifier columns, all-null rows and
//! columns, and observations that are null or not status-normal. The
//! ideal time window is the longest contiguous year run whose reporting
//! coverage stays within 5% of the table's peak; slices then fix one
//! measure combination inside that window.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PreprocessConfig;
use crate::store::{
    ColumnRole, ColumnSpec, ObservationRow, SourceTable, StoreError, TableStore, TimePeriod,
    ValueKind,
};

/// Contiguous year range with near-peak reporting coverage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_year: i32,
    pub end_year: i32,
    /// Peak reporting-country count over the whole table.
    pub max_coverage: u32,
    /// Coverage of each year inside the window.
    pub per_year_coverage: BTreeMap<i32, u32>,
}

impl TimeWindow {
    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }

    pub fn len_years(&self) -> u32 {
        (self.end_year - self.start_year + 1) as u32
    }
}

/// One assignment of values to a table's non-numeric measure columns, in
/// table column order. The canonical identity of a claim perspective.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct MeasureCombination {
    pub assignments: Vec<(String, String)>,
}

impl MeasureCombination {
    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.assignments.iter().map(|(_, v)| v.as_str())
    }

    /// Human-readable label, used in claim text and prompts.
    pub fn label(&self) -> String {
        self.assignments
            .iter()
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// A cleaned table: kept columns plus the surviving observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanedView {
    pub table_id: String,
    pub name: String,
    pub description: String,
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<ObservationRow>,
}

impl CleanedView {
    /// Measure columns that hold categorical values; the combination axes.
    pub fn categorical_measure_columns(&self) -> Vec<&ColumnSpec> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Measure && c.value_kind == ValueKind::Categorical)
            .collect()
    }
}

/// One (country, year, value) point of a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub reference_area: String,
    pub year: i32,
    pub value: f64,
}

/// The filtered observations for one measure combination inside the
/// table's ideal window; at most one value per (country, year).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSlice {
    pub table_id: String,
    pub combination: MeasureCombination,
    pub window: TimeWindow,
    pub rows: Vec<SlicePoint>,
}

/// Per-table preprocessing outcome, for the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum PreprocessReport {
    Excluded {
        table_id: String,
        reason: String,
    },
    Ready {
        table_id: String,
        clean_row_count: usize,
        window: TimeWindow,
        combination_count: usize,
    },
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("table {0} has no reference-area column")]
    NoReferenceArea(String),
    #[error("table {0} has no valid time window")]
    NoValidWindow(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Drops metadata and identifier columns, all-null rows and columns, and
/// observations that are null or not status-normal. Tables without a
/// reference area are rejected.
pub fn clean_table(store: &TableStore, table: &SourceTable) -> Result<CleanedView, PreprocessError> {
    if table.column(ColumnRole::ReferenceArea).is_none() {
        return Err(PreprocessError::NoReferenceArea(table.table_id.clone()));
    }
    let non_null = store.non_null_counts(table)?;
    let columns: Vec<ColumnSpec> = table
        .columns
        .iter()
        .filter(|c| {
            !matches!(c.role, ColumnRole::Metadata | ColumnRole::MeasureIdentifier)
                && non_null.get(&c.column_name).copied().unwrap_or(0) > 0
        })
        .cloned()
        .collect();
    let has_status = columns.iter().any(|c| c.role == ColumnRole::ObservationStatus);
    let kept_measures: BTreeSet<&str> = columns
        .iter()
        .filter(|c| c.role == ColumnRole::Measure)
        .map(|c| c.column_name.as_str())
        .collect();

    let normal_statuses = &store.config().normal_statuses;
    let mut rows = Vec::new();
    for raw in store.load_observations(table)? {
        if raw.all_null {
            continue;
        }
        let Some(value) = raw.obs_value else { continue };
        let status = raw.status.unwrap_or_else(|| default_status(normal_statuses));
        if has_status && !normal_statuses.contains(&status) {
            continue;
        }
        let (Some(area), Some(period)) = (raw.reference_area, raw.time_period) else {
            continue;
        };
        let measure_values: BTreeMap<String, String> = raw
            .measure_values
            .into_iter()
            .filter_map(|(col, v)| {
                if kept_measures.contains(col.as_str()) {
                    v.map(|v| (col, v))
                } else {
                    None
                }
            })
            .collect();
        rows.push(ObservationRow {
            reference_area: area,
            time_period: period,
            measure_values,
            obs_value: value,
            status,
        });
    }

    Ok(CleanedView {
        table_id: table.table_id.clone(),
        name: table.name.clone(),
        description: table.description.clone(),
        columns,
        rows,
    })
}

fn default_status(normal_statuses: &[String]) -> String {
    normal_statuses
        .first()
        .cloned()
        .unwrap_or_else(|| "normal".to_string())
}

/// Reporting-country count per year over the whole cleaned view.
pub fn coverage_by_year(view: &CleanedView) -> BTreeMap<i32, u32> {
    let mut areas: BTreeMap<i32, BTreeSet<&str>> = BTreeMap::new();
    for row in &view.rows {
        areas
            .entry(row.time_period.year)
            .or_default()
            .insert(row.reference_area.as_str());
    }
    areas.into_iter().map(|(y, set)| (y, set.len() as u32)).collect()
}

/// Longest contiguous run of years whose coverage stays within the
/// configured fraction of the peak; ties resolve to the most recent run.
pub fn ideal_time_window(
    view: &CleanedView,
    config: &PreprocessConfig,
) -> Result<TimeWindow, PreprocessError> {
    let coverage = coverage_by_year(view);
    ideal_window_from_coverage(&coverage, config)
        .ok_or_else(|| PreprocessError::NoValidWindow(view.table_id.clone()))
}

/// Window search over a coverage map; `None` when no window satisfies the
/// peak, threshold, and length rules.
pub fn ideal_window_from_coverage(
    coverage: &BTreeMap<i32, u32>,
    config: &PreprocessConfig,
) -> Option<TimeWindow> {
    let max_coverage = coverage.values().copied().max()?;
    if max_coverage < config.min_coverage {
        return None;
    }
    let threshold = config.coverage_fraction * f64::from(max_coverage);
    let qualifying: Vec<i32> = coverage
        .iter()
        .filter(|(_, &c)| f64::from(c) >= threshold)
        .map(|(&y, _)| y)
        .collect();

    // Maximal runs of consecutive calendar years; a sub-threshold or
    // absent year breaks the run.
    let mut best: Option<(i32, i32)> = None;
    let mut run_start = None;
    let mut prev = None;
    for &year in &qualifying {
        match (run_start, prev) {
            (Some(_), Some(p)) if year == p + 1 => {}
            _ => run_start = Some(year),
        }
        prev = Some(year);
        let start = run_start.expect("set above");
        let candidate = (start, year);
        let better = match best {
            None => true,
            Some((bs, be)) => {
                let (cl, bl) = (candidate.1 - candidate.0, be - bs);
                cl > bl || (cl == bl && candidate.0 > bs)
            }
        };
        if better {
            best = Some(candidate);
        }
    }

    let (start_year, end_year) = best?;
    if (end_year - start_year + 1) < config.min_window_years as i32 {
        return None;
    }
    let per_year_coverage = coverage
        .iter()
        .filter(|(&y, _)| (start_year..=end_year).contains(&y))
        .map(|(&y, &c)| (y, c))
        .collect();
    Some(TimeWindow {
        start_year,
        end_year,
        max_coverage,
        per_year_coverage,
    })
}

/// Every distinct value tuple over the categorical measure columns, with
/// its row support, in lexicographic order. A view without measure
/// columns yields the single empty combination.
pub fn enumerate_combinations(view: &CleanedView) -> Vec<(MeasureCombination, usize)> {
    let axes: Vec<&str> = view
        .categorical_measure_columns()
        .iter()
        .map(|c| c.column_name.as_str())
        .collect();
    if axes.is_empty() {
        return vec![(MeasureCombination::default(), view.rows.len())];
    }
    let mut counts: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
    for row in &view.rows {
        let Some(tuple) = axes
            .iter()
            .map(|&col| row.measure_values.get(col).map(String::as_str))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        *counts.entry(tuple).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(tuple, support)| {
            let assignments = axes
                .iter()
                .zip(tuple)
                .map(|(&col, v)| (col.to_string(), v.to_string()))
                .collect();
            (MeasureCombination { assignments }, support)
        })
        .collect()
}

/// Filters the view to one combination inside the window, collapsing
/// duplicate (country, year) observations: the latest sub-annual tag
/// wins, then the last ingested row.
pub fn slice(
    view: &CleanedView,
    combination: &MeasureCombination,
    window: &TimeWindow,
) -> MeasureSlice {
    // (tag, order) pairs make later entries win per the duplicate rule;
    // an untagged (annual) row sorts before any tagged one.
    let mut chosen: BTreeMap<(&str, i32), (&TimePeriod, usize, f64)> = BTreeMap::new();
    for (order, row) in view.rows.iter().enumerate() {
        if !window.contains(row.time_period.year) {
            continue;
        }
        let matches = combination
            .assignments
            .iter()
            .all(|(col, v)| row.measure_values.get(col) == Some(v));
        if !matches {
            continue;
        }
        let key = (row.reference_area.as_str(), row.time_period.year);
        let incoming = (&row.time_period, order, row.obs_value);
        match chosen.get(&key) {
            Some((period, prev_order, _)) => {
                let replace = match (&period.sub_annual, &row.time_period.sub_annual) {
                    (Some(old), Some(new)) => match new.cmp(old) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Equal => order > *prev_order,
                        std::cmp::Ordering::Less => false,
                    },
                    (None, Some(_)) => true,
                    (Some(_), None) => false,
                    (None, None) => {
                        log::warn!(
                            "duplicate untagged observation for ({}, {}) in {}; keeping last ingested",
                            key.0,
                            key.1,
                            view.table_id
                        );
                        order > *prev_order
                    }
                };
                if replace {
                    chosen.insert(key, incoming);
                }
            }
            None => {
                chosen.insert(key, incoming);
            }
        }
    }
    let rows = chosen
        .into_iter()
        .map(|((area, year), (_, _, value))| SlicePoint {
            reference_area: area.to_string(),
            year,
            value,
        })
        .collect();
    MeasureSlice {
        table_id: view.table_id.clone(),
        combination: combination.clone(),
        window: window.clone(),
        rows,
    }
}

/// Clean view, window, and combinations of one prepared table.
pub type PreparedTable = (CleanedView, TimeWindow, Vec<(MeasureCombination, usize)>);

/// Full preprocessing of one table: clean, window, combinations.
pub fn preprocess_table(
    store: &TableStore,
    table: &SourceTable,
    config: &PreprocessConfig,
) -> Result<PreparedTable, PreprocessError> {
    let view = clean_table(store, table)?;
    let window = ideal_time_window(&view, config)?;
    let combinations = enumerate_combinations(&view);
    Ok((view, window, combinations))
}
