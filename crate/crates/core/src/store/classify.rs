//! Column role classification.
//!
//! Roles come from (in precedence order) caller hints, the configured
//! name conventions, and the identifier-suffix rule; anything left over
//! is a measure column.

use std::collections::BTreeMap;

use crate::config::StoreConfig;

use super::{ColumnRole, ColumnSpec, StoreError, ValueKind};

/// Assigns exactly one role to every header. Hints override the
/// structural rules but fail with `AmbiguousRole` when they conflict
/// with them (e.g. reassigning the only observation-value candidate).
pub fn classify_columns(
    headers: &[String],
    hints: &BTreeMap<String, ColumnRole>,
    config: &StoreConfig,
) -> Result<Vec<ColumnSpec>, StoreError> {
    if headers.is_empty() {
        return Err(StoreError::EmptyHeaders);
    }
    for (i, header) in headers.iter().enumerate() {
        if headers[..i].contains(header) {
            return Err(StoreError::DuplicateHeader(header.clone()));
        }
    }

    let structural: Vec<ColumnRole> = headers
        .iter()
        .map(|h| structural_role(h, headers, config))
        .collect();

    let mut specs: Vec<ColumnSpec> = Vec::with_capacity(headers.len());
    for (header, &role) in headers.iter().zip(&structural) {
        let role = hints.get(header).copied().unwrap_or(role);
        let identifies = match role {
            ColumnRole::MeasureIdentifier => {
                let base = identifier_base(header, headers, config)
                    .ok_or_else(|| StoreError::AmbiguousRole(header.clone()))?;
                Some(base)
            }
            _ => None,
        };
        specs.push(ColumnSpec {
            column_name: header.clone(),
            role,
            value_kind: default_kind(role),
            identifies,
        });
    }

    let obs_count = specs
        .iter()
        .filter(|c| c.role == ColumnRole::ObservationValue)
        .count();
    if obs_count > 1 {
        let second = specs
            .iter()
            .filter(|c| c.role == ColumnRole::ObservationValue)
            .nth(1)
            .expect("count > 1");
        return Err(StoreError::AmbiguousRole(second.column_name.clone()));
    }
    if obs_count == 0 {
        // A structural candidate redirected by a hint is a conflict; a
        // corpus simply lacking the column is the caller's problem.
        for (header, &role) in headers.iter().zip(&structural) {
            if role == ColumnRole::ObservationValue {
                return Err(StoreError::AmbiguousRole(header.clone()));
            }
        }
    }
    let status_count = specs
        .iter()
        .filter(|c| c.role == ColumnRole::ObservationStatus)
        .count();
    if status_count > 1 {
        let second = specs
            .iter()
            .filter(|c| c.role == ColumnRole::ObservationStatus)
            .nth(1)
            .expect("count > 1");
        return Err(StoreError::AmbiguousRole(second.column_name.clone()));
    }

    Ok(specs)
}

fn structural_role(header: &str, headers: &[String], config: &StoreConfig) -> ColumnRole {
    if name_in(header, &config.metadata_names) {
        ColumnRole::Metadata
    } else if name_in(header, &config.obs_value_names) {
        ColumnRole::ObservationValue
    } else if name_in(header, &config.obs_status_names) {
        ColumnRole::ObservationStatus
    } else if name_in(header, &config.reference_area_names) {
        ColumnRole::ReferenceArea
    } else if name_in(header, &config.time_period_names) {
        ColumnRole::TimePeriod
    } else if identifier_base(header, headers, config).is_some() {
        ColumnRole::MeasureIdentifier
    } else {
        ColumnRole::Measure
    }
}

/// The column identified by an `_ID`-suffixed header, when it exists and
/// is not metadata.
fn identifier_base(header: &str, headers: &[String], config: &StoreConfig) -> Option<String> {
    let suffix = &config.id_suffix;
    if header.len() <= suffix.len()
        || !header[header.len() - suffix.len()..].eq_ignore_ascii_case(suffix)
    {
        return None;
    }
    let base = &header[..header.len() - suffix.len()];
    headers
        .iter()
        .find(|h| h.eq_ignore_ascii_case(base) && !name_in(h, &config.metadata_names))
        .cloned()
}

fn default_kind(role: ColumnRole) -> ValueKind {
    match role {
        ColumnRole::ObservationValue => ValueKind::Numeric,
        ColumnRole::TimePeriod => ValueKind::Temporal,
        _ => ValueKind::Categorical,
    }
}

fn name_in(header: &str, names: &[String]) -> bool {
    names.iter().any(|n| n.eq_ignore_ascii_case(header))
}
