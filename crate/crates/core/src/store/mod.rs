//! Embedded relational store for long-format statistical tables.
//!
//! Tables are ingested from delimited text into SQLite (the fixed SQL
//! dialect for this build), columns are classified by role, and downstream
//! stages address measures, metadata, and the observation value uniformly.
//! After ingestion the store is treated as read-only: `run_query` rejects
//! any statement that would modify data.

mod classify;

pub use classify::classify_columns;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rusqlite::types::ValueRef;
use rusqlite::Connection;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::StoreConfig;
use crate::hash::sha256_hex;

const REGISTRY_TABLE: &str = "_statclaim_tables";

/// Role of a column within a long-format table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnRole {
    Metadata,
    Measure,
    MeasureIdentifier,
    ObservationValue,
    ObservationStatus,
    TimePeriod,
    ReferenceArea,
}

/// Broad value domain of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    Categorical,
    Numeric,
    Temporal,
}

/// A classified column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub column_name: String,
    pub role: ColumnRole,
    pub value_kind: ValueKind,
    /// For `MeasureIdentifier` columns, the column this one identifies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifies: Option<String>,
}

/// An ingested table with its classified schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTable {
    pub table_id: String,
    pub name: String,
    pub description: String,
    pub columns: Vec<ColumnSpec>,
    pub row_count: u64,
}

impl SourceTable {
    pub fn column(&self, role: ColumnRole) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.role == role)
    }

    pub fn measure_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.role == ColumnRole::Measure)
    }
}

/// Normalized time period: a year plus an optional sub-annual tag
/// (e.g. `Q3` from `2020-Q3`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimePeriod {
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_annual: Option<String>,
}

impl TimePeriod {
    pub fn annual(year: i32) -> Self {
        Self {
            year,
            sub_annual: None,
        }
    }

    /// Parses `2020` or `2020-Q3` style periods. Returns `None` on any
    /// other shape.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.len() < 4 || !text.as_bytes()[..4].iter().all(u8::is_ascii_digit) {
            return None;
        }
        let year: i32 = text[..4].parse().ok()?;
        let rest = &text[4..];
        if rest.is_empty() {
            return Some(Self::annual(year));
        }
        let tag = rest.strip_prefix('-')?;
        if tag.is_empty() {
            return None;
        }
        Some(Self {
            year,
            sub_annual: Some(tag.to_string()),
        })
    }
}

impl fmt::Display for TimePeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sub_annual {
            Some(tag) => write!(f, "{}-{}", self.year, tag),
            None => write!(f, "{}", self.year),
        }
    }
}

/// One raw record of an ingested table, typed by column role. Nulls are
/// preserved; cleaning happens downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct RawObservation {
    pub reference_area: Option<String>,
    pub time_period: Option<TimePeriod>,
    pub obs_value: Option<f64>,
    pub status: Option<String>,
    /// Values of all `Measure` columns, keyed by column name.
    pub measure_values: BTreeMap<String, Option<String>>,
    /// True when every cell of the record is null.
    pub all_null: bool,
    /// Ingestion order, used as the deterministic duplicate tiebreaker.
    pub ingest_order: u64,
}

/// A cleaned observation: status is normal and the value is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub reference_area: String,
    pub time_period: TimePeriod,
    pub measure_values: BTreeMap<String, String>,
    pub obs_value: f64,
    pub status: String,
}

/// A single SQL result cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SqlValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl SqlValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SqlValue::Integer(i) => Some(*i as f64),
            SqlValue::Real(r) => Some(*r),
            SqlValue::Text(t) => t.trim().parse().ok(),
            SqlValue::Null => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            SqlValue::Text(t) => Some(t),
            _ => None,
        }
    }
}

/// Materialized query result, capped at the configured row limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SqlValue>>,
    pub truncated: bool,
}

/// Ingestion metadata for one table: naming plus optional role hints.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TableMeta {
    pub table_id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub role_hints: BTreeMap<String, ColumnRole>,
}

/// Corpus manifest: the list of tables to ingest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub tables: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub table_id: String,
    /// Path to the delimited file, relative to the manifest location.
    pub path: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub role_hints: BTreeMap<String, ColumnRole>,
}

impl ManifestEntry {
    pub fn meta(&self) -> TableMeta {
        TableMeta {
            table_id: self.table_id.clone(),
            name: self.name.clone(),
            description: self.description.clone(),
            role_hints: self.role_hints.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no column maps to the observation value")]
    MissingObsValueColumn,
    #[error("malformed row at line {0}")]
    MalformedRow(u64),
    #[error("table id already ingested: {0}")]
    DuplicateTableId(String),
    #[error("ambiguous role for column {0}")]
    AmbiguousRole(String),
    #[error("header row is empty")]
    EmptyHeaders,
    #[error("duplicate header: {0}")]
    DuplicateHeader(String),
    #[error("unknown column: {0}")]
    UnknownColumn(String),
    #[error("unknown table: {0}")]
    UnknownTable(String),
    #[error("sql syntax error: {0}")]
    SqlSyntaxError(String),
    #[error("statement rejected: only read-only queries are allowed")]
    SqlRejectedWrite,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("sqlite error: {0}")]
    Sqlite(#[from] rusqlite::Error),
}

/// The embedded store. Single writer during ingestion; afterwards all
/// access is read-only and the handle may be shared across threads.
pub struct TableStore {
    conn: Mutex<Connection>,
    config: StoreConfig,
}

impl TableStore {
    pub fn open_in_memory(config: StoreConfig) -> Result<Self, StoreError> {
        Self::init(Connection::open_in_memory()?, config)
    }

    pub fn open(path: &Path, config: StoreConfig) -> Result<Self, StoreError> {
        Self::init(Connection::open(path)?, config)
    }

    fn init(conn: Connection, config: StoreConfig) -> Result<Self, StoreError> {
        conn.execute_batch(&format!(
            "CREATE TABLE IF NOT EXISTS {REGISTRY_TABLE} (
                table_id TEXT PRIMARY KEY,
                name TEXT NOT NULL,
                description TEXT NOT NULL,
                columns_json TEXT NOT NULL,
                row_count INTEGER NOT NULL
            )"
        ))?;
        Ok(Self {
            conn: Mutex::new(conn),
            config,
        })
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    /// Ingests a delimited text file. The delimiter (comma or tab) is
    /// auto-detected from the header line. Re-ingesting an existing
    /// `table_id` requires `replace`.
    pub fn ingest_table(
        &self,
        path: &Path,
        meta: &TableMeta,
        replace: bool,
    ) -> Result<SourceTable, StoreError> {
        let delimiter = detect_delimiter(path)?;
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut columns = classify_columns(&headers, &meta.role_hints, &self.config)?;
        let obs_idx = columns
            .iter()
            .position(|c| c.role == ColumnRole::ObservationValue)
            .ok_or(StoreError::MissingObsValueColumn)?;
        let time_idx = columns.iter().position(|c| c.role == ColumnRole::TimePeriod);

        let conn = self.conn.lock().expect("store lock");
        let exists: bool = conn.query_row(
            &format!("SELECT COUNT(*) FROM {REGISTRY_TABLE} WHERE table_id = ?1"),
            [&meta.table_id],
            |row| row.get::<_, i64>(0).map(|n| n > 0),
        )?;
        if exists {
            if !replace {
                return Err(StoreError::DuplicateTableId(meta.table_id.clone()));
            }
            conn.execute_batch(&format!("DROP TABLE IF EXISTS {}", quote_ident(&meta.table_id)))?;
            conn.execute(
                &format!("DELETE FROM {REGISTRY_TABLE} WHERE table_id = ?1"),
                [&meta.table_id],
            )?;
        }

        let col_defs: Vec<String> = columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let ty = if i == obs_idx { "REAL" } else { "TEXT" };
                format!("{} {}", quote_ident(&c.column_name), ty)
            })
            .collect();
        conn.execute_batch(&format!(
            "CREATE TABLE {} ({})",
            quote_ident(&meta.table_id),
            col_defs.join(", ")
        ))?;

        let placeholders: Vec<String> = (1..=columns.len()).map(|i| format!("?{i}")).collect();
        let insert_sql = format!(
            "INSERT INTO {} VALUES ({})",
            quote_ident(&meta.table_id),
            placeholders.join(", ")
        );

        // Track whether each measure column holds only numeric values so
        // its value kind can be refined after loading.
        let mut numeric_only = vec![true; columns.len()];
        let mut saw_value = vec![false; columns.len()];
        let mut row_count: u64 = 0;

        conn.execute_batch("BEGIN")?;
        let insert_result = (|| -> Result<(), StoreError> {
            let mut stmt = conn.prepare(&insert_sql)?;
            for record in reader.records() {
                let record = record?;
                let line = record
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(row_count + 2);
                if record.len() != columns.len() {
                    return Err(StoreError::MalformedRow(line));
                }
                let mut params: Vec<rusqlite::types::Value> = Vec::with_capacity(columns.len());
                for (i, field) in record.iter().enumerate() {
                    let field = field.trim();
                    if field.is_empty() {
                        params.push(rusqlite::types::Value::Null);
                        continue;
                    }
                    saw_value[i] = true;
                    if i == obs_idx {
                        let value: f64 = field
                            .parse()
                            .map_err(|_| StoreError::MalformedRow(line))?;
                        if !value.is_finite() {
                            return Err(StoreError::MalformedRow(line));
                        }
                        params.push(rusqlite::types::Value::Real(value));
                    } else {
                        if Some(i) == time_idx {
                            let period = TimePeriod::parse(field)
                                .ok_or(StoreError::MalformedRow(line))?;
                            if !(1900..=2100).contains(&period.year) {
                                return Err(StoreError::MalformedRow(line));
                            }
                        }
                        if field.parse::<f64>().is_err() {
                            numeric_only[i] = false;
                        }
                        params.push(rusqlite::types::Value::Text(field.to_string()));
                    }
                }
                stmt.execute(rusqlite::params_from_iter(params))?;
                row_count += 1;
            }
            Ok(())
        })();
        match insert_result {
            Ok(()) => conn.execute_batch("COMMIT")?,
            Err(e) => {
                conn.execute_batch("ROLLBACK")?;
                conn.execute_batch(&format!(
                    "DROP TABLE IF EXISTS {}",
                    quote_ident(&meta.table_id)
                ))?;
                return Err(e);
            }
        }

        for (i, column) in columns.iter_mut().enumerate() {
            if column.role == ColumnRole::Measure && saw_value[i] && numeric_only[i] {
                column.value_kind = ValueKind::Numeric;
            }
        }

        let table = SourceTable {
            table_id: meta.table_id.clone(),
            name: meta.name.clone(),
            description: meta.description.clone(),
            columns,
            row_count,
        };
        conn.execute(
            &format!("INSERT INTO {REGISTRY_TABLE} VALUES (?1, ?2, ?3, ?4, ?5)"),
            rusqlite::params![
                table.table_id,
                table.name,
                table.description,
                serde_json::to_string(&table.columns).expect("columns serialize"),
                table.row_count as i64,
            ],
        )?;
        Ok(table)
    }

    /// Ingests every entry of a corpus manifest; paths resolve relative to
    /// `base_dir`.
    pub fn ingest_manifest(
        &self,
        manifest: &CorpusManifest,
        base_dir: &Path,
        replace: bool,
    ) -> Result<Vec<SourceTable>, StoreError> {
        manifest
            .tables
            .iter()
            .map(|entry| self.ingest_table(&base_dir.join(&entry.path), &entry.meta(), replace))
            .collect()
    }

    pub fn get_table(&self, table_id: &str) -> Result<SourceTable, StoreError> {
        let conn = self.conn.lock().expect("store lock");
        conn.query_row(
            &format!(
                "SELECT name, description, columns_json, row_count \
                 FROM {REGISTRY_TABLE} WHERE table_id = ?1"
            ),
            [table_id],
            |row| {
                let columns_json: String = row.get(2)?;
                Ok(SourceTable {
                    table_id: table_id.to_string(),
                    name: row.get(0)?,
                    description: row.get(1)?,
                    columns: serde_json::from_str(&columns_json).expect("registry columns"),
                    row_count: row.get::<_, i64>(3)? as u64,
                })
            },
        )
        .map_err(|e| match e {
            rusqlite::Error::QueryReturnedNoRows => StoreError::UnknownTable(table_id.to_string()),
            other => StoreError::Sqlite(other),
        })
    }

    pub fn list_tables(&self) -> Result<Vec<SourceTable>, StoreError> {
        let ids: Vec<String> = {
            let conn = self.conn.lock().expect("store lock");
            let mut stmt = conn.prepare(&format!(
                "SELECT table_id FROM {REGISTRY_TABLE} ORDER BY table_id"
            ))?;
            let rows = stmt.query_map([], |row| row.get(0))?;
            rows.collect::<Result<_, _>>()?
        };
        ids.iter().map(|id| self.get_table(id)).collect()
    }

    /// Distinct values of a column in lexicographic order, with the total
    /// distinct count. `limit` truncates the returned list only.
    pub fn unique_values(
        &self,
        table_id: &str,
        column_name: &str,
        limit: Option<usize>,
    ) -> Result<(Vec<String>, usize), StoreError> {
        let table = self.get_table(table_id)?;
        if !table.columns.iter().any(|c| c.column_name == column_name) {
            return Err(StoreError::UnknownColumn(column_name.to_string()));
        }
        let conn = self.conn.lock().expect("store lock");
        let quoted_col = quote_ident(column_name);
        let quoted_table = quote_ident(table_id);
        let total: i64 = conn.query_row(
            &format!("SELECT COUNT(DISTINCT {quoted_col}) FROM {quoted_table}"),
            [],
            |row| row.get(0),
        )?;
        let mut sql = format!(
            "SELECT DISTINCT {quoted_col} FROM {quoted_table} \
             WHERE {quoted_col} IS NOT NULL ORDER BY {quoted_col}"
        );
        if let Some(limit) = limit {
            sql.push_str(&format!(" LIMIT {limit}"));
        }
        let mut stmt = conn.prepare(&sql)?;
        let values = stmt
            .query_map([], |row| {
                Ok(match row.get_ref(0)? {
                    ValueRef::Text(t) => String::from_utf8_lossy(t).into_owned(),
                    ValueRef::Integer(i) => i.to_string(),
                    ValueRef::Real(r) => r.to_string(),
                    _ => String::new(),
                })
            })?
            .collect::<Result<Vec<_>, _>>()?;
        Ok((values, total as usize))
    }

    /// Executes a read-only SQL statement. Statements that would modify
    /// the store are rejected; results are capped at the configured row
    /// limit with a truncation flag.
    pub fn run_query(&self, sql_text: &str) -> Result<ResultSet, StoreError> {
        if !starts_read_only(sql_text) {
            return Err(StoreError::SqlRejectedWrite);
        }
        let conn = self.conn.lock().expect("store lock");
        conn.pragma_update(None, "query_only", true)?;
        let result = run_query_inner(&conn, sql_text, self.config.result_row_cap);
        conn.pragma_update(None, "query_only", false)?;
        result
    }

    /// Typed raw records of an ingested table, in ingestion order.
    pub fn load_observations(
        &self,
        table: &SourceTable,
    ) -> Result<Vec<RawObservation>, StoreError> {
        let conn = self.conn.lock().expect("store lock");
        let column_list = table
            .columns
            .iter()
            .map(|c| quote_ident(&c.column_name))
            .collect::<Vec<_>>()
            .join(", ");
        let mut stmt = conn.prepare(&format!(
            "SELECT {column_list} FROM {} ORDER BY rowid",
            quote_ident(&table.table_id)
        ))?;
        let mut rows = stmt.query([])?;
        let mut out = Vec::new();
        let mut order: u64 = 0;
        while let Some(row) = rows.next()? {
            let mut obs = RawObservation {
                reference_area: None,
                time_period: None,
                obs_value: None,
                status: None,
                measure_values: BTreeMap::new(),
                all_null: true,
                ingest_order: order,
            };
            for (i, column) in table.columns.iter().enumerate() {
                let cell = row.get_ref(i)?;
                if cell != ValueRef::Null {
                    obs.all_null = false;
                }
                match column.role {
                    ColumnRole::ReferenceArea => obs.reference_area = text_of(cell),
                    ColumnRole::TimePeriod => {
                        obs.time_period = text_of(cell).and_then(|t| TimePeriod::parse(&t))
                    }
                    ColumnRole::ObservationValue => {
                        obs.obs_value = match cell {
                            ValueRef::Real(r) => Some(r),
                            ValueRef::Integer(i) => Some(i as f64),
                            _ => None,
                        }
                    }
                    ColumnRole::ObservationStatus => obs.status = text_of(cell),
                    ColumnRole::Measure => {
                        obs.measure_values
                            .insert(column.column_name.clone(), text_of(cell));
                    }
                    ColumnRole::Metadata | ColumnRole::MeasureIdentifier => {}
                }
            }
            out.push(obs);
            order += 1;
        }
        Ok(out)
    }

    /// Per-column non-null counts, used for all-null column dropping.
    pub fn non_null_counts(&self, table: &SourceTable) -> Result<BTreeMap<String, u64>, StoreError> {
        let conn = self.conn.lock().expect("store lock");
        let mut counts = BTreeMap::new();
        for column in &table.columns {
            let count: i64 = conn.query_row(
                &format!(
                    "SELECT COUNT({}) FROM {}",
                    quote_ident(&column.column_name),
                    quote_ident(&table.table_id)
                ),
                [],
                |row| row.get(0),
            )?;
            counts.insert(column.column_name.clone(), count as u64);
        }
        Ok(counts)
    }

    /// Exports a table as comma-separated text: columns in lexicographic
    /// order, rows ordered by (reference area, time period).
    pub fn export_table(&self, table_id: &str, path: &Path) -> Result<(), StoreError> {
        let table = self.get_table(table_id)?;
        let mut names: Vec<&str> = table.columns.iter().map(|c| c.column_name.as_str()).collect();
        names.sort_unstable();
        let mut order_cols: Vec<String> = Vec::new();
        if let Some(area) = table.column(ColumnRole::ReferenceArea) {
            order_cols.push(quote_ident(&area.column_name));
        }
        if let Some(time) = table.column(ColumnRole::TimePeriod) {
            order_cols.push(quote_ident(&time.column_name));
        }
        order_cols.push("rowid".to_string());
        let select_list = names
            .iter()
            .map(|n| quote_ident(n))
            .collect::<Vec<_>>()
            .join(", ");
        let conn = self.conn.lock().expect("store lock");
        let mut stmt = conn.prepare(&format!(
            "SELECT {select_list} FROM {} ORDER BY {}",
            quote_ident(table_id),
            order_cols.join(", ")
        ))?;
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(&names)?;
        let mut rows = stmt.query([])?;
        while let Some(row) = rows.next()? {
            let mut record: Vec<String> = Vec::with_capacity(names.len());
            for i in 0..names.len() {
                record.push(match row.get_ref(i)? {
                    ValueRef::Null => String::new(),
                    ValueRef::Integer(v) => v.to_string(),
                    ValueRef::Real(v) => v.to_string(),
                    ValueRef::Text(t) => String::from_utf8_lossy(t).into_owned(),
                    ValueRef::Blob(_) => String::new(),
                });
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Content checksum over every registered table, for verifying that
    /// query batches leave the store unchanged.
    pub fn checksum(&self) -> Result<String, StoreError> {
        let tables = self.list_tables()?;
        let conn = self.conn.lock().expect("store lock");
        let mut parts: Vec<Vec<u8>> = Vec::new();
        for table in &tables {
            parts.push(table.table_id.clone().into_bytes());
            let column_list = table
                .columns
                .iter()
                .map(|c| quote_ident(&c.column_name))
                .collect::<Vec<_>>()
                .join(", ");
            let mut stmt = conn.prepare(&format!(
                "SELECT {column_list} FROM {} ORDER BY rowid",
                quote_ident(&table.table_id)
            ))?;
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                for i in 0..table.columns.len() {
                    let cell = match row.get_ref(i)? {
                        ValueRef::Null => "\u{0}".to_string(),
                        ValueRef::Integer(v) => v.to_string(),
                        ValueRef::Real(v) => v.to_string(),
                        ValueRef::Text(t) => String::from_utf8_lossy(t).into_owned(),
                        ValueRef::Blob(b) => format!("blob:{}", b.len()),
                    };
                    parts.push(cell.into_bytes());
                }
            }
        }
        Ok(sha256_hex(parts.iter().map(|p| p.as_slice())))
    }
}

fn run_query_inner(
    conn: &Connection,
    sql_text: &str,
    row_cap: usize,
) -> Result<ResultSet, StoreError> {
    let mut stmt = match conn.prepare(sql_text) {
        Ok(stmt) => stmt,
        Err(rusqlite::Error::MultipleStatement) => {
            return Err(StoreError::SqlSyntaxError(
                "multiple statements are not allowed".to_string(),
            ))
        }
        Err(e) => return Err(StoreError::SqlSyntaxError(e.to_string())),
    };
    if !stmt.readonly() {
        return Err(StoreError::SqlRejectedWrite);
    }
    let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
    let n_cols = columns.len();
    let mut rows = stmt
        .query([])
        .map_err(|e| StoreError::SqlSyntaxError(e.to_string()))?;
    let mut out: Vec<Vec<SqlValue>> = Vec::new();
    let mut truncated = false;
    loop {
        let row = match rows.next() {
            Ok(Some(row)) => row,
            Ok(None) => break,
            Err(e) => return Err(StoreError::SqlSyntaxError(e.to_string())),
        };
        if out.len() == row_cap {
            truncated = true;
            break;
        }
        let mut values = Vec::with_capacity(n_cols);
        for i in 0..n_cols {
            values.push(match row.get_ref(i)? {
                ValueRef::Null => SqlValue::Null,
                ValueRef::Integer(v) => SqlValue::Integer(v),
                ValueRef::Real(v) => SqlValue::Real(v),
                ValueRef::Text(t) => SqlValue::Text(String::from_utf8_lossy(t).into_owned()),
                ValueRef::Blob(_) => SqlValue::Null,
            });
        }
        out.push(values);
    }
    Ok(ResultSet {
        columns,
        rows: out,
        truncated,
    })
}

/// First-keyword screen so obvious writes are rejected with the right
/// error even when they would fail to prepare (e.g. DROP of a missing
/// table). `Statement::readonly` remains the authoritative check.
fn starts_read_only(sql: &str) -> bool {
    let first = sql
        .split_whitespace()
        .next()
        .unwrap_or("")
        .to_ascii_uppercase();
    matches!(first.as_str(), "SELECT" | "WITH" | "VALUES" | "EXPLAIN")
}

fn text_of(cell: ValueRef<'_>) -> Option<String> {
    match cell {
        ValueRef::Text(t) => Some(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Integer(i) => Some(i.to_string()),
        ValueRef::Real(r) => Some(r.to_string()),
        _ => None,
    }
}

fn detect_delimiter(path: &Path) -> Result<u8, StoreError> {
    let file = File::open(path)?;
    let mut header = String::new();
    BufReader::new(file).read_line(&mut header)?;
    let tabs = header.matches('\t').count();
    let commas = header.matches(',').count();
    Ok(if tabs > commas { b'\t' } else { b',' })
}

pub(crate) fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

/// Writes a delimited file; companion to `ingest_table` for fixtures and
/// round-trip checks.
pub fn write_csv(path: &Path, headers: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut file = File::create(path)?;
    writeln!(file, "{}", headers.join(","))?;
    for row in rows {
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
