use std::collections::BTreeMap;

use super::*;
use crate::config::StoreConfig;

fn temp_csv(contents: &str) -> tempfile::NamedTempFile {
    use std::io::Write;
    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    file.write_all(contents.as_bytes()).expect("write");
    file
}

fn meta(table_id: &str) -> TableMeta {
    TableMeta {
        table_id: table_id.to_string(),
        name: format!("{table_id} table"),
        description: String::new(),
        role_hints: BTreeMap::new(),
    }
}

fn store() -> TableStore {
    TableStore::open_in_memory(StoreConfig::default()).expect("open store")
}

const SMALL: &str = "\
REF_AREA,TIME_PERIOD,obs_value,OBS_STATUS
SWE,2019,4.5,normal
SWE,2020,4.7,normal
FRA,2019,3.1,normal
FRA,2020,3.3,normal
DEU,2019,5.2,normal
DEU,2020,,normal
";

#[test]
fn ingest_small_csv() {
    let file = temp_csv(SMALL);
    let table = store()
        .ingest_table(file.path(), &meta("small"), false)
        .expect("ingest");
    assert_eq!(table.row_count, 6);
    let obs = table.column(ColumnRole::ObservationValue).expect("obs column");
    assert_eq!(obs.column_name, "obs_value");
    assert_eq!(table.column(ColumnRole::ReferenceArea).unwrap().column_name, "REF_AREA");
}

#[test]
fn ingest_without_obs_value_column_fails() {
    let file = temp_csv("REF_AREA,TIME_PERIOD,AMOUNT\nSWE,2019,1\n");
    let err = store()
        .ingest_table(file.path(), &meta("bad"), false)
        .unwrap_err();
    assert!(matches!(err, StoreError::MissingObsValueColumn));
}

#[test]
fn ingest_rejects_duplicate_table_id_without_replace() {
    let file = temp_csv(SMALL);
    let store = store();
    store.ingest_table(file.path(), &meta("dup"), false).expect("first");
    let err = store.ingest_table(file.path(), &meta("dup"), false).unwrap_err();
    assert!(matches!(err, StoreError::DuplicateTableId(id) if id == "dup"));
    let again = store.ingest_table(file.path(), &meta("dup"), true).expect("replace");
    assert_eq!(again.row_count, 6);
}

#[test]
fn ingest_reports_malformed_row_line() {
    let file = temp_csv("REF_AREA,TIME_PERIOD,obs_value\nSWE,2019,ok-not-a-number\n");
    let err = store()
        .ingest_table(file.path(), &meta("bad"), false)
        .unwrap_err();
    assert!(matches!(err, StoreError::MalformedRow(2)));
}

#[test]
fn ingest_detects_tab_delimiter() {
    let file = temp_csv("REF_AREA\tTIME_PERIOD\tobs_value\nSWE\t2019\t4.5\n");
    let table = store()
        .ingest_table(file.path(), &meta("tabs"), false)
        .expect("ingest");
    assert_eq!(table.row_count, 1);
    assert_eq!(table.columns.len(), 3);
}

#[test]
fn classify_suffix_and_name_rules() {
    let headers: Vec<String> = ["REF_AREA", "REF_AREA_ID", "TIME_PERIOD", "MEASURE", "obs_value"]
        .map(String::from)
        .to_vec();
    let specs = classify_columns(&headers, &BTreeMap::new(), &StoreConfig::default()).unwrap();
    let roles: Vec<ColumnRole> = specs.iter().map(|c| c.role).collect();
    assert_eq!(
        roles,
        vec![
            ColumnRole::ReferenceArea,
            ColumnRole::MeasureIdentifier,
            ColumnRole::TimePeriod,
            ColumnRole::Measure,
            ColumnRole::ObservationValue,
        ]
    );
    assert_eq!(specs[1].identifies.as_deref(), Some("REF_AREA"));
}

#[test]
fn classify_metadata_name_list() {
    let headers: Vec<String> = ["DATAFLOW", "FREQ", "REF_AREA", "obs_value"]
        .map(String::from)
        .to_vec();
    let specs = classify_columns(&headers, &BTreeMap::new(), &StoreConfig::default()).unwrap();
    assert_eq!(specs[0].role, ColumnRole::Metadata);
    assert_eq!(specs[1].role, ColumnRole::Metadata);
}

#[test]
fn classify_conflicting_hint_is_ambiguous() {
    let headers: Vec<String> = ["REF_AREA", "obs_value"].map(String::from).to_vec();
    let mut hints = BTreeMap::new();
    hints.insert("obs_value".to_string(), ColumnRole::Measure);
    let err = classify_columns(&headers, &hints, &StoreConfig::default()).unwrap_err();
    assert!(matches!(err, StoreError::AmbiguousRole(col) if col == "obs_value"));
}

#[test]
fn classify_is_deterministic() {
    let headers: Vec<String> = ["REF_AREA", "UNIT", "MEASURE", "obs_value", "FREQ"]
        .map(String::from)
        .to_vec();
    let a = classify_columns(&headers, &BTreeMap::new(), &StoreConfig::default()).unwrap();
    let b = classify_columns(&headers, &BTreeMap::new(), &StoreConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unique_values_sorted_and_counted() {
    let file = temp_csv(
        "REF_AREA,TIME_PERIOD,obs_value\nB,2019,1\nA,2019,2\nA,2020,3\nC,2020,4\n",
    );
    let store = store();
    store.ingest_table(file.path(), &meta("uv"), false).expect("ingest");
    let (values, total) = store.unique_values("uv", "REF_AREA", None).unwrap();
    assert_eq!(values, vec!["A", "B", "C"]);
    assert_eq!(total, 3);
    let (values, total) = store.unique_values("uv", "REF_AREA", Some(2)).unwrap();
    assert_eq!(values, vec!["A", "B"]);
    assert_eq!(total, 3);
    let err = store.unique_values("uv", "NOPE", None).unwrap_err();
    assert!(matches!(err, StoreError::UnknownColumn(_)));
}

#[test]
fn run_query_select_one() {
    let result = store().run_query("SELECT 1").unwrap();
    assert_eq!(result.rows, vec![vec![SqlValue::Integer(1)]]);
    assert!(!result.truncated);
}

#[test]
fn run_query_rejects_writes() {
    let store = store();
    assert!(matches!(
        store.run_query("DROP TABLE t").unwrap_err(),
        StoreError::SqlRejectedWrite
    ));
    assert!(matches!(
        store.run_query("INSERT INTO t VALUES (1)").unwrap_err(),
        StoreError::SqlRejectedWrite
    ));
    // CTE-wrapped writes pass the keyword screen but not the readonly check.
    let file = temp_csv(SMALL);
    store.ingest_table(file.path(), &meta("w"), false).unwrap();
    let err = store
        .run_query("WITH x AS (SELECT 1) INSERT INTO w SELECT 'a','2019',1,'normal' FROM x")
        .unwrap_err();
    assert!(matches!(err, StoreError::SqlRejectedWrite));
}

#[test]
fn run_query_syntax_error() {
    let err = store().run_query("SELECT FROM WHERE").unwrap_err();
    assert!(matches!(err, StoreError::SqlSyntaxError(_)));
}

#[test]
fn run_query_truncates_at_cap() {
    let config = StoreConfig {
        result_row_cap: 3,
        ..Default::default()
    };
    let store = TableStore::open_in_memory(config).unwrap();
    let result = store
        .run_query("WITH RECURSIVE n(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM n WHERE x < 10) SELECT x FROM n")
        .unwrap();
    assert_eq!(result.rows.len(), 3);
    assert!(result.truncated);
}

#[test]
fn queries_never_mutate_store() {
    let file = temp_csv(SMALL);
    let store = store();
    store.ingest_table(file.path(), &meta("chk"), false).unwrap();
    let before = store.checksum().unwrap();
    let _ = store.run_query("SELECT COUNT(*) FROM chk");
    let _ = store.run_query("DROP TABLE chk");
    let _ = store.run_query("SELECT * FROM chk WHERE obs_value > 4");
    let _ = store.run_query("not even sql");
    assert_eq!(store.checksum().unwrap(), before);
}

#[test]
fn export_ingest_round_trip_preserves_rows() {
    let file = temp_csv(SMALL);
    let store = store();
    let table = store.ingest_table(file.path(), &meta("rt"), false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rt.csv");
    store.export_table("rt", &out).unwrap();
    let table2 = store
        .ingest_table(&out, &meta("rt2"), false)
        .expect("re-ingest");
    assert_eq!(table2.row_count, table.row_count);
    let mut rows1 = store.load_observations(&table).unwrap();
    let mut rows2 = store.load_observations(&table2).unwrap();
    for rows in [&mut rows1, &mut rows2] {
        for r in rows.iter_mut() {
            r.ingest_order = 0;
        }
        rows.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    }
    assert_eq!(rows1, rows2);
}

#[test]
fn time_period_parsing() {
    assert_eq!(TimePeriod::parse("2020"), Some(TimePeriod::annual(2020)));
    assert_eq!(
        TimePeriod::parse("2020-Q3"),
        Some(TimePeriod {
            year: 2020,
            sub_annual: Some("Q3".to_string())
        })
    );
    assert_eq!(TimePeriod::parse("20"), None);
    assert_eq!(TimePeriod::parse("2020Q3"), None);
    assert_eq!(TimePeriod::parse("2020-"), None);
    assert_eq!(TimePeriod::parse("abcd"), None);
}

#[test]
fn measure_value_kind_refined_from_data() {
    let file = temp_csv(
        "REF_AREA,TIME_PERIOD,CATEG,NUMS,obs_value\nSWE,2019,road,12,1\nFRA,2019,rail,13,2\n",
    );
    let table = store().ingest_table(file.path(), &meta("k"), false).unwrap();
    let categ = table.columns.iter().find(|c| c.column_name == "CATEG").unwrap();
    let nums = table.columns.iter().find(|c| c.column_name == "NUMS").unwrap();
    assert_eq!(categ.value_kind, ValueKind::Categorical);
    assert_eq!(nums.value_kind, ValueKind::Numeric);
}
