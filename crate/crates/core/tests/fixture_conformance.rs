//! The generated fixture's manifest is ground truth (naive recounts plus
//! the brute-force reference extractors); these tests drive the
//! production ingestion, preprocessing, and extraction paths against it.

use std::collections::BTreeMap;

use statclaim_core::config::{ExtractConfig, PreprocessConfig, StoreConfig};
use statclaim_core::extract::ClaimType;
use statclaim_core::fixture::{generate_fixture, theme_roles, FixtureParams};
use statclaim_core::pipeline::{extract_samples, ingest_corpus, preprocess_tables};
use statclaim_core::store::{ColumnRole, TableStore};
use statclaim_core::verifier::build_representation;

fn build(params: &FixtureParams) -> (tempfile::TempDir, TableStore, statclaim_core::fixture::FixtureManifest) {
    let dir = tempfile::tempdir().expect("tempdir");
    let (_, manifest) = generate_fixture(params, dir.path()).expect("fixture generates");
    let store = TableStore::open_in_memory(StoreConfig::default()).expect("store opens");
    ingest_corpus(&store, &dir.path().join("corpus.json"), false).expect("corpus ingests");
    (dir, store, manifest)
}

#[test]
fn ingested_tables_match_manifest_shape() {
    let (_dir, store, manifest) = build(&FixtureParams::default());
    for (index, expected) in manifest.tables.iter().enumerate() {
        let table = store.get_table(&expected.table_id).expect("table present");
        assert_eq!(table.row_count, expected.raw_rows, "{}", expected.table_id);
        let measures = table
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Measure)
            .count();
        let identifiers = table
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::MeasureIdentifier)
            .count();
        assert_eq!(measures, expected.measure_columns);
        assert_eq!(identifiers, expected.identifier_columns);
        // classified roles match the theme blueprint
        let blueprint: BTreeMap<String, ColumnRole> = theme_roles(index).into_iter().collect();
        for column in &table.columns {
            assert_eq!(
                Some(&column.role),
                blueprint.get(&column.column_name),
                "role mismatch for {}.{}",
                expected.table_id,
                column.column_name
            );
        }
    }
    // the flagship table is exactly the documented shape
    let transport = &manifest.tables[0];
    assert_eq!(transport.table_id, "transport");
    assert_eq!(transport.raw_rows, 2400);
    assert_eq!(transport.measure_columns, 3);
}

#[test]
fn sql_count_and_unique_values_match_manifest() {
    let params = FixtureParams {
        n_countries: 37,
        ..Default::default()
    };
    let (_dir, store, manifest) = build(&params);
    for expected in &manifest.tables {
        let count = store
            .run_query(&format!("SELECT COUNT(*) FROM \"{}\"", expected.table_id))
            .expect("count query runs");
        assert_eq!(
            count.rows[0][0],
            statclaim_core::store::SqlValue::Integer(expected.raw_rows as i64)
        );
    }
    // a column with 37 distinct values truncates to 20 under the limit
    let expected_distinct = manifest.tables[0].distinct_counts["REF_AREA"];
    assert_eq!(expected_distinct, 37);
    let (values, total) = store
        .unique_values("transport", "REF_AREA", Some(20))
        .expect("unique values");
    assert_eq!(values.len(), 20);
    assert_eq!(total, expected_distinct);
    let mut sorted = values.clone();
    sorted.sort();
    assert_eq!(values, sorted, "values come back in lexicographic order");
}

#[test]
fn cleaning_and_windows_match_manifest() {
    let (_dir, store, manifest) = build(&FixtureParams::default());
    let tables = store.list_tables().expect("tables list");
    let (reports, ready) =
        preprocess_tables(&store, &tables, &PreprocessConfig::default()).expect("preprocess");
    assert_eq!(ready.len(), manifest.tables.len());
    for ready_table in &ready {
        let expected = manifest
            .tables
            .iter()
            .find(|t| t.table_id == ready_table.table.table_id)
            .expect("expectation exists");
        assert_eq!(
            ready_table.view.rows.len(),
            expected.clean_rows,
            "clean rows for {}",
            expected.table_id
        );
        assert_eq!(
            Some((ready_table.window.start_year, ready_table.window.end_year)),
            expected.window,
            "window for {}",
            expected.table_id
        );
        assert_eq!(
            ready_table.combinations.len(),
            expected.combination_count,
            "combinations for {}",
            expected.table_id
        );
        // supports partition the cleaned rows
        let support_sum: usize = ready_table.combinations.iter().map(|(_, s)| s).sum();
        assert_eq!(support_sum, ready_table.view.rows.len());
    }
    assert_eq!(reports.len(), manifest.tables.len());
}

#[test]
fn production_extraction_counts_match_reference_manifest() {
    let (_dir, store, manifest) = build(&FixtureParams::default());
    let tables = store.list_tables().expect("tables list");
    let (_, ready) =
        preprocess_tables(&store, &tables, &PreprocessConfig::default()).expect("preprocess");
    let samples = extract_samples(&ready, &ExtractConfig::default());

    for expected in &manifest.tables {
        let mut counts: BTreeMap<ClaimType, usize> = BTreeMap::new();
        for sample in samples.iter().filter(|s| s.table_id == expected.table_id) {
            *counts.entry(sample.claim_type()).or_insert(0) += 1;
        }
        for claim_type in ClaimType::ALL {
            assert_eq!(
                counts.get(&claim_type).copied().unwrap_or(0),
                expected.expected_counts.get(&claim_type).copied().unwrap_or(0),
                "{} count for {}",
                claim_type,
                expected.table_id
            );
        }
    }
}

#[test]
fn representations_are_stable_for_fixed_corpus() {
    let (_dir, store, _) = build(&FixtureParams::default());
    let table = store.get_table("transport").expect("table");
    let rep_a = build_representation(&store, &table, 10).expect("representation");
    let rep_b = build_representation(&store, &table, 10).expect("representation");
    assert_eq!(rep_a, rep_b);
    assert!(rep_a.text.starts_with("Road transport accidents\n"));
    assert!(rep_a.text.contains("MEASURE:"));
    // value lists honor the per-column cap
    for line in rep_a.text.lines().skip(2) {
        let values = line.split(": ").nth(1).unwrap_or("");
        assert!(values.split(", ").count() <= 10, "overlong line: {line}");
    }
}
