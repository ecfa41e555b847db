use std::collections::BTreeMap;
use std::io::Write;

use super::*;
use crate::adapters::ScriptedAdapter;
use crate::bm25::Bm25Params;
use crate::config::StoreConfig;
use crate::store::TableMeta;

fn store_with(contents: &str, table_id: &str, name: &str, description: &str) -> TableStore {
    let store = TableStore::open_in_memory(StoreConfig::default()).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(contents.as_bytes()).unwrap();
    store
        .ingest_table(
            file.path(),
            &TableMeta {
                table_id: table_id.to_string(),
                name: name.to_string(),
                description: description.to_string(),
                role_hints: BTreeMap::new(),
            },
            false,
        )
        .unwrap();
    store
}

#[test]
fn representation_concatenates_name_description_values() {
    let store = store_with(
        "REF_AREA,TIME_PERIOD,MEASURE,obs_value\n\
         SWE,2019,Fatalities,1\nSWE,2020,Fatalities,2\nFRA,2019,Crashes,3\n",
        "roads",
        "Road accidents",
        "Casualties on roads",
    );
    let table = store.get_table("roads").unwrap();
    let rep = build_representation(&store, &table, 10).unwrap();
    let lines: Vec<&str> = rep.text.lines().collect();
    assert_eq!(lines[0], "Road accidents");
    assert_eq!(lines[1], "Casualties on roads");
    assert!(lines.contains(&"REF_AREA: SWE, FRA"));
    // Fatalities occurs twice, Crashes once: frequency order
    assert!(lines.contains(&"MEASURE: Fatalities, Crashes"));
    assert_eq!(rep.token_estimate, rep.text.split_whitespace().count());
}

#[test]
fn representation_omits_empty_description() {
    let store = store_with(
        "REF_AREA,TIME_PERIOD,obs_value\nSWE,2019,1\n",
        "bare",
        "Bare table",
        "",
    );
    let table = store.get_table("bare").unwrap();
    let rep = build_representation(&store, &table, 10).unwrap();
    assert!(!rep.text.contains("\n\n"));
    assert!(rep.text.starts_with("Bare table\n"));
}

#[test]
fn decompose_splits_lines_and_falls_back() {
    let adapter = ScriptedAdapter::new("d").push("first part\nsecond part");
    let subclaims = decompose("big claim", "c1", &adapter, "m", false).unwrap();
    assert_eq!(subclaims.len(), 2);
    assert_eq!(subclaims[0].text, "first part");
    assert_eq!(subclaims[1].index, 1);

    let passthrough = pass_through_decompose("whole claim", "c2");
    assert_eq!(passthrough.len(), 1);
    assert_eq!(passthrough[0].text, "whole claim");

    let empty = ScriptedAdapter::new("e").push("").push("");
    let err = decompose("claim", "c3", &empty, "m", false).unwrap_err();
    assert!(matches!(err, VerifierError::AdapterUnavailable(_)));

    let empty_again = ScriptedAdapter::new("e2").push("").push("");
    let fallback = decompose("claim", "c4", &empty_again, "m", true).unwrap();
    assert_eq!(fallback.len(), 1);
}

fn toy_corpus() -> Vec<TableRepresentation> {
    let texts = [
        ("alpha", "road accidents\nfatalities crashes injuries"),
        ("beta", "hospital beds\nadmissions discharges"),
        ("gamma", "energy use\nconsumption renewables"),
    ];
    texts
        .iter()
        .map(|(id, text)| TableRepresentation {
            table_id: id.to_string(),
            text: text.to_string(),
            token_estimate: 5,
        })
        .collect()
}

#[test]
fn retrieval_ranks_exact_name_match_first() {
    let corpus = toy_corpus();
    let scorer = LexicalScorer::default();
    let ranked = retrieve_table("road accidents in sweden", &corpus, &scorer, 5).unwrap();
    assert_eq!(ranked[0].0, "alpha");
    assert!(ranked[0].1 > ranked[1].1);
}

#[test]
fn retrieval_single_table_corpus_always_wins() {
    let corpus = vec![toy_corpus().remove(1)];
    let scorer = LexicalScorer::default();
    let ranked = retrieve_table("anything at all", &corpus, &scorer, 5).unwrap();
    assert_eq!(ranked.len(), 1);
    assert_eq!(ranked[0].0, "beta");
}

#[test]
fn retrieval_ties_break_lexicographically() {
    let corpus = toy_corpus();
    let scorer = LexicalScorer::default();
    // no query term matches anything: all scores zero
    let ranked = retrieve_table("zzz qqq", &corpus, &scorer, 5).unwrap();
    let ids: Vec<&str> = ranked.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(ids, vec!["alpha", "beta", "gamma"]);
}

struct FlippingScorer;

impl RetrievalScorer for FlippingScorer {
    fn score(&self, _query: &str, candidates: &[&str]) -> Result<Vec<f64>, VerifierError> {
        // descending by input order
        Ok((0..candidates.len()).map(|i| -(i as f64)).collect())
    }

    fn rerank(&self, _query: &str, candidates: &[&str]) -> Result<Option<Vec<f64>>, VerifierError> {
        // reverse the first-pass order
        Ok(Some((0..candidates.len()).map(|i| i as f64).collect()))
    }

    fn kind(&self) -> &'static str {
        "flipping"
    }
}

#[test]
fn rerank_scores_replace_first_pass_within_top_n() {
    let corpus = toy_corpus();
    let ranked = retrieve_table("q", &corpus, &FlippingScorer, 2).unwrap();
    // first pass picks alpha, beta; rerank flips them
    let ids: Vec<&str> = ranked.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(ids, vec!["beta", "alpha"]);
}

#[test]
fn select_values_cap_rules() {
    let params = Bm25Params::default();
    let twelve: Vec<String> = (0..12).map(|i| format!("v{i:02}")).collect();
    assert_eq!(select_values("query", &twelve, 20, params).len(), 12);

    let many: Vec<String> = (0..37).map(|i| format!("v{i:02}")).collect();
    assert_eq!(select_values("query", &many, 20, params).len(), 20);

    let mut countries: Vec<String> = (0..49).map(|i| format!("Country{i:02}")).collect();
    countries.push("Sweden".to_string());
    let selected = select_values(
        "Sweden was among the top 5 countries",
        &countries,
        20,
        params,
    );
    assert!(selected.contains(&"Sweden".to_string()));
}

const SQL_FIXTURE: &str = "\
REF_AREA,TIME_PERIOD,obs_value\nSWE,2019,4.5\nFRA,2019,3.1\n";

#[test]
fn sql_generation_first_try() {
    let store = store_with(SQL_FIXTURE, "t1", "T", "");
    let table = store.get_table("t1").unwrap();
    let adapter = ScriptedAdapter::new("sql").with_default("SELECT * FROM t1");
    let outcome = generate_sql(
        "subclaim",
        &table,
        &store,
        &adapter,
        "m",
        &VerifierConfig::default(),
    )
    .unwrap();
    assert_eq!(outcome.attempts.len(), 1);
    let (sql, result) = outcome.success.unwrap();
    assert_eq!(sql, "SELECT * FROM t1");
    assert_eq!(result.rows.len(), 2);
}

#[test]
fn sql_generation_retries_until_success() {
    let store = store_with(SQL_FIXTURE, "t2", "T", "");
    let table = store.get_table("t2").unwrap();
    let adapter = ScriptedAdapter::new("sql")
        .push("SELECT nope FROM missing")
        .push("SELECT also_bad FROM")
        .push("```sql\nSELECT REF_AREA FROM t2;\n```");
    let outcome = generate_sql(
        "subclaim",
        &table,
        &store,
        &adapter,
        "m",
        &VerifierConfig::default(),
    )
    .unwrap();
    assert_eq!(outcome.attempts.len(), 3);
    assert!(outcome.attempts[0].error.is_some());
    assert!(outcome.attempts[1].error.is_some());
    assert!(outcome.success.is_some());
}

#[test]
fn sql_generation_gives_up_after_three() {
    let store = store_with(SQL_FIXTURE, "t3", "T", "");
    let table = store.get_table("t3").unwrap();
    let adapter = ScriptedAdapter::new("sql").with_default("SELECT broken FROM nowhere");
    let outcome = generate_sql(
        "subclaim",
        &table,
        &store,
        &adapter,
        "m",
        &VerifierConfig::default(),
    )
    .unwrap();
    assert_eq!(outcome.attempts.len(), 3);
    assert!(outcome.success.is_none());
}

#[test]
fn sql_prompt_excludes_obs_value_values_but_lists_column() {
    let store = store_with(SQL_FIXTURE, "t4", "T", "");
    let table = store.get_table("t4").unwrap();
    let captured = std::sync::Mutex::new(String::new());
    let adapter = crate::adapters::FnAdapter::new("capture", |req: &ChatRequest| {
        *captured.lock().unwrap() = req.messages[0].content.clone();
        Ok("SELECT 1".to_string())
    });
    generate_sql(
        "subclaim",
        &table,
        &store,
        &adapter,
        "m",
        &VerifierConfig::default(),
    )
    .unwrap();
    let prompt = captured.lock().unwrap().clone();
    assert!(prompt.contains("REF_AREA, TIME_PERIOD, obs_value"));
    assert!(prompt.contains("REF_AREA: FRA | SWE"));
    // observation values 4.5 / 3.1 never appear
    assert!(!prompt.contains("4.5"));
    assert!(!prompt.contains("3.1"));
}

#[test]
fn subclaim_verdicts_parse_and_flag() {
    let result = ResultSet {
        columns: vec!["v".to_string()],
        rows: vec![vec![SqlValue::Integer(1)]],
        truncated: false,
    };
    for (response, expected) in [
        ("True\nbecause", Verdict::True),
        ("False — contradicts", Verdict::False),
        ("NEI", Verdict::Nei),
    ] {
        let adapter = ScriptedAdapter::new("v").with_default(response);
        let (verdict, flagged) = verdict_subclaim("s", &result, &adapter, "m").unwrap();
        assert_eq!(verdict, expected);
        assert!(!flagged);
    }
    let garbled = ScriptedAdapter::new("v").with_default("perhaps?");
    let (verdict, flagged) = verdict_subclaim("s", &result, &garbled, "m").unwrap();
    assert_eq!(verdict, Verdict::Nei);
    assert!(flagged);
}

#[test]
fn rule_synthesis_ordering() {
    use Verdict::*;
    assert_eq!(rule_synthesis(&[True, True]), True);
    assert_eq!(rule_synthesis(&[True, Nei]), Nei);
    assert_eq!(rule_synthesis(&[Nei, False]), False);
}

#[test]
fn extract_sql_strips_fences_and_labels() {
    assert_eq!(extract_sql("```sql\nSELECT 1;\n```"), "SELECT 1");
    assert_eq!(extract_sql("SQL: SELECT 2"), "SELECT 2");
    assert_eq!(extract_sql("  SELECT 3;  "), "SELECT 3");
}
