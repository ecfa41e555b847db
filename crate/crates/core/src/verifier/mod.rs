//! Baseline fact-checking system.
//!
//! A claim is decomposed into atomic subclaims; each subclaim retrieves
//! the most similar table representation, gets an LLM-generated SQL
//! query (retried with execution feedback), and receives a True / False
//! / NEI verdict from the query result; subclaim verdicts are then
//! synthesized into the claim's final verdict. Every step lands in a
//! `VerificationTrace`.

mod scorer;
mod scripted;

pub use scorer::{HttpScorer, LexicalScorer, RetrievalScorer};
pub use scripted::ScriptedGoldAdapter;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{
    AdapterError, ChatAdapter, ChatRequest, DECOMPOSE_PROMPT, GENERATE_SQL_PROMPT,
    SYNTHESIZE_PROMPT, VERDICT_SUBCLAIM_PROMPT,
};
use crate::claimgen::{parse_verdict, ClaimRecord, Verdict};
use crate::config::VerifierConfig;
use crate::store::{
    ColumnRole, ResultSet, SourceTable, SqlValue, StoreError, TableStore, ValueKind,
};

/// Searchable text form of one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRepresentation {
    pub table_id: String,
    pub text: String,
    pub token_estimate: usize,
}

/// One atomic piece of a claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subclaim {
    pub text: String,
    pub parent_claim_id: String,
    pub index: usize,
}

/// One SQL generation attempt and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlAttempt {
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_count: Option<usize>,
}

/// Everything recorded for one subclaim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubclaimTrace {
    pub subclaim: String,
    pub ranking: Vec<(String, f64)>,
    pub chosen_table: String,
    pub sql_attempts: Vec<SqlAttempt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_columns: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_rows: Option<Vec<Vec<SqlValue>>>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unparseable_verdict: bool,
}

/// Full audit trail for one claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationTrace {
    pub claim_id: String,
    pub claim_text: String,
    pub subclaims: Vec<SubclaimTrace>,
    pub final_verdict: Verdict,
}

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("adapter unavailable: {0}")]
    AdapterUnavailable(String),
    #[error("retrieval scorer unavailable: {0}")]
    ScorerUnavailable(String),
    #[error("table corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Builds the searchable representation: table name, description, and
/// the most frequent values of each categorical data column.
pub fn build_representation(
    store: &TableStore,
    table: &SourceTable,
    max_values_per_column: usize,
) -> Result<TableRepresentation, VerifierError> {
    let mut sections: Vec<String> = vec![table.name.clone()];
    if !table.description.is_empty() {
        sections.push(table.description.clone());
    }
    for column in &table.columns {
        let is_data_categorical = matches!(
            column.role,
            ColumnRole::ReferenceArea | ColumnRole::Measure
        ) && column.value_kind == ValueKind::Categorical;
        if !is_data_categorical {
            continue;
        }
        let values =
            top_values_by_frequency(store, &table.table_id, &column.column_name, max_values_per_column)?;
        if values.is_empty() {
            continue;
        }
        sections.push(format!("{}: {}", column.column_name, values.join(", ")));
    }
    let text = sections.join("\n");
    let token_estimate = text.split_whitespace().count();
    Ok(TableRepresentation {
        table_id: table.table_id.clone(),
        text,
        token_estimate,
    })
}

/// Most frequent values of a column, count descending then value
/// ascending.
fn top_values_by_frequency(
    store: &TableStore,
    table_id: &str,
    column: &str,
    limit: usize,
) -> Result<Vec<String>, VerifierError> {
    let quoted_col = crate::store::quote_ident(column);
    let quoted_table = crate::store::quote_ident(table_id);
    let result = store.run_query(&format!(
        "SELECT {quoted_col} AS v, COUNT(*) AS n FROM {quoted_table} \
         WHERE {quoted_col} IS NOT NULL \
         GROUP BY {quoted_col} ORDER BY n DESC, v ASC LIMIT {limit}"
    ))?;
    Ok(result
        .rows
        .iter()
        .filter_map(|row| row.first().and_then(|v| v.as_text().map(str::to_string)))
        .collect())
}

/// Representations for a whole corpus, sorted by table id.
pub fn build_corpus(
    store: &TableStore,
    max_values_per_column: usize,
) -> Result<Vec<TableRepresentation>, VerifierError> {
    let mut reps = store
        .list_tables()?
        .iter()
        .map(|t| build_representation(store, t, max_values_per_column))
        .collect::<Result<Vec<_>, _>>()?;
    reps.sort_by(|a, b| a.table_id.cmp(&b.table_id));
    Ok(reps)
}

/// The whole claim as a single subclaim; the CI decomposer.
pub fn pass_through_decompose(claim_text: &str, parent_claim_id: &str) -> Vec<Subclaim> {
    vec![Subclaim {
        text: claim_text.to_string(),
        parent_claim_id: parent_claim_id.to_string(),
        index: 0,
    }]
}

/// Adapter-driven decomposition: one subclaim per response line, retried
/// once on empty output, optionally falling back to pass-through.
pub fn decompose(
    claim_text: &str,
    parent_claim_id: &str,
    adapter: &dyn ChatAdapter,
    model: &str,
    fallback: bool,
) -> Result<Vec<Subclaim>, VerifierError> {
    let prompt = DECOMPOSE_PROMPT.render(&[("claim", claim_text)]);
    let request = ChatRequest::single(model, 0.0, prompt);
    let mut failure = "empty decomposition".to_string();
    for _ in 0..2 {
        match adapter.complete(&request) {
            Ok(response) => {
                let subclaims: Vec<Subclaim> = response
                    .lines()
                    .map(|l| l.trim().trim_start_matches(['-', '*', ' ']))
                    .filter(|l| !l.is_empty())
                    .enumerate()
                    .map(|(index, text)| Subclaim {
                        text: text.to_string(),
                        parent_claim_id: parent_claim_id.to_string(),
                        index,
                    })
                    .collect();
                if !subclaims.is_empty() {
                    return Ok(subclaims);
                }
            }
            Err(e) => failure = e.to_string(),
        }
    }
    if fallback {
        Ok(pass_through_decompose(claim_text, parent_claim_id))
    } else {
        Err(VerifierError::AdapterUnavailable(failure))
    }
}

/// Ranks the corpus against a subclaim: scorer scores all candidates,
/// the reranker (when the scorer has one) reorders the top n. Ties break
/// by table id.
pub fn retrieve_table(
    subclaim: &str,
    corpus: &[TableRepresentation],
    scorer: &dyn RetrievalScorer,
    top_n: usize,
) -> Result<Vec<(String, f64)>, VerifierError> {
    if corpus.is_empty() {
        return Err(VerifierError::EmptyCorpus);
    }
    let texts: Vec<&str> = corpus.iter().map(|r| r.text.as_str()).collect();
    let scores = scorer.score(subclaim, &texts)?;
    let mut ranked: Vec<(String, f64)> = corpus
        .iter()
        .zip(&scores)
        .map(|(rep, &score)| (rep.table_id.clone(), score))
        .collect();
    sort_ranked(&mut ranked);
    ranked.truncate(top_n);

    let top_texts: Vec<&str> = ranked
        .iter()
        .map(|(id, _)| {
            corpus
                .iter()
                .find(|r| &r.table_id == id)
                .map(|r| r.text.as_str())
                .expect("ranked id from corpus")
        })
        .collect();
    if let Some(rerank_scores) = scorer.rerank(subclaim, &top_texts)? {
        for (entry, score) in ranked.iter_mut().zip(rerank_scores) {
            entry.1 = score;
        }
        sort_ranked(&mut ranked);
    }
    Ok(ranked)
}

fn sort_ranked(ranked: &mut [(String, f64)]) {
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
}

/// Keeps every unique value when there are at most `cap`; otherwise the
/// `cap` most BM25-similar values to the subclaim, ties by input order.
pub fn select_values(
    subclaim: &str,
    uniques: &[String],
    cap: usize,
    params: crate::bm25::Bm25Params,
) -> Vec<String> {
    if uniques.len() <= cap {
        return uniques.to_vec();
    }
    let docs: Vec<&str> = uniques.iter().map(String::as_str).collect();
    let scores = crate::bm25::bm25_scores(subclaim, &docs, params);
    let mut order: Vec<usize> = (0..uniques.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.cmp(&b))
    });
    order.truncate(cap);
    order.into_iter().map(|i| uniques[i].clone()).collect()
}

/// Strips code fences and labels from an adapter's SQL response.
fn extract_sql(response: &str) -> String {
    let mut text = response.trim();
    if let Some(stripped) = text.strip_prefix("```") {
        let stripped = stripped.strip_prefix("sql").unwrap_or(stripped);
        text = stripped.strip_suffix("```").map_or(stripped, |s| s);
    }
    let text = text.trim().trim_start_matches("SQL:").trim();
    text.trim_end_matches(';').trim().to_string()
}

/// Outcome of the SQL stage for one subclaim.
pub struct SqlOutcome {
    pub attempts: Vec<SqlAttempt>,
    /// The first successful query and its result, if any attempt ran.
    pub success: Option<(String, ResultSet)>,
}

/// Prompts for SQL, executes it, and feeds failures back into the next
/// attempt, up to `max_attempts`. The observation value column's values
/// never appear in the prompt.
#[allow(clippy::too_many_arguments)]
pub fn generate_sql(
    subclaim: &str,
    table: &SourceTable,
    store: &TableStore,
    adapter: &dyn ChatAdapter,
    model: &str,
    config: &VerifierConfig,
) -> Result<SqlOutcome, VerifierError> {
    let columns: Vec<&str> = table.columns.iter().map(|c| c.column_name.as_str()).collect();
    let mut value_lines: Vec<String> = Vec::new();
    for column in &table.columns {
        if column.role == ColumnRole::ObservationValue {
            continue;
        }
        let (uniques, _) = store.unique_values(&table.table_id, &column.column_name, None)?;
        if uniques.is_empty() {
            continue;
        }
        let selected = select_values(
            subclaim,
            &uniques,
            config.select_values_cap,
            crate::bm25::Bm25Params {
                k1: config.bm25_k1,
                b: config.bm25_b,
            },
        );
        value_lines.push(format!("{}: {}", column.column_name, selected.join(" | ")));
    }

    let mut attempts: Vec<SqlAttempt> = Vec::new();
    let mut feedback = String::new();
    for _ in 0..config.sql_max_attempts {
        let prompt = GENERATE_SQL_PROMPT.render(&[
            ("subclaim", subclaim),
            ("table_id", &table.table_id),
            ("table_name", &table.name),
            ("table_description", &table.description),
            ("columns", &columns.join(", ")),
            ("values", &value_lines.join("\n")),
            ("feedback", &feedback),
        ]);
        let response = match adapter.complete(&ChatRequest::single(model, 0.0, prompt)) {
            Ok(response) => response,
            Err(AdapterError::Unavailable(reason)) => {
                return Err(VerifierError::AdapterUnavailable(reason))
            }
            Err(AdapterError::EmptyGeneration) => {
                attempts.push(SqlAttempt {
                    query: String::new(),
                    error: Some("empty generation".to_string()),
                    row_count: None,
                });
                feedback = "A previous attempt produced no SQL at all.".to_string();
                continue;
            }
        };
        let sql = extract_sql(&response);
        match store.run_query(&sql) {
            Ok(result) => {
                attempts.push(SqlAttempt {
                    query: sql.clone(),
                    error: None,
                    row_count: Some(result.rows.len()),
                });
                return Ok(SqlOutcome {
                    attempts,
                    success: Some((sql, result)),
                });
            }
            Err(e) => {
                let message = e.to_string();
                feedback = format!("A previous attempt failed.\nQuery: {sql}\nError: {message}");
                attempts.push(SqlAttempt {
                    query: sql,
                    error: Some(message),
                    row_count: None,
                });
            }
        }
    }
    Ok(SqlOutcome {
        attempts,
        success: None,
    })
}

/// Renders query results into the verdict prompt and parses the verdict
/// strictly; an unparseable response after one re-ask becomes NEI with a
/// flag.
pub fn verdict_subclaim(
    subclaim: &str,
    result: &ResultSet,
    adapter: &dyn ChatAdapter,
    model: &str,
) -> Result<(Verdict, bool), VerifierError> {
    const MAX_PROMPT_ROWS: usize = 100;
    let mut rows_text = result
        .rows
        .iter()
        .take(MAX_PROMPT_ROWS)
        .map(|row| {
            row.iter()
                .map(render_sql_value)
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect::<Vec<_>>()
        .join("\n");
    if result.rows.is_empty() {
        rows_text = "(empty result)".to_string();
    } else if result.rows.len() > MAX_PROMPT_ROWS {
        rows_text.push_str("\n(further rows omitted)");
    }
    let prompt = VERDICT_SUBCLAIM_PROMPT.render(&[
        ("subclaim", subclaim),
        ("columns", &result.columns.join(", ")),
        ("rows", &rows_text),
    ]);
    let request = ChatRequest::single(model, 0.0, prompt);
    for _ in 0..2 {
        let response = adapter
            .complete(&request)
            .map_err(|e| VerifierError::AdapterUnavailable(e.to_string()))?;
        if let Some(verdict) = parse_verdict(&response) {
            return Ok((verdict, false));
        }
    }
    Ok((Verdict::Nei, true))
}

fn render_sql_value(value: &SqlValue) -> String {
    match value {
        SqlValue::Null => "NULL".to_string(),
        SqlValue::Integer(i) => i.to_string(),
        SqlValue::Real(r) => r.to_string(),
        SqlValue::Text(t) => t.clone(),
    }
}

/// How subclaim verdicts combine into the final verdict.
pub enum SynthesisMode<'a> {
    /// any False wins, then any NEI, else True
    Rule,
    Adapter {
        adapter: &'a dyn ChatAdapter,
        model: &'a str,
    },
}

pub fn synthesize(
    claim_text: &str,
    verdicts: &[Verdict],
    mode: &SynthesisMode<'_>,
) -> Result<Verdict, VerifierError> {
    assert!(!verdicts.is_empty(), "synthesize requires at least one verdict");
    match mode {
        SynthesisMode::Rule => Ok(rule_synthesis(verdicts)),
        SynthesisMode::Adapter { adapter, model } => {
            let verdict_list = verdicts
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let prompt = SYNTHESIZE_PROMPT
                .render(&[("claim", claim_text), ("verdicts", &verdict_list)]);
            let response = adapter
                .complete(&ChatRequest::single(model, 0.0, prompt))
                .map_err(|e| VerifierError::AdapterUnavailable(e.to_string()))?;
            Ok(parse_verdict(&response).unwrap_or_else(|| rule_synthesis(verdicts)))
        }
    }
}

pub fn rule_synthesis(verdicts: &[Verdict]) -> Verdict {
    if verdicts.contains(&Verdict::False) {
        Verdict::False
    } else if verdicts.contains(&Verdict::Nei) {
        Verdict::Nei
    } else {
        Verdict::True
    }
}

/// Decomposition strategy for a run.
pub enum DecomposeMode<'a> {
    PassThrough,
    Adapter {
        adapter: &'a dyn ChatAdapter,
        model: String,
        fallback: bool,
    },
}

/// A configured verifier run over one store and corpus.
pub struct Verifier<'a> {
    pub store: &'a TableStore,
    pub corpus: Vec<TableRepresentation>,
    pub scorer: &'a dyn RetrievalScorer,
    pub sql_adapter: &'a dyn ChatAdapter,
    pub verdict_adapter: &'a dyn ChatAdapter,
    pub model: String,
    pub config: VerifierConfig,
    pub decompose_mode: DecomposeMode<'a>,
    pub synthesis_rule: bool,
    /// Gold-tables ablation: claim id -> gold table id, bypassing retrieval.
    pub gold_tables: Option<BTreeMap<String, String>>,
}

impl Verifier<'_> {
    pub fn verify_claim(&self, claim: &ClaimRecord) -> Result<VerificationTrace, VerifierError> {
        let subclaims = match &self.decompose_mode {
            DecomposeMode::PassThrough => pass_through_decompose(&claim.text, &claim.claim_id),
            DecomposeMode::Adapter {
                adapter,
                model,
                fallback,
            } => decompose(&claim.text, &claim.claim_id, *adapter, model, *fallback)?,
        };

        let mut traces: Vec<SubclaimTrace> = Vec::with_capacity(subclaims.len());
        for subclaim in &subclaims {
            let gold = self
                .gold_tables
                .as_ref()
                .and_then(|m| m.get(&claim.claim_id));
            let (ranking, chosen_table) = match gold {
                Some(table_id) => (vec![(table_id.clone(), 1.0)], table_id.clone()),
                None => {
                    let ranking = retrieve_table(
                        &subclaim.text,
                        &self.corpus,
                        self.scorer,
                        self.config.retrieval_top_n,
                    )?;
                    let chosen = ranking
                        .first()
                        .map(|(id, _)| id.clone())
                        .ok_or(VerifierError::EmptyCorpus)?;
                    (ranking, chosen)
                }
            };
            let table = self.store.get_table(&chosen_table)?;
            let outcome = generate_sql(
                &subclaim.text,
                &table,
                self.store,
                self.sql_adapter,
                &self.model,
                &self.config,
            )?;
            let (verdict, unparseable, result) = match &outcome.success {
                Some((_, result)) => {
                    let (verdict, unparseable) = verdict_subclaim(
                        &subclaim.text,
                        result,
                        self.verdict_adapter,
                        &self.model,
                    )?;
                    (verdict, unparseable, Some(result.clone()))
                }
                // every attempt failed: forced NEI
                None => (Verdict::Nei, false, None),
            };
            traces.push(SubclaimTrace {
                subclaim: subclaim.text.clone(),
                ranking,
                chosen_table,
                sql_attempts: outcome.attempts,
                result_columns: result.as_ref().map(|r| r.columns.clone()),
                result_rows: result.map(|r| r.rows),
                verdict,
                unparseable_verdict: unparseable,
            });
        }

        let verdicts: Vec<Verdict> = traces.iter().map(|t| t.verdict).collect();
        let final_verdict = if self.synthesis_rule {
            rule_synthesis(&verdicts)
        } else {
            synthesize(
                &claim.text,
                &verdicts,
                &SynthesisMode::Adapter {
                    adapter: self.verdict_adapter,
                    model: &self.model,
                },
            )?
        };
        Ok(VerificationTrace {
            claim_id: claim.claim_id.clone(),
            claim_text: claim.text.clone(),
            subclaims: traces,
            final_verdict,
        })
    }

    /// Verifies a batch; traces come back sorted by claim id.
    pub fn verify_batch(
        &self,
        claims: &[ClaimRecord],
    ) -> Result<Vec<VerificationTrace>, VerifierError> {
        let mut traces = claims
            .iter()
            .map(|c| self.verify_claim(c))
            .collect::<Result<Vec<_>, _>>()?;
        traces.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
        Ok(traces)
    }
}

#[cfg(test)]
mod tests;
