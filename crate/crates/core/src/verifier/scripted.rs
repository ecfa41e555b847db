//! Scripted adapter that answers the verifier's prompts from gold
//! samples: decomposition returns the claim unchanged, SQL generation
//! emits the sample's known-correct query against whatever table the
//! prompt names, and verdicts come from evidence presence plus template
//! field comparison. Runs the full system with zero network, and powers
//! the end-to-end checks.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::adapters::{AdapterError, ChatAdapter, ChatRequest};
use crate::claimgen::template::{parse_claim, parsed_matches_payload};
use crate::claimgen::ClaimRecord;
use crate::extract::DataSample;
use crate::hash::derive_seed;
use crate::store::quote_ident;

/// Marker lines identifying which prompt the verifier sent.
const DECOMPOSE_MARKER: &str = "Decompose the claim below";
const SQL_MARKER: &str = "Write a single read-only SQL query";
const VERDICT_MARKER: &str = "Decide whether the subclaim";
const SYNTHESIZE_MARKER: &str = "Combine the subclaim verdicts";

pub struct ScriptedGoldAdapter {
    by_claim_text: BTreeMap<String, (ClaimRecord, DataSample)>,
    /// Column names used by the fixture corpus for the gold query.
    area_column: String,
    time_column: String,
    value_column: String,
    status_column: Option<String>,
    /// Fraction of SQL prompts answered with deliberately broken SQL.
    sql_failure_rate: f64,
    seed: u64,
}

impl ScriptedGoldAdapter {
    pub fn new(pairs: &[(ClaimRecord, DataSample)]) -> Self {
        Self {
            by_claim_text: pairs
                .iter()
                .map(|(c, s)| (c.text.clone(), (c.clone(), s.clone())))
                .collect(),
            area_column: "REF_AREA".to_string(),
            time_column: "TIME_PERIOD".to_string(),
            value_column: "obs_value".to_string(),
            status_column: Some("OBS_STATUS".to_string()),
            sql_failure_rate: 0.0,
            seed: 0,
        }
    }

    /// Makes the SQL stage fail outright for a seeded fraction of
    /// subclaims, for degradation experiments.
    pub fn with_lossy_sql(mut self, failure_rate: f64, seed: u64) -> Self {
        self.sql_failure_rate = failure_rate;
        self.seed = seed;
        self
    }

    fn lookup(&self, subclaim: &str) -> Option<&(ClaimRecord, DataSample)> {
        self.by_claim_text.get(subclaim)
    }

    /// The known-correct query: the country's full series for the
    /// sample's measure combination, against the prompt's table. The
    /// status filter applies only when the prompt lists the column; the
    /// combination filters always apply, so a wrong table fails or comes
    /// back empty.
    fn gold_sql(&self, sample: &DataSample, prompt_table: &str, prompt_columns: &str) -> String {
        let mut filters = vec![format!(
            "{} = '{}'",
            quote_ident(&self.area_column),
            escape(sample.payload.country())
        )];
        for (column, value) in &sample.combination.assignments {
            filters.push(format!("{} = '{}'", quote_ident(column), escape(value)));
        }
        if let Some(status) = &self.status_column {
            if prompt_columns.split(", ").any(|c| c == status) {
                filters.push(format!("{} = 'normal'", quote_ident(status)));
            }
        }
        filters.push(format!("{} IS NOT NULL", quote_ident(&self.value_column)));
        format!(
            "SELECT {}, {}, {} FROM {} WHERE {}",
            quote_ident(&self.area_column),
            quote_ident(&self.time_column),
            quote_ident(&self.value_column),
            quote_ident(prompt_table),
            filters.join(" AND ")
        )
    }

    /// Evidence check: each evidence row must appear in some result line
    /// with its country, year, and value.
    fn evidence_in_result(&self, sample: &DataSample, rows_block: &str) -> bool {
        sample.evidence_rows.iter().all(|evidence| {
            rows_block.lines().any(|line| {
                line.contains(&evidence.country)
                    && line.contains(&evidence.year.to_string())
                    && contains_value(line, evidence.value)
            })
        })
    }
}

fn escape(value: &str) -> String {
    value.replace('\'', "''")
}

fn contains_value(line: &str, value: f64) -> bool {
    line.split(csv_separators)
        .filter_map(|cell| cell.trim().parse::<f64>().ok())
        .any(|v| {
            let scale = v.abs().max(value.abs()).max(1.0);
            (v - value).abs() <= 1e-9 * scale
        })
}

fn csv_separators(c: char) -> bool {
    c == ',' || c == '|' || c == '\t'
}

fn prompt_line<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt
        .lines()
        .find_map(|line| line.strip_prefix(label))
        .map(str::trim)
}

/// The block following `label:` up to the next labelled line or the end.
fn prompt_block<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    let start = prompt.find(label)? + label.len();
    let rest = &prompt[start..];
    Some(rest.trim_start_matches('\n'))
}

impl ChatAdapter for ScriptedGoldAdapter {
    fn complete(&self, request: &ChatRequest) -> Result<String, AdapterError> {
        let prompt = request
            .messages
            .last()
            .map(|m| m.content.as_str())
            .unwrap_or("");

        if prompt.contains(DECOMPOSE_MARKER) {
            let claim = prompt_line(prompt, "Claim:")
                .ok_or_else(|| AdapterError::Unavailable("no claim in prompt".to_string()))?;
            return Ok(claim.to_string());
        }

        if prompt.contains(SQL_MARKER) {
            let subclaim = prompt_line(prompt, "Subclaim:")
                .ok_or_else(|| AdapterError::Unavailable("no subclaim in prompt".to_string()))?;
            if self.sql_failure_rate > 0.0 {
                let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
                    self.seed,
                    &["lossy-sql", subclaim],
                ));
                if rng.gen_bool(self.sql_failure_rate) {
                    return Ok("SELECT broken FROM table_that_does_not_exist".to_string());
                }
            }
            let table = prompt_line(prompt, "Table:")
                .and_then(|l| l.split(&[' ', '—'][..]).next())
                .unwrap_or_default();
            let columns = prompt_line(prompt, "Columns:").unwrap_or_default();
            let Some((_, sample)) = self.lookup(subclaim) else {
                return Err(AdapterError::Unavailable(format!(
                    "no gold script for subclaim: {subclaim}"
                )));
            };
            return Ok(self.gold_sql(sample, table, columns));
        }

        if prompt.contains(VERDICT_MARKER) {
            let subclaim = prompt_line(prompt, "Subclaim:")
                .ok_or_else(|| AdapterError::Unavailable("no subclaim in prompt".to_string()))?;
            let Some((_, sample)) = self.lookup(subclaim) else {
                return Err(AdapterError::Unavailable(format!(
                    "no gold script for subclaim: {subclaim}"
                )));
            };
            let rows_block = prompt_block(prompt, "Query result rows:").unwrap_or("");
            if !self.evidence_in_result(sample, rows_block) {
                return Ok("NEI\nevidence rows not present in the query result".to_string());
            }
            let verdict = match parse_claim(sample.claim_type(), subclaim) {
                Some(parsed) if parsed_matches_payload(&parsed, sample) => "True",
                Some(_) => "False",
                None => "NEI",
            };
            return Ok(format!("{verdict}\nevidence comparison"));
        }

        if prompt.contains(SYNTHESIZE_MARKER) {
            let verdicts = prompt_line(prompt, "Subclaim verdicts:").unwrap_or("");
            let verdict = if verdicts.contains("False") {
                "False"
            } else if verdicts.contains("NEI") {
                "NEI"
            } else {
                "True"
            };
            return Ok(verdict.to_string());
        }

        Err(AdapterError::Unavailable(
            "unrecognized prompt shape".to_string(),
        ))
    }

    fn id(&self) -> String {
        if self.sql_failure_rate > 0.0 {
            format!("scripted-gold:lossy:{}", self.sql_failure_rate)
        } else {
            "scripted-gold".to_string()
        }
    }
}
