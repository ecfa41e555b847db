//! Claim generation: templates or a chat adapter, judge protocol, and
//! per-(table, claim type) sampling caps.

pub mod template;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{
    AdapterError, ChatAdapter, ChatRequest, GENERATE_CLAIM_PROMPT, JUDGE_CLAIM_PROMPT,
};
use crate::config::ClaimgenConfig;
use crate::extract::{ClaimType, DataSample};
use crate::hash::{content_id, derive_seed};
use crate::perturb::PerturbationDescriptor;

/// Claim languages supported by the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
    Hi,
    Es,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::En, Language::Zh, Language::Hi, Language::Es];

    pub fn tag(&self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
            Language::Hi => "hi",
            Language::Es => "es",
        }
    }

    pub fn english_name(&self) -> &'static str {
        match self {
            Language::En => "English",
            Language::Zh => "Chinese",
            Language::Hi => "Hindi",
            Language::Es => "Spanish",
        }
    }
}

impl std::str::FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "zh" => Ok(Language::Zh),
            "hi" => Ok(Language::Hi),
            "es" => Ok(Language::Es),
            other => Err(format!("unknown language tag: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimLabel {
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Template,
    Llm,
}

/// A natural-language claim with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub language: Language,
    pub text: String,
    pub label: ClaimLabel,
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationDescriptor>,
    pub generator: GeneratorKind,
    /// For false claims, the true claim they were derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
}

impl ClaimRecord {
    /// A true claim; the id binds sample, language, generator, prompt
    /// version, and text.
    pub fn new_true(
        sample_id: &str,
        language: Language,
        text: String,
        generator: GeneratorKind,
        prompt_hash: &str,
    ) -> Self {
        let generator_tag = match generator {
            GeneratorKind::Template => "template",
            GeneratorKind::Llm => "llm",
        };
        let claim_id = content_id([
            sample_id.as_bytes(),
            language.tag().as_bytes(),
            generator_tag.as_bytes(),
            prompt_hash.as_bytes(),
            text.as_bytes(),
        ]);
        Self {
            claim_id,
            language,
            text,
            label: ClaimLabel::True,
            sample_id: sample_id.to_string(),
            perturbation: None,
            generator,
            parent_id: None,
        }
    }
}

/// Judge outcome for one claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
    #[serde(rename = "NEI")]
    Nei,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::True => f.write_str("True"),
            Verdict::False => f.write_str("False"),
            Verdict::Nei => f.write_str("NEI"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub verdict: Verdict,
    pub justification: String,
    pub judge_id: String,
}

/// Table naming context carried into prompts.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TableContext {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Error)]
pub enum ClaimgenError {
    #[error("templates are English-only; requested {0}")]
    UnsupportedTemplateLanguage(&'static str),
    #[error("adapter unavailable: {0}")]
    AdapterUnavailable(String),
    #[error("adapter returned an empty generation")]
    EmptyGeneration,
    #[error("no verdict token found in judge response")]
    UnparseableVerdict,
}

/// Renders the deterministic English sentence for a sample.
pub fn render_template(sample: &DataSample, language: Language) -> Result<String, ClaimgenError> {
    if language != Language::En {
        return Err(ClaimgenError::UnsupportedTemplateLanguage(language.tag()));
    }
    Ok(template::render_english(sample))
}

/// Outcome of claim generation: the sentence and which path produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedText {
    pub text: String,
    pub generator: GeneratorKind,
    pub prompt_hash: String,
}

/// Generates a claim sentence through the adapter; on adapter failure the
/// English template is used when `fallback` is set.
pub fn generate_claim(
    sample: &DataSample,
    table: &TableContext,
    language: Language,
    adapter: &dyn ChatAdapter,
    model: &str,
    fallback: bool,
) -> Result<GeneratedText, ClaimgenError> {
    let payload_json = serde_json::to_string(&sample.payload).expect("payload serializes");
    let prompt = GENERATE_CLAIM_PROMPT.render(&[
        ("language", language.english_name()),
        ("table_name", &table.name),
        ("table_description", &table.description),
        ("combination", &sample.combination.label()),
        ("claim_type", &sample.claim_type().to_string()),
        ("payload", &payload_json),
    ]);
    let request = ChatRequest::single(model, 0.0, prompt);
    match adapter.complete(&request) {
        Ok(text) => {
            let sentence = first_sentence_line(&text);
            if sentence.is_empty() {
                return Err(ClaimgenError::EmptyGeneration);
            }
            Ok(GeneratedText {
                text: sentence,
                generator: GeneratorKind::Llm,
                prompt_hash: GENERATE_CLAIM_PROMPT.hash(),
            })
        }
        Err(AdapterError::EmptyGeneration) => Err(ClaimgenError::EmptyGeneration),
        Err(AdapterError::Unavailable(reason)) => {
            if fallback && language == Language::En {
                Ok(GeneratedText {
                    text: template::render_english(sample),
                    generator: GeneratorKind::Template,
                    prompt_hash: GENERATE_CLAIM_PROMPT.hash(),
                })
            } else {
                Err(ClaimgenError::AdapterUnavailable(reason))
            }
        }
    }
}

fn first_sentence_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string()
}

/// Judge protocol shared by the adapter judge and the rule judge.
pub trait ClaimJudge: Send + Sync {
    fn judge(
        &self,
        claim: &ClaimRecord,
        sample: &DataSample,
        table: &TableContext,
    ) -> Result<JudgeVerdict, ClaimgenError>;
    fn id(&self) -> String;
}

/// LLM judge: builds the judging prompt, parses the verdict token
/// strictly, and re-asks once before failing.
pub struct AdapterJudge<'a> {
    pub adapter: &'a dyn ChatAdapter,
    pub model: String,
}

impl ClaimJudge for AdapterJudge<'_> {
    fn judge(
        &self,
        claim: &ClaimRecord,
        sample: &DataSample,
        table: &TableContext,
    ) -> Result<JudgeVerdict, ClaimgenError> {
        let evidence = sample
            .evidence_rows
            .iter()
            .map(|e| format!("({}, {}, {})", e.country, e.year, e.value))
            .collect::<Vec<_>>()
            .join("; ");
        let payload_json = serde_json::to_string(&sample.payload).expect("payload serializes");
        let prompt = JUDGE_CLAIM_PROMPT.render(&[
            ("table_description", &table.description),
            ("evidence", &evidence),
            ("claim_type", &sample.claim_type().to_string()),
            ("payload", &payload_json),
            ("claim", &claim.text),
        ]);
        let request = ChatRequest::single(&self.model, 0.0, prompt);
        for _ in 0..2 {
            let response = self
                .adapter
                .complete(&request)
                .map_err(|e| ClaimgenError::AdapterUnavailable(e.to_string()))?;
            if let Some(verdict) = parse_verdict(&response) {
                return Ok(JudgeVerdict {
                    verdict,
                    justification: response,
                    judge_id: self.id(),
                });
            }
        }
        Err(ClaimgenError::UnparseableVerdict)
    }

    fn id(&self) -> String {
        format!("adapter:{}:{}", self.adapter.id(), self.model)
    }
}

/// Deterministic judge that re-parses the template fields of a claim and
/// compares them against the sample payload. Runs with no network; the
/// pipeline's CI judge.
pub struct RuleJudge;

impl ClaimJudge for RuleJudge {
    fn judge(
        &self,
        claim: &ClaimRecord,
        sample: &DataSample,
        _table: &TableContext,
    ) -> Result<JudgeVerdict, ClaimgenError> {
        let verdict = match template::parse_claim(sample.claim_type(), &claim.text) {
            Some(parsed) => {
                if template::parsed_matches_payload(&parsed, sample) {
                    Verdict::True
                } else {
                    Verdict::False
                }
            }
            None => Verdict::Nei,
        };
        Ok(JudgeVerdict {
            verdict,
            justification: "template field comparison".to_string(),
            judge_id: self.id(),
        })
    }

    fn id(&self) -> String {
        "rule-judge-v1".to_string()
    }
}

/// Strict verdict parsing: the first word of the first non-empty line
/// must be one of the three verdict tokens.
pub fn parse_verdict(response: &str) -> Option<Verdict> {
    let first_line = response.lines().map(str::trim).find(|l| !l.is_empty())?;
    let token = first_line
        .split_whitespace()
        .next()?
        .trim_matches(|c: char| !c.is_alphanumeric());
    match token.to_ascii_lowercase().as_str() {
        "true" => Some(Verdict::True),
        "false" => Some(Verdict::False),
        "nei" => Some(Verdict::Nei),
        _ => None,
    }
}

/// A claim survives curation only when every judge found it True.
///
/// # Panics
/// Panics when called with no verdicts.
pub fn keep_if_unanimous(verdicts: &[JudgeVerdict]) -> bool {
    assert!(!verdicts.is_empty(), "keep_if_unanimous requires at least one verdict");
    verdicts.iter().all(|v| v.verdict == Verdict::True)
}

/// Uniform random selection without replacement per (table, claim type)
/// group, capped per language. Deterministic given the seed and stable
/// under permutation of input order.
pub fn apply_caps(
    samples: &[DataSample],
    config: &ClaimgenConfig,
    language: Language,
    seed: u64,
) -> Vec<DataSample> {
    let cap = match language {
        Language::En => config.cap_english,
        _ => config.cap_other,
    };
    let mut groups: BTreeMap<(String, ClaimType), Vec<&DataSample>> = BTreeMap::new();
    for sample in samples {
        groups
            .entry((sample.table_id.clone(), sample.claim_type()))
            .or_default()
            .push(sample);
    }
    let mut selected: Vec<DataSample> = Vec::new();
    for ((table_id, claim_type), mut group) in groups {
        group.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        group.dedup_by(|a, b| a.sample_id == b.sample_id);
        if group.len() <= cap {
            selected.extend(group.into_iter().cloned());
            continue;
        }
        let group_seed = derive_seed(
            seed,
            &["caps", &table_id, &claim_type.to_string(), language.tag()],
        );
        let mut rng = ChaCha20Rng::seed_from_u64(group_seed);
        let chosen = rand::seq::index::sample(&mut rng, group.len(), cap);
        let mut picked: Vec<DataSample> =
            chosen.into_iter().map(|i| group[i].clone()).collect();
        picked.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        selected.extend(picked);
    }
    selected.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    selected
}
