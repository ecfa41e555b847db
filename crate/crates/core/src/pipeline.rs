//! End-to-end pipeline wiring: fixture → ingest → preprocess → extract →
//! generate → perturb → split → verify → evaluate, with every artifact
//! written to disk in canonical order. All randomness flows from one
//! root seed through named sub-seeds; no stage reads OS entropy.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::HttpChatAdapter;
use crate::claimgen::{
    apply_caps, keep_if_unanimous, render_template, ClaimJudge, ClaimLabel, ClaimRecord,
    GeneratorKind, Language, RuleJudge, TableContext, Verdict,
};
use crate::config::{
    AdapterConfig, ClaimgenConfig, ExtractConfig, PartitionConfig, PerturbConfig,
    PreprocessConfig, StoreConfig, VerifierConfig,
};
use crate::eval::{retrieval_accuracy, verdict_accuracy, EvalError, EvalReport};
use crate::extract::{extract_all, DataSample};
use crate::fixture::{generate_fixture, FixtureError, FixtureParams};
use crate::hash::{derive_seed, sha256_hex};
use crate::jsonl::{read_json, write_json_pretty, write_jsonl};
use crate::partition::{split, ClaimTableRef, PartitionError, SplitManifest};
use crate::perturb::make_false_claims;
use crate::preprocess::{
    enumerate_combinations, ideal_time_window, clean_table, slice, PreprocessError,
    PreprocessReport,
};
use crate::store::{CorpusManifest, SourceTable, StoreError, TableStore};
use crate::verifier::{
    build_corpus, DecomposeMode, HttpScorer, LexicalScorer, RetrievalScorer, ScriptedGoldAdapter,
    VerificationTrace, Verifier, VerifierError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("fixture stage: {0}")]
    Fixture(#[from] FixtureError),
    #[error("ingest stage: {0}")]
    Store(#[from] StoreError),
    #[error("preprocess stage: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("split stage: {0}")]
    Partition(#[from] PartitionError),
    #[error("verify stage: {0}")]
    Verifier(#[from] VerifierError),
    #[error("evaluate stage: {0}")]
    Eval(#[from] EvalError),
    #[error("claim generation: {0}")]
    Claimgen(#[from] crate::claimgen::ClaimgenError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
}

/// Full pipeline configuration; every field has a default so a config
/// file can override any subset.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub seed: Option<u64>,
    pub fixture: FixtureParams,
    pub languages: Vec<Language>,
    pub store: StoreConfig,
    pub preprocess: PreprocessConfig,
    pub extract: ExtractConfig,
    pub claimgen: ClaimgenConfig,
    pub perturb: PerturbConfig,
    pub partition: PartitionConfig,
    pub verifier: VerifierConfig,
    /// Bypass retrieval and hand the verifier each claim's gold table.
    pub gold_tables: bool,
    /// Verify at most this many test claims.
    pub verify_limit: Option<usize>,
    /// When set, generation/judging/verification use this HTTP endpoint
    /// instead of the offline template + scripted path.
    pub adapter: Option<AdapterConfig>,
}

impl PipelineSettings {
    pub fn offline(seed: u64) -> Self {
        Self {
            seed: Some(seed),
            languages: vec![Language::En],
            ..Default::default()
        }
    }

    fn require_seed(&self) -> Result<u64, PipelineError> {
        self.seed
            .ok_or_else(|| PipelineError::Config("a seed is mandatory".to_string()))
    }
}

/// One preprocessed table ready for extraction.
pub struct ReadyTable {
    pub table: SourceTable,
    pub view: crate::preprocess::CleanedView,
    pub window: crate::preprocess::TimeWindow,
    pub combinations: Vec<(crate::preprocess::MeasureCombination, usize)>,
}

pub fn ingest_corpus(
    store: &TableStore,
    manifest_path: &Path,
    replace: bool,
) -> Result<Vec<SourceTable>, PipelineError> {
    let manifest: CorpusManifest = read_json(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    Ok(store.ingest_manifest(&manifest, base, replace)?)
}

/// Cleans and windows every table; exclusions become report entries, not
/// errors.
pub fn preprocess_tables(
    store: &TableStore,
    tables: &[SourceTable],
    config: &PreprocessConfig,
) -> Result<(Vec<PreprocessReport>, Vec<ReadyTable>), PipelineError> {
    let mut reports = Vec::new();
    let mut ready = Vec::new();
    for table in tables {
        let view = match clean_table(store, table) {
            Ok(view) => view,
            Err(PreprocessError::NoReferenceArea(id)) => {
                reports.push(PreprocessReport::Excluded {
                    table_id: id,
                    reason: "no reference-area column".to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let window = match ideal_time_window(&view, config) {
            Ok(window) => window,
            Err(PreprocessError::NoValidWindow(id)) => {
                reports.push(PreprocessReport::Excluded {
                    table_id: id,
                    reason: "no valid time window".to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let combinations = enumerate_combinations(&view);
        reports.push(PreprocessReport::Ready {
            table_id: table.table_id.clone(),
            clean_row_count: view.rows.len(),
            window: window.clone(),
            combination_count: combinations.len(),
        });
        ready.push(ReadyTable {
            table: table.clone(),
            view,
            window,
            combinations,
        });
    }
    Ok((reports, ready))
}

/// Extracts all six claim types from every (table, combination) slice;
/// output is globally sorted by sample id.
pub fn extract_samples(ready: &[ReadyTable], config: &ExtractConfig) -> Vec<DataSample> {
    let mut samples = Vec::new();
    for table in ready {
        for (combination, _) in &table.combinations {
            let measure_slice = slice(&table.view, combination, &table.window);
            samples.extend(extract_all(&measure_slice, config).samples);
        }
    }
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    samples.dedup_by(|a, b| a.sample_id == b.sample_id);
    samples
}

/// Template-based claim generation with cap sampling and judge curation.
/// English only: other languages need the adapter path.
pub fn generate_true_claims(
    samples: &[DataSample],
    contexts: &BTreeMap<String, TableContext>,
    config: &ClaimgenConfig,
    languages: &[Language],
    seed: u64,
    judges: &[&dyn ClaimJudge],
) -> Result<Vec<ClaimRecord>, PipelineError> {
    let mut claims = Vec::new();
    for &language in languages {
        if language != Language::En {
            log::warn!("skipping {language:?}: template generation is English-only");
            continue;
        }
        let capped = apply_caps(samples, config, language, derive_seed(seed, &["generate"]));
        for sample in &capped {
            let text = render_template(sample, language)?;
            let claim = ClaimRecord::new_true(
                &sample.sample_id,
                language,
                text,
                GeneratorKind::Template,
                &crate::adapters::GENERATE_CLAIM_PROMPT.hash(),
            );
            let context = contexts.get(&sample.table_id).cloned().unwrap_or_default();
            let verdicts = judges
                .iter()
                .map(|judge| judge.judge(&claim, sample, &context))
                .collect::<Result<Vec<_>, _>>()?;
            if keep_if_unanimous(&verdicts) {
                claims.push(claim);
            }
        }
    }
    claims.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    Ok(claims)
}

/// Joins claims with their samples, perturbs, and merges true and false
/// claims sorted by id. Returns skipped-perturbation count.
pub fn perturb_claims(
    true_claims: &[ClaimRecord],
    samples_by_id: &BTreeMap<String, DataSample>,
    config: &PerturbConfig,
    seed: u64,
) -> (Vec<ClaimRecord>, usize) {
    let pairs: Vec<(ClaimRecord, DataSample)> = true_claims
        .iter()
        .filter_map(|claim| {
            samples_by_id
                .get(&claim.sample_id)
                .map(|sample| (claim.clone(), sample.clone()))
        })
        .collect();
    let (false_claims, skipped) =
        make_false_claims(&pairs, config, derive_seed(seed, &["perturb"]));
    let mut merged: Vec<ClaimRecord> = true_claims.to_vec();
    merged.extend(false_claims);
    merged.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    (merged, skipped)
}

pub fn split_claims(
    claims: &[ClaimRecord],
    samples_by_id: &BTreeMap<String, DataSample>,
    config: &PartitionConfig,
    seed: u64,
) -> Result<SplitManifest, PipelineError> {
    let refs: Vec<ClaimTableRef> = claims
        .iter()
        .map(|claim| ClaimTableRef {
            claim_id: claim.claim_id.clone(),
            table_ids: samples_by_id
                .get(&claim.sample_id)
                .map(|s| vec![s.table_id.clone()])
                .unwrap_or_default(),
        })
        .collect();
    Ok(split(&refs, config, seed)?)
}

/// Retrieval scorer selection for a verify run.
pub enum ScorerChoice {
    Lexical,
    Http {
        embed_url: String,
        rerank_url: Option<String>,
    },
}

/// Adapter selection for a verify run.
pub enum VerifyAdapter<'a> {
    /// Scripted gold adapter built from claim/sample pairs.
    Gold {
        pairs: &'a [(ClaimRecord, DataSample)],
        lossy_sql: Option<(f64, u64)>,
    },
    Http(AdapterConfig),
}

pub struct VerifyOptions<'a> {
    pub scorer: ScorerChoice,
    pub adapter: VerifyAdapter<'a>,
    pub gold_tables: bool,
    pub config: VerifierConfig,
}

/// Runs the verifier over a claim batch, returning traces sorted by
/// claim id.
pub fn verify_claims(
    store: &TableStore,
    claims: &[ClaimRecord],
    samples_by_id: &BTreeMap<String, DataSample>,
    options: &VerifyOptions<'_>,
) -> Result<Vec<VerificationTrace>, PipelineError> {
    let corpus = build_corpus(store, options.config.max_values_per_column)?;
    let scorer: Box<dyn RetrievalScorer> = match &options.scorer {
        ScorerChoice::Lexical => Box::new(LexicalScorer::new(
            options.config.bm25_k1,
            options.config.bm25_b,
        )),
        ScorerChoice::Http {
            embed_url,
            rerank_url,
        } => Box::new(HttpScorer::new(embed_url.clone(), rerank_url.clone())?),
    };
    let (adapter, model): (Box<dyn crate::adapters::ChatAdapter>, String) =
        match &options.adapter {
            VerifyAdapter::Gold { pairs, lossy_sql } => {
                let mut gold = ScriptedGoldAdapter::new(pairs);
                if let Some((rate, seed)) = lossy_sql {
                    gold = gold.with_lossy_sql(*rate, *seed);
                }
                (Box::new(gold), "scripted".to_string())
            }
            VerifyAdapter::Http(config) => (
                Box::new(
                    HttpChatAdapter::new(config.clone())
                        .map_err(|e| VerifierError::AdapterUnavailable(e.to_string()))?,
                ),
                config.model.clone(),
            ),
        };
    let gold_tables = options.gold_tables.then(|| {
        claims
            .iter()
            .filter_map(|claim| {
                samples_by_id
                    .get(&claim.sample_id)
                    .map(|s| (claim.claim_id.clone(), s.table_id.clone()))
            })
            .collect::<BTreeMap<_, _>>()
    });
    let verifier = Verifier {
        store,
        corpus,
        scorer: scorer.as_ref(),
        sql_adapter: adapter.as_ref(),
        verdict_adapter: adapter.as_ref(),
        model: model.clone(),
        config: options.config.clone(),
        decompose_mode: DecomposeMode::Adapter {
            adapter: adapter.as_ref(),
            model,
            fallback: true,
        },
        synthesis_rule: true,
        gold_tables,
    };
    Ok(verifier.verify_batch(claims)?)
}

/// Verdict accuracy plus retrieval accuracy over one trace batch.
pub fn evaluate(
    traces: &[VerificationTrace],
    claims: &BTreeMap<String, ClaimRecord>,
    samples: &BTreeMap<String, DataSample>,
) -> Result<EvalReport, PipelineError> {
    let predictions: Vec<(String, Verdict)> = traces
        .iter()
        .map(|t| (t.claim_id.clone(), t.final_verdict))
        .collect();
    let gold: BTreeMap<String, ClaimLabel> = claims
        .iter()
        .map(|(id, c)| (id.clone(), c.label))
        .collect();
    let verdict = verdict_accuracy(&[predictions], &gold)?;
    let retrieval = retrieval_accuracy(traces, claims, samples);
    Ok(EvalReport {
        verdict,
        retrieval: Some(retrieval),
        n_claims: traces.len(),
    })
}

/// Per-stage counts and artifact hashes for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub tables_ingested: usize,
    pub tables_ready: usize,
    pub samples: usize,
    pub true_claims: usize,
    pub total_claims: usize,
    pub skipped_perturbations: usize,
    pub train_claims: usize,
    pub test_claims: usize,
    pub discarded_claims: usize,
    pub verified_claims: usize,
    pub verdict_accuracy: f64,
    pub artifact_hashes: BTreeMap<String, String>,
}

fn hash_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex([bytes.as_slice()]))
}

/// Runs every stage against a fresh fixture corpus under `out_dir`.
pub fn run_pipeline(settings: &PipelineSettings, out_dir: &Path) -> Result<RunSummary, PipelineError> {
    let seed = settings.require_seed()?;
    std::fs::create_dir_all(out_dir)?;

    // fixture
    let fixture_dir = out_dir.join("fixtures");
    let fixture_params = FixtureParams {
        seed: derive_seed(seed, &["fixture"]),
        ..settings.fixture
    };
    generate_fixture(&fixture_params, &fixture_dir)?;

    // ingest
    let db_path = out_dir.join("store.sqlite");
    if db_path.exists() {
        std::fs::remove_file(&db_path)?;
    }
    let store = TableStore::open(&db_path, settings.store.clone())?;
    let tables = ingest_corpus(&store, &fixture_dir.join("corpus.json"), true)?;

    // preprocess
    let (reports, ready) = preprocess_tables(&store, &tables, &settings.preprocess)?;
    write_json_pretty(&out_dir.join("preprocess_report.json"), &reports)?;

    // extract
    let samples = extract_samples(&ready, &settings.extract);
    write_jsonl(&out_dir.join("samples.jsonl"), &samples)?;
    let samples_by_id: BTreeMap<String, DataSample> = samples
        .iter()
        .map(|s| (s.sample_id.clone(), s.clone()))
        .collect();
    let contexts: BTreeMap<String, TableContext> = tables
        .iter()
        .map(|t| {
            (
                t.table_id.clone(),
                TableContext {
                    name: t.name.clone(),
                    description: t.description.clone(),
                },
            )
        })
        .collect();

    // generate
    let languages = if settings.languages.is_empty() {
        vec![Language::En]
    } else {
        settings.languages.clone()
    };
    let rule_judge = RuleJudge;
    let judges: Vec<&dyn ClaimJudge> = vec![&rule_judge];
    let true_claims = generate_true_claims(
        &samples,
        &contexts,
        &settings.claimgen,
        &languages,
        seed,
        &judges,
    )?;
    write_jsonl(&out_dir.join("claims_true.jsonl"), &true_claims)?;

    // perturb
    let (all_claims, skipped) =
        perturb_claims(&true_claims, &samples_by_id, &settings.perturb, seed);
    write_jsonl(&out_dir.join("claims.jsonl"), &all_claims)?;

    // split
    let manifest = split_claims(
        &all_claims,
        &samples_by_id,
        &settings.partition,
        derive_seed(seed, &["split"]),
    )?;
    write_json_pretty(&out_dir.join("split.json"), &manifest)?;
    let claims_by_id: BTreeMap<String, ClaimRecord> = all_claims
        .iter()
        .map(|c| (c.claim_id.clone(), c.clone()))
        .collect();
    let train_claims: Vec<&ClaimRecord> = manifest
        .train_claim_ids
        .iter()
        .filter_map(|id| claims_by_id.get(id))
        .collect();
    let test_claims: Vec<&ClaimRecord> = manifest
        .test_claim_ids
        .iter()
        .filter_map(|id| claims_by_id.get(id))
        .collect();
    write_jsonl(&out_dir.join("train_claims.jsonl"), &train_claims)?;
    write_jsonl(&out_dir.join("test_claims.jsonl"), &test_claims)?;

    // verify
    let mut to_verify: Vec<ClaimRecord> = test_claims.iter().map(|c| (*c).clone()).collect();
    to_verify.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    if let Some(limit) = settings.verify_limit {
        to_verify.truncate(limit);
    }
    let pairs: Vec<(ClaimRecord, DataSample)> = to_verify
        .iter()
        .filter_map(|claim| {
            samples_by_id
                .get(&claim.sample_id)
                .map(|s| (claim.clone(), s.clone()))
        })
        .collect();
    let options = VerifyOptions {
        scorer: ScorerChoice::Lexical,
        adapter: match &settings.adapter {
            Some(config) => VerifyAdapter::Http(config.clone()),
            None => VerifyAdapter::Gold {
                pairs: &pairs,
                lossy_sql: None,
            },
        },
        gold_tables: settings.gold_tables,
        config: settings.verifier.clone(),
    };
    let traces = verify_claims(&store, &to_verify, &samples_by_id, &options)?;
    write_jsonl(&out_dir.join("traces.jsonl"), &traces)?;

    // evaluate
    let verify_claims_map: BTreeMap<String, ClaimRecord> = to_verify
        .iter()
        .map(|c| (c.claim_id.clone(), c.clone()))
        .collect();
    let report = if traces.is_empty() {
        EvalReport {
            verdict: crate::eval::AccuracySummary {
                mean: 0.0,
                stddev: 0.0,
                runs: Vec::new(),
            },
            retrieval: None,
            n_claims: 0,
        }
    } else {
        evaluate(&traces, &verify_claims_map, &samples_by_id)?
    };
    write_json_pretty(&out_dir.join("report.json"), &report)?;

    let mut artifact_hashes = BTreeMap::new();
    for name in [
        "samples.jsonl",
        "claims_true.jsonl",
        "claims.jsonl",
        "train_claims.jsonl",
        "test_claims.jsonl",
        "traces.jsonl",
        "report.json",
        "split.json",
        "preprocess_report.json",
    ] {
        artifact_hashes.insert(name.to_string(), hash_file(&out_dir.join(name))?);
    }
    let summary = RunSummary {
        seed,
        tables_ingested: tables.len(),
        tables_ready: ready.len(),
        samples: samples.len(),
        true_claims: true_claims.len(),
        total_claims: all_claims.len(),
        skipped_perturbations: skipped,
        train_claims: manifest.train_claim_ids.len(),
        test_claims: manifest.test_claim_ids.len(),
        discarded_claims: manifest.discarded_claim_ids.len(),
        verified_claims: traces.len(),
        verdict_accuracy: report.verdict.mean,
        artifact_hashes,
    };
    write_json_pretty(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
