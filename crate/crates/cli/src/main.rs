//! Command-line entry point wiring the pipeline stages: fixture, ingest,
//! preprocess, extract, generate, perturb, split, verify, evaluate, and
//! the all-in-one pipeline command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use statclaim_core::adapters::HttpChatAdapter;
use statclaim_core::claimgen::{
    generate_claim, keep_if_unanimous, render_template, AdapterJudge, ClaimJudge, ClaimRecord,
    Language, RuleJudge, TableContext,
};
use statclaim_core::config::{
    AdapterConfig, ClaimgenConfig, PartitionConfig, PerturbConfig, PreprocessConfig, StoreConfig,
    VerifierConfig,
};
use statclaim_core::extract::DataSample;
use statclaim_core::fixture::{generate_fixture, FixtureParams};
use statclaim_core::jsonl::{read_json, read_jsonl, write_json_pretty, write_jsonl};
use statclaim_core::pipeline::{
    evaluate, extract_samples, ingest_corpus, perturb_claims, preprocess_tables, run_pipeline,
    split_claims, verify_claims, PipelineSettings, ScorerChoice, VerifyAdapter, VerifyOptions,
};
use statclaim_core::store::TableStore;

#[derive(Parser)]
#[command(
    name = "statclaim",
    about = "Claim generation and fact verification over long-format statistical tables",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fixture corpus with a ground-truth manifest.
    Fixture(FixtureArgs),
    /// Ingest a corpus manifest into the store.
    Ingest(IngestArgs),
    /// Clean tables, find ideal windows, enumerate measure combinations.
    Preprocess(PreprocessArgs),
    /// Run the six extraction strategies over every prepared slice.
    Extract(ExtractArgs),
    /// Generate true claims from samples (templates or a chat endpoint).
    Generate(GenerateArgs),
    /// Create false claims by perturbing true ones.
    Perturb(PerturbArgs),
    /// Split claims into train/test via table holdout.
    Split(SplitArgs),
    /// Fact-check claims against a corpus, writing a trace per claim.
    Verify(VerifyArgs),
    /// Score traces against gold claims.
    Evaluate(EvaluateArgs),
    /// Run every stage end to end from one config.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, default_value = "fixtures")]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    tables: usize,
    #[arg(long, default_value_t = 20)]
    countries: u32,
    #[arg(long, default_value_t = 30)]
    years: u32,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    db: PathBuf,
    /// Replace tables already present under the same id.
    #[arg(long)]
    replace: bool,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    db: PathBuf,
    #[arg(long, default_value = "en")]
    language: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    cap_en: usize,
    #[arg(long, default_value_t = 20)]
    cap_other: usize,
    /// Chat endpoint; without it, English templates are used.
    #[arg(long)]
    adapter_url: Option<String>,
    #[arg(long, default_value = "default")]
    model: String,
    /// Judge protocol: the deterministic rule judge, the chat adapter,
    /// or both (claims kept only on unanimity).
    #[arg(long, default_value = "rule", value_parser = ["rule", "adapter", "both"])]
    judge: String,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.10)]
    holdout: f64,
    #[arg(long)]
    test_cap: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    claims: PathBuf,
    /// Corpus manifest; tables are ingested into a fresh in-memory store
    /// unless --db points at an existing one.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gold_tables: bool,
    #[arg(long, default_value = "lexical", value_parser = ["lexical", "http"])]
    scorer: String,
    #[arg(long)]
    embed_url: Option<String>,
    #[arg(long)]
    rerank_url: Option<String>,
    /// Chat endpoint for decomposition, SQL, and verdicts; without it the
    /// scripted gold adapter answers from --samples.
    #[arg(long)]
    adapter_url: Option<String>,
    #[arg(long, default_value = "default")]
    model: String,
    /// Samples file (required for --gold-tables and the scripted adapter).
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Samples file enabling retrieval accuracy metrics.
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config (PipelineSettings); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gold_tables: bool,
    #[arg(long)]
    verify_limit: Option<usize>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Fixture(args) => cmd_fixture(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Split(args) => cmd_split(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

fn open_store(path: &Path) -> Result<TableStore> {
    TableStore::open(path, StoreConfig::default())
        .with_context(|| format!("opening store at {}", path.display()))
}

fn load_samples(path: &Path) -> Result<BTreeMap<String, DataSample>> {
    let samples: Vec<DataSample> = read_jsonl(path)?;
    Ok(samples
        .into_iter()
        .map(|s| (s.sample_id.clone(), s))
        .collect())
}

fn cmd_fixture(args: FixtureArgs) -> Result<()> {
    let params = FixtureParams {
        n_tables: args.tables,
        n_countries: args.countries,
        n_years: args.years,
        seed: args.seed,
    };
    let (corpus, manifest) = generate_fixture(&params, &args.out)?;
    println!(
        "wrote {} tables ({} rows total) under {}",
        corpus.tables.len(),
        manifest.tables.iter().map(|t| t.raw_rows).sum::<u64>(),
        args.out.display()
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let store = open_store(&args.db)?;
    let tables = ingest_corpus(&store, &args.manifest, args.replace)?;
    for table in &tables {
        println!(
            "{}: {} rows, {} columns",
            table.table_id,
            table.row_count,
            table.columns.len()
        );
    }
    Ok(())
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<()> {
    let store = open_store(&args.db)?;
    let tables = store.list_tables()?;
    let (reports, ready) = preprocess_tables(&store, &tables, &PreprocessConfig::default())?;
    write_json_pretty(&args.out, &reports)?;
    println!(
        "{} of {} tables ready; report at {}",
        ready.len(),
        tables.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let store = open_store(&args.db)?;
    let tables = store.list_tables()?;
    let (_, ready) = preprocess_tables(&store, &tables, &PreprocessConfig::default())?;
    let samples = extract_samples(&ready, &Default::default());
    write_jsonl(&args.out, &samples)?;
    println!("{} samples written to {}", samples.len(), args.out.display());
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let language: Language = args
        .language
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let samples: Vec<DataSample> = read_jsonl(&args.samples)?;
    let store = open_store(&args.db)?;
    let contexts: BTreeMap<String, TableContext> = store
        .list_tables()?
        .into_iter()
        .map(|t| {
            (
                t.table_id,
                TableContext {
                    name: t.name,
                    description: t.description,
                },
            )
        })
        .collect();
    let config = ClaimgenConfig {
        cap_english: args.cap_en,
        cap_other: args.cap_other,
    };
    let capped = statclaim_core::claimgen::apply_caps(&samples, &config, language, args.seed);

    let adapter = match &args.adapter_url {
        Some(url) => Some(HttpChatAdapter::new(AdapterConfig {
            base_url: Some(url.clone()),
            model: args.model.clone(),
            ..Default::default()
        })?),
        None => None,
    };
    if adapter.is_none() && language != Language::En {
        bail!("non-English generation requires --adapter-url");
    }

    let rule_judge = RuleJudge;
    let mut claims: Vec<ClaimRecord> = Vec::new();
    let mut dropped = 0usize;
    for sample in &capped {
        let context = contexts.get(&sample.table_id).cloned().unwrap_or_default();
        let claim = match &adapter {
            Some(adapter) => {
                let generated =
                    generate_claim(sample, &context, language, adapter, &args.model, true)?;
                ClaimRecord::new_true(
                    &sample.sample_id,
                    language,
                    generated.text,
                    generated.generator,
                    &generated.prompt_hash,
                )
            }
            None => {
                let text = render_template(sample, language)?;
                ClaimRecord::new_true(
                    &sample.sample_id,
                    language,
                    text,
                    statclaim_core::claimgen::GeneratorKind::Template,
                    &statclaim_core::adapters::GENERATE_CLAIM_PROMPT.hash(),
                )
            }
        };
        let mut verdicts = Vec::new();
        if args.judge == "rule" || args.judge == "both" {
            verdicts.push(rule_judge.judge(&claim, sample, &context)?);
        }
        if args.judge == "adapter" || args.judge == "both" {
            let adapter = adapter
                .as_ref()
                .context("--judge adapter requires --adapter-url")?;
            let judge = AdapterJudge {
                adapter,
                model: args.model.clone(),
            };
            verdicts.push(judge.judge(&claim, sample, &context)?);
        }
        if keep_if_unanimous(&verdicts) {
            claims.push(claim);
        } else {
            dropped += 1;
        }
    }
    claims.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    write_jsonl(&args.out, &claims)?;
    println!(
        "{} claims written to {} ({} dropped by judges)",
        claims.len(),
        args.out.display(),
        dropped
    );
    Ok(())
}

fn cmd_perturb(args: PerturbArgs) -> Result<()> {
    let claims: Vec<ClaimRecord> = read_jsonl(&args.claims)?;
    let samples = load_samples(&args.samples)?;
    let config = PerturbConfig {
        false_ratio: args.ratio,
        ..Default::default()
    };
    let (merged, skipped) = perturb_claims(&claims, &samples, &config, args.seed);
    write_jsonl(&args.out, &merged)?;
    println!(
        "{} claims written to {} ({} perturbations skipped)",
        merged.len(),
        args.out.display(),
        skipped
    );
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let claims: Vec<ClaimRecord> = read_jsonl(&args.claims)?;
    let samples = load_samples(&args.samples)?;
    let config = PartitionConfig {
        holdout_fraction: args.holdout,
        test_cap: args.test_cap,
    };
    let manifest = split_claims(&claims, &samples, &config, args.seed)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_json_pretty(&args.out_dir.join("split.json"), &manifest)?;
    let by_id: BTreeMap<&str, &ClaimRecord> =
        claims.iter().map(|c| (c.claim_id.as_str(), c)).collect();
    let select = |ids: &[String]| -> Vec<&ClaimRecord> {
        ids.iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .collect()
    };
    write_jsonl(
        &args.out_dir.join("train_claims.jsonl"),
        &select(&manifest.train_claim_ids),
    )?;
    write_jsonl(
        &args.out_dir.join("test_claims.jsonl"),
        &select(&manifest.test_claim_ids),
    )?;
    println!(
        "train {} / test {} / discarded {}; holdout tables: {:?}",
        manifest.train_claim_ids.len(),
        manifest.test_claim_ids.len(),
        manifest.discarded_claim_ids.len(),
        manifest.holdout_tables
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let claims: Vec<ClaimRecord> = read_jsonl(&args.claims)?;
    let mut claims = claims;
    claims.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    if let Some(limit) = args.limit {
        claims.truncate(limit);
    }

    let store = match &args.db {
        Some(path) => open_store(path)?,
        None => TableStore::open_in_memory(StoreConfig::default())?,
    };
    let have_tables = !store.list_tables()?.is_empty();
    if !have_tables {
        ingest_corpus(&store, &args.corpus, true)?;
    }

    let samples = match &args.samples {
        Some(path) => load_samples(path)?,
        None => BTreeMap::new(),
    };
    if args.gold_tables && samples.is_empty() {
        bail!("--gold-tables requires --samples");
    }

    let scorer = match args.scorer.as_str() {
        "http" => ScorerChoice::Http {
            embed_url: args
                .embed_url
                .clone()
                .context("--scorer http requires --embed-url")?,
            rerank_url: args.rerank_url.clone(),
        },
        _ => ScorerChoice::Lexical,
    };

    let pairs: Vec<(ClaimRecord, DataSample)> = claims
        .iter()
        .filter_map(|c| samples.get(&c.sample_id).map(|s| (c.clone(), s.clone())))
        .collect();
    let adapter = match &args.adapter_url {
        Some(url) => VerifyAdapter::Http(AdapterConfig {
            base_url: Some(url.clone()),
            model: args.model.clone(),
            ..Default::default()
        }),
        None => {
            if pairs.is_empty() {
                bail!("without --adapter-url the scripted adapter needs --samples");
            }
            VerifyAdapter::Gold {
                pairs: &pairs,
                lossy_sql: None,
            }
        }
    };

    let options = VerifyOptions {
        scorer,
        adapter,
        gold_tables: args.gold_tables,
        config: VerifierConfig::default(),
    };
    let traces = verify_claims(&store, &claims, &samples, &options)?;
    write_jsonl(&args.out, &traces)?;
    println!("{} traces written to {}", traces.len(), args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let traces: Vec<statclaim_core::verifier::VerificationTrace> = read_jsonl(&args.traces)?;
    let gold: Vec<ClaimRecord> = read_jsonl(&args.gold)?;
    let claims: BTreeMap<String, ClaimRecord> =
        gold.into_iter().map(|c| (c.claim_id.clone(), c)).collect();
    let samples = match &args.samples {
        Some(path) => load_samples(path)?,
        None => BTreeMap::new(),
    };
    let mut report = evaluate(&traces, &claims, &samples)?;
    if samples.is_empty() {
        report.retrieval = None;
    }
    write_json_pretty(&args.report, &report)?;
    println!(
        "verdict accuracy {:.4} over {} claims; report at {}",
        report.verdict.mean,
        report.n_claims,
        args.report.display()
    );
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let mut settings: PipelineSettings = match &args.config {
        Some(path) => read_json(path)?,
        None => PipelineSettings::default(),
    };
    if settings.languages.is_empty() {
        settings.languages = vec![Language::En];
    }
    // flags win over the config file
    if let Some(seed) = args.seed {
        settings.seed = Some(seed);
    }
    if args.gold_tables {
        settings.gold_tables = true;
    }
    if args.verify_limit.is_some() {
        settings.verify_limit = args.verify_limit;
    }
    let summary = run_pipeline(&settings, &args.out_dir)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
