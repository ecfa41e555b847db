//! Pipeline configuration: every stage threshold with its shipped default.
//!
//! All fields are plain data so a config file can override any subset;
//! `Default` impls carry the documented defaults.

use serde::{Deserialize, Serialize};

/// Column-classification conventions for ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StoreConfig {
    /// Header names (case-insensitive) classified as metadata.
    pub metadata_names: Vec<String>,
    /// Suffix marking an identifier column paired with a base column.
    pub id_suffix: String,
    /// Header names (case-insensitive) mapping to the observation value.
    pub obs_value_names: Vec<String>,
    /// Header names (case-insensitive) mapping to the observation status.
    pub obs_status_names: Vec<String>,
    /// Header names (case-insensitive) mapping to the reference area.
    pub reference_area_names: Vec<String>,
    /// Header names (case-insensitive) mapping to the time period.
    pub time_period_names: Vec<String>,
    /// Maximum rows materialized by a query before truncation.
    pub result_row_cap: usize,
    /// Observation-status values treated as normal observations.
    pub normal_statuses: Vec<String>,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            metadata_names: ["DATAFLOW", "FREQ", "DECIMALS", "UNIT_MULT", "UNIT_MULTIPLIER"]
                .map(String::from)
                .to_vec(),
            id_suffix: "_ID".to_string(),
            obs_value_names: vec!["obs_value".to_string(), "OBS_VALUE".to_string()],
            obs_status_names: vec!["OBS_STATUS".to_string()],
            reference_area_names: vec!["REF_AREA".to_string(), "REFERENCE_AREA".to_string()],
            time_period_names: vec!["TIME_PERIOD".to_string()],
            result_row_cap: 1000,
            normal_statuses: vec!["normal".to_string()],
        }
    }
}

/// Table-level filtering thresholds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// A year qualifies when its coverage is at least this fraction of the peak.
    pub coverage_fraction: f64,
    /// Minimum peak reporting-country count for a usable table.
    pub min_coverage: u32,
    /// Minimum ideal-window length in years.
    pub min_window_years: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            coverage_fraction: 0.95,
            min_coverage: 20,
            min_window_years: 2,
        }
    }
}

/// Extraction thresholds for the six claim types.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Minimum countries reporting in a year for top-k extraction.
    pub topk_min_countries: u32,
    /// k used when more than `topk_large_cutoff` countries report.
    pub topk_large_k: u32,
    /// k used for counts between `topk_min_countries` and the cutoff.
    pub topk_small_k: u32,
    /// Country count above which the large k applies.
    pub topk_large_cutoff: u32,
    /// Minimum length in years of a strictly monotone run.
    pub constant_change_min_years: u32,
    /// Minimum years since the last exceedance for a historical extreme.
    pub extreme_min_years: u32,
    /// Flat rank-shift floor in positions.
    pub rank_shift_floor: u32,
    /// Rank shift must also reach this fraction of the year's country count.
    pub rank_shift_fraction: f64,
    /// Alternative qualification: max/min rank ratio at least this.
    pub rank_ratio: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            topk_min_countries: 20,
            topk_large_k: 5,
            topk_small_k: 3,
            topk_large_cutoff: 50,
            constant_change_min_years: 8,
            extreme_min_years: 10,
            rank_shift_floor: 10,
            rank_shift_fraction: 0.2,
            rank_ratio: 2.0,
        }
    }
}

/// Claim generation caps and language settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClaimgenConfig {
    /// Per-(table, claim type) cap for English claims.
    pub cap_english: usize,
    /// Per-(table, claim type) cap for each non-English language.
    pub cap_other: usize,
}

impl Default for ClaimgenConfig {
    fn default() -> Self {
        Self {
            cap_english: 100,
            cap_other: 20,
        }
    }
}

/// False-claim perturbation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    /// Scaling factors for numeric perturbations; 1.0 is never allowed.
    pub scaling_factors: Vec<f64>,
    /// Flat floor for rank shifts in positions.
    pub rank_shift_floor: u32,
    /// Rank shift must also reach this fraction of the country count.
    pub rank_shift_fraction: f64,
    /// Year-shift range for duration perturbations, inclusive.
    pub duration_shift_range: (u32, u32),
    /// Duration-extension range in years, inclusive.
    pub duration_extend_range: (u32, u32),
    /// Target false:true ratio when perturbing a batch.
    pub false_ratio: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            scaling_factors: vec![0.5, 1.5, 2.0],
            rank_shift_floor: 5,
            rank_shift_fraction: 0.15,
            duration_shift_range: (2, 6),
            duration_extend_range: (3, 8),
            false_ratio: 1.0,
        }
    }
}

/// Baseline verifier settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifierConfig {
    /// Most-frequent values kept per categorical column in a representation.
    pub max_values_per_column: usize,
    /// Candidate tables returned by retrieval.
    pub retrieval_top_n: usize,
    /// Unique-value cap before BM25 value selection kicks in.
    pub select_values_cap: usize,
    /// Maximum SQL generation attempts per subclaim.
    pub sql_max_attempts: usize,
    /// BM25 k1 parameter.
    pub bm25_k1: f64,
    /// BM25 b parameter.
    pub bm25_b: f64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            max_values_per_column: 10,
            retrieval_top_n: 5,
            select_values_cap: 20,
            sql_max_attempts: 3,
            bm25_k1: 1.2,
            bm25_b: 0.75,
        }
    }
}

/// Train/test partitioning settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionConfig {
    /// Fraction of claim-bearing tables held out entirely for the test set.
    pub holdout_fraction: f64,
    /// Optional cap on the test-set claim count; excess is discarded.
    pub test_cap: Option<usize>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.10,
            test_cap: None,
        }
    }
}

/// Chat-completion adapter endpoint settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    /// Base URL; falls back to the `STATCLAIM_ADAPTER_URL` env var.
    pub base_url: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub temperature: f64,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            model: "default".to_string(),
            timeout_secs: 60,
            max_retries: 2,
            temperature: 0.0,
        }
    }
}
