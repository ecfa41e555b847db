//! Train/test partitioning with table-level holdout.
//!
//! At least the configured fraction of claim-bearing tables is held out
//! entirely; train claims never touch a holdout table and test claims
//! never touch a training table. Claims referencing zero or multiple
//! tables go to the discard pile.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PartitionConfig;
use crate::hash::derive_seed;

/// A claim and the tables its evidence lives in. Produced by joining
/// claims with their samples; accepted as-is on input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimTableRef {
    pub claim_id: String,
    pub table_ids: Vec<String>,
}

/// The split decision for one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub holdout_tables: BTreeSet<String>,
    pub train_claim_ids: Vec<String>,
    pub test_claim_ids: Vec<String>,
    pub discarded_claim_ids: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("at least two claim-bearing tables are required, found {0}")]
    InsufficientTables(usize),
    #[error("claims are empty")]
    EmptyClaims,
    #[error("holdout fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
}

/// Splits claims by holding out a seeded sample of tables.
pub fn split(
    claims: &[ClaimTableRef],
    config: &PartitionConfig,
    seed: u64,
) -> Result<SplitManifest, PartitionError> {
    if claims.is_empty() {
        return Err(PartitionError::EmptyClaims);
    }
    let fraction = config.holdout_fraction;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PartitionError::InvalidFraction(fraction));
    }

    let mut tables: BTreeSet<&str> = BTreeSet::new();
    for claim in claims {
        if claim.table_ids.len() == 1 {
            tables.insert(claim.table_ids[0].as_str());
        }
    }
    if tables.len() < 2 {
        return Err(PartitionError::InsufficientTables(tables.len()));
    }

    let table_list: Vec<&str> = tables.iter().copied().collect();
    let n_holdout = ((table_list.len() as f64) * fraction).ceil() as usize;
    let n_holdout = n_holdout.clamp(1, table_list.len() - 1);
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &["split"]));
    let chosen = rand::seq::index::sample(&mut rng, table_list.len(), n_holdout);
    let holdout_tables: BTreeSet<String> = chosen
        .into_iter()
        .map(|i| table_list[i].to_string())
        .collect();

    let mut manifest = SplitManifest {
        holdout_tables,
        train_claim_ids: Vec::new(),
        test_claim_ids: Vec::new(),
        discarded_claim_ids: Vec::new(),
        seed,
    };
    let mut ordered: Vec<&ClaimTableRef> = claims.iter().collect();
    ordered.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    ordered.dedup_by(|a, b| a.claim_id == b.claim_id);
    for claim in ordered {
        match claim.table_ids.as_slice() {
            [table] if manifest.holdout_tables.contains(table) => {
                manifest.test_claim_ids.push(claim.claim_id.clone())
            }
            [_] => manifest.train_claim_ids.push(claim.claim_id.clone()),
            _ => manifest.discarded_claim_ids.push(claim.claim_id.clone()),
        }
    }

    if let Some(cap) = config.test_cap {
        if manifest.test_claim_ids.len() > cap {
            let mut cap_rng =
                ChaCha20Rng::seed_from_u64(derive_seed(seed, &["split-test-cap"]));
            let keep =
                rand::seq::index::sample(&mut cap_rng, manifest.test_claim_ids.len(), cap);
            let keep: BTreeSet<usize> = keep.into_iter().collect();
            let mut kept = Vec::with_capacity(cap);
            for (i, id) in manifest.test_claim_ids.drain(..).enumerate() {
                if keep.contains(&i) {
                    kept.push(id);
                } else {
                    manifest.discarded_claim_ids.push(id);
                }
            }
            manifest.test_claim_ids = kept;
        }
    }
    manifest.discarded_claim_ids.sort();
    Ok(manifest)
}
