//! Claim generation and fact verification over long-format statistical
//! tables.
//!
//! The library covers the full pipeline: an embedded SQLite-backed table
//! store with column classification ([`store`]), table-level filtering
//! into analyzable slices ([`preprocess`]), six claim-specific data
//! extraction strategies ([`extract`], cross-checked by the brute-force
//! [`oracle`]), natural-language claim generation and judging
//! ([`claimgen`]), controlled false-claim perturbation ([`perturb`]),
//! table-holdout splitting ([`partition`]), the retrieve → decompose →
//! query → verdict baseline verifier ([`verifier`]), and the metric
//! suite ([`eval`]). [`fixture`] synthesizes a deterministic test corpus
//! with ground-truth counts and [`pipeline`] wires the stages end to
//! end.

pub mod adapters;
pub mod bm25;
pub mod claimgen;
pub mod config;
pub mod eval;
pub mod extract;
pub mod fixture;
pub mod hash;
pub mod jsonl;
pub mod oracle;
pub mod partition;
pub mod perturb;
pub mod pipeline;
pub mod preprocess;
pub mod store;
pub mod verifier;
