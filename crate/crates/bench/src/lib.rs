//! Criterion benches for the extraction and retrieval hot paths; see
//! `benches/`.
