//! Okapi BM25 scoring over a small in-memory corpus.
//!
//! Tokenization is whitespace splitting plus lowercasing, nothing else.
//! IDF uses the non-negative `ln((N - df + 0.5) / (df + 0.5) + 1)`
//! variant so scores of matching terms are always positive.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Scores every document against the query. The documents form the
/// corpus for document-frequency statistics.
pub fn bm25_scores(query: &str, docs: &[&str], params: Bm25Params) -> Vec<f64> {
    let query_tokens = tokenize(query);
    let doc_tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d)).collect();
    let n_docs = docs.len();
    if n_docs == 0 {
        return Vec::new();
    }
    let avgdl = doc_tokens.iter().map(Vec::len).sum::<usize>() as f64 / n_docs as f64;
    let avgdl = if avgdl > 0.0 { avgdl } else { 1.0 };

    // document frequency per query term
    let mut df: HashMap<&str, usize> = HashMap::new();
    for token in &query_tokens {
        let count = doc_tokens
            .iter()
            .filter(|doc| doc.iter().any(|t| t == token))
            .count();
        df.insert(token.as_str(), count);
    }

    doc_tokens
        .iter()
        .map(|doc| {
            let dl = doc.len() as f64;
            let mut score = 0.0;
            for token in &query_tokens {
                let tf = doc.iter().filter(|t| *t == token).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = df[token.as_str()] as f64;
                let idf = ((n_docs as f64 - df + 0.5) / (df + 0.5) + 1.0).ln();
                let tf_norm =
                    (tf * (params.k1 + 1.0)) / (tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
                score += idf * tf_norm;
            }
            score
        })
        .collect()
}
