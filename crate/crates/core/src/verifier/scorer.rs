//! Retrieval scorer contract: lexical BM25 by default, or an external
//! embedding endpoint with an optional reranker behind the same trait.

use serde::Deserialize;

use crate::bm25::{bm25_scores, Bm25Params};

use super::VerifierError;

/// Scores candidate texts against a query; higher means more similar.
pub trait RetrievalScorer: Send + Sync {
    fn score(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>, VerifierError>;

    /// Optional second pass over the already-ranked top candidates;
    /// returned scores replace the first-pass scores.
    fn rerank(&self, _query: &str, _candidates: &[&str]) -> Result<Option<Vec<f64>>, VerifierError> {
        Ok(None)
    }

    fn kind(&self) -> &'static str;
}

/// Default scorer: Okapi BM25 over the candidate texts, no external
/// services.
#[derive(Default)]
pub struct LexicalScorer {
    pub params: Bm25Params,
}

impl LexicalScorer {
    pub fn new(k1: f64, b: f64) -> Self {
        Self {
            params: Bm25Params { k1, b },
        }
    }
}

impl RetrievalScorer for LexicalScorer {
    fn score(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>, VerifierError> {
        Ok(bm25_scores(query, candidates, self.params))
    }

    fn kind(&self) -> &'static str {
        "lexical-bm25"
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RerankResponse {
    scores: Vec<f64>,
}

/// External embedding scorer. `embed_url` receives `{"texts": [...]}`
/// and returns `{"embeddings": [[...]]}`; ranking is cosine similarity
/// against the query embedding. An optional `rerank_url` receives
/// `{"query": ..., "candidates": [...]}` and returns `{"scores": [...]}`.
pub struct HttpScorer {
    pub embed_url: String,
    pub rerank_url: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpScorer {
    pub fn new(embed_url: String, rerank_url: Option<String>) -> Result<Self, VerifierError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(60))
            .build()
            .map_err(|e| VerifierError::ScorerUnavailable(e.to_string()))?;
        Ok(Self {
            embed_url,
            rerank_url,
            client,
        })
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, VerifierError> {
        let response = self
            .client
            .post(&self.embed_url)
            .json(&serde_json::json!({ "texts": texts }))
            .send()
            .map_err(|e| VerifierError::ScorerUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(VerifierError::ScorerUnavailable(format!(
                "embed endpoint returned {}",
                response.status()
            )));
        }
        let body: EmbedResponse = response
            .json()
            .map_err(|e| VerifierError::ScorerUnavailable(e.to_string()))?;
        if body.embeddings.len() != texts.len() {
            return Err(VerifierError::ScorerUnavailable(format!(
                "embed endpoint returned {} vectors for {} texts",
                body.embeddings.len(),
                texts.len()
            )));
        }
        Ok(body.embeddings)
    }
}

impl RetrievalScorer for HttpScorer {
    fn score(&self, query: &str, candidates: &[&str]) -> Result<Vec<f64>, VerifierError> {
        let mut texts: Vec<&str> = Vec::with_capacity(candidates.len() + 1);
        texts.push(query);
        texts.extend_from_slice(candidates);
        let mut embeddings = self.embed(&texts)?;
        let query_vec = embeddings.remove(0);
        Ok(embeddings
            .iter()
            .map(|v| cosine(&query_vec, v))
            .collect())
    }

    fn rerank(&self, query: &str, candidates: &[&str]) -> Result<Option<Vec<f64>>, VerifierError> {
        let Some(url) = &self.rerank_url else {
            return Ok(None);
        };
        let response = self
            .client
            .post(url)
            .json(&serde_json::json!({ "query": query, "candidates": candidates }))
            .send()
            .map_err(|e| VerifierError::ScorerUnavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(VerifierError::ScorerUnavailable(format!(
                "rerank endpoint returned {}",
                response.status()
            )));
        }
        let body: RerankResponse = response
            .json()
            .map_err(|e| VerifierError::ScorerUnavailable(e.to_string()))?;
        if body.scores.len() != candidates.len() {
            return Err(VerifierError::ScorerUnavailable(
                "rerank score count mismatch".to_string(),
            ));
        }
        Ok(Some(body.scores))
    }

    fn kind(&self) -> &'static str {
        "external-embedding"
    }
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        dot / (norm_a * norm_b)
    }
}
