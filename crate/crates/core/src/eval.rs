//! Evaluation harness: verdict accuracy with run variance, subclaim-level
//! table and data retrieval accuracy grouped by language and predicted
//! verdict, masked-fact tolerance curves, the claim-knowledge confusion
//! matrix, and cross-task consistency cells.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claimgen::{ClaimLabel, ClaimRecord, Language, Verdict};
use crate::extract::DataSample;
use crate::verifier::VerificationTrace;

const REL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no gold label for claim {0}")]
    MissingGold(String),
    #[error("no predictions supplied")]
    EmptyPredictions,
}

/// Mean and sample standard deviation of per-run accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub mean: f64,
    pub stddev: f64,
    pub runs: Vec<f64>,
}

/// Accuracy across one or more prediction runs against gold labels.
/// Predicted True matches label True; predicted False or NEI matches
/// label False only through False.
pub fn verdict_accuracy(
    runs: &[Vec<(String, Verdict)>],
    gold: &BTreeMap<String, ClaimLabel>,
) -> Result<AccuracySummary, EvalError> {
    if runs.is_empty() || runs.iter().all(Vec::is_empty) {
        return Err(EvalError::EmptyPredictions);
    }
    let mut per_run = Vec::with_capacity(runs.len());
    for run in runs {
        let mut hits = 0usize;
        for (claim_id, verdict) in run {
            let label = gold
                .get(claim_id)
                .ok_or_else(|| EvalError::MissingGold(claim_id.clone()))?;
            let correct = matches!(
                (label, verdict),
                (ClaimLabel::True, Verdict::True) | (ClaimLabel::False, Verdict::False)
            );
            if correct {
                hits += 1;
            }
        }
        per_run.push(hits as f64 / run.len().max(1) as f64);
    }
    let mean = per_run.iter().sum::<f64>() / per_run.len() as f64;
    let stddev = if per_run.len() < 2 {
        0.0
    } else {
        let var = per_run.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
            / (per_run.len() - 1) as f64;
        var.sqrt()
    };
    Ok(AccuracySummary {
        mean,
        stddev,
        runs: per_run,
    })
}

/// One accuracy cell: hits over count.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateCell {
    pub hits: usize,
    pub total: usize,
}

impl RateCell {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        if hit {
            self.hits += 1;
        }
    }
}

/// Subclaim-level retrieval accuracy: overall, by claim language, and
/// by predicted verdict.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub table_overall: RateCell,
    pub data_overall: RateCell,
    pub table_by_language: BTreeMap<Language, RateCell>,
    pub data_by_language: BTreeMap<Language, RateCell>,
    pub table_by_verdict: BTreeMap<Verdict, RateCell>,
    pub data_by_verdict: BTreeMap<Verdict, RateCell>,
}

/// Table hit: the chosen table equals the sample's table. Data hit: the
/// executed result rows contain every evidence row, matching country and
/// year cells exactly and values within relative 1e-9. A wrong table
/// implies a data miss.
pub fn retrieval_accuracy(
    traces: &[VerificationTrace],
    claims: &BTreeMap<String, ClaimRecord>,
    samples: &BTreeMap<String, DataSample>,
) -> RetrievalReport {
    let mut report = RetrievalReport::default();
    for trace in traces {
        let Some(claim) = claims.get(&trace.claim_id) else { continue };
        let Some(sample) = samples.get(&claim.sample_id) else { continue };
        for subclaim in &trace.subclaims {
            let table_hit = subclaim.chosen_table == sample.table_id;
            let data_hit = table_hit
                && subclaim.result_rows.as_ref().is_some_and(|rows| {
                    sample
                        .evidence_rows
                        .iter()
                        .all(|evidence| {
                            rows.iter().any(|row| row_covers_evidence(row, evidence))
                        })
                });
            report.table_overall.add(table_hit);
            report.data_overall.add(data_hit);
            report
                .table_by_language
                .entry(claim.language)
                .or_default()
                .add(table_hit);
            report
                .data_by_language
                .entry(claim.language)
                .or_default()
                .add(data_hit);
            report
                .table_by_verdict
                .entry(trace.final_verdict)
                .or_default()
                .add(table_hit);
            report
                .data_by_verdict
                .entry(trace.final_verdict)
                .or_default()
                .add(data_hit);
        }
    }
    report
}

fn row_covers_evidence(row: &[crate::store::SqlValue], evidence: &crate::extract::EvidenceRow) -> bool {
    use crate::store::SqlValue;
    let mut has_country = false;
    let mut has_year = false;
    let mut has_value = false;
    for cell in row {
        match cell {
            SqlValue::Text(t) => {
                if t == &evidence.country {
                    has_country = true;
                }
                if let Some(period) = crate::store::TimePeriod::parse(t) {
                    if period.year == evidence.year {
                        has_year = true;
                    }
                }
                if let Ok(v) = t.trim().parse::<f64>() {
                    if approx_eq(v, evidence.value) {
                        has_value = true;
                    }
                }
            }
            SqlValue::Integer(i) => {
                if *i == i64::from(evidence.year) {
                    has_year = true;
                }
                if approx_eq(*i as f64, evidence.value) {
                    has_value = true;
                }
            }
            SqlValue::Real(r) => {
                if approx_eq(*r, evidence.value) {
                    has_value = true;
                }
            }
            SqlValue::Null => {}
        }
    }
    has_country && has_year && has_value
}

fn approx_eq(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= REL_TOLERANCE * scale
}

/// Masked-fact hit test: `u` inside `[v / (1 + p), v * (1 + p)]`, bounds
/// inclusive. At `p = 0` this is exact equality within relative 1e-9.
/// Defined for positive truths.
pub fn masked_hit(truth: f64, prediction: f64, p: f64) -> bool {
    assert!(p >= 0.0, "tolerance must be nonnegative");
    if p == 0.0 {
        return approx_eq(truth, prediction);
    }
    let lower = truth / (1.0 + p);
    let upper = truth * (1.0 + p);
    (lower..=upper).contains(&prediction)
}

/// Accuracy at one tolerance. Nonpositive truths have no multiplicative
/// range; they score by exact match and are tallied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedFactReport {
    pub p: f64,
    pub positive: RateCell,
    pub nonpositive_exact: RateCell,
}

impl MaskedFactReport {
    pub fn accuracy(&self) -> f64 {
        self.positive.rate()
    }
}

pub fn masked_fact_eval(pairs: &[(f64, f64)], p: f64) -> MaskedFactReport {
    let mut report = MaskedFactReport {
        p,
        positive: RateCell::default(),
        nonpositive_exact: RateCell::default(),
    };
    for &(truth, prediction) in pairs {
        if truth > 0.0 {
            report.positive.add(masked_hit(truth, prediction, p));
        } else {
            report.nonpositive_exact.add(approx_eq(truth, prediction));
        }
    }
    report
}

/// Accuracy as a function of tolerance; nondecreasing in `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceCurve {
    pub points: Vec<(f64, f64)>,
}

pub fn tolerance_curve(pairs: &[(f64, f64)], ps: &[f64]) -> ToleranceCurve {
    let mut sorted_ps = ps.to_vec();
    sorted_ps.sort_by(|a, b| a.partial_cmp(b).expect("finite tolerances"));
    ToleranceCurve {
        points: sorted_ps
            .into_iter()
            .map(|p| (p, masked_fact_eval(pairs, p).accuracy()))
            .collect(),
    }
}

/// 2x2 confusion matrix with True as the positive class. Percentages are
/// over the grand total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn from_counts(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn from_pairs(pairs: &[(ClaimLabel, ClaimLabel)]) -> Self {
        let mut m = Self::from_counts(0, 0, 0, 0);
        for &(label, predicted) in pairs {
            match (label, predicted) {
                (ClaimLabel::True, ClaimLabel::True) => m.tp += 1,
                (ClaimLabel::True, ClaimLabel::False) => m.fn_ += 1,
                (ClaimLabel::False, ClaimLabel::True) => m.fp += 1,
                (ClaimLabel::False, ClaimLabel::False) => m.tn += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Cell percentages over the grand total: (tp, fn, fp, tn).
    pub fn percentages(&self) -> (f64, f64, f64, f64) {
        let total = self.total().max(1) as f64;
        (
            100.0 * self.tp as f64 / total,
            100.0 * self.fn_ as f64 / total,
            100.0 * self.fp as f64 / total,
            100.0 * self.tn as f64 / total,
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Cross-task consistency cells at one tolerance, as percentages of the
/// claim universe: (both, task1 only, task2 only, neither).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCells {
    pub p: f64,
    pub both: f64,
    pub task1_only: f64,
    pub task2_only: f64,
    pub neither: f64,
}

/// One record per true claim: masked-fact truth and prediction (task 1)
/// plus whether the direct True/False probe was correct (task 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRecord {
    pub claim_id: String,
    pub truth: f64,
    pub prediction: f64,
    pub task2_correct: bool,
}

pub fn consistency_table(records: &[ConsistencyRecord], ps: &[f64]) -> Vec<ConsistencyCells> {
    let ids: BTreeSet<&str> = records.iter().map(|r| r.claim_id.as_str()).collect();
    assert_eq!(ids.len(), records.len(), "claim ids must be unique");
    ps.iter()
        .map(|&p| {
            let mut counts = [0usize; 4];
            for record in records {
                let task1 = masked_hit(record.truth, record.prediction, p);
                let index = match (task1, record.task2_correct) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                counts[index] += 1;
            }
            let total = records.len().max(1) as f64;
            ConsistencyCells {
                p,
                both: 100.0 * counts[0] as f64 / total,
                task1_only: 100.0 * counts[1] as f64 / total,
                task2_only: 100.0 * counts[2] as f64 / total,
                neither: 100.0 * counts[3] as f64 / total,
            }
        })
        .collect()
}

/// Full evaluation report, stable-ordered for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub verdict: AccuracySummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval: Option<RetrievalReport>,
    pub n_claims: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_accuracy_mean_and_stddev() {
        let gold: BTreeMap<String, ClaimLabel> = [
            ("a".to_string(), ClaimLabel::True),
            ("b".to_string(), ClaimLabel::False),
        ]
        .into();
        let run_perfect = vec![
            ("a".to_string(), Verdict::True),
            ("b".to_string(), Verdict::False),
        ];
        let run_half = vec![
            ("a".to_string(), Verdict::True),
            ("b".to_string(), Verdict::Nei),
        ];
        let summary = verdict_accuracy(&[run_perfect.clone(), run_half], &gold).unwrap();
        assert!((summary.mean - 0.75).abs() < 1e-12);
        assert!((summary.stddev - 0.35355339).abs() < 1e-6);

        let single = verdict_accuracy(&[run_perfect], &gold).unwrap();
        assert_eq!(single.stddev, 0.0);

        let missing = vec![("zz".to_string(), Verdict::True)];
        let err = verdict_accuracy(&[missing], &gold).unwrap_err();
        assert!(matches!(err, EvalError::MissingGold(id) if id == "zz"));
    }

    #[test]
    fn masked_fact_formula() {
        assert!(masked_hit(100.0, 100.0, 0.0));
        assert!(!masked_hit(100.0, 100.1, 0.0));
        // p=1.0: range [50, 200]
        assert!(masked_hit(100.0, 50.0, 1.0));
        assert!(masked_hit(100.0, 200.0, 1.0));
        assert!(!masked_hit(100.0, 49.9, 1.0));
        // p=0.25: range [80, 125]
        assert!(!masked_hit(100.0, 79.0, 0.25));
        assert!(masked_hit(100.0, 80.0, 0.25));
        assert!(masked_hit(100.0, 125.0, 0.25));
    }

    #[test]
    fn masked_fact_nonpositive_truths_counted_separately() {
        let pairs = vec![(10.0, 10.0), (0.0, 0.0), (-5.0, -5.0), (-5.0, -4.0)];
        let report = masked_fact_eval(&pairs, 0.5);
        assert_eq!(report.positive.total, 1);
        assert_eq!(report.positive.hits, 1);
        assert_eq!(report.nonpositive_exact.total, 3);
        assert_eq!(report.nonpositive_exact.hits, 2);
    }

    #[test]
    fn tolerance_curve_is_monotone() {
        let pairs: Vec<(f64, f64)> = (1..=100)
            .map(|i| (f64::from(i), f64::from(i) * (1.0 + f64::from(i % 7) / 10.0)))
            .collect();
        let curve = tolerance_curve(&pairs, &[0.0, 0.25, 0.5, 1.0, 1.5, 2.0]);
        for window in curve.points.windows(2) {
            assert!(window[1].1 >= window[0].1);
        }
    }

    #[test]
    fn confusion_matrix_reproduces_reported_metrics() {
        let m = ConfusionMatrix::from_counts(996, 6838, 614, 6195);
        assert!((m.precision() - 0.618).abs() < 0.001);
        assert!((m.recall() - 0.127).abs() < 0.001);
        assert!((m.f1() - 0.211).abs() < 0.001);
        let (tp_pct, fn_pct, fp_pct, tn_pct) = m.percentages();
        assert!((tp_pct - 6.8).abs() < 0.05);
        assert!((fn_pct - 46.7).abs() < 0.05);
        assert!((fp_pct - 4.2).abs() < 0.05);
        assert!((tn_pct - 42.3).abs() < 0.05);
    }

    #[test]
    fn confusion_matrix_edges() {
        let perfect = ConfusionMatrix::from_pairs(&[
            (ClaimLabel::True, ClaimLabel::True),
            (ClaimLabel::False, ClaimLabel::False),
        ]);
        assert_eq!(perfect.precision(), 1.0);
        assert_eq!(perfect.recall(), 1.0);
        assert_eq!(perfect.f1(), 1.0);

        let all_false = ConfusionMatrix::from_pairs(&[
            (ClaimLabel::True, ClaimLabel::False),
            (ClaimLabel::False, ClaimLabel::False),
        ]);
        assert_eq!(all_false.recall(), 0.0);
    }

    #[test]
    fn confusion_matrix_order_invariant() {
        let mut pairs = vec![
            (ClaimLabel::True, ClaimLabel::True),
            (ClaimLabel::True, ClaimLabel::False),
            (ClaimLabel::False, ClaimLabel::True),
            (ClaimLabel::False, ClaimLabel::False),
            (ClaimLabel::True, ClaimLabel::True),
        ];
        let a = ConfusionMatrix::from_pairs(&pairs);
        pairs.reverse();
        let b = ConfusionMatrix::from_pairs(&pairs);
        assert_eq!(a, b);
    }

    #[test]
    fn consistency_cells_sum_to_hundred() {
        let records: Vec<ConsistencyRecord> = (0..40)
            .map(|i| ConsistencyRecord {
                claim_id: format!("c{i:02}"),
                truth: 100.0,
                prediction: 100.0 * (1.0 + f64::from(i) / 40.0),
                task2_correct: i % 3 == 0,
            })
            .collect();
        for cells in consistency_table(&records, &[0.0, 0.1, 0.5]) {
            let sum = cells.both + cells.task1_only + cells.task2_only + cells.neither;
            assert!((sum - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn consistency_all_hits_and_disjoint() {
        let all_hit: Vec<ConsistencyRecord> = (0..5)
            .map(|i| ConsistencyRecord {
                claim_id: format!("c{i}"),
                truth: 10.0,
                prediction: 10.0,
                task2_correct: true,
            })
            .collect();
        let cells = &consistency_table(&all_hit, &[0.0])[0];
        assert_eq!(
            (cells.both, cells.task1_only, cells.task2_only, cells.neither),
            (100.0, 0.0, 0.0, 0.0)
        );

        let disjoint: Vec<ConsistencyRecord> = (0..4)
            .map(|i| ConsistencyRecord {
                claim_id: format!("c{i}"),
                truth: 10.0,
                prediction: if i % 2 == 0 { 10.0 } else { 99.0 },
                task2_correct: i % 2 == 1,
            })
            .collect();
        let cells = &consistency_table(&disjoint, &[0.0])[0];
        assert_eq!(cells.both, 0.0);
        assert_eq!(cells.task1_only, 50.0);
        assert_eq!(cells.task2_only, 50.0);
    }
}
