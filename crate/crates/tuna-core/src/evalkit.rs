//! Evaluation metrics: yes/no confusion counts with accuracy, precision,
//! recall, and F1; weight heatmap CSV export; and relative judged-score
//! aggregation against a reference model.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::assembler::csv_field;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction id {0:?} has no gold answer")]
    UnmatchedId(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("no scored pairs")]
    EmptyCounts,
    #[error("value {0} out of range")]
    OutOfRange(f64),
    #[error("empty input")]
    EmptyInput,
}

/// Binary confusion counts with "yes" as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Tallies predictions against gold answers. Every prediction id must have
/// a gold answer; duplicate ids in either stream are rejected.
pub fn confusion<P, G>(preds: P, golds: G) -> Result<ConfusionCounts, EvalError>
where
    P: IntoIterator<Item = (String, bool)>,
    G: IntoIterator<Item = (String, bool)>,
{
    let mut gold_map = HashMap::new();
    for (id, answer) in golds {
        if gold_map.insert(id.clone(), answer).is_some() {
            return Err(EvalError::DuplicateId(id));
        }
    }
    let mut counts = ConfusionCounts::default();
    let mut seen = HashMap::new();
    for (id, pred) in preds {
        if seen.insert(id.clone(), ()).is_some() {
            return Err(EvalError::DuplicateId(id));
        }
        let gold = *gold_map
            .get(&id)
            .ok_or_else(|| EvalError::UnmatchedId(id.clone()))?;
        match (pred, gold) {
            (true, true) => counts.true_positives += 1,
            (true, false) => counts.false_positives += 1,
            (false, false) => counts.true_negatives += 1,
            (false, true) => counts.false_negatives += 1,
        }
    }
    Ok(counts)
}

/// The four headline metrics as fractions in [0, 1]. Zero denominators map
/// to 0 so the report is total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricsReport {
    /// JSON with the four metrics scaled x100 and printed to exactly two
    /// decimals, stable key order.
    pub fn to_percent_json(&self) -> String {
        format!(
            "{{\"accuracy\": {:.2}, \"precision\": {:.2}, \"recall\": {:.2}, \"f1\": {:.2}}}",
            self.accuracy * 100.0,
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        )
    }
}

pub fn metrics(c: &ConfusionCounts) -> Result<MetricsReport, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyCounts);
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let accuracy = (c.true_positives + c.true_negatives) as f64 / total as f64;
    let precision = ratio(c.true_positives, c.true_positives + c.false_positives);
    let recall = ratio(c.true_positives, c.true_positives + c.false_negatives);
    let f1 = f1_from_pr(precision, recall)?;
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
    })
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_from_pr(p: f64, r: f64) -> Result<f64, EvalError> {
    for v in [p, r] {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(EvalError::OutOfRange(v));
        }
    }
    if p + r == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * p * r / (p + r))
}

/// CSV `tag,weight` sorted by descending weight (stable for ties), weights
/// printed to four decimals. Weights must lie in [0, 1].
pub fn export_heatmap(pools: &[(String, f64)]) -> Result<String, EvalError> {
    for (_, w) in pools {
        if !w.is_finite() || !(0.0..=1.0).contains(w) {
            return Err(EvalError::OutOfRange(*w));
        }
    }
    let mut rows: Vec<&(String, f64)> = pools.iter().collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out = String::from("tag,weight\n");
    for (tag, weight) in rows {
        out.push_str(&format!("{},{weight:.4}\n", csv_field(tag)));
    }
    Ok(out)
}

/// One judged item: candidate and reference scores on the 1..=9 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgedPair {
    pub item_id: String,
    pub candidate_score: f64,
    pub reference_score: f64,
}

/// Relative score in percent: `100 * sum(candidate) / sum(reference)`.
/// A ratio of sums, not a mean of per-item ratios.
pub fn relative_score(pairs: &[JudgedPair]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut candidate_sum = 0.0;
    let mut reference_sum = 0.0;
    for pair in pairs {
        for v in [pair.candidate_score, pair.reference_score] {
            if !v.is_finite() || !(1.0..=9.0).contains(&v) {
                return Err(EvalError::OutOfRange(v));
            }
        }
        candidate_sum += pair.candidate_score;
        reference_sum += pair.reference_score;
    }
    Ok(100.0 * candidate_sum / reference_sum)
}
