//! Evaluation protocol: alignment selection over candidate groups,
//! threshold detection with precision/recall, threshold sweeps, the BLEU
//! surface baseline, and the end-to-end `evaluate` pipeline.
//!
//! Decision rules are deliberately strict: a record is predicted aligned
//! only when its alignment score strictly exceeds θ, and a group counts as
//! a selection success only when the aligned record is the strict maximum;
//! ties fail. Precision is reported as null (never 0 or 1) when no record
//! was predicted aligned.

use crate::backend::{Backend, BackendError};
use crate::mutgen::{ExampleRecord, Label, MisalignKind};
use crate::scorecore::{ScoreError, Scores};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

pub const DEFAULT_THETA: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoredRecord {
    pub record: ExampleRecord,
    pub scores: Scores,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("malformed group {group_id}: {detail}")]
    MalformedGroup { group_id: String, detail: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("backend failure for record {id}: {source}")]
    Backend {
        id: String,
        #[source]
        source: BackendError,
    },
    #[error("scoring failure for record {id}: {source}")]
    Score {
        id: String,
        #[source]
        source: ScoreError,
    },
}

/// Fraction of groups whose aligned record holds the strict maximum
/// alignment score. Each group must hold exactly one aligned record and at
/// least one misaligned record.
pub fn alignment_selection(groups: &[Vec<ScoredRecord>]) -> Result<f64, EvalError> {
    if groups.is_empty() {
        return Err(EvalError::InvalidInput(
            "at least one group is required".to_string(),
        ));
    }
    let mut successes = 0usize;
    for (i, group) in groups.iter().enumerate() {
        let group_id = group
            .first()
            .map(|r| r.record.group_id.clone())
            .unwrap_or_else(|| format!("#{i}"));
        let malformed = |detail: &str| EvalError::MalformedGroup {
            group_id: group_id.clone(),
            detail: detail.to_string(),
        };
        let aligned: Vec<&ScoredRecord> = group
            .iter()
            .filter(|r| r.record.label == Label::Aligned)
            .collect();
        if aligned.len() != 1 {
            return Err(malformed(&format!(
                "expected exactly one aligned record, found {}",
                aligned.len()
            )));
        }
        if group.len() < 2 {
            return Err(malformed("group has no misaligned records"));
        }
        let positive = aligned[0].scores.alignment;
        let beaten = group
            .iter()
            .filter(|r| r.record.label == Label::Misaligned)
            .all(|r| positive > r.scores.alignment);
        if beaten {
            successes += 1;
        }
    }
    Ok(successes as f64 / groups.len() as f64)
}

/// Confusion counts and derived rates at one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Detection {
    pub theta: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    }
}

fn check_theta(theta: f64) -> Result<(), EvalError> {
    if !theta.is_finite() || !(-0.5..=1.0).contains(&theta) {
        return Err(EvalError::InvalidInput(format!(
            "theta must lie in [-0.5, 1], got {theta}"
        )));
    }
    Ok(())
}

/// Predicts aligned iff `alignment > theta` and tallies against labels.
pub fn detect(records: &[ScoredRecord], theta: f64) -> Result<Detection, EvalError> {
    check_theta(theta)?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for r in records {
        let predicted = r.scores.alignment > theta;
        let actual = r.record.label == Label::Aligned;
        match (predicted, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(Detection {
        theta,
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1: harmonic(precision, recall),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// One [`detect`] per grid point; the grid must be strictly ascending.
pub fn sweep(records: &[ScoredRecord], thetas: &[f64]) -> Result<Vec<SweepPoint>, EvalError> {
    if thetas.is_empty() {
        return Err(EvalError::InvalidInput(
            "theta grid must be non-empty".to_string(),
        ));
    }
    if thetas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidInput(
            "theta grid must be strictly ascending".to_string(),
        ));
    }
    thetas
        .iter()
        .map(|&theta| {
            let d = detect(records, theta)?;
            Ok(SweepPoint {
                theta,
                precision: d.precision,
                recall: d.recall,
                f1: d.f1,
            })
        })
        .collect()
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Plain BLEU over whitespace tokens: modified n-gram precisions up to
/// `max_n` with uniform weights, brevity penalty
/// `exp(min(0, 1 − |ref|/|cand|))`, no smoothing. Orders longer than the
/// candidate are skipped; a zero precision at any remaining order gives 0.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> Result<f64, EvalError> {
    if max_n == 0 {
        return Err(EvalError::InvalidInput(
            "max_n must be at least 1".to_string(),
        ));
    }
    let cand: Vec<&str> = candidate.split_whitespace().collect();
    let reference: Vec<&str> = reference.split_whitespace().collect();
    if cand.is_empty() || reference.is_empty() {
        return Err(EvalError::EmptyInput(
            "candidate and reference must each contain at least one token".to_string(),
        ));
    }

    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n.min(cand.len()) {
        let total = cand.len() - n + 1;
        let ref_counts = ngram_counts(&reference, n);
        let mut clipped = 0usize;
        for (gram, count) in ngram_counts(&cand, n) {
            clipped += count.min(ref_counts.get(gram).copied().unwrap_or(0));
        }
        if clipped == 0 {
            return Ok(0.0);
        }
        log_sum += (clipped as f64 / total as f64).ln();
        orders += 1;
    }
    let geo = (log_sum / orders as f64).exp();
    let bp = (1.0 - reference.len() as f64 / cand.len() as f64).min(0.0).exp();
    Ok(bp * geo)
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub theta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            theta: DEFAULT_THETA,
        }
    }
}

/// Full evaluation result; `to_markdown` renders it as one table row and
/// `validate` re-checks the arithmetic invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub alignment_selection: f64,
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Fraction of each misaligned kind correctly rejected; only kinds
    /// present in the dataset appear.
    pub per_kind: BTreeMap<MisalignKind, f64>,
}

impl EvalReport {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.alignment_selection) {
            return Err(format!(
                "alignment_selection out of range: {}",
                self.alignment_selection
            ));
        }
        check_theta(self.threshold).map_err(|e| e.to_string())?;
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        match (self.precision, ratio(self.tp, self.tp + self.fp)) {
            (Some(p), Some(expected)) if close(p, expected) => {}
            (None, None) => {}
            _ => return Err("precision inconsistent with tp/fp".to_string()),
        }
        match (self.recall, ratio(self.tp, self.tp + self.fn_)) {
            (Some(r), Some(expected)) if close(r, expected) => {}
            (None, None) => {}
            _ => return Err("recall inconsistent with tp/fn".to_string()),
        }
        match (self.f1, harmonic(self.precision, self.recall)) {
            (Some(f), Some(expected)) if close(f, expected) => {}
            (None, None) => {}
            _ => return Err("f1 inconsistent with precision/recall".to_string()),
        }
        if self.per_kind.values().any(|v| !(0.0..=1.0).contains(v)) {
            return Err("per_kind rate out of range".to_string());
        }
        Ok(())
    }

    pub fn to_markdown(&self) -> String {
        let pct = |v: Option<f64>| match v {
            Some(x) => format!("{:.2}", 100.0 * x),
            None => "n/a".to_string(),
        };
        format!(
            "| θ | AS | Precision | Recall | F1 |\n|---:|---:|---:|---:|---:|\n| {:.2} | {} | {} | {} | {} |\n",
            self.threshold,
            pct(Some(self.alignment_selection)),
            pct(self.precision),
            pct(self.recall),
            pct(self.f1),
        )
    }
}

/// Groups records by `group_id` in first-appearance order.
pub fn group_records(scored: &[ScoredRecord]) -> Vec<Vec<ScoredRecord>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<&str, Vec<ScoredRecord>> = HashMap::new();
    for r in scored {
        let id = r.record.group_id.as_str();
        if !by_id.contains_key(id) {
            order.push(r.record.group_id.clone());
        }
        by_id.entry(id).or_default().push(r.clone());
    }
    order
        .iter()
        .map(|id| by_id.remove(id.as_str()).expect("group collected"))
        .collect()
}

/// Scores every record through the backend, then computes alignment
/// selection, detection at `config.theta`, and the per-kind rejection
/// breakdown. Deterministic whenever the backend is.
/// Runs every record through the backend and attaches scores, preserving
/// dataset order. Shared by `evaluate` and the CLI score and sweep paths.
pub fn score_records<B: Backend + ?Sized>(
    dataset: &[ExampleRecord],
    backend: &B,
) -> Result<Vec<ScoredRecord>, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyInput("dataset has no records".to_string()));
    }
    for record in dataset {
        record.validate().map_err(EvalError::InvalidInput)?;
    }

    let pairs: Vec<(String, String)> = dataset
        .iter()
        .map(|r| (r.informal.clone(), r.formal.clone()))
        .collect();
    let outputs = backend
        .score_batch(&pairs)
        .map_err(|e| EvalError::InvalidInput(e.to_string()))?;

    let mut scored = Vec::with_capacity(dataset.len());
    for (record, result) in dataset.iter().zip(outputs) {
        let outputs = result.map_err(|source| EvalError::Backend {
            id: record.id.clone(),
            source,
        })?;
        let scores = Scores::from_outputs(
            &outputs.token_logprobs,
            &outputs.nl_hidden,
            &outputs.fl_hidden,
        )
        .map_err(|source| EvalError::Score {
            id: record.id.clone(),
            source,
        })?;
        scored.push(ScoredRecord {
            record: record.clone(),
            scores,
        });
    }
    Ok(scored)
}

pub fn evaluate<B: Backend + ?Sized>(
    dataset: &[ExampleRecord],
    backend: &B,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    check_theta(config.theta)?;
    let scored = score_records(dataset, backend)?;

    let selection = alignment_selection(&group_records(&scored))?;
    let detection = detect(&scored, config.theta)?;

    let mut kind_counts: BTreeMap<MisalignKind, (usize, usize)> = BTreeMap::new();
    for r in &scored {
        if let Some(kind) = r.record.misalign_kind {
            let entry = kind_counts.entry(kind).or_insert((0, 0));
            entry.0 += 1;
            if r.scores.alignment <= config.theta {
                entry.1 += 1;
            }
        }
    }
    let per_kind = kind_counts
        .into_iter()
        .map(|(kind, (count, rejected))| (kind, rejected as f64 / count as f64))
        .collect();

    Ok(EvalReport {
        alignment_selection: selection,
        threshold: detection.theta,
        tp: detection.tp,
        fp: detection.fp,
        fn_: detection.fn_,
        tn: detection.tn,
        precision: detection.precision,
        recall: detection.recall,
        f1: detection.f1,
        per_kind,
    })
}
