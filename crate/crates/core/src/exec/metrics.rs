use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{external_categories, ErrorLabelSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub question_id: String,
    /// Predicted SQL was execution-equivalent to gold.
    pub gold_correct_before: bool,
    pub flagged: bool,
    /// Refined SQL is execution-equivalent to gold.
    pub gold_correct_after: bool,
    /// Refined SQL executes differently from the prediction.
    pub changed: bool,
    pub final_labels: ErrorLabelSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<ErrorLabelSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("inconsistent record {id}: {reason}")]
    InconsistentRecords { id: String, reason: String },
    #[error("total {total} is smaller than the {records} records")]
    TotalTooSmall { total: usize, records: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsaEntry {
    pub support: usize,
    pub hits: usize,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub records: usize,
    pub ex_before: f64,
    pub ex_after: f64,
    pub detection: DetectionScores,
    pub fixed: usize,
    pub corrupted: usize,
    pub fixed_rate: f64,
    pub corruption_rate: f64,
    /// Set when there were no false positives and the corruption rate is 0 by convention.
    pub corruption_rate_undefined: bool,
    pub fixed_rate_undefined: bool,
    pub delta_ex_observed: f64,
    pub delta_ex_reconstructed: f64,
    /// Net count change of correct samples, observed and from fixed minus corrupted.
    pub net_gain_observed: i64,
    pub net_gain_reconstructed: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tsa: Option<BTreeMap<String, TsaEntry>>,
}

/// Net execution-accuracy gain from detection and refinement outcomes.
pub fn delta_ex(tp: usize, fp: usize, fr: f64, cr: f64, total: usize) -> f64 {
    (tp as f64 * fr - fp as f64 * cr) / total as f64
}

/// The `fp * cr` product implied by an observed gain.
pub fn implied_fp_cr(tp: usize, fr: f64, delta: f64, total: usize) -> f64 {
    tp as f64 * fr - delta * total as f64
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn check(r: &SampleRecord) -> Result<(), MetricsError> {
    let bad = |reason: &str| {
        Err(MetricsError::InconsistentRecords {
            id: r.question_id.clone(),
            reason: reason.to_string(),
        })
    };
    if r.flagged == r.final_labels.is_no_error() {
        return bad("flag disagrees with final labels");
    }
    if !r.flagged && r.changed {
        return bad("unflagged sample changed");
    }
    if !r.changed && r.gold_correct_before != r.gold_correct_after {
        return bad("correctness changed without an execution change");
    }
    Ok(())
}

pub fn compute_metrics(records: &[SampleRecord], total: usize) -> Result<EvalReport, MetricsError> {
    if total < records.len() || total == 0 {
        return Err(MetricsError::TotalTooSmall {
            total,
            records: records.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    let (mut fixed, mut corrupted) = (0, 0);
    let (mut before, mut after) = (0usize, 0usize);
    for r in records {
        check(r)?;
        before += usize::from(r.gold_correct_before);
        after += usize::from(r.gold_correct_after);
        match (r.flagged, r.gold_correct_before) {
            (true, false) => {
                tp += 1;
                fixed += usize::from(r.gold_correct_after);
            }
            (true, true) => {
                fp += 1;
                corrupted += usize::from(r.changed);
            }
            (false, false) => fn_ += 1,
            (false, true) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let fr = ratio(fixed, tp);
    let cr = ratio(corrupted, fp);
    Ok(EvalReport {
        total,
        records: records.len(),
        ex_before: ratio(before, total),
        ex_after: ratio(after, total),
        detection: DetectionScores {
            accuracy: ratio(tp + tn, records.len()),
            precision,
            recall,
            f1: f1(precision, recall),
            tp,
            fp,
            fn_,
            tn,
        },
        fixed,
        corrupted,
        fixed_rate: fr,
        corruption_rate: cr,
        corruption_rate_undefined: fp == 0,
        fixed_rate_undefined: tp == 0,
        delta_ex_observed: (after as f64 - before as f64) / total as f64,
        delta_ex_reconstructed: delta_ex(tp, fp, fr, cr, total),
        net_gain_observed: after as i64 - before as i64,
        net_gain_reconstructed: fixed as i64 - corrupted as i64,
        tsa: tsa(records),
    })
}

/// Per-category recall over samples that carry gold labels.
fn tsa(records: &[SampleRecord]) -> Option<BTreeMap<String, TsaEntry>> {
    let cats = |s: &ErrorLabelSet| -> Vec<String> {
        let mut v: Vec<String> = s.labels().into_iter().flat_map(external_categories).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut out: BTreeMap<String, TsaEntry> = BTreeMap::new();
    let mut any = false;
    for r in records {
        let Some(gold) = &r.gold_labels else { continue };
        any = true;
        let predicted = cats(&r.final_labels);
        for c in cats(gold) {
            let e = out.entry(c.clone()).or_insert(TsaEntry {
                support: 0,
                hits: 0,
                recall: 0.0,
            });
            e.support += 1;
            e.hits += usize::from(predicted.contains(&c));
        }
    }
    for e in out.values_mut() {
        e.recall = ratio(e.hits, e.support);
    }
    any.then_some(out)
}

impl EvalReport {
    /// Aligned two-column text rendering.
    pub fn to_table(&self) -> String {
        let d = &self.detection;
        let pct = |x: f64| format!("{:.2}", x * 100.0);
        let mut rows: Vec<(String, String)> = vec![
            ("samples".into(), format!("{} / {}", self.records, self.total)),
            ("EX before".into(), pct(self.ex_before)),
            ("EX after".into(), pct(self.ex_after)),
            ("D-Accuracy".into(), pct(d.accuracy)),
            ("Precision".into(), pct(d.precision)),
            ("Recall".into(), pct(d.recall)),
            ("D-F1".into(), pct(d.f1)),
            ("|TP|".into(), d.tp.to_string()),
            ("|FP|".into(), d.fp.to_string()),
            ("FR".into(), pct(self.fixed_rate)),
            (
                "CR".into(),
                if self.corruption_rate_undefined {
                    format!("{} (no false positives)", pct(self.corruption_rate))
                } else {
                    pct(self.corruption_rate)
                },
            ),
            ("dEX observed".into(), pct(self.delta_ex_observed)),
            ("dEX reconstructed".into(), pct(self.delta_ex_reconstructed)),
        ];
        if let Some(t) = &self.tsa {
            for (c, e) in t {
                rows.push((format!("TSA {c}"), format!("{} ({}/{})", pct(e.recall), e.hits, e.support)));
            }
        }
        let w = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<w$}  {v:>8}\n"))
            .collect()
    }
}
