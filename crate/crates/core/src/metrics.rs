//! Micro- and macro-averaged F1 for multi-label predictions.
//!
//! F1 is taken as 0 whenever precision + recall is 0, including labels that
//! have neither true nor predicted positives.

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    probs: Vec<Vec<f64>>,
    gold: Vec<Vec<bool>>,
    threshold: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn f1(&self) -> f64 {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl PredictionSet {
    pub fn new(probs: Vec<Vec<f64>>, gold: Vec<Vec<bool>>, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::BadThreshold(threshold));
        }
        if probs.len() != gold.len() {
            return Err(Error::Shape {
                context: "documents",
                expected: probs.len().to_string(),
                actual: gold.len().to_string(),
            });
        }
        let labels = probs.first().map_or(0, Vec::len);
        for (p, y) in probs.iter().zip(&gold) {
            if p.len() != labels || y.len() != labels {
                return Err(Error::Shape {
                    context: "labels per document",
                    expected: labels.to_string(),
                    actual: format!("{}/{}", p.len(), y.len()),
                });
            }
        }
        Ok(PredictionSet {
            probs,
            gold,
            threshold,
        })
    }

    /// Parses row-per-document whitespace-separated files: probabilities in
    /// `pred`, 0/1 labels in `gold`. Blank and `#` lines are skipped.
    pub fn from_text(pred: &str, gold: &str, threshold: f64) -> Result<Self> {
        let probs = parse_rows(pred)?;
        let gold = parse_rows(gold)?
            .into_iter()
            .map(|row| row.into_iter().map(|x| x >= 0.5).collect())
            .collect();
        Self::new(probs, gold, threshold)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    /// Confusion counts per label.
    pub fn label_counts(&self) -> Vec<Counts> {
        let mut counts = vec![Counts::default(); self.num_labels()];
        for (p, y) in self.probs.iter().zip(&self.gold) {
            for (j, c) in counts.iter_mut().enumerate() {
                match (p[j] >= self.threshold, y[j]) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                    (false, false) => {}
                }
            }
        }
        counts
    }
}

pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        reason: format!("`{tok}`: {e}"),
                    })
                })
                .collect()
        })
        .collect()
}

/// F1 over TP/FP/FN pooled across all documents and labels.
pub fn micro_f1(ps: &PredictionSet) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let total = ps
        .label_counts()
        .into_iter()
        .fold(Counts::default(), |acc, c| Counts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        });
    Ok(total.f1())
}

/// Unweighted mean of per-label F1.
pub fn macro_f1(ps: &PredictionSet) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let counts = ps.label_counts();
    if counts.is_empty() {
        return Ok(0.0);
    }
    Ok(counts.iter().map(Counts::f1).sum::<f64>() / counts.len() as f64)
}
