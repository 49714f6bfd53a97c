//! Confusion counts, accuracy/precision/recall/F1, ROC sweep and AUC.
//!
//! A score whose denominator is zero is reported as `None` ("undefined"),
//! never silently coerced to 0.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
}

/// Formats an optional score for tables; undefined scores print as `undefined`.
pub fn fmt_score(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

fn check_binary(v: &[u8], what: &str) -> Result<()> {
    match v.iter().position(|&x| x > 1) {
        Some(i) => Err(Error::Data(format!("{what}[{i}] = {} is not 0/1", v[i]))),
        None => Ok(()),
    }
}

pub fn confusion_counts(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Data(format!(
            "{} truths but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    check_binary(y_true, "y_true")?;
    check_binary(y_pred, "y_pred")?;
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            _ => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, precision, recall and F1 from confusion counts (AUC left empty).
pub fn score_set(c: &ConfusionCounts) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::Data("no evaluated rows".into()));
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport { accuracy: ratio(c.tp + c.tn, c.total()), precision, recall, f1, auc: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` pairs starting at `(0, 0)` and ending at `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Threshold behind each point: `+inf`, then distinct scores descending.
    pub thresholds: Vec<f64>,
}

/// ROC sweep: at threshold `t` a row is predicted positive iff `score >= t`.
/// Tied scores move together, giving one point per distinct score.
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::Data(format!("{} truths but {} scores", y_true.len(), scores.len())));
    }
    check_binary(y_true, "y_true")?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("scores must be finite".into()));
    }
    let positives = y_true.iter().filter(|&&y| y == 1).count();
    let negatives = y_true.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Data("ROC needs both classes in the truth vector".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(t);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5).sum()
}

impl RocCurve {
    /// CSV with columns `threshold,fpr,tpr`; the first threshold is `inf`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["threshold", "fpr", "tpr"])?;
        for (t, (fpr, tpr)) in self.thresholds.iter().zip(&self.points) {
            w.write_record([t.to_string(), fpr.to_string(), tpr.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full report for hard labels plus scores.
pub fn evaluate(y_true: &[u8], scores: &[f64], threshold: f64) -> Result<(MetricsReport, RocCurve)> {
    let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
    let mut report = score_set(&confusion_counts(y_true, &pred)?)?;
    let curve = roc_curve(y_true, scores)?;
    report.auc = Some(auc(&curve));
    Ok((report, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_of_each_outcome() {
        let c = confusion_counts(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, tn: 1, fp: 1, fn_: 1 });
    }

    #[test]
    fn identity_and_inversion() {
        let t = [1, 0, 0, 1, 1];
        let c = confusion_counts(&t, &t).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let inv: Vec<u8> = t.iter().map(|v| 1 - v).collect();
        let c = confusion_counts(&t, &inv).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
    }

    #[test]
    fn confusion_errors() {
        assert!(confusion_counts(&[1, 0], &[1]).is_err());
        assert!(confusion_counts(&[1, 2], &[1, 0]).is_err());
    }

    #[test]
    fn worked_scores() {
        let r = score_set(&ConfusionCounts { tp: 3, tn: 5, fp: 1, fn_: 1 }).unwrap();
        assert_eq!(r.accuracy, Some(0.8));
        assert_eq!(r.precision, Some(0.75));
        assert_eq!(r.recall, Some(0.75));
        assert!((r.f1.unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn undefined_precision_is_flagged() {
        let r = score_set(&ConfusionCounts { tp: 0, tn: 4, fp: 0, fn_: 2 }).unwrap();
        assert_eq!(r.precision, None);
        assert_eq!(r.recall, Some(0.0));
        assert_eq!(r.f1, None);
        assert_eq!(fmt_score(r.precision), "undefined");
        assert!(score_set(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn perfect_classifier() {
        let r = score_set(&ConfusionCounts { tp: 4, tn: 6, fp: 0, fn_: 0 }).unwrap();
        assert_eq!([r.accuracy, r.precision, r.recall, r.f1], [Some(1.0); 4]);
    }

    #[test]
    fn roc_shapes() {
        let c = roc_curve(&[1, 0], &[0.9, 0.1]).unwrap();
        assert_eq!(c.points, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&c), 1.0);

        let c = roc_curve(&[1, 0, 1, 0], &[0.3; 4]).unwrap();
        assert_eq!(c.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&c), 0.5);

        let c = roc_curve(&[0, 1, 1, 0, 1], &[0.1, 0.8, 0.7, 0.2, 0.9]).unwrap();
        assert!(c.points.contains(&(0.0, 1.0)));
        assert!(roc_curve(&[1, 1], &[0.1, 0.2]).is_err());
        assert!(roc_curve(&[1, 0], &[0.1, f64::NAN]).is_err());
    }
}
