//! Classification metrics: macro precision/recall/F1, MCC, rank-based AUC.
//!
//! Conventions: any per-class 0/0 ratio is 0, and a zero MCC denominator
//! yields 0, so constant predictors produce finite rows. AUC uses the
//! Mann-Whitney rank statistic with ties counted as one half, so a constant
//! score vector scores exactly 0.5.

use crate::error::{Error, Result};
use crate::schema::LevelIdx;

/// Square count matrix indexed by (true level, predicted level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[LevelIdx], pred: &[LevelIdx], n_classes: usize) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::InvalidArgument(format!(
                "length mismatch: {} truth labels, {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::InvalidArgument("no labels to evaluate".into()));
        }
        let mut counts = vec![0u64; n_classes * n_classes];
        for (&t, &p) in truth.iter().zip(pred) {
            if (t as usize) >= n_classes || (p as usize) >= n_classes {
                return Err(Error::InvalidArgument(format!(
                    "label out of range: ({t}, {p}) with {n_classes} classes"
                )));
            }
            counts[t as usize * n_classes + p as usize] += 1;
        }
        Ok(ConfusionMatrix { n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn count(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn true_positives(&self, class: usize) -> u64 {
        self.count(class, class)
    }

    fn predicted(&self, class: usize) -> u64 {
        (0..self.n_classes).map(|t| self.count(t, class)).sum()
    }

    fn support(&self, class: usize) -> u64 {
        (0..self.n_classes).map(|p| self.count(class, p)).sum()
    }

    /// tp / (tp + fp); 0 when the class was never predicted.
    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.true_positives(class), self.predicted(class))
    }

    /// tp / (tp + fn); 0 when the class has no support.
    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.true_positives(class), self.support(class))
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self, class: usize) -> f64 {
        let p = self.precision(class);
        let r = self.recall(class);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..self.n_classes).map(|c| self.true_positives(c)).sum();
        correct as f64 / self.total() as f64
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Unweighted mean of per-class F1 over all `n_classes` classes.
pub fn f1_macro(truth: &[LevelIdx], pred: &[LevelIdx], n_classes: usize) -> Result<f64> {
    let cm = ConfusionMatrix::from_labels(truth, pred, n_classes)?;
    Ok((0..n_classes).map(|c| cm.f1(c)).sum::<f64>() / n_classes as f64)
}

/// Macro-averaged (precision, recall).
pub fn precision_recall_macro(
    truth: &[LevelIdx],
    pred: &[LevelIdx],
    n_classes: usize,
) -> Result<(f64, f64)> {
    let cm = ConfusionMatrix::from_labels(truth, pred, n_classes)?;
    let p = (0..n_classes).map(|c| cm.precision(c)).sum::<f64>() / n_classes as f64;
    let r = (0..n_classes).map(|c| cm.recall(c)).sum::<f64>() / n_classes as f64;
    Ok((p, r))
}

/// Fraction of exact matches.
pub fn accuracy(truth: &[LevelIdx], pred: &[LevelIdx], n_classes: usize) -> Result<f64> {
    Ok(ConfusionMatrix::from_labels(truth, pred, n_classes)?.accuracy())
}

/// Matthews correlation coefficient for binary labels (positive class = 1).
/// A zero denominator (e.g. a constant prediction) yields 0.
pub fn mcc(truth: &[LevelIdx], pred: &[LevelIdx]) -> Result<f64> {
    let cm = ConfusionMatrix::from_labels(truth, pred, 2)?;
    let tp = cm.count(1, 1) as f64;
    let tn = cm.count(0, 0) as f64;
    let fp = cm.count(0, 1) as f64;
    let fn_ = cm.count(1, 0) as f64;
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if den == 0.0 {
        Ok(0.0)
    } else {
        Ok((tp * tn - fp * fn_) / den)
    }
}

/// Probability that a uniformly random positive outscores a uniformly random
/// negative, ties counted one half (Mann-Whitney formulation). Requires both
/// classes present.
pub fn auc(truth: &[LevelIdx], scores: &[f64]) -> Result<f64> {
    if truth.len() != scores.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} labels, {} scores",
            truth.len(),
            scores.len()
        )));
    }
    let n_pos = truth.iter().filter(|&&t| t == 1).count();
    let n_neg = truth.iter().filter(|&&t| t == 0).count();
    if n_pos + n_neg != truth.len() {
        return Err(Error::InvalidArgument("auc requires binary labels".into()));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument(
            "auc requires both classes present".into(),
        ));
    }

    // Average ranks over tie groups, then the rank-sum statistic.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must be comparable"));
    let mut rank_of = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied entries share the mean rank of the group
        let mean_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            rank_of[k] = mean_rank;
        }
        i = j + 1;
    }
    let rank_sum_pos: f64 = truth
        .iter()
        .zip(&rank_of)
        .filter(|(&t, _)| t == 1)
        .map(|(_, &r)| r)
        .sum();
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Mean and population standard deviation (the repetition count is the whole
/// population of runs, matching the reported "± std over ten runs").
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_one() {
        let truth = vec![0, 1, 2, 1, 0];
        assert_eq!(f1_macro(&truth, &truth, 3).unwrap(), 1.0);
        let (p, r) = precision_recall_macro(&truth, &truth, 3).unwrap();
        assert_eq!((p, r), (1.0, 1.0));
    }

    #[test]
    fn constant_prediction_macro_f1() {
        // truth [0,0,0,1], pred all 0: class 0 F1 = 6/7, class 1 F1 = 0.
        let truth = vec![0, 0, 0, 1];
        let pred = vec![0, 0, 0, 0];
        let f1 = f1_macro(&truth, &pred, 2).unwrap();
        assert!((f1 - 0.4286).abs() < 1e-4, "{f1}");
    }

    #[test]
    fn swapped_binary_precision_recall_zero() {
        let truth = vec![0, 1];
        let pred = vec![1, 0];
        let (p, r) = precision_recall_macro(&truth, &pred, 2).unwrap();
        assert_eq!((p, r), (0.0, 0.0));
    }

    #[test]
    fn mcc_perfect_and_constant() {
        assert_eq!(mcc(&[1, 0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(mcc(&[1, 0, 1], &[0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn mcc_direct_formula_case() {
        // tp=2, tn=1, fp=1, fn=1 -> (2-1)/sqrt(3*3*2*2)
        let truth = vec![1, 1, 1, 0, 0];
        let pred = vec![1, 1, 0, 1, 0];
        let got = mcc(&truth, &pred).unwrap();
        assert!((got - 1.0 / 6.0) < 1e-12 && (got - 0.1667).abs() < 1e-4, "{got}");
    }

    #[test]
    fn auc_separable_and_tied() {
        let truth = vec![1, 1, 0, 0];
        assert_eq!(auc(&truth, &[0.9, 0.8, 0.3, 0.2]).unwrap(), 1.0);
        assert_eq!(auc(&truth, &[0.5, 0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(auc(&truth, &[0.2, 0.3, 0.8, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn auc_single_class_rejected() {
        assert!(auc(&[1, 1], &[0.5, 0.3]).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(f1_macro(&[0, 1], &[0], 2).is_err());
        assert!(auc(&[0, 1], &[0.5]).is_err());
    }

    #[test]
    fn mean_std_is_population_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.118033988749895).abs() < 1e-12);
    }
}
