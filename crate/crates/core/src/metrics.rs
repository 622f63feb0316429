//! Ranking metrics.

use std::cmp::Ordering;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::scalar::Scalar;

/// Area under the ROC curve via the Mann-Whitney rank statistic.
///
/// Equals the fraction of (positive, negative) pairs where the positive
/// scores higher, with ties counted as one half. Tied scores share their
/// average rank, so the result is exact for any tie pattern.
pub fn auc_from_scores<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len(), "one score per label");
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 {
        return Err(Error::SingleClass { class: "negative" });
    }
    if negatives == 0 {
        return Err(Error::SingleClass { class: "positive" });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    let mut positive_rank_sum = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        let tied_positives = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        positive_rank_sum += rank * tied_positives as f64;
        i = j;
    }

    let (p, n) = (positives as f64, negatives as f64);
    Ok((positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// AUC of a model's predicted probabilities on a dataset.
pub fn auc_roc<T: Scalar, M: Model<T> + ?Sized>(model: &M, data: &Dataset<T>) -> Result<f64> {
    let scores = data
        .examples()
        .iter()
        .map(|e| model.predict_proba(&e.features))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<u8> = data.labels().collect();
    auc_from_scores(&scores, &labels)
}
