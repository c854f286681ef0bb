use super::LearnError;

/// Area under the ROC curve as the normalized Mann-Whitney U statistic,
/// ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, LearnError> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks (1-based) of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64
}

/// Precision and recall of `class`; 0 when undefined.
pub fn precision_recall(pred: &[usize], truth: &[usize], class: usize) -> (f64, f64) {
    let tp = pred.iter().zip(truth).filter(|(p, t)| **p == class && **t == class).count() as f64;
    let predicted = pred.iter().filter(|p| **p == class).count() as f64;
    let actual = truth.iter().filter(|t| **t == class).count() as f64;
    let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    (div(tp, predicted), div(tp, actual))
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}
