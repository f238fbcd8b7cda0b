use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let n = pred.len().max(1) as f64;
    let loss = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    Ok((loss, grad))
}

pub fn mse_per_sample(pred: &[f64], target: &[f64]) -> Vec<f64> {
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).collect()
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_classes(logits: &Matrix, classes: &[usize]) -> Result<()> {
    if logits.rows() != classes.len() {
        return Err(Error::LengthMismatch {
            left: logits.rows(),
            right: classes.len(),
        });
    }
    for &c in classes {
        if c >= logits.cols() {
            return Err(Error::IndexOutOfRange {
                index: c,
                bound: logits.cols(),
            });
        }
    }
    Ok(())
}

/// `−ln softmax(logits)[class]` per row.
pub fn ce_per_sample(logits: &Matrix, classes: &[usize]) -> Result<Vec<f64>> {
    check_classes(logits, classes)?;
    Ok((0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            log_sum_exp(row) - row[classes[i]]
        })
        .collect())
}

/// Mean softmax cross-entropy; gradient is `(softmax − onehot) / batch`.
pub fn ce_loss(logits: &Matrix, classes: &[usize]) -> Result<(f64, Matrix)> {
    let per = ce_per_sample(logits, classes)?;
    let n = per.len().max(1) as f64;
    let mut grad = softmax_rows(logits);
    for (i, &c) in classes.iter().enumerate() {
        let row = grad.row_mut(i);
        row[c] -= 1.0;
        row.iter_mut().for_each(|v| *v /= n);
    }
    Ok((per.iter().sum::<f64>() / n, grad))
}
