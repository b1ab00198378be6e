//! Small numeric helpers shared across the model families.

use ndarray::{Array1, Array2, ArrayView1};

/// Logistic function, branch-stable for |m| up to the f64 exp range.
pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_vec(m: &Array1<f64>) -> Array1<f64> {
    m.mapv(sigmoid)
}

/// ln(1 + e^x) without overflow for large |x|.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Σ_j [x_j·m_j − softplus(m_j)]: Bernoulli log-likelihood of bits x under
/// logits m, equal to Σ x·log σ(m) + (1−x)·log(1−σ(m)).
pub fn bernoulli_log_likelihood(m: &Array1<f64>, x: &ArrayView1<f64>) -> f64 {
    m.iter()
        .zip(x.iter())
        .map(|(&mj, &xj)| xj * mj - softplus(mj))
        .sum()
}

pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// a ⊗ b, shape (a.len(), b.len()).
pub fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let (n, m) = (a.len(), b.len());
    Array2::from_shape_fn((n, m), |(i, j)| a[i] * b[j])
}
