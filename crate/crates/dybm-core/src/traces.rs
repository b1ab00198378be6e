//! Eligibility traces and FIFO queues: the O(1) sufficient statistics of
//! unbounded history.
//!
//! Convention: the synaptic trace follows its closed form
//! α^[t] = Σ_{s ≤ t−d+1} λ^{t−d+1−s} x^[s], i.e. the most recently delivered
//! pattern enters with coefficient 1, so the recursion is decay-then-add:
//! α ← λ·α + delivered. The neural trace follows γ ← μ·(γ + x), whose closed
//! form gives the newest firing coefficient μ. β is never kept recursively;
//! its μ^{−δ} terms exceed 1 and would amplify rounding.

use std::collections::VecDeque;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{DybmError, Result};

fn check_decay(rate: f64, name: &str) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(DybmError::Config(format!("{} must lie in [0, 1), got {}", name, rate)))
    }
}

/// Conduction-delay buffer holding x^[t−1]..x^[t−d+1] (newest last). Always
/// exactly d−1 entries; history before t=0 is all-zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FifoQueue {
    buffer: VecDeque<Array1<f64>>,
    dim: usize,
}

impl FifoQueue {
    pub fn new(dim: usize, delay: usize) -> Result<Self> {
        if delay < 1 {
            return Err(DybmError::Config("delay must be at least 1".into()));
        }
        let buffer = (0..delay - 1).map(|_| Array1::zeros(dim)).collect();
        Ok(FifoQueue { buffer, dim })
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// x^[t−delta] for delta in 1..=d−1.
    pub fn lagged(&self, delta: usize) -> &Array1<f64> {
        &self.buffer[self.buffer.len() - delta]
    }

    /// Buffer contents, oldest first.
    pub fn rows(&self) -> Vec<Array1<f64>> {
        self.buffer.iter().cloned().collect()
    }

    /// Rebuilds a buffer from `rows()` output.
    pub fn from_rows(dim: usize, delay: usize, rows: Vec<Array1<f64>>) -> Result<Self> {
        if rows.len() != delay.saturating_sub(1) {
            return Err(DybmError::Checkpoint(format!(
                "queue holds {} rows, delay {} requires {}",
                rows.len(),
                delay,
                delay.saturating_sub(1)
            )));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(DybmError::Checkpoint("queue row width mismatch".into()));
        }
        let mut fifo = FifoQueue::new(dim, delay)?;
        for row in rows {
            fifo.push(row);
        }
        Ok(fifo)
    }

    /// Pushes x^[t]; returns the evicted x^[t−d+1], the pattern now arriving
    /// at the synapse. With d=1 the pattern is delivered immediately.
    pub fn push(&mut self, pattern: Array1<f64>) -> Array1<f64> {
        if self.buffer.is_empty() {
            return pattern;
        }
        self.buffer.push_back(pattern);
        self.buffer.pop_front().expect("buffer non-empty")
    }
}

/// α ← λ·α + delivered, elementwise.
pub fn update_synaptic(
    alpha_row: &Array1<f64>,
    delivered: &Array1<f64>,
    lambda: f64,
) -> Result<Array1<f64>> {
    check_decay(lambda, "lambda")?;
    Ok(alpha_row * lambda + delivered)
}

/// γ ← μ·(γ + fired), elementwise.
pub fn update_neural(gamma: &Array1<f64>, fired: &Array1<f64>, mu: f64) -> Result<Array1<f64>> {
    check_decay(mu, "mu")?;
    Ok((gamma + fired) * mu)
}

/// β^[t−1] = Σ_{δ=1}^{d−1} μ^{−δ} x^[t−δ]: discounted weight of spikes still
/// in transit. Non-recursive by design. μ=0 means in-transit spikes carry no
/// trace weight at all (the μ^d factors they would meet downstream vanish),
/// so the limit value is zero rather than a division by zero.
pub fn compute_beta(fifo: &FifoQueue, mu: f64, delay: usize) -> Array1<f64> {
    let mut beta = Array1::zeros(fifo.dim());
    if mu == 0.0 {
        return beta;
    }
    for delta in 1..delay {
        beta += &(fifo.lagged(delta) * mu.powi(-(delta as i32)));
    }
    beta
}

/// Synaptic traces (one row per decay rate), neural trace, and the FIFO, all
/// advanced together by `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceState {
    pub alpha: Array2<f64>,
    pub gamma: Array1<f64>,
    pub fifo: FifoQueue,
    pub decay_rates: Vec<f64>,
    pub mu: f64,
    pub delay: usize,
}

impl TraceState {
    pub fn new(dim: usize, decay_rates: &[f64], mu: f64, delay: usize) -> Result<Self> {
        for &rate in decay_rates {
            check_decay(rate, "decay rate")?;
        }
        check_decay(mu, "mu")?;
        Ok(TraceState {
            alpha: Array2::zeros((decay_rates.len(), dim)),
            gamma: Array1::zeros(dim),
            fifo: FifoQueue::new(dim, delay)?,
            decay_rates: decay_rates.to_vec(),
            mu,
            delay,
        })
    }

    pub fn dim(&self) -> usize {
        self.fifo.dim()
    }

    pub fn step(&mut self, new_pattern: &Array1<f64>) -> Result<()> {
        if new_pattern.len() != self.dim() {
            return Err(DybmError::Input(format!(
                "pattern has {} units, state expects {}",
                new_pattern.len(),
                self.dim()
            )));
        }
        let delivered = self.fifo.push(new_pattern.clone());
        for (l, &lambda) in self.decay_rates.iter().enumerate() {
            let row = self.alpha.row(l).to_owned();
            self.alpha
                .row_mut(l)
                .assign(&update_synaptic(&row, &delivered, lambda)?);
        }
        self.gamma = update_neural(&self.gamma, new_pattern, self.mu)?;
        Ok(())
    }

    pub fn beta(&self) -> Array1<f64> {
        compute_beta(&self.fifo, self.mu, self.delay)
    }
}
