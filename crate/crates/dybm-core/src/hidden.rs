//! Binary model with latent units. Visible parameters θ follow the same
//! conditional-likelihood gradient as the fully visible model; the hidden
//! emission parameters φ follow a score-function estimator whose per-step
//! summands are folded into a discounted running sum, so learning stays O(1)
//! per step. An exact O(t) variant keeps the whole summand history instead.
//!
//! Layout: every weight family (`w`, `v`, `u`, `z`) holds `delay` blocks;
//! blocks 1..d−1 multiply the lagged patterns still in transit and block d
//! multiplies the eligibility trace. There is no hidden bias: hidden units
//! are steered entirely by the weight blocks.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;

use crate::binary::check_binary;
use crate::error::{DybmError, Result};
use crate::math::{bernoulli_log_likelihood, logsumexp, outer, sigmoid_vec};
use crate::rng::Rng;
use crate::traces::{update_synaptic, FifoQueue};

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenDybmParams {
    pub b: Array1<f64>,
    /// Visible→visible, `delay` blocks of N_v×N_v; last block drives from α.
    pub w: Vec<Array2<f64>>,
    /// Hidden→visible, `delay` blocks of N_h×N_v; last block drives from β_h.
    pub v: Vec<Array2<f64>>,
    /// Visible→hidden (φ), `delay` blocks of N_v×N_h.
    pub u: Vec<Array2<f64>>,
    /// Hidden→hidden (φ), `delay` blocks of N_h×N_h.
    pub z: Vec<Array2<f64>>,
    pub lambda: f64,
    pub delay: usize,
}

fn check_decay(lambda: f64) -> Result<()> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(DybmError::Config(format!("lambda must lie in [0, 1), got {}", lambda)))
    }
}

impl HiddenDybmParams {
    pub fn zeros(n_v: usize, n_h: usize, lambda: f64, delay: usize) -> Result<Self> {
        check_decay(lambda)?;
        if delay < 1 {
            return Err(DybmError::Config("delay must be at least 1".into()));
        }
        Ok(HiddenDybmParams {
            b: Array1::zeros(n_v),
            w: (0..delay).map(|_| Array2::zeros((n_v, n_v))).collect(),
            v: (0..delay).map(|_| Array2::zeros((n_h, n_v))).collect(),
            u: (0..delay).map(|_| Array2::zeros((n_v, n_h))).collect(),
            z: (0..delay).map(|_| Array2::zeros((n_h, n_h))).collect(),
            lambda,
            delay,
        })
    }

    pub fn init(n_v: usize, n_h: usize, lambda: f64, delay: usize, rng: &mut Rng) -> Result<Self> {
        let mut params = HiddenDybmParams::zeros(n_v, n_h, lambda, delay)?;
        let fill = |blocks: &mut Vec<Array2<f64>>, rng: &mut Rng| {
            for block in blocks.iter_mut() {
                *block = block.mapv(|_| rng.random_range(-0.01..0.01));
            }
        };
        fill(&mut params.w, rng);
        fill(&mut params.v, rng);
        fill(&mut params.u, rng);
        fill(&mut params.z, rng);
        Ok(params)
    }

    pub fn visible_units(&self) -> usize {
        self.b.len()
    }

    pub fn hidden_units(&self) -> usize {
        self.v[0].nrows()
    }

    pub fn new_state(&self) -> Result<HiddenTraceState> {
        HiddenTraceState::new(self.visible_units(), self.hidden_units(), self.lambda, self.delay)
    }
}

/// Eligibility traces and in-transit queues for both layers; the hidden side
/// mirrors the visible one exactly (decay-then-add on delivery).
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenTraceState {
    pub alpha: Array1<f64>,
    pub beta_h: Array1<f64>,
    pub fifo_v: FifoQueue,
    pub fifo_h: FifoQueue,
    pub lambda: f64,
    pub delay: usize,
}

impl HiddenTraceState {
    pub fn new(n_v: usize, n_h: usize, lambda: f64, delay: usize) -> Result<Self> {
        check_decay(lambda)?;
        Ok(HiddenTraceState {
            alpha: Array1::zeros(n_v),
            beta_h: Array1::zeros(n_h),
            fifo_v: FifoQueue::new(n_v, delay)?,
            fifo_h: FifoQueue::new(n_h, delay)?,
            lambda,
            delay,
        })
    }

    pub fn snapshot(&self) -> TraceSnapshot {
        TraceSnapshot {
            x_lags: (1..self.delay).map(|delta| self.fifo_v.lagged(delta).clone()).collect(),
            alpha: self.alpha.clone(),
            h_lags: (1..self.delay).map(|delta| self.fifo_h.lagged(delta).clone()).collect(),
            beta_h: self.beta_h.clone(),
        }
    }

    pub fn step(&mut self, x: &Array1<f64>, h: &Array1<f64>) -> Result<()> {
        if x.len() != self.alpha.len() || h.len() != self.beta_h.len() {
            return Err(DybmError::Input(format!(
                "pattern dims ({}, {}) do not match state dims ({}, {})",
                x.len(),
                h.len(),
                self.alpha.len(),
                self.beta_h.len()
            )));
        }
        let delivered_v = self.fifo_v.push(x.clone());
        self.alpha = update_synaptic(&self.alpha, &delivered_v, self.lambda)?;
        let delivered_h = self.fifo_h.push(h.clone());
        self.beta_h = update_synaptic(&self.beta_h, &delivered_h, self.lambda)?;
        Ok(())
    }
}

/// Frozen inputs to one step: lag-δ patterns (δ = 1..d−1, oldest last index)
/// and both traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSnapshot {
    pub x_lags: Vec<Array1<f64>>,
    pub alpha: Array1<f64>,
    pub h_lags: Vec<Array1<f64>>,
    pub beta_h: Array1<f64>,
}

/// One retained step for the exact O(t) estimator.
#[derive(Debug, Clone)]
pub struct PhiStepRecord {
    pub inputs: TraceSnapshot,
    pub h: Array1<f64>,
}

/// φ-shaped block set; serves as summand, running sum, and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiBlocks {
    pub u: Vec<Array2<f64>>,
    pub z: Vec<Array2<f64>>,
}

impl PhiBlocks {
    pub fn zeros_like(params: &HiddenDybmParams) -> Self {
        PhiBlocks {
            u: params.u.iter().map(|block| Array2::zeros(block.dim())).collect(),
            z: params.z.iter().map(|block| Array2::zeros(block.dim())).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in self.u.iter_mut().chain(self.z.iter_mut()) {
            *block *= factor;
        }
    }

    pub fn add(&mut self, other: &PhiBlocks) {
        for (mine, theirs) in self.u.iter_mut().zip(other.u.iter()) {
            *mine += theirs;
        }
        for (mine, theirs) in self.z.iter_mut().zip(other.z.iter()) {
            *mine += theirs;
        }
    }
}

/// m_v = b + Σ_δ x^[t−δ]·W^[δ] + α·W^[d] (+ the hidden-side V terms when
/// hidden units exist). The accumulation order matches the fully visible
/// model so that N_h = 0 reproduces it bit for bit.
pub fn visible_drive(params: &HiddenDybmParams, snap: &TraceSnapshot) -> Array1<f64> {
    let mut m = params.b.clone();
    for delta in 1..params.delay {
        m += &snap.x_lags[delta - 1].dot(&params.w[delta - 1]);
    }
    m += &snap.alpha.dot(&params.w[params.delay - 1]);
    if params.hidden_units() > 0 {
        for delta in 1..params.delay {
            m += &snap.h_lags[delta - 1].dot(&params.v[delta - 1]);
        }
        m += &snap.beta_h.dot(&params.v[params.delay - 1]);
    }
    m
}

/// Hidden pre-activation; no bias term.
pub fn hidden_drive(params: &HiddenDybmParams, snap: &TraceSnapshot) -> Array1<f64> {
    let mut m = Array1::zeros(params.hidden_units());
    for delta in 1..params.delay {
        m += &snap.x_lags[delta - 1].dot(&params.u[delta - 1]);
    }
    m += &snap.alpha.dot(&params.u[params.delay - 1]);
    for delta in 1..params.delay {
        m += &snap.h_lags[delta - 1].dot(&params.z[delta - 1]);
    }
    m += &snap.beta_h.dot(&params.z[params.delay - 1]);
    m
}

/// ∇_φ log P_φ(h | inputs) for Bernoulli(σ(m_h)): each block is the outer
/// product of its driving vector with h − σ(m_h).
pub fn summand_blocks(
    params: &HiddenDybmParams,
    inputs: &TraceSnapshot,
    h: &Array1<f64>,
) -> PhiBlocks {
    let dh = h - &sigmoid_vec(&hidden_drive(params, inputs));
    let mut blocks = PhiBlocks::zeros_like(params);
    for delta in 1..params.delay {
        blocks.u[delta - 1] = outer(&inputs.x_lags[delta - 1], &dh);
        blocks.z[delta - 1] = outer(&inputs.h_lags[delta - 1], &dh);
    }
    blocks.u[params.delay - 1] = outer(&inputs.alpha, &dh);
    blocks.z[params.delay - 1] = outer(&inputs.beta_h, &dh);
    blocks
}

/// Visible-parameter ascent step on log P_θ(x | inputs); operation-for-
/// operation the fully visible update, extended with the V blocks.
pub fn theta_sgd_step(
    params: &mut HiddenDybmParams,
    snap: &TraceSnapshot,
    x: &ArrayView1<f64>,
    eta: f64,
) -> Result<()> {
    check_binary(x)?;
    let m = visible_drive(params, snap);
    let p = sigmoid_vec(&m);
    let err = &x.to_owned() - &p;
    params.b.scaled_add(eta, &err);
    for delta in 1..params.delay {
        params.w[delta - 1].scaled_add(eta, &outer(&snap.x_lags[delta - 1], &err));
    }
    let last = params.delay - 1;
    params.w[last].scaled_add(eta, &outer(&snap.alpha, &err));
    if params.hidden_units() > 0 {
        for delta in 1..params.delay {
            params.v[delta - 1].scaled_add(eta, &outer(&snap.h_lags[delta - 1], &err));
        }
        params.v[last].scaled_add(eta, &outer(&snap.beta_h, &err));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiMode {
    /// O(1) per step: φ moves along η(1−γ)·ll_t·G′ where G′ is the
    /// γ-discounted sum of past summands.
    Discounted(f64),
    /// O(t) per step: all past summands recomputed under the current φ.
    Exact,
}

#[derive(Debug, Clone)]
pub struct HiddenStepOutcome {
    pub log_likelihood: f64,
    pub hidden_sample: Array1<f64>,
    pub summand: PhiBlocks,
}

#[derive(Debug, Clone)]
pub struct HiddenModel {
    pub params: HiddenDybmParams,
    pub state: HiddenTraceState,
    /// G′: discounted summand sum, always one step behind the stream.
    pub accumulator: PhiBlocks,
    /// Step records, retained only in exact mode.
    pub history: Vec<PhiStepRecord>,
    pub mode: PhiMode,
}

impl HiddenModel {
    pub fn new(params: HiddenDybmParams, mode: PhiMode) -> Result<Self> {
        if let PhiMode::Discounted(gamma) = mode {
            if !(0.0..1.0).contains(&gamma) {
                return Err(DybmError::Config(format!(
                    "discount must lie in [0, 1), got {}",
                    gamma
                )));
            }
        }
        let state = params.new_state()?;
        let accumulator = PhiBlocks::zeros_like(&params);
        Ok(HiddenModel { params, state, accumulator, history: Vec::new(), mode })
    }

    /// One online learning step. Hidden units are sampled from φ before x_t
    /// is revealed to them; θ then ascends its conditional likelihood; φ
    /// moves along the score-function direction scaled by that likelihood.
    pub fn step_train(
        &mut self,
        x: &ArrayView1<f64>,
        eta: f64,
        rng: &mut Rng,
    ) -> Result<HiddenStepOutcome> {
        check_binary(x)?;
        if x.len() != self.params.visible_units() {
            return Err(DybmError::Input(format!(
                "pattern has {} units, model expects {}",
                x.len(),
                self.params.visible_units()
            )));
        }
        let snap = self.state.snapshot();
        let p_h = sigmoid_vec(&hidden_drive(&self.params, &snap));
        let h = p_h.mapv(|p| f64::from(rng.random::<f64>() < p));
        let summand = summand_blocks(&self.params, &snap, &h);

        let m_v = visible_drive(&self.params, &snap);
        let ll = bernoulli_log_likelihood(&m_v, x);
        theta_sgd_step(&mut self.params, &snap, x, eta)?;

        match self.mode {
            PhiMode::Discounted(gamma) => {
                let step_size = eta * (1.0 - gamma) * ll;
                for (block, grad) in self.params.u.iter_mut().zip(self.accumulator.u.iter()) {
                    block.scaled_add(step_size, grad);
                }
                for (block, grad) in self.params.z.iter_mut().zip(self.accumulator.z.iter()) {
                    block.scaled_add(step_size, grad);
                }
                self.accumulator.scale(gamma);
                self.accumulator.add(&summand);
            }
            PhiMode::Exact => {
                let mut total = PhiBlocks::zeros_like(&self.params);
                for record in &self.history {
                    total.add(&summand_blocks(&self.params, &record.inputs, &record.h));
                }
                let step_size = eta * ll;
                for (block, grad) in self.params.u.iter_mut().zip(total.u.iter()) {
                    block.scaled_add(step_size, grad);
                }
                for (block, grad) in self.params.z.iter_mut().zip(total.z.iter()) {
                    block.scaled_add(step_size, grad);
                }
                self.history.push(PhiStepRecord { inputs: snap, h: h.clone() });
            }
        }

        self.state.step(&x.to_owned(), &h)?;
        Ok(HiddenStepOutcome { log_likelihood: ll, hidden_sample: h, summand })
    }

    /// Deterministic scoring pass: hidden units advance at their conditional
    /// means instead of samples. Returns log P_θ(x_t | mean-field history).
    pub fn step_score(&mut self, x: &ArrayView1<f64>) -> Result<f64> {
        check_binary(x)?;
        let snap = self.state.snapshot();
        let ll = bernoulli_log_likelihood(&visible_drive(&self.params, &snap), x);
        let h_mean = sigmoid_vec(&hidden_drive(&self.params, &snap));
        self.state.step(&x.to_owned(), &h_mean)?;
        Ok(ll)
    }

    /// Draws (x_t, h_t) from the model and advances.
    pub fn sample_step(&mut self, rng: &mut Rng) -> Result<Array1<f64>> {
        let snap = self.state.snapshot();
        let p_v = sigmoid_vec(&visible_drive(&self.params, &snap));
        let x = p_v.mapv(|p| f64::from(rng.random::<f64>() < p));
        let p_h = sigmoid_vec(&hidden_drive(&self.params, &snap));
        let h = p_h.mapv(|p| f64::from(rng.random::<f64>() < p));
        self.state.step(&x, &h)?;
        Ok(x)
    }

    /// Expected-value roll-out: both layers propagate their conditional
    /// means. Rows are firing probabilities for t+1..t+horizon.
    pub fn forecast(&self, horizon: usize) -> Result<Array2<f64>> {
        if horizon < 1 {
            return Err(DybmError::Input("horizon must be at least 1".into()));
        }
        let mut state = self.state.clone();
        let mut out = Array2::zeros((horizon, self.params.visible_units()));
        for step in 0..horizon {
            let snap = state.snapshot();
            let p_v = sigmoid_vec(&visible_drive(&self.params, &snap));
            let p_h = sigmoid_vec(&hidden_drive(&self.params, &snap));
            out.row_mut(step).assign(&p_v);
            state.step(&p_v, &p_h)?;
        }
        Ok(out)
    }
}

/// Monte Carlo estimate of the ancestral lower bound: hidden paths are drawn
/// from φ, the visible log-likelihood is averaged. Returns (mean, standard
/// error). By Jensen the mean sits at or below the exact marginal.
pub fn lower_bound_estimate(
    params: &HiddenDybmParams,
    xs: &[Array1<f64>],
    samples: usize,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    if samples < 1 {
        return Err(DybmError::Input("need at least one sample".into()));
    }
    if xs.is_empty() {
        return Err(DybmError::Input("empty sequence".into()));
    }
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut state = params.new_state()?;
        let mut total = 0.0;
        for x in xs {
            check_binary(&x.view())?;
            let snap = state.snapshot();
            total += bernoulli_log_likelihood(&visible_drive(params, &snap), &x.view());
            let p_h = sigmoid_vec(&hidden_drive(params, &snap));
            let h = p_h.mapv(|p| f64::from(rng.random::<f64>() < p));
            state.step(x, &h)?;
        }
        values.push(total);
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let se = if samples > 1 {
        let var =
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// log P(x^[0..T]) by enumerating every hidden path. Exponential in
/// N_h·T; refused beyond 2^20 paths.
pub fn exact_marginal_loglik(params: &HiddenDybmParams, xs: &[Array1<f64>]) -> Result<f64> {
    if xs.is_empty() {
        return Err(DybmError::Input("empty sequence".into()));
    }
    let n_h = params.hidden_units();
    let bits = n_h * xs.len();
    if bits > 20 {
        return Err(DybmError::Input(format!(
            "hidden-path enumeration refused: {} hidden bits (max 20)",
            bits
        )));
    }
    let mut log_joints = Vec::with_capacity(1usize << bits);
    for path in 0..(1u64 << bits) {
        let mut state = params.new_state()?;
        let mut log_joint = 0.0;
        for (t, x) in xs.iter().enumerate() {
            check_binary(&x.view())?;
            let snap = state.snapshot();
            let h = Array1::from_shape_fn(n_h, |j| {
                f64::from((path >> (t * n_h + j)) & 1 == 1)
            });
            log_joint += bernoulli_log_likelihood(&visible_drive(params, &snap), &x.view());
            log_joint +=
                bernoulli_log_likelihood(&hidden_drive(params, &snap), &h.view());
            state.step(x, &h)?;
        }
        log_joints.push(log_joint);
    }
    Ok(logsumexp(&log_joints))
}
