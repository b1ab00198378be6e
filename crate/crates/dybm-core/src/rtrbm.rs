//! Recurrent temporal RBM baseline: a deterministic RNN over hidden means
//! that emits a conditional RBM at every step. Trained by backpropagation
//! through time, so its online per-step cost grows with history length; it is
//! the complexity foil to the trace-based models.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;

use crate::error::{DybmError, Result};
use crate::math::{logsumexp, outer, sigmoid_vec, softplus};
use crate::rng::Rng;

pub const MAX_ENUMERABLE_UNITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RtrbmParams {
    pub b_v: Array1<f64>,
    pub b_h: Array1<f64>,
    /// Hidden bias at t=0, replacing b_h there.
    pub b_init: Array1<f64>,
    pub w: Array2<f64>,
    pub u: Array2<f64>,
}

impl RtrbmParams {
    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        RtrbmParams {
            b_v: Array1::zeros(n_v),
            b_h: Array1::zeros(n_h),
            b_init: Array1::zeros(n_h),
            w: Array2::zeros((n_v, n_h)),
            u: Array2::zeros((n_h, n_h)),
        }
    }

    pub fn init(n_v: usize, n_h: usize, rng: &mut Rng) -> Self {
        let mut params = RtrbmParams::zeros(n_v, n_h);
        params.w = Array2::from_shape_fn((n_v, n_h), |_| rng.random_range(-0.01..0.01));
        params.u = Array2::from_shape_fn((n_h, n_h), |_| rng.random_range(-0.01..0.01));
        params
    }

    pub fn visible_units(&self) -> usize {
        self.b_v.len()
    }

    pub fn hidden_units(&self) -> usize {
        self.b_h.len()
    }
}

/// b^[t] = b_h + Uᵀ r^[t−1] + Wᵀ x^[t]; at t=0 (r_prev None) the init bias
/// replaces b_h and the U term vanishes.
pub fn step_bias(
    params: &RtrbmParams,
    r_prev: Option<&Array1<f64>>,
    x: &ArrayView1<f64>,
) -> Array1<f64> {
    let mut b = match r_prev {
        Some(r) => &params.b_h + &r.dot(&params.u),
        None => params.b_init.clone(),
    };
    b += &params.w.t().dot(x);
    b
}

/// Deterministic forward pass r^[t] = σ(b^[t]) over a whole series.
pub fn hidden_mean_recursion(params: &RtrbmParams, xs: &[Array1<f64>]) -> Vec<Array1<f64>> {
    let mut rs: Vec<Array1<f64>> = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        let r_prev = if t == 0 { None } else { Some(&rs[t - 1]) };
        let b = step_bias(params, r_prev, &x.view());
        rs.push(sigmoid_vec(&b));
    }
    rs
}

/// F(x|r_prev) = −b_vᵀx − Σ_i softplus(b^[t]_i): the hidden layer summed out
/// in closed form.
pub fn free_energy(
    params: &RtrbmParams,
    r_prev: Option<&Array1<f64>>,
    x: &ArrayView1<f64>,
) -> f64 {
    let b = step_bias(params, r_prev, x);
    -params.b_v.dot(x) - b.iter().map(|&bi| softplus(bi)).sum::<f64>()
}

fn enumerate_patterns(n: usize) -> impl Iterator<Item = Array1<f64>> {
    (0..(1u32 << n)).map(move |bits| {
        Array1::from_shape_fn(n, |j| f64::from((bits >> j) & 1 == 1))
    })
}

/// Exact log P(x^[t] | r^[t−1]) by summing the free energy over all 2^{N_v}
/// visible patterns. Oracle/scoring path only; training never calls this.
pub fn conditional_visible_logprob(
    params: &RtrbmParams,
    r_prev: Option<&Array1<f64>>,
    x: &ArrayView1<f64>,
) -> Result<f64> {
    let n_v = params.visible_units();
    if n_v > MAX_ENUMERABLE_UNITS {
        return Err(DybmError::Input(format!(
            "exact visible enumeration refused for {} units (max {})",
            n_v, MAX_ENUMERABLE_UNITS
        )));
    }
    let neg_f: Vec<f64> = enumerate_patterns(n_v)
        .map(|pattern| -free_energy(params, r_prev, &pattern.view()))
        .collect();
    Ok(-free_energy(params, r_prev, x) - logsumexp(&neg_f))
}

/// Negative-phase statistics for one step: visible sample/expectation, the
/// hidden conditional mean given it, and their outer product.
#[derive(Debug, Clone)]
pub struct NegativeStats {
    pub x: Array1<f64>,
    pub h: Array1<f64>,
    pub xh: Array2<f64>,
}

/// CD-k: alternating Gibbs h|x then x|h under the step-t conditional RBM,
/// started at the data. The returned hidden statistic is the conditional mean
/// given the final visible sample (lower variance than a sampled h).
pub fn cd_negative_sample(
    params: &RtrbmParams,
    r_prev: Option<&Array1<f64>>,
    x: &ArrayView1<f64>,
    k: usize,
    rng: &mut Rng,
) -> Result<NegativeStats> {
    if k < 1 {
        return Err(DybmError::Input("cd_steps must be at least 1".into()));
    }
    let mut x_neg = x.to_owned();
    for _ in 0..k {
        let h_mean = sigmoid_vec(&step_bias(params, r_prev, &x_neg.view()));
        let h = h_mean.mapv(|p| f64::from(rng.random::<f64>() < p));
        let v_mean = sigmoid_vec(&(&params.b_v + &params.w.dot(&h)));
        x_neg = v_mean.mapv(|p| f64::from(rng.random::<f64>() < p));
    }
    let h = sigmoid_vec(&step_bias(params, r_prev, &x_neg.view()));
    let xh = outer(&x_neg, &h);
    Ok(NegativeStats { x: x_neg, h, xh })
}

/// Exact model expectations over the 2^{N_v} visible patterns, replacing CD.
pub fn exact_negative_stats(
    params: &RtrbmParams,
    r_prev: Option<&Array1<f64>>,
) -> Result<NegativeStats> {
    let n_v = params.visible_units();
    if n_v > MAX_ENUMERABLE_UNITS {
        return Err(DybmError::Input(format!(
            "exact negative phase refused for {} visible units (max {})",
            n_v, MAX_ENUMERABLE_UNITS
        )));
    }
    let patterns: Vec<Array1<f64>> = enumerate_patterns(n_v).collect();
    let neg_f: Vec<f64> = patterns
        .iter()
        .map(|pattern| -free_energy(params, r_prev, &pattern.view()))
        .collect();
    let log_z = logsumexp(&neg_f);
    let n_h = params.hidden_units();
    let mut stats = NegativeStats {
        x: Array1::zeros(n_v),
        h: Array1::zeros(n_h),
        xh: Array2::zeros((n_v, n_h)),
    };
    for (pattern, &lw) in patterns.iter().zip(neg_f.iter()) {
        let p = (lw - log_z).exp();
        let h = sigmoid_vec(&step_bias(params, r_prev, &pattern.view()));
        stats.x.scaled_add(p, pattern);
        stats.h.scaled_add(p, &h);
        stats.xh.scaled_add(p, &outer(pattern, &h));
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativePhase {
    Cd(usize),
    Exact,
}

/// Per-sequence record consumed by the backward pass: inputs, pre-sigmoid
/// biases, hidden means (these are also the positive-phase hidden
/// statistics), and the per-step negative statistics.
#[derive(Debug, Clone)]
pub struct BpttTape {
    pub xs: Vec<Array1<f64>>,
    pub bs: Vec<Array1<f64>>,
    pub rs: Vec<Array1<f64>>,
    pub negatives: Vec<NegativeStats>,
}

pub fn forward_tape(
    params: &RtrbmParams,
    xs: &[Array1<f64>],
    phase: NegativePhase,
    rng: &mut Rng,
) -> Result<BpttTape> {
    if xs.is_empty() {
        return Err(DybmError::Input("empty sequence".into()));
    }
    let mut tape = BpttTape {
        xs: xs.to_vec(),
        bs: Vec::with_capacity(xs.len()),
        rs: Vec::with_capacity(xs.len()),
        negatives: Vec::with_capacity(xs.len()),
    };
    for (t, x) in xs.iter().enumerate() {
        let r_prev = if t == 0 { None } else { Some(&tape.rs[t - 1]) };
        let b = step_bias(params, r_prev, &x.view());
        let negative = match phase {
            NegativePhase::Cd(k) => cd_negative_sample(params, r_prev, &x.view(), k, rng)?,
            NegativePhase::Exact => exact_negative_stats(params, r_prev)?,
        };
        tape.rs.push(sigmoid_vec(&b));
        tape.bs.push(b);
        tape.negatives.push(negative);
    }
    Ok(tape)
}

/// ∇_{r^[s]} of everything downstream: D^[s] = U·(dh^[s+1] +
/// r^[s+1]∘(1−r^[s+1])∘D^[s+1]), D^[T] = 0. `dhs[t]` is the direct
/// sensitivity at step t (for the likelihood, r^[t] − neg_h^[t]; for the raw
/// Q oracle, the fixed hidden vectors).
pub fn backward_r(
    params: &RtrbmParams,
    rs: &[Array1<f64>],
    dhs: &[Array1<f64>],
) -> Vec<Array1<f64>> {
    let steps = rs.len();
    let n_h = params.hidden_units();
    let mut ds = vec![Array1::zeros(n_h); steps];
    for s in (0..steps.saturating_sub(1)).rev() {
        let r_next = &rs[s + 1];
        let gate = r_next.mapv(|r| r * (1.0 - r));
        let total = &dhs[s + 1] + &(&gate * &ds[s + 1]);
        ds[s] = params.u.dot(&total);
    }
    ds
}

#[derive(Debug, Clone)]
pub struct RtrbmGrads {
    pub b_v: Array1<f64>,
    pub b_h: Array1<f64>,
    pub b_init: Array1<f64>,
    pub w: Array2<f64>,
    pub u: Array2<f64>,
}

/// Assembles ∇ Σ_t log P(x^[t]|r^[t−1]): the per-step RBM terms plus the
/// through-time terms routed by the D recursion.
pub fn bptt_backward(params: &RtrbmParams, tape: &BpttTape) -> RtrbmGrads {
    let steps = tape.xs.len();
    let (n_v, n_h) = (params.visible_units(), params.hidden_units());
    let dhs: Vec<Array1<f64>> = (0..steps)
        .map(|t| &tape.rs[t] - &tape.negatives[t].h)
        .collect();
    let ds = backward_r(params, &tape.rs, &dhs);

    let mut grads = RtrbmGrads {
        b_v: Array1::zeros(n_v),
        b_h: Array1::zeros(n_h),
        b_init: Array1::zeros(n_h),
        w: Array2::zeros((n_v, n_h)),
        u: Array2::zeros((n_h, n_h)),
    };
    for t in 0..steps {
        let r = &tape.rs[t];
        let gate = r.mapv(|ri| ri * (1.0 - ri));
        let total = &dhs[t] + &(&gate * &ds[t]);
        grads.b_v += &(&tape.xs[t] - &tape.negatives[t].x);
        if t == 0 {
            grads.b_init += &total;
        } else {
            grads.b_h += &total;
            grads.u += &outer(&tape.rs[t - 1], &total);
        }
        grads.w += &outer(&tape.xs[t], r);
        grads.w -= &tape.negatives[t].xh;
        grads.w += &outer(&tape.xs[t], &(&gate * &ds[t]));
    }
    grads
}

pub fn apply_grads(params: &mut RtrbmParams, grads: &RtrbmGrads, eta: f64) {
    params.b_v.scaled_add(eta, &grads.b_v);
    params.b_h.scaled_add(eta, &grads.b_h);
    params.b_init.scaled_add(eta, &grads.b_init);
    params.w.scaled_add(eta, &grads.w);
    params.u.scaled_add(eta, &grads.u);
}

/// One full forward tape + BPTT backward + one ascent step. Returns the mean
/// per-step score: exact NLL when the visible layer is enumerable at scoring
/// size, otherwise the mean free energy (an unnormalized proxy, flagged by
/// the caller's output schema).
pub const MAX_SCORING_UNITS: usize = 12;

pub fn train_epoch(
    params: &mut RtrbmParams,
    xs: &[Array1<f64>],
    eta: f64,
    phase: NegativePhase,
    rng: &mut Rng,
) -> Result<f64> {
    let tape = forward_tape(params, xs, phase, rng)?;
    let score = sequence_score(params, xs)?;
    let grads = bptt_backward(params, &tape);
    apply_grads(params, &grads, eta);
    Ok(score)
}

/// Mean per-step −log P(x^[t]|r^[t−1]) when exact scoring is feasible, else
/// mean free energy.
pub fn sequence_score(params: &RtrbmParams, xs: &[Array1<f64>]) -> Result<f64> {
    let rs = hidden_mean_recursion(params, xs);
    let mut total = 0.0;
    for (t, x) in xs.iter().enumerate() {
        let r_prev = if t == 0 { None } else { Some(&rs[t - 1]) };
        total += if params.visible_units() <= MAX_SCORING_UNITS {
            -conditional_visible_logprob(params, r_prev, &x.view())?
        } else {
            free_energy(params, r_prev, &x.view())
        };
    }
    Ok(total / xs.len() as f64)
}

/// Next-step visible probabilities via the conditional mean field
/// σ(b_v + W·σ(b^[t+1] at mean hidden drive)), used for forecasting. With an
/// enumerable visible layer the exact marginal mean is used instead.
pub fn next_visible_probability(
    params: &RtrbmParams,
    r_prev: Option<&Array1<f64>>,
) -> Result<Array1<f64>> {
    let n_v = params.visible_units();
    if n_v <= MAX_SCORING_UNITS {
        let patterns: Vec<Array1<f64>> = enumerate_patterns(n_v).collect();
        let neg_f: Vec<f64> = patterns
            .iter()
            .map(|pattern| -free_energy(params, r_prev, &pattern.view()))
            .collect();
        let log_z = logsumexp(&neg_f);
        let mut mean = Array1::zeros(n_v);
        for (pattern, &lw) in patterns.iter().zip(neg_f.iter()) {
            mean.scaled_add((lw - log_z).exp(), pattern);
        }
        Ok(mean)
    } else {
        let h_drive = match r_prev {
            Some(r) => sigmoid_vec(&(&params.b_h + &r.dot(&params.u))),
            None => sigmoid_vec(&params.b_init),
        };
        Ok(sigmoid_vec(&(&params.b_v + &params.w.dot(&h_drive))))
    }
}

/// Expected-value roll-out from a given hidden context: predicted visible
/// means are fed back through the r recursion as soft observations.
pub fn forecast(
    params: &RtrbmParams,
    r_start: Option<&Array1<f64>>,
    horizon: usize,
) -> Result<Array2<f64>> {
    if horizon < 1 {
        return Err(DybmError::Input("horizon must be at least 1".into()));
    }
    let mut r_prev = r_start.cloned();
    let mut out = Array2::zeros((horizon, params.visible_units()));
    for h in 0..horizon {
        let p = next_visible_probability(params, r_prev.as_ref())?;
        out.row_mut(h).assign(&p);
        r_prev = Some(sigmoid_vec(&step_bias(params, r_prev.as_ref(), &p.view())));
    }
    Ok(out)
}

/// Generative roll: x^[t] drawn exactly from the step-t visible marginal when
/// enumerable, otherwise by `sweeps` Gibbs sweeps from zeros; r then advances
/// on the draw.
pub fn sample_sequence(
    params: &RtrbmParams,
    steps: usize,
    sweeps: usize,
    rng: &mut Rng,
) -> Result<Array2<f64>> {
    if steps < 1 {
        return Err(DybmError::Input("steps must be at least 1".into()));
    }
    let n_v = params.visible_units();
    let mut r_prev: Option<Array1<f64>> = None;
    let mut out = Array2::zeros((steps, n_v));
    for t in 0..steps {
        let x = if n_v <= MAX_SCORING_UNITS {
            let patterns: Vec<Array1<f64>> = enumerate_patterns(n_v).collect();
            let neg_f: Vec<f64> = patterns
                .iter()
                .map(|pattern| -free_energy(params, r_prev.as_ref(), &pattern.view()))
                .collect();
            let log_z = logsumexp(&neg_f);
            let u: f64 = rng.random();
            let mut cumulative = 0.0;
            let mut chosen = patterns.len() - 1;
            for (i, &lw) in neg_f.iter().enumerate() {
                cumulative += (lw - log_z).exp();
                if u < cumulative {
                    chosen = i;
                    break;
                }
            }
            patterns[chosen].clone()
        } else {
            let zeros = Array1::zeros(n_v);
            cd_negative_sample(params, r_prev.as_ref(), &zeros.view(), sweeps, rng)?.x
        };
        out.row_mut(t).assign(&x);
        r_prev = Some(sigmoid_vec(&step_bias(params, r_prev.as_ref(), &x.view())));
    }
    Ok(out)
}
