//! Binary DyBM: conditional energy, firing probabilities, per-step
//! log-likelihood, sampling, and the time-local learning rules, in both the
//! STDP parametrization (b, u, v, λ, μ) and the relaxed matrix parametrization
//! (b, W^[δ], U^[ℓ]). The relaxed form is the canonical code path; the STDP
//! form maps onto it via `stdp_to_relaxed`.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;

use crate::error::{DybmError, Result};
use crate::math::{bernoulli_log_likelihood, outer, sigmoid_vec};
use crate::rng::Rng;
use crate::traces::TraceState;

#[derive(Debug, Clone, PartialEq)]
pub struct StdpDybmParams {
    pub b: Array1<f64>,
    /// LTP weights, u[i, j] from pre-synaptic i to post-synaptic j.
    pub u: Array2<f64>,
    /// LTD weights, same orientation.
    pub v: Array2<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub delay: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedDybmParams {
    pub b: Array1<f64>,
    /// Lag matrices W^[δ] for δ = 1..d−1 (w[0] is δ=1).
    pub w: Vec<Array2<f64>>,
    /// Trace matrices U^[ℓ], one per decay rate.
    pub u: Vec<Array2<f64>>,
    pub decay_rates: Vec<f64>,
    pub delay: usize,
}

fn small_uniform(n: usize, m: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| rng.random_range(-0.01..0.01))
}

impl StdpDybmParams {
    pub fn zeros(n: usize, lambda: f64, mu: f64, delay: usize) -> Self {
        StdpDybmParams {
            b: Array1::zeros(n),
            u: Array2::zeros((n, n)),
            v: Array2::zeros((n, n)),
            lambda,
            mu,
            delay,
        }
    }

    pub fn init(n: usize, lambda: f64, mu: f64, delay: usize, rng: &mut Rng) -> Self {
        StdpDybmParams {
            b: Array1::zeros(n),
            u: small_uniform(n, n, rng),
            v: small_uniform(n, n, rng),
            lambda,
            mu,
            delay,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Trace state shaped for this parametrization: one α row (decay λ),
    /// γ/β under μ.
    pub fn new_state(&self) -> Result<TraceState> {
        TraceState::new(self.dim(), &[self.lambda], self.mu, self.delay)
    }

    fn check_state(&self, state: &TraceState) -> Result<()> {
        if state.dim() != self.dim()
            || state.delay != self.delay
            || state.decay_rates.as_slice() != [self.lambda]
            || state.mu != self.mu
        {
            return Err(DybmError::Input("trace state does not match STDP params".into()));
        }
        Ok(())
    }
}

impl RelaxedDybmParams {
    pub fn zeros(n: usize, decay_rates: &[f64], delay: usize) -> Self {
        RelaxedDybmParams {
            b: Array1::zeros(n),
            w: (1..delay).map(|_| Array2::zeros((n, n))).collect(),
            u: decay_rates.iter().map(|_| Array2::zeros((n, n))).collect(),
            decay_rates: decay_rates.to_vec(),
            delay,
        }
    }

    pub fn init(n: usize, decay_rates: &[f64], delay: usize, rng: &mut Rng) -> Self {
        RelaxedDybmParams {
            b: Array1::zeros(n),
            w: (1..delay).map(|_| small_uniform(n, n, rng)).collect(),
            u: decay_rates.iter().map(|_| small_uniform(n, n, rng)).collect(),
            decay_rates: decay_rates.to_vec(),
            delay,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Trace state shaped for this parametrization. γ/β are unused by the
    /// relaxed rules, so μ is pinned to 0.
    pub fn new_state(&self) -> Result<TraceState> {
        TraceState::new(self.dim(), &self.decay_rates, 0.0, self.delay)
    }

    pub fn check_state(&self, state: &TraceState) -> Result<()> {
        if state.dim() != self.dim()
            || state.delay != self.delay
            || state.decay_rates != self.decay_rates
        {
            return Err(DybmError::Input("trace state does not match relaxed params".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_binary(x: &ArrayView1<f64>) -> Result<()> {
    if x.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(DybmError::Input("pattern entries must be 0 or 1".into()));
    }
    Ok(())
}

/// m_j = b_j + Σ_δ Σ_i x_i^[t−δ] W^[δ]_{i,j} + Σ_ℓ Σ_i α_{ℓ,i} U^[ℓ]_{i,j}.
pub fn mean_activation(params: &RelaxedDybmParams, state: &TraceState) -> Result<Array1<f64>> {
    params.check_state(state)?;
    let mut m = params.b.clone();
    for delta in 1..params.delay {
        m += &state.fifo.lagged(delta).dot(&params.w[delta - 1]);
    }
    for (l, u) in params.u.iter().enumerate() {
        m += &state.alpha.row(l).dot(u);
    }
    Ok(m)
}

pub fn firing_probability(m: &Array1<f64>) -> Array1<f64> {
    sigmoid_vec(m)
}

/// Conditional energy −m^[t]·x^[t]; the per-step distribution is
/// exp(−E(x)) / Σ_x̃ exp(−E(x̃)).
pub fn energy(params: &RelaxedDybmParams, state: &TraceState, x_t: &ArrayView1<f64>) -> Result<f64> {
    let m = mean_activation(params, state)?;
    Ok(-m.dot(x_t))
}

pub fn step_log_likelihood(
    params: &RelaxedDybmParams,
    state: &TraceState,
    x_t: &ArrayView1<f64>,
) -> Result<f64> {
    check_binary(x_t)?;
    let m = mean_activation(params, state)?;
    Ok(bernoulli_log_likelihood(&m, x_t))
}

pub fn sgd_step_relaxed(
    params: &mut RelaxedDybmParams,
    state: &TraceState,
    x_t: &ArrayView1<f64>,
    eta: f64,
) -> Result<()> {
    check_binary(x_t)?;
    let m = mean_activation(params, state)?;
    let p = firing_probability(&m);
    let err = &x_t.to_owned() - &p;
    params.b.scaled_add(eta, &err);
    for delta in 1..params.delay {
        params.w[delta - 1].scaled_add(eta, &outer(state.fifo.lagged(delta), &err));
    }
    for (l, u) in params.u.iter_mut().enumerate() {
        u.scaled_add(eta, &outer(&state.alpha.row(l).to_owned(), &err));
    }
    Ok(())
}

/// m = b + U^T α − V^T β − V γ.
pub fn stdp_mean_activation(params: &StdpDybmParams, state: &TraceState) -> Result<Array1<f64>> {
    params.check_state(state)?;
    let alpha = state.alpha.row(0).to_owned();
    let beta = state.beta();
    let mut m = params.b.clone();
    m += &alpha.dot(&params.u);
    m -= &beta.dot(&params.v);
    m -= &params.v.dot(&state.gamma);
    Ok(m)
}

/// E = −b^T x − α^T U x + β^T V x + x^T V γ, evaluated term by term so the
/// equivalence with the relaxed energy is a genuine dual-path check.
pub fn stdp_energy(params: &StdpDybmParams, state: &TraceState, x_t: &ArrayView1<f64>) -> Result<f64> {
    params.check_state(state)?;
    let alpha = state.alpha.row(0).to_owned();
    let beta = state.beta();
    let ux = params.u.dot(x_t);
    let vx = params.v.dot(x_t);
    let vgamma = params.v.dot(&state.gamma);
    Ok(-params.b.dot(x_t) - alpha.dot(&ux) + beta.dot(&vx) + x_t.dot(&vgamma))
}

pub fn step_log_likelihood_stdp(
    params: &StdpDybmParams,
    state: &TraceState,
    x_t: &ArrayView1<f64>,
) -> Result<f64> {
    check_binary(x_t)?;
    let m = stdp_mean_activation(params, state)?;
    Ok(bernoulli_log_likelihood(&m, x_t))
}

/// b_j += η(x_j−p_j); u_{i,j} += η α_i (x_j−p_j);
/// v_{i,j} += η β_i (p_j−x_j) + η γ_j (p_i−x_i).
pub fn sgd_step_stdp(
    params: &mut StdpDybmParams,
    state: &TraceState,
    x_t: &ArrayView1<f64>,
    eta: f64,
) -> Result<()> {
    check_binary(x_t)?;
    let m = stdp_mean_activation(params, state)?;
    let p = firing_probability(&m);
    let err = &x_t.to_owned() - &p;
    let alpha = state.alpha.row(0).to_owned();
    let beta = state.beta();
    params.b.scaled_add(eta, &err);
    params.u.scaled_add(eta, &outer(&alpha, &err));
    params.v.scaled_add(-eta, &outer(&beta, &err));
    params.v.scaled_add(-eta, &outer(&err, &state.gamma));
    Ok(())
}

/// W^[δ] = −μ^{−δ} V − μ^{δ} V^T, U^[1] = u, U^[2] = −μ^d V^T, λ_1 = λ,
/// λ_2 = μ. The second trace row absorbs the γ contribution beyond the queue.
pub fn stdp_to_relaxed(params: &StdpDybmParams) -> RelaxedDybmParams {
    let mu = params.mu;
    let vt = params.v.t().to_owned();
    let w = (1..params.delay)
        .map(|delta| {
            let neg = delta as i32;
            &params.v * -mu.powi(-neg) + &vt * -mu.powi(neg)
        })
        .collect();
    let u2 = &vt * -mu.powi(params.delay as i32);
    RelaxedDybmParams {
        b: params.b.clone(),
        w,
        u: vec![params.u.clone(), u2],
        decay_rates: vec![params.lambda, mu],
        delay: params.delay,
    }
}

/// Trace state matching `stdp_to_relaxed` output, replaying the same history
/// the STDP-form state saw.
pub fn relaxed_state_like(params: &StdpDybmParams, history: &[Array1<f64>]) -> Result<TraceState> {
    let mut state = TraceState::new(
        params.dim(),
        &[params.lambda, params.mu],
        params.mu,
        params.delay,
    )?;
    for x in history {
        state.step(x)?;
    }
    Ok(state)
}

/// Draws x^[t] one unit at a time, then advances the state with the draw.
pub fn sample_step(
    params: &RelaxedDybmParams,
    state: &mut TraceState,
    rng: &mut Rng,
) -> Result<Array1<f64>> {
    let m = mean_activation(params, state)?;
    let p = firing_probability(&m);
    let x = p.mapv(|pj| if rng.random::<f64>() < pj { 1.0 } else { 0.0 });
    state.step(&x)?;
    Ok(x)
}

/// Expected-value roll-out: each row of firing probabilities is fed back as
/// the next observation.
pub fn forecast(
    params: &RelaxedDybmParams,
    state: &TraceState,
    horizon: usize,
) -> Result<Array2<f64>> {
    if horizon < 1 {
        return Err(DybmError::Input("horizon must be at least 1".into()));
    }
    let mut state = state.clone();
    let mut out = Array2::zeros((horizon, params.dim()));
    for h in 0..horizon {
        let p = firing_probability(&mean_activation(params, &state)?);
        out.row_mut(h).assign(&p);
        state.step(&p)?;
    }
    Ok(out)
}

/// Finite-window energy: −b^T x − Σ_{δ<d} x^[t−δ] W^[δ] x
/// − Σ_{δ=d}^{T−1} Σ_ℓ λ_ℓ^{δ−d} x^[t−δ] U^[ℓ] x. `window` holds the lag
/// vectors newest first, so window.len() = T−1. Converges to the trace-based
/// energy as the window grows.
pub fn dybm_t_energy(
    params: &RelaxedDybmParams,
    window: &[Array1<f64>],
    x_t: &ArrayView1<f64>,
) -> Result<f64> {
    let mut e = -params.b.dot(x_t);
    for (k, lag) in window.iter().enumerate() {
        if lag.len() != params.dim() {
            return Err(DybmError::Input("window entry dimension mismatch".into()));
        }
        let delta = k + 1;
        if delta < params.delay {
            e -= lag.dot(&params.w[delta - 1]).dot(x_t);
        } else {
            for (l, u) in params.u.iter().enumerate() {
                let coeff = params.decay_rates[l].powi((delta - params.delay) as i32);
                e -= coeff * lag.dot(u).dot(x_t);
            }
        }
    }
    Ok(e)
}
