//! Per-step wall-time measurement behind the constant-vs-growing cost
//! comparison: trace-based training pays the same price at step 1000 as at
//! step 1, while online BPTT re-unrolls the whole prefix and pays O(t).

use std::time::Instant;

use ndarray::Array1;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::binary::{sgd_step_relaxed, RelaxedDybmParams};
use crate::error::{DybmError, Result};
use crate::rng::Rng;
use crate::rtrbm::{apply_grads, bptt_backward, forward_tape, NegativePhase, RtrbmParams};
use crate::traces::TraceState;

/// Least-squares line through (t, y_t) with a one-sided test of slope > 0.
#[derive(Debug, Clone, Copy)]
pub struct SlopeStat {
    pub slope: f64,
    pub std_error: f64,
    pub t_stat: f64,
    /// P(slope ≤ observed | true slope 0); small means the cost grows.
    pub p_value: f64,
    pub df: f64,
}

pub fn ols_slope(per_step: &[f64]) -> Result<SlopeStat> {
    let n = per_step.len();
    if n < 3 {
        return Err(DybmError::Input("slope needs at least 3 points".into()));
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = per_step.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, &y) in per_step.iter().enumerate() {
        let dx = t as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = per_step
        .iter()
        .enumerate()
        .map(|(t, &y)| {
            let r = y - (intercept + slope * t as f64);
            r * r
        })
        .sum();
    let df = nf - 2.0;
    let std_error = (sse / df / sxx).sqrt();
    let (t_stat, p_value) = if std_error == 0.0 {
        if slope > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (f64::NEG_INFINITY, 1.0)
        }
    } else {
        let t = slope / std_error;
        let dist = StudentsT::new(0.0, 1.0, df)
            .map_err(|e| DybmError::Numerical(e.to_string()))?;
        (t, 1.0 - dist.cdf(t))
    };
    Ok(SlopeStat { slope, std_error, t_stat, p_value, df })
}

/// mean(last `window`) / mean(first `window`); ≈1 certifies flat cost.
pub fn early_late_ratio(per_step: &[f64], window: usize) -> Result<f64> {
    if window < 1 || per_step.len() < 2 * window {
        return Err(DybmError::Input(format!(
            "ratio windows of {} need at least {} samples, have {}",
            window,
            2 * window,
            per_step.len()
        )));
    }
    let early: f64 = per_step[..window].iter().sum::<f64>() / window as f64;
    let late: f64 =
        per_step[per_step.len() - window..].iter().sum::<f64>() / window as f64;
    Ok(late / early)
}

/// Wall time in nanoseconds of each trace-based training step (gradient
/// update plus state advance). `warmup` untimed steps run first on clones so
/// cold caches and the allocator don't land in the first samples.
pub fn time_binary_training(
    params: &mut RelaxedDybmParams,
    state: &mut TraceState,
    xs: &[Array1<f64>],
    eta: f64,
    warmup: usize,
) -> Result<Vec<f64>> {
    let mut warm_params = params.clone();
    let mut warm_state = state.clone();
    for x in xs.iter().cycle().take(warmup) {
        sgd_step_relaxed(&mut warm_params, &warm_state, &x.view(), eta)?;
        warm_state.step(x)?;
    }
    let mut times = Vec::with_capacity(xs.len());
    for x in xs {
        let started = Instant::now();
        sgd_step_relaxed(params, state, &x.view(), eta)?;
        state.step(x)?;
        times.push(started.elapsed().as_nanos() as f64);
    }
    Ok(times)
}

/// Wall time in nanoseconds of each online-BPTT step: on the arrival of
/// x^[t] the tape is rebuilt over x^[0..=t] and one full backward pass runs,
/// so step t does O(t) work.
pub fn time_rtrbm_online_bptt(
    params: &mut RtrbmParams,
    xs: &[Array1<f64>],
    eta: f64,
    phase: NegativePhase,
    warmup: usize,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut warm_params = params.clone();
    for t in 0..warmup.min(xs.len()) {
        let tape = forward_tape(&warm_params, &xs[..=t], phase, rng)?;
        let grads = bptt_backward(&warm_params, &tape);
        apply_grads(&mut warm_params, &grads, eta);
    }
    let mut times = Vec::with_capacity(xs.len());
    for t in 0..xs.len() {
        let started = Instant::now();
        let tape = forward_tape(params, &xs[..=t], phase, rng)?;
        let grads = bptt_backward(params, &tape);
        apply_grads(params, &grads, eta);
        times.push(started.elapsed().as_nanos() as f64);
    }
    Ok(times)
}
