//! Shared generators and finite-difference machinery for the integration
//! tests and the acceptance suite.

#![allow(dead_code)]

use dybm_core::binary::{RelaxedDybmParams, StdpDybmParams};
use dybm_core::rng::Rng;
use dybm_core::traces::TraceState;
use ndarray::{Array1, Array2};
use rand::Rng as _;

pub fn random_bits(n: usize, rng: &mut Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| f64::from(rng.random::<bool>()))
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

pub fn random_vector(n: usize, scale: f64, rng: &mut Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.random_range(-scale..scale))
}

pub fn random_relaxed(n: usize, delay: usize, decays: &[f64], rng: &mut Rng) -> RelaxedDybmParams {
    let mut params = RelaxedDybmParams::zeros(n, decays, delay);
    params.b = random_vector(n, 0.8, rng);
    for w in params.w.iter_mut() {
        *w = random_matrix(n, n, 0.8, rng);
    }
    for u in params.u.iter_mut() {
        *u = random_matrix(n, n, 0.8, rng);
    }
    params
}

pub fn random_stdp(n: usize, delay: usize, rng: &mut Rng) -> StdpDybmParams {
    let mut params = StdpDybmParams::zeros(
        n,
        rng.random_range(0.05..0.95),
        rng.random_range(0.05..0.95),
        delay,
    );
    params.b = random_vector(n, 0.8, rng);
    params.u = random_matrix(n, n, 0.8, rng);
    params.v = random_matrix(n, n, 0.8, rng);
    params
}

pub fn stepped(state: &mut TraceState, history: &[Array1<f64>]) {
    for x in history {
        state.step(x).unwrap();
    }
}

/// Gradient-check comparison. The absolute floor covers coordinates whose
/// true gradient sits at the finite-difference noise level (~1e−11 for h=1e−5
/// on O(1) objectives), where a ratio test is meaningless.
pub fn grad_close(fd: f64, analytic: f64, rel_tol: f64) -> bool {
    let scale = fd.abs().max(analytic.abs());
    (fd - analytic).abs() < (rel_tol * scale).max(1e-8)
}

/// Central finite difference of `f` under a ±h perturbation applied by
/// `poke`.
pub fn central_fd<P, F>(params: &P, poke: &mut dyn FnMut(&mut P, f64), f: F, h: f64) -> f64
where
    P: Clone,
    F: Fn(&P) -> f64,
{
    let mut plus = params.clone();
    poke(&mut plus, h);
    let mut minus = params.clone();
    poke(&mut minus, -h);
    (f(&plus) - f(&minus)) / (2.0 * h)
}
