//! Gaussian DyBM: per-unit Gaussian conditional density over the shared mean
//! structure, trained either by plain SGD on the log density or by the
//! natural-gradient rules (Fisher-preconditioned per unit), with an optional
//! fixed echo-state reservoir feeding a learned readout block.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::binary::{mean_activation, RelaxedDybmParams};
use crate::config::EsnSettings;
use crate::error::{DybmError, Result};
use crate::math::outer;
use crate::rng::Rng;
use crate::traces::TraceState;

pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDybmParams {
    pub core: RelaxedDybmParams,
    /// Per-unit standard deviation, clamped to SIGMA_FLOOR from below.
    pub sigma: Array1<f64>,
}

impl GaussianDybmParams {
    pub fn zeros(n: usize, decay_rates: &[f64], delay: usize, sigma_init: f64) -> Self {
        GaussianDybmParams {
            core: RelaxedDybmParams::zeros(n, decay_rates, delay),
            sigma: Array1::from_elem(n, sigma_init),
        }
    }

    pub fn init(
        n: usize,
        decay_rates: &[f64],
        delay: usize,
        sigma_init: f64,
        rng: &mut Rng,
    ) -> Self {
        GaussianDybmParams {
            core: RelaxedDybmParams::init(n, decay_rates, delay, rng),
            sigma: Array1::from_elem(n, sigma_init),
        }
    }

    pub fn dim(&self) -> usize {
        self.core.dim()
    }

    pub fn new_state(&self) -> Result<TraceState> {
        self.core.new_state()
    }
}

/// Fixed random reservoir. Only `readout` is touched by learning; `state` is
/// advanced by `esn_step` after each observation.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnConfig {
    pub w_rec: Array2<f64>,
    pub w_in: Array2<f64>,
    pub leak: f64,
    pub state: Array1<f64>,
    pub readout: Array2<f64>,
}

impl EsnConfig {
    /// Draws the fixed matrices and rescales W_rec to the requested spectral
    /// radius (exact eigenvalue computation, not a bound).
    pub fn new(n: usize, settings: &EsnSettings, rng: &mut Rng) -> Result<Self> {
        let m = settings.size;
        let mut w_rec = Array2::from_shape_fn((m, m), |_| rng.random_range(-1.0..1.0));
        let radius = spectral_radius(&w_rec);
        if radius > 0.0 {
            w_rec *= settings.spectral_radius / radius;
        }
        let w_in = Array2::from_shape_fn((m, n), |_| rng.random_range(-0.1..0.1));
        Ok(EsnConfig {
            w_rec,
            w_in,
            leak: settings.leak,
            state: Array1::zeros(m),
            readout: Array2::zeros((m, n)),
        })
    }

    pub fn reservoir_size(&self) -> usize {
        self.state.len()
    }
}

fn spectral_radius(w: &Array2<f64>) -> f64 {
    let m = w.nrows();
    let flat: Vec<f64> = w.iter().cloned().collect();
    let mat = nalgebra::DMatrix::from_row_slice(m, m, &flat);
    mat.complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max)
}

/// ψ ← (1−ρ)ψ + ρ·tanh(W_rec ψ + W_in x).
pub fn esn_step(esn: &mut EsnConfig, x_t: &ArrayView1<f64>) -> Result<()> {
    if x_t.len() != esn.w_in.ncols() {
        return Err(DybmError::Input("esn input dimension mismatch".into()));
    }
    let drive = esn.w_rec.dot(&esn.state) + esn.w_in.dot(x_t);
    esn.state = &esn.state * (1.0 - esn.leak) + drive.mapv(f64::tanh) * esn.leak;
    Ok(())
}

/// Mean structure shared with the binary model, plus readout^T ψ when a
/// reservoir is attached.
pub fn predict_mean(
    params: &GaussianDybmParams,
    state: &TraceState,
    esn: Option<&EsnConfig>,
) -> Result<Array1<f64>> {
    let mut m = mean_activation(&params.core, state)?;
    if let Some(esn) = esn {
        if esn.readout.ncols() != params.dim() {
            return Err(DybmError::Input("esn readout dimension mismatch".into()));
        }
        m += &esn.state.dot(&esn.readout);
    }
    Ok(m)
}

/// Σ_j [−(x_j−m_j)²/(2σ_j²) − ½·log(2πσ_j²)].
pub fn step_log_density(
    params: &GaussianDybmParams,
    state: &TraceState,
    esn: Option<&EsnConfig>,
    x_t: &ArrayView1<f64>,
) -> Result<f64> {
    let m = predict_mean(params, state, esn)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut ll = 0.0;
    for j in 0..params.dim() {
        let var = params.sigma[j] * params.sigma[j];
        let r = x_t[j] - m[j];
        ll += -r * r / (2.0 * var) - 0.5 * (two_pi * var).ln();
    }
    Ok(ll)
}

fn residual(
    params: &GaussianDybmParams,
    state: &TraceState,
    esn: Option<&EsnConfig>,
    x_t: &ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let m = predict_mean(params, state, esn)?;
    let r = &x_t.to_owned() - &m;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(DybmError::Numerical("non-finite residual in gaussian update".into()));
    }
    Ok(r)
}

/// Plain gradient ascent on the log density: b += η(x−m)/σ²,
/// σ += η((x−m)²−σ²)/σ³, W^[δ] += η x^[t−δ]((x−m)/σ²)^T,
/// U^[ℓ] += η α_ℓ((x−m)/σ²)^T; the ESN readout updates like a U block with ψ
/// in place of the trace.
pub fn sgd_step(
    params: &mut GaussianDybmParams,
    state: &TraceState,
    esn: Option<&mut EsnConfig>,
    x_t: &ArrayView1<f64>,
    eta: f64,
) -> Result<()> {
    let r = residual(params, state, esn.as_deref(), x_t)?;
    let var = &params.sigma * &params.sigma;
    let scaled = &r / &var;
    params.core.b.scaled_add(eta, &scaled);
    for delta in 1..params.core.delay {
        params.core.w[delta - 1].scaled_add(eta, &outer(state.fifo.lagged(delta), &scaled));
    }
    for (l, u) in params.core.u.iter_mut().enumerate() {
        u.scaled_add(eta, &outer(&state.alpha.row(l).to_owned(), &scaled));
    }
    if let Some(esn) = esn {
        esn.readout.scaled_add(eta, &outer(&esn.state, &scaled));
    }
    let sigma_grad = (&r * &r - &var) / (&params.sigma * &var);
    params.sigma.scaled_add(eta, &sigma_grad);
    params.sigma.mapv_inplace(|s| s.max(SIGMA_FLOOR));
    Ok(())
}

/// Natural-gradient rules: the per-unit Fisher G = diag(1/v, 1/(2v²)) turns
/// the (m, v) gradients into m+η(x−m), v+η((x−m)²−v); the linear blocks drop
/// their 1/σ² scaling accordingly.
pub fn natural_step(
    params: &mut GaussianDybmParams,
    state: &TraceState,
    esn: Option<&mut EsnConfig>,
    x_t: &ArrayView1<f64>,
    eta: f64,
) -> Result<()> {
    let r = residual(params, state, esn.as_deref(), x_t)?;
    params.core.b.scaled_add(eta, &r);
    for delta in 1..params.core.delay {
        params.core.w[delta - 1].scaled_add(eta, &outer(state.fifo.lagged(delta), &r));
    }
    for (l, u) in params.core.u.iter_mut().enumerate() {
        u.scaled_add(eta, &outer(&state.alpha.row(l).to_owned(), &r));
    }
    if let Some(esn) = esn {
        esn.readout.scaled_add(eta, &outer(&esn.state, &r));
    }
    for j in 0..params.dim() {
        let var = params.sigma[j] * params.sigma[j];
        let next_var = (var + eta * (r[j] * r[j] - var)).max(SIGMA_FLOOR * SIGMA_FLOOR);
        params.sigma[j] = next_var.sqrt();
    }
    Ok(())
}

/// Draws x ~ N(m, diag(σ²)) and advances the state (and reservoir) with the
/// draw.
pub fn sample_step(
    params: &GaussianDybmParams,
    state: &mut TraceState,
    esn: Option<&mut EsnConfig>,
    rng: &mut Rng,
) -> Result<Array1<f64>> {
    let m = predict_mean(params, state, esn.as_deref())?;
    let noise: Array1<f64> =
        Array1::from_iter((0..params.dim()).map(|_| StandardNormal.sample(rng)));
    let x = m + &params.sigma * &noise;
    state.step(&x)?;
    if let Some(esn) = esn {
        esn_step(esn, &x.view())?;
    }
    Ok(x)
}

/// Iterated one-step means, each fed back as the next observation (and into
/// the reservoir when present).
pub fn forecast(
    params: &GaussianDybmParams,
    state: &TraceState,
    esn: Option<&EsnConfig>,
    horizon: usize,
) -> Result<Array2<f64>> {
    if horizon < 1 {
        return Err(DybmError::Input("horizon must be at least 1".into()));
    }
    let mut state = state.clone();
    let mut esn = esn.cloned();
    let mut out = Array2::zeros((horizon, params.dim()));
    for h in 0..horizon {
        let m = predict_mean(params, &state, esn.as_ref())?;
        out.row_mut(h).assign(&m);
        state.step(&m)?;
        if let Some(esn) = esn.as_mut() {
            esn_step(esn, &m.view())?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn density_hand_values() {
        let params = GaussianDybmParams::zeros(1, &[], 1, 1.0);
        let state = params.new_state().unwrap();
        let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let at_mean = step_log_density(&params, &state, None, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(at_mean, -half_log_2pi, epsilon = 1e-12);
        let off = step_log_density(&params, &state, None, &array![1.0].view()).unwrap();
        assert_abs_diff_eq!(off, -0.5 - half_log_2pi, epsilon = 1e-12);

        let wide = GaussianDybmParams::zeros(1, &[], 1, 2.0);
        let state = wide.new_state().unwrap();
        let at_mean_wide = step_log_density(&wide, &state, None, &array![0.0].view()).unwrap();
        assert_abs_diff_eq!(at_mean - at_mean_wide, 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn zero_residual_only_shrinks_sigma() {
        let mut params = GaussianDybmParams::zeros(2, &[0.5], 2, 1.0);
        let state = params.new_state().unwrap();
        sgd_step(&mut params, &state, None, &array![0.0, 0.0].view(), 0.1).unwrap();
        assert_eq!(params.core.b, array![0.0, 0.0]);
        assert_eq!(params.core.w[0], Array2::<f64>::zeros((2, 2)));
        // Δσ = η·(−σ²)/σ³ = −η/σ = −0.1.
        assert_abs_diff_eq!(params.sigma[0], 0.9, epsilon = 1e-12);
    }

    #[test]
    fn natural_hand_values() {
        let mut params = GaussianDybmParams::zeros(1, &[], 1, 1.0);
        let state = params.new_state().unwrap();
        natural_step(&mut params, &state, None, &array![1.0].view(), 0.1).unwrap();
        assert_abs_diff_eq!(params.core.b[0], 0.1, epsilon = 1e-15);

        let mut params = GaussianDybmParams::zeros(1, &[], 1, 2.0);
        let state = params.new_state().unwrap();
        natural_step(&mut params, &state, None, &array![0.0].view(), 0.25).unwrap();
        // x=m: v ← (1−η)v = 3, σ = √3.
        assert_abs_diff_eq!(params.sigma[0], 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn sigma_floor_holds() {
        let mut params = GaussianDybmParams::zeros(1, &[], 1, 1e-5);
        let state = params.new_state().unwrap();
        for _ in 0..200 {
            sgd_step(&mut params, &state, None, &array![0.0].view(), 0.5).unwrap();
        }
        assert!(params.sigma[0] >= SIGMA_FLOOR);
    }

    #[test]
    fn non_finite_input_is_numerical_error() {
        let mut params = GaussianDybmParams::zeros(1, &[], 1, 1.0);
        let state = params.new_state().unwrap();
        let err = sgd_step(&mut params, &state, None, &array![f64::NAN].view(), 0.1);
        assert!(matches!(err, Err(DybmError::Numerical(_))));
    }

    #[test]
    fn esn_state_bounded_and_fixed_matrices_untouched() {
        let mut rng = seeded_rng(21);
        let settings = EsnSettings { size: 16, leak: 0.999999, spectral_radius: 0.9 };
        let mut esn = EsnConfig::new(2, &settings, &mut rng).unwrap();
        let w_rec_before = esn.w_rec.clone();
        let mut params = GaussianDybmParams::zeros(2, &[], 1, 1.0);
        let state = params.new_state().unwrap();
        for _ in 0..50 {
            let x = array![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            sgd_step(&mut params, &state, Some(&mut esn), &x.view(), 0.01).unwrap();
            esn_step(&mut esn, &x.view()).unwrap();
            assert!(esn.state.iter().all(|v| v.abs() <= 1.0 + 1e-9));
        }
        assert_eq!(esn.w_rec, w_rec_before);
    }

    #[test]
    fn esn_spectral_radius_rescaled() {
        let mut rng = seeded_rng(22);
        let settings = EsnSettings { size: 24, leak: 0.5, spectral_radius: 0.7 };
        let esn = EsnConfig::new(1, &settings, &mut rng).unwrap();
        assert_abs_diff_eq!(spectral_radius(&esn.w_rec), 0.7, epsilon = 1e-9);
    }

    #[test]
    fn esn_degenerate_leaks() {
        let mut esn = EsnConfig {
            w_rec: Array2::zeros((2, 2)),
            w_in: Array2::eye(2),
            leak: 1.0,
            state: array![0.3, -0.4],
            readout: Array2::zeros((2, 2)),
        };
        esn_step(&mut esn, &array![0.0, 0.0].view()).unwrap();
        assert_eq!(esn.state, array![0.0, 0.0]);

        esn.leak = 0.0;
        esn.state = array![0.5, 0.5];
        esn_step(&mut esn, &array![9.0, 9.0].view()).unwrap();
        assert_eq!(esn.state, array![0.5, 0.5]);
    }

    #[test]
    fn forecast_edges() {
        let mut params = GaussianDybmParams::zeros(2, &[], 1, 1.0);
        params.core.b = array![1.5, -0.5];
        let state = params.new_state().unwrap();
        let out = forecast(&params, &state, None, 3).unwrap();
        for h in 0..3 {
            assert_eq!(out.row(h), array![1.5, -0.5].view());
        }
        assert!(forecast(&params, &state, None, 0).is_err());

        let one = forecast(&params, &state, None, 1).unwrap();
        let m = predict_mean(&params, &state, None).unwrap();
        assert_eq!(one.row(0).to_owned(), m);
    }

    #[test]
    fn var1_predictor_matches_hand_iteration() {
        let mut params = GaussianDybmParams::zeros(2, &[], 2, 1.0);
        params.core.b = array![0.1, 0.2];
        params.core.w[0] = array![[0.5, -0.1], [0.3, 0.2]];
        let mut state = params.new_state().unwrap();
        let x0 = array![1.0, -1.0];
        state.step(&x0).unwrap();

        // m = b + W^T x, iterated by hand.
        let wt = params.core.w[0].t().to_owned();
        let m1 = &params.core.b + &wt.dot(&x0);
        let m2 = &params.core.b + &wt.dot(&m1);
        let out = forecast(&params, &state, None, 2).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(out[[0, j]], m1[j], epsilon = 1e-14);
            assert_abs_diff_eq!(out[[1, j]], m2[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic_and_advances_state() {
        let mut params = GaussianDybmParams::zeros(2, &[0.5], 2, 1.0);
        params.core.b = array![0.3, -0.7];
        let mut state_a = params.new_state().unwrap();
        let mut state_b = params.new_state().unwrap();
        let mut rng_a = seeded_rng(5);
        let mut rng_b = seeded_rng(5);
        let xa = sample_step(&params, &mut state_a, None, &mut rng_a).unwrap();
        let xb = sample_step(&params, &mut state_b, None, &mut rng_b).unwrap();
        assert_eq!(xa, xb);
        assert_eq!(state_a, state_b);
        assert_eq!(state_a.fifo.lagged(1), &xa);
    }
}
