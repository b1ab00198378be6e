//! Time series whose observations are function values at scattered points.
//! The function is summarized by latent coefficients over a fixed landmark
//! set; predictions are kernel mixtures, learning is Gaussian-process
//! regression per step plus the usual lag/trace linear dynamics on the
//! landmark values.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use crate::config::KernelSettings;
use crate::error::{DybmError, Result};
use crate::math::outer;
use crate::rng::Rng;
use crate::traces::TraceState;

/// Squared-exponential kernel with an observation-noise spike: the noisy
/// variant adds σ² exactly on coordinate-identical points.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfKernel {
    pub bandwidth: f64,
    pub noise: f64,
}

impl RbfKernel {
    pub fn new(bandwidth: f64, noise: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(DybmError::Config(format!("bandwidth must be positive, got {}", bandwidth)));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(DybmError::Config(format!("noise must be positive, got {}", noise)));
        }
        Ok(RbfKernel { bandwidth, noise })
    }

    /// Bandwidth defaults to the median pairwise landmark distance.
    pub fn from_settings(settings: &KernelSettings, landmarks: &LandmarkSet) -> Result<Self> {
        let bandwidth = match settings.bandwidth {
            Some(h) => h,
            None => landmarks.median_distance()?,
        };
        RbfKernel::new(bandwidth, settings.noise)
    }

    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        let dist2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
        (-dist2 / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }

    pub fn value_with_noise(&self, a: &[f64], b: &[f64]) -> f64 {
        let base = self.value(a, b);
        if a == b { base + self.noise } else { base }
    }

    pub fn cross(&self, rows: &[Vec<f64>], cols: &[Vec<f64>]) -> Array2<f64> {
        Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| self.value(&rows[i], &cols[j]))
    }

    pub fn cross_with_noise(&self, rows: &[Vec<f64>], cols: &[Vec<f64>]) -> Array2<f64> {
        Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| {
            self.value_with_noise(&rows[i], &cols[j])
        })
    }
}

/// Fixed, distinct representative points in 1 or 2 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Vec<f64>>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(DybmError::Config("need at least one landmark".into()));
        }
        let q = points[0].len();
        if !(1..=2).contains(&q) {
            return Err(DybmError::Config(format!(
                "landmarks must live in 1 or 2 dimensions, got {}",
                q
            )));
        }
        for p in &points {
            if p.len() != q {
                return Err(DybmError::Config("landmark dimensions are inconsistent".into()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(DybmError::Config("landmark coordinates must be finite".into()));
            }
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(DybmError::Config(format!(
                        "landmarks {} and {} coincide",
                        i, j
                    )));
                }
            }
        }
        Ok(LandmarkSet { points })
    }

    /// Uniform lattice over the domain box: a linspace in 1D, a near-square
    /// grid truncated to `count` points in 2D.
    pub fn grid(count: usize, domain: &[[f64; 2]]) -> Result<Self> {
        if count < 1 {
            return Err(DybmError::Config("need at least one landmark".into()));
        }
        let linspace = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..n).map(|i| lo + i as f64 * (hi - lo) / (n - 1) as f64).collect()
            }
        };
        let points = match domain {
            [[lo, hi]] => linspace(*lo, *hi, count).into_iter().map(|z| vec![z]).collect(),
            [[lo0, hi0], [lo1, hi1]] => {
                let rows = (count as f64).sqrt().ceil() as usize;
                let cols = count.div_ceil(rows);
                let zs0 = linspace(*lo0, *hi0, rows);
                let zs1 = linspace(*lo1, *hi1, cols);
                let mut pts = Vec::with_capacity(count);
                'fill: for &z0 in &zs0 {
                    for &z1 in &zs1 {
                        pts.push(vec![z0, z1]);
                        if pts.len() == count {
                            break 'fill;
                        }
                    }
                }
                pts
            }
            _ => {
                return Err(DybmError::Config(format!(
                    "domain must list 1 or 2 intervals, got {}",
                    domain.len()
                )))
            }
        };
        LandmarkSet::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn median_distance(&self) -> Result<f64> {
        if self.points.len() < 2 {
            return Err(DybmError::Config(
                "bandwidth must be given explicitly with fewer than two landmarks".into(),
            ));
        }
        let mut dists = Vec::new();
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                let d2: f64 = self.points[i]
                    .iter()
                    .zip(self.points[j].iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                dists.push(d2.sqrt());
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        Ok(dists[dists.len() / 2])
    }
}

/// One step of scattered observations: points Z_t and values g^[t](Z_t).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub points: Vec<Vec<f64>>,
    pub values: Array1<f64>,
}

/// Loads (t, z_1[, z_2], value) rows, grouped into one observation set per
/// step. Steps must cover 0..T−1 without gaps.
pub fn load_observation_csv(path: &std::path::Path) -> Result<Vec<ObservationSet>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| DybmError::Input(e.to_string()))?;
    let headers = reader.headers().map_err(|e| DybmError::Input(e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 3 || cols[0] != "t" || cols[cols.len() - 1] != "value" {
        return Err(DybmError::Input(
            "observation header must be t, z_1[, z_2], value".into(),
        ));
    }
    let q = cols.len() - 2;
    for (k, name) in cols[1..cols.len() - 1].iter().enumerate() {
        let expected = format!("z_{}", k + 1);
        if *name != expected {
            return Err(DybmError::Input(format!(
                "observation column {} must be named {}, got {}",
                k + 2, expected, name
            )));
        }
    }
    if q > 2 {
        return Err(DybmError::Input(format!(
            "observations must live in 1 or 2 dimensions, got {}",
            q
        )));
    }

    let mut rows: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DybmError::Input(e.to_string()))?;
        let row = idx + 2;
        if record.len() != cols.len() {
            return Err(DybmError::Input(format!(
                "row {} has {} fields, expected {}",
                row, record.len(), cols.len()
            )));
        }
        let t: usize = record[0]
            .parse()
            .map_err(|_| DybmError::Input(format!("row {}: bad step index {:?}", row, &record[0])))?;
        let mut point = Vec::with_capacity(q);
        for k in 0..q {
            let v: f64 = record[k + 1].parse().map_err(|_| {
                DybmError::Input(format!("row {}: bad coordinate {:?}", row, &record[k + 1]))
            })?;
            point.push(v);
        }
        let value: f64 = record[q + 1].parse().map_err(|_| {
            DybmError::Input(format!("row {}: bad value {:?}", row, &record[q + 1]))
        })?;
        if point.iter().any(|v| !v.is_finite()) || !value.is_finite() {
            return Err(DybmError::Input(format!("row {}: non-finite entry", row)));
        }
        rows.push((t, point, value));
    }
    if rows.is_empty() {
        return Err(DybmError::Input("observation file has no data rows".into()));
    }
    let t_max = rows.iter().map(|(t, _, _)| *t).max().expect("non-empty");
    let mut sets: Vec<(Vec<Vec<f64>>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); t_max + 1];
    for (t, point, value) in rows {
        sets[t].0.push(point);
        sets[t].1.push(value);
    }
    sets.into_iter()
        .enumerate()
        .map(|(t, (points, values))| {
            if points.is_empty() {
                Err(DybmError::Input(format!("step {} has no observations", t)))
            } else {
                Ok(ObservationSet { points, values: Array1::from_vec(values) })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDybmParams {
    /// Latent coefficient bias, one per landmark.
    pub b: Array1<f64>,
    /// Lag blocks, d−1 of M×M, applied to delivered landmark values.
    pub w: Vec<Array2<f64>>,
    /// Trace blocks, one M×M per decay rate.
    pub u: Vec<Array2<f64>>,
    pub decay_rates: Vec<f64>,
    pub delay: usize,
    pub landmarks: LandmarkSet,
    pub kernel: RbfKernel,
}

impl FunctionalDybmParams {
    pub fn zeros(
        landmarks: LandmarkSet,
        kernel: RbfKernel,
        decay_rates: &[f64],
        delay: usize,
    ) -> Result<Self> {
        if delay < 1 {
            return Err(DybmError::Config("delay must be at least 1".into()));
        }
        if decay_rates.is_empty() {
            return Err(DybmError::Config("need at least one decay rate".into()));
        }
        let m = landmarks.len();
        Ok(FunctionalDybmParams {
            b: Array1::zeros(m),
            w: (1..delay).map(|_| Array2::zeros((m, m))).collect(),
            u: decay_rates.iter().map(|_| Array2::zeros((m, m))).collect(),
            decay_rates: decay_rates.to_vec(),
            delay,
            landmarks,
            kernel,
        })
    }

    pub fn landmark_count(&self) -> usize {
        self.b.len()
    }

    pub fn new_state(&self) -> Result<TraceState> {
        TraceState::new(self.landmark_count(), &self.decay_rates, 0.0, self.delay)
    }
}

/// c^[t] = b + Σ_δ W^[δ]·ĝ^[t−δ](P) + Σ_ℓ U^[ℓ]·α_ℓ(P).
pub fn latent_coefficients(params: &FunctionalDybmParams, state: &TraceState) -> Array1<f64> {
    let mut c = params.b.clone();
    for delta in 1..params.delay {
        c += &params.w[delta - 1].dot(state.fifo.lagged(delta));
    }
    for (l, u) in params.u.iter().enumerate() {
        c += &u.dot(&state.alpha.row(l));
    }
    c
}

/// μ(z) = k_noisy(z, P)·c at each query point.
pub fn mean_at(
    params: &FunctionalDybmParams,
    state: &TraceState,
    points: &[Vec<f64>],
) -> Array1<f64> {
    let c = latent_coefficients(params, state);
    params.kernel.cross_with_noise(points, params.landmarks.points()).dot(&c)
}

fn check_observations(params: &FunctionalDybmParams, obs: &ObservationSet) -> Result<()> {
    if obs.points.is_empty() {
        return Err(DybmError::Input("empty observation set".into()));
    }
    if obs.points.len() != obs.values.len() {
        return Err(DybmError::Input(format!(
            "{} points but {} values",
            obs.points.len(),
            obs.values.len()
        )));
    }
    let q = params.landmarks.dim();
    for p in &obs.points {
        if p.len() != q {
            return Err(DybmError::Input(format!(
                "observation point has {} coordinates, landmarks have {}",
                p.len(), q
            )));
        }
    }
    for i in 0..obs.points.len() {
        for j in i + 1..obs.points.len() {
            if obs.points[i] == obs.points[j] {
                return Err(DybmError::Input(format!(
                    "observation points {} and {} coincide",
                    i, j
                )));
            }
        }
    }
    Ok(())
}

/// Shared per-step linear algebra: residual r = g − μ(Z), the Gram solve
/// s = K_noisy(Z,Z)^{−1} r, and the log-determinant.
struct ObsSolve {
    residual: Array1<f64>,
    solved: Array1<f64>,
    logdet: f64,
}

fn solve_observations(
    params: &FunctionalDybmParams,
    state: &TraceState,
    obs: &ObservationSet,
) -> Result<ObsSolve> {
    check_observations(params, obs)?;
    let mu = mean_at(params, state, &obs.points);
    let residual = &obs.values - &mu;
    if residual.iter().any(|v| !v.is_finite()) {
        return Err(DybmError::Numerical("non-finite residual in kernel regression".into()));
    }
    let n = obs.points.len();
    let gram = params.kernel.cross_with_noise(&obs.points, &obs.points);
    let gram_na = nalgebra::DMatrix::from_fn(n, n, |i, j| gram[[i, j]]);
    let chol = nalgebra::linalg::Cholesky::new(gram_na).ok_or_else(|| {
        DybmError::Numerical("observation Gram matrix is not positive definite".into())
    })?;
    let rhs = nalgebra::DVector::from_iterator(n, residual.iter().copied());
    let solved_na = chol.solve(&rhs);
    let solved = Array1::from_iter(solved_na.iter().copied());
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(ObsSolve { residual, solved, logdet })
}

/// log N(g; μ(Z), K_noisy(Z,Z)).
pub fn step_log_density(
    params: &FunctionalDybmParams,
    state: &TraceState,
    obs: &ObservationSet,
) -> Result<f64> {
    let solve = solve_observations(params, state, obs)?;
    let n = obs.points.len() as f64;
    Ok(-0.5 * solve.residual.dot(&solve.solved)
        - 0.5 * (n * (2.0 * std::f64::consts::PI).ln() + solve.logdet))
}

/// Posterior mean of the function at the landmarks given this step's
/// observations: ĝ(P) = μ(P) + k(P,Z)·K_noisy(Z,Z)^{−1}·(g − μ(Z)). The
/// cross-covariance is noise-free; evaluated before any parameter update.
pub fn map_estimate(
    params: &FunctionalDybmParams,
    state: &TraceState,
    obs: &ObservationSet,
) -> Result<Array1<f64>> {
    let solve = solve_observations(params, state, obs)?;
    let mu_p = mean_at(params, state, params.landmarks.points());
    let cross = params.kernel.cross(params.landmarks.points(), &obs.points);
    Ok(&mu_p + &cross.dot(&solve.solved))
}

/// Gradient ascent on the step log-density: the chain rule sends the solved
/// residual through the noisy cross-covariance, q = k_noisy(P,Z)·s, and each
/// coefficient-side factor picks up its driving vector.
pub fn sgd_step(
    params: &mut FunctionalDybmParams,
    state: &TraceState,
    obs: &ObservationSet,
    eta: f64,
) -> Result<()> {
    let solve = solve_observations(params, state, obs)?;
    let cross = params.kernel.cross_with_noise(params.landmarks.points(), &obs.points);
    let q = cross.dot(&solve.solved);
    params.b.scaled_add(eta, &q);
    for delta in 1..params.delay {
        params.w[delta - 1].scaled_add(eta, &outer(&q, state.fifo.lagged(delta)));
    }
    for (l, u) in params.u.iter_mut().enumerate() {
        u.scaled_add(eta, &outer(&q, &state.alpha.row(l).to_owned()));
    }
    Ok(())
}

/// One online step: score, estimate the landmark values, learn, advance the
/// lag/trace state with the estimate. Returns the step log-density.
pub fn train_step(
    params: &mut FunctionalDybmParams,
    state: &mut TraceState,
    obs: &ObservationSet,
    eta: f64,
) -> Result<f64> {
    let ll = step_log_density(params, state, obs)?;
    let g_hat = map_estimate(params, state, obs)?;
    sgd_step(params, state, obs, eta)?;
    state.step(&g_hat)?;
    Ok(ll)
}

/// Expected-value roll-out of the function at the landmarks.
pub fn forecast(
    params: &FunctionalDybmParams,
    state: &TraceState,
    horizon: usize,
) -> Result<Array2<f64>> {
    if horizon < 1 {
        return Err(DybmError::Input("horizon must be at least 1".into()));
    }
    let mut state = state.clone();
    let m = params.landmark_count();
    let mut out = Array2::zeros((horizon, m));
    for step in 0..horizon {
        let mu = mean_at(params, &state, params.landmarks.points());
        out.row_mut(step).assign(&mu);
        state.step(&mu)?;
    }
    Ok(out)
}

/// Draws g ~ N(μ(P), K_noisy(P,P)) and advances the state with the draw.
pub fn sample_step(
    params: &FunctionalDybmParams,
    state: &mut TraceState,
    rng: &mut Rng,
) -> Result<Array1<f64>> {
    let m = params.landmark_count();
    let mu = mean_at(params, state, params.landmarks.points());
    let cov = params
        .kernel
        .cross_with_noise(params.landmarks.points(), params.landmarks.points());
    let cov_na = nalgebra::DMatrix::from_fn(m, m, |i, j| cov[[i, j]]);
    let chol = nalgebra::linalg::Cholesky::new(cov_na).ok_or_else(|| {
        DybmError::Numerical("landmark covariance is not positive definite".into())
    })?;
    let xi = nalgebra::DVector::from_iterator(
        m,
        (0..m).map(|_| StandardNormal.sample(rng)),
    );
    let draw_na = chol.l() * xi;
    let draw = &mu + &Array1::from_iter(draw_na.iter().copied());
    state.step(&draw)?;
    Ok(draw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn line_landmarks(n: usize) -> LandmarkSet {
        LandmarkSet::grid(n, &[[0.0, 1.0]]).unwrap()
    }

    #[test]
    fn grid_shapes_and_distinctness() {
        let lm = line_landmarks(5);
        assert_eq!(lm.len(), 5);
        assert_eq!(lm.dim(), 1);
        assert_eq!(lm.points()[0], vec![0.0]);
        assert_eq!(lm.points()[4], vec![1.0]);

        let lm2 = LandmarkSet::grid(7, &[[0.0, 1.0], [-1.0, 1.0]]).unwrap();
        assert_eq!(lm2.len(), 7);
        assert_eq!(lm2.dim(), 2);

        assert!(LandmarkSet::new(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(LandmarkSet::new(vec![vec![0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn median_distance_hand_value() {
        let lm = LandmarkSet::new(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        // Pairwise distances {1, 3, 2}; median 2.
        assert_abs_diff_eq!(lm.median_distance().unwrap(), 2.0, epsilon = 1e-15);
        let single = LandmarkSet::new(vec![vec![0.0]]).unwrap();
        assert!(single.median_distance().is_err());
    }

    #[test]
    fn kernel_hand_values() {
        let kernel = RbfKernel::new(2.0, 0.01).unwrap();
        assert_abs_diff_eq!(kernel.value(&[1.0], &[1.0]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kernel.value_with_noise(&[1.0], &[1.0]), 1.01, epsilon = 1e-15);
        // Distance equal to the bandwidth: exp(−1/2).
        assert_abs_diff_eq!(kernel.value(&[0.0], &[2.0]), (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            kernel.value(&[0.0, 0.0], &[2.0, 0.0]),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(kernel.value_with_noise(&[0.0], &[2.0]), kernel.value(&[0.0], &[2.0]));
        assert!(RbfKernel::new(0.0, 0.01).is_err());
        assert!(RbfKernel::new(1.0, 0.0).is_err());
    }

    #[test]
    fn zero_model_log_density_hand_value() {
        let lm = LandmarkSet::new(vec![vec![0.0]]).unwrap();
        let kernel = RbfKernel::new(1.0, 0.5).unwrap();
        let params = FunctionalDybmParams::zeros(lm, kernel, &[0.5], 2).unwrap();
        let state = params.new_state().unwrap();
        // Observation far from the landmark: μ ≈ 0, variance 1 + σ².
        let obs = ObservationSet { points: vec![vec![30.0]], values: array![0.7] };
        let ll = step_log_density(&params, &state, &obs).unwrap();
        let var = 1.5f64;
        let expected = -0.5 * 0.7 * 0.7 / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        assert_abs_diff_eq!(ll, expected, epsilon = 1e-12);
    }

    #[test]
    fn map_interpolates_at_landmarks_with_tiny_noise() {
        let lm = line_landmarks(5);
        let kernel = RbfKernel::new(0.4, 1e-8).unwrap();
        let params = FunctionalDybmParams::zeros(lm, kernel, &[0.5], 2).unwrap();
        let state = params.new_state().unwrap();
        let values = array![0.3, -0.2, 0.8, 0.1, -0.5];
        let obs = ObservationSet { points: params.landmarks.points().to_vec(), values: values.clone() };
        let g_hat = map_estimate(&params, &state, &obs).unwrap();
        for j in 0..5 {
            assert!(
                (g_hat[j] - values[j]).abs() < 1e-3,
                "landmark {}: {} vs {}",
                j, g_hat[j], values[j]
            );
        }
    }

    #[test]
    fn duplicate_observation_points_are_refused() {
        let params = FunctionalDybmParams::zeros(
            line_landmarks(3),
            RbfKernel::new(0.5, 0.01).unwrap(),
            &[0.5],
            2,
        )
        .unwrap();
        let state = params.new_state().unwrap();
        let obs = ObservationSet {
            points: vec![vec![0.2], vec![0.2]],
            values: array![1.0, 1.0],
        };
        assert!(matches!(
            step_log_density(&params, &state, &obs),
            Err(DybmError::Input(_))
        ));
    }

    #[test]
    fn train_step_advances_state_with_the_estimate() {
        let mut params = FunctionalDybmParams::zeros(
            line_landmarks(3),
            RbfKernel::new(0.5, 0.01).unwrap(),
            &[0.5],
            2,
        )
        .unwrap();
        let mut state = params.new_state().unwrap();
        let obs = ObservationSet { points: vec![vec![0.1], vec![0.9]], values: array![1.0, -1.0] };
        let g_hat = map_estimate(&params, &state, &obs).unwrap();
        train_step(&mut params, &mut state, &obs, 0.01).unwrap();
        assert_eq!(state.fifo.lagged(1), &g_hat);
    }

    #[test]
    fn forecast_and_sampling_shapes() {
        let params = FunctionalDybmParams::zeros(
            line_landmarks(4),
            RbfKernel::new(0.5, 0.01).unwrap(),
            &[0.3, 0.6],
            3,
        )
        .unwrap();
        let state = params.new_state().unwrap();
        let out = forecast(&params, &state, 5).unwrap();
        assert_eq!(out.dim(), (5, 4));
        assert!(forecast(&params, &state, 0).is_err());

        let draw = |seed: u64| {
            let mut rng = seeded_rng(seed);
            let mut state = params.new_state().unwrap();
            sample_step(&params, &mut state, &mut rng).unwrap()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn observation_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        std::fs::write(&path, "t,z_1,value\n0,0.1,1.5\n0,0.4,-0.5\n1,0.2,0.25\n").unwrap();
        let sets = load_observation_csv(&path).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].points, vec![vec![0.1], vec![0.4]]);
        assert_eq!(sets[0].values, array![1.5, -0.5]);
        assert_eq!(sets[1].points, vec![vec![0.2]]);

        std::fs::write(&path, "t,z_1,value\n0,0.1,1.5\n2,0.2,0.25\n").unwrap();
        assert!(load_observation_csv(&path).is_err());
        std::fs::write(&path, "t,x,value\n0,0.1,1.5\n").unwrap();
        assert!(load_observation_csv(&path).is_err());
        std::fs::write(&path, "t,z_1,value\n", ).unwrap();
        assert!(load_observation_csv(&path).is_err());
    }
}
