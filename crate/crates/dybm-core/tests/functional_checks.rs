//! Oracles for the kernel-regression model: finite differences on the
//! log-density gradient, an explicit-inverse density oracle independent of
//! the Cholesky path, and a drifting-function tracking check.

mod common;

use common::{central_fd, grad_close};
use dybm_core::functional::{
    map_estimate, sgd_step, step_log_density, train_step, FunctionalDybmParams, LandmarkSet,
    ObservationSet, RbfKernel,
};
use dybm_core::rng::{seeded_rng, Rng};
use ndarray::{Array1, Array2};
use rand::Rng as _;

fn random_functional(
    landmark_coords: &[f64],
    decays: &[f64],
    delay: usize,
    rng: &mut Rng,
) -> FunctionalDybmParams {
    let landmarks =
        LandmarkSet::new(landmark_coords.iter().map(|&z| vec![z]).collect()).unwrap();
    let kernel = RbfKernel::new(0.5, 0.05).unwrap();
    let mut params = FunctionalDybmParams::zeros(landmarks, kernel, decays, delay).unwrap();
    params.b = Array1::from_shape_fn(params.b.len(), |_| rng.random_range(-0.5..0.5));
    let m = params.landmark_count();
    for block in params.w.iter_mut().chain(params.u.iter_mut()) {
        *block = Array2::from_shape_fn((m, m), |_| rng.random_range(-0.5..0.5));
    }
    params
}

fn random_obs(n: usize, rng: &mut Rng) -> ObservationSet {
    // Spread the points apart so none coincide.
    let points: Vec<Vec<f64>> =
        (0..n).map(|i| vec![i as f64 * 0.45 + rng.random_range(0.0..0.3)]).collect();
    let values = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
    ObservationSet { points, values }
}

#[test]
fn sgd_is_the_exact_gradient_of_the_log_density() {
    let h = 1e-5;
    let rel_tol = 1e-4;
    let mut rng = seeded_rng(800);
    for case in 0..25 {
        let delay = 1 + case % 3;
        let decays: &[f64] = if case % 2 == 0 { &[0.5] } else { &[0.3, 0.7] };
        let mut params = random_functional(&[0.0, 0.6, 1.3], decays, delay, &mut rng);
        let mut state = params.new_state().unwrap();
        for _ in 0..6 {
            let obs = random_obs(2, &mut rng);
            train_step(&mut params, &mut state, &obs, 0.01).unwrap();
        }
        let obs = random_obs(1 + case % 3, &mut rng);

        let mut updated = params.clone();
        sgd_step(&mut updated, &state, &obs, 1.0).unwrap();
        let f = |p: &FunctionalDybmParams| step_log_density(p, &state, &obs).unwrap();

        let m = params.landmark_count();
        for i in 0..m {
            let analytic = updated.b[i] - params.b[i];
            let fd = central_fd(&params, &mut |p, eps| p.b[i] += eps, f, h);
            assert!(
                grad_close(fd, analytic, rel_tol),
                "case {} b[{}]: fd {:.8e} analytic {:.8e}",
                case, i, fd, analytic
            );
        }
        for k in 0..params.w.len() {
            for i in 0..m {
                for j in 0..m {
                    let analytic = updated.w[k][[i, j]] - params.w[k][[i, j]];
                    let fd = central_fd(&params, &mut |p, eps| p.w[k][[i, j]] += eps, f, h);
                    assert!(
                        grad_close(fd, analytic, rel_tol),
                        "case {} w{}[{},{}]: fd {:.8e} analytic {:.8e}",
                        case, k, i, j, fd, analytic
                    );
                }
            }
        }
        for k in 0..params.u.len() {
            for i in 0..m {
                for j in 0..m {
                    let analytic = updated.u[k][[i, j]] - params.u[k][[i, j]];
                    let fd = central_fd(&params, &mut |p, eps| p.u[k][[i, j]] += eps, f, h);
                    assert!(
                        grad_close(fd, analytic, rel_tol),
                        "case {} u{}[{},{}]: fd {:.8e} analytic {:.8e}",
                        case, k, i, j, fd, analytic
                    );
                }
            }
        }
    }
}

fn logdet_and_inverse(k: &Array2<f64>) -> (f64, Array2<f64>) {
    match k.nrows() {
        1 => (k[[0, 0]].ln(), Array2::from_elem((1, 1), 1.0 / k[[0, 0]])),
        2 => {
            let det = k[[0, 0]] * k[[1, 1]] - k[[0, 1]] * k[[1, 0]];
            let inv = Array2::from_shape_vec(
                (2, 2),
                vec![k[[1, 1]] / det, -k[[0, 1]] / det, -k[[1, 0]] / det, k[[0, 0]] / det],
            )
            .unwrap();
            (det.ln(), inv)
        }
        3 => {
            let det = k[[0, 0]] * (k[[1, 1]] * k[[2, 2]] - k[[1, 2]] * k[[2, 1]])
                - k[[0, 1]] * (k[[1, 0]] * k[[2, 2]] - k[[1, 2]] * k[[2, 0]])
                + k[[0, 2]] * (k[[1, 0]] * k[[2, 1]] - k[[1, 1]] * k[[2, 0]]);
            let cof = |r: usize, c: usize| -> f64 {
                let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
                let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
                let minor = k[[rows[0], cols[0]]] * k[[rows[1], cols[1]]]
                    - k[[rows[0], cols[1]]] * k[[rows[1], cols[0]]];
                if (r + c).is_multiple_of(2) { minor } else { -minor }
            };
            let inv = Array2::from_shape_fn((3, 3), |(i, j)| cof(j, i) / det);
            (det.ln(), inv)
        }
        _ => panic!("oracle handles up to 3 observations"),
    }
}

#[test]
fn log_density_matches_an_explicit_inverse_oracle() {
    let mut rng = seeded_rng(801);
    for case in 0..60 {
        let n = 1 + case % 3;
        let mut params = random_functional(&[0.0, 0.7, 1.5], &[0.4], 2, &mut rng);
        let mut state = params.new_state().unwrap();
        for _ in 0..4 {
            let obs = random_obs(2, &mut rng);
            train_step(&mut params, &mut state, &obs, 0.01).unwrap();
        }
        let obs = random_obs(n, &mut rng);
        let ll = step_log_density(&params, &state, &obs).unwrap();

        let mu = dybm_core::functional::mean_at(&params, &state, &obs.points);
        let gram = params.kernel.cross_with_noise(&obs.points, &obs.points);
        let (logdet, inv) = logdet_and_inverse(&gram);
        let r = &obs.values - &mu;
        let quad = r.dot(&inv.dot(&r));
        let expected =
            -0.5 * quad - 0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet);
        assert!(
            (ll - expected).abs() < 1e-10,
            "case {}: cholesky {} vs direct {}",
            case, ll, expected
        );
    }
}

#[test]
fn map_with_tiny_noise_interpolates_observed_values() {
    let mut rng = seeded_rng(802);
    let landmarks = LandmarkSet::grid(5, &[[0.0, 1.0]]).unwrap();
    let kernel = RbfKernel::new(0.4, 1e-8).unwrap();
    let mut params = FunctionalDybmParams::zeros(landmarks, kernel, &[0.5], 2).unwrap();
    params.b = Array1::from_shape_fn(5, |_| rng.random_range(-0.3..0.3));
    let state = params.new_state().unwrap();
    let values = Array1::from_shape_fn(5, |_| rng.random_range(-1.0..1.0));
    let obs = ObservationSet {
        points: params.landmarks.points().to_vec(),
        values: values.clone(),
    };
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
fn online_learning_tracks_a_drifting_sinusoid() {
    let mut rng = seeded_rng(803);
    let landmarks = LandmarkSet::grid(8, &[[0.0, 1.0]]).unwrap();
    let kernel = RbfKernel::from_settings(
        &dybm_core::config::KernelSettings { bandwidth: None, noise: 0.01 },
        &landmarks,
    )
    .unwrap();
    let mut params = FunctionalDybmParams::zeros(landmarks, kernel, &[0.5], 2).unwrap();
    let mut state = params.new_state().unwrap();
    let mut nlls = Vec::new();
    for t in 0..800 {
        let points: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![(i as f64 + rng.random_range(0.0..1.0)) / 10.0])
            .collect();
        let values = Array1::from_shape_fn(10, |i| {
            (2.0 * std::f64::consts::PI * points[i][0] - 0.1 * t as f64).sin()
        });
        let obs = ObservationSet { points, values };
        let ll = train_step(&mut params, &mut state, &obs, 0.002).unwrap();
        nlls.push(-ll);
    }
    let early: f64 = nlls[..100].iter().sum::<f64>() / 100.0;
    let late: f64 = nlls[700..].iter().sum::<f64>() / 100.0;
    assert!(
        late < early - 1.0,
        "tracking failed to improve: early {} late {}",
        early, late
    );
}
