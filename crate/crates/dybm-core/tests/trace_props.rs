//! Property tests for the trace recursions against their closed forms and
//! bounds. The closed-form oracle replays the stored pattern history as an
//! explicit discounted sum, never touching the recursion under test.

mod common;

use dybm_core::series::nll_score;
use dybm_core::traces::TraceState;
use ndarray::Array1;
use proptest::prelude::*;

/// α after stepping x[0..k]: Σ_{j ≤ k−d} λ^{k−d−j} x[j] (delivered patterns
/// only, newest with weight 1). γ: Σ_{j ≤ k−1} μ^{k−j} x[j].
fn closed_form_alpha(history: &[Vec<f64>], lambda: f64, delay: usize, n: usize) -> Array1<f64> {
    let k = history.len();
    let mut alpha = Array1::zeros(n);
    if k < delay {
        return alpha;
    }
    for (j, pattern) in history.iter().take(k - delay + 1).enumerate() {
        let weight = lambda.powi((k - delay - j) as i32);
        for i in 0..n {
            alpha[i] += weight * pattern[i];
        }
    }
    alpha
}

fn closed_form_gamma(history: &[Vec<f64>], mu: f64, n: usize) -> Array1<f64> {
    let k = history.len();
    let mut gamma = Array1::zeros(n);
    for (j, pattern) in history.iter().enumerate() {
        let weight = mu.powi((k - j) as i32);
        for i in 0..n {
            gamma[i] += weight * pattern[i];
        }
    }
    gamma
}

proptest! {
    #[test]
    fn recursive_traces_match_closed_form(
        history in prop::collection::vec(prop::collection::vec(prop::bool::ANY, 3), 1..80),
        lambda in 0.0f64..0.99,
        mu in 0.0f64..0.99,
        delay in 1usize..5,
    ) {
        let n = 3;
        let patterns: Vec<Vec<f64>> = history
            .iter()
            .map(|row| row.iter().map(|&b| f64::from(b)).collect())
            .collect();
        let mut state = TraceState::new(n, &[lambda], mu, delay).unwrap();
        for p in &patterns {
            state.step(&Array1::from_vec(p.clone())).unwrap();
        }
        let alpha = closed_form_alpha(&patterns, lambda, delay, n);
        let gamma = closed_form_gamma(&patterns, mu, n);
        for i in 0..n {
            prop_assert!((state.alpha[[0, i]] - alpha[i]).abs() < 1e-12);
            prop_assert!((state.gamma[i] - gamma[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn traces_are_bounded_for_binary_inputs(
        history in prop::collection::vec(prop::collection::vec(prop::bool::ANY, 2), 1..200),
        lambda in 0.0f64..0.99,
        mu in 0.0f64..0.99,
        delay in 1usize..4,
    ) {
        let n = 2;
        let mut state = TraceState::new(n, &[lambda], mu, delay).unwrap();
        for row in &history {
            let p = Array1::from_iter(row.iter().map(|&b| f64::from(b)));
            state.step(&p).unwrap();
            for i in 0..n {
                // Geometric-series ceilings: α ≤ Σ λ^k = 1/(1−λ), γ ≤ μ/(1−μ).
                prop_assert!(state.alpha[[0, i]] <= 1.0 / (1.0 - lambda) + 1e-12);
                prop_assert!(state.alpha[[0, i]] >= 0.0);
                prop_assert!(state.gamma[i] <= mu / (1.0 - mu) + 1e-12);
                prop_assert!(state.gamma[i] >= 0.0);
            }
        }
    }

    #[test]
    fn nll_is_permutation_invariant(
        lls in prop::collection::vec(-10.0f64..0.0, 1..40),
        rotate in 0usize..40,
    ) {
        let mut shuffled = lls.clone();
        shuffled.rotate_left(rotate % lls.len());
        let a = nll_score(&lls).unwrap();
        let b = nll_score(&shuffled).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
