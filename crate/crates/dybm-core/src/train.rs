//! Online training loops shared by the CLI and the end-to-end tests. Each
//! walks the series once per epoch (predict, score, learn, advance) with
//! model state carried across epoch boundaries so periodic signals keep
//! their phase.

use ndarray::{Array1, Array2};

use crate::binary::{
    firing_probability, mean_activation, sgd_step_relaxed, step_log_likelihood, RelaxedDybmParams,
};
use crate::error::Result;
use crate::functional::{train_step, FunctionalDybmParams, ObservationSet};
use crate::gaussian::{
    esn_step, natural_step, predict_mean, sgd_step, step_log_density, EsnConfig,
    GaussianDybmParams,
};
use crate::hidden::{visible_drive, HiddenModel};
use crate::math::sigmoid_vec;
use crate::rng::Rng;
use crate::rtrbm::{hidden_mean_recursion, next_visible_probability, NegativePhase, RtrbmParams};
use crate::series::{binary_accuracy, nll_score, rmse, Metrics, TimeSeries};
use crate::traces::TraceState;

#[derive(Debug, Clone, Copy)]
pub struct LoopOptions {
    pub eta: f64,
    pub epochs: usize,
    /// Scale η by 1/√t, t counting steps across all epochs.
    pub eta_decay: bool,
    /// Stop after the first epoch whose accuracy reaches this level.
    pub stop_accuracy: Option<f64>,
}

impl LoopOptions {
    pub fn new(eta: f64, epochs: usize) -> Self {
        LoopOptions { eta, epochs, eta_decay: false, stop_accuracy: None }
    }
}

#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub metrics: Metrics,
}

fn step_eta(options: &LoopOptions, global_step: usize) -> f64 {
    if options.eta_decay {
        options.eta / (global_step as f64).sqrt()
    } else {
        options.eta
    }
}

fn stop_reached(options: &LoopOptions, metrics: &Metrics) -> bool {
    match (options.stop_accuracy, metrics.accuracy) {
        (Some(target), Some(reached)) => reached >= target,
        _ => false,
    }
}

pub fn train_binary(
    params: &mut RelaxedDybmParams,
    state: &mut TraceState,
    series: &TimeSeries,
    options: &LoopOptions,
) -> Result<Vec<EpochRecord>> {
    let mut records = Vec::new();
    let mut global_step = 0usize;
    for epoch in 0..options.epochs {
        let mut lls = Vec::with_capacity(series.len());
        let mut predicted = Array2::zeros(series.values.dim());
        for t in 0..series.len() {
            global_step += 1;
            let x = series.row(t);
            let p = firing_probability(&mean_activation(params, state)?);
            predicted.row_mut(t).assign(&p);
            lls.push(step_log_likelihood(params, state, &x)?);
            sgd_step_relaxed(params, state, &x, step_eta(options, global_step))?;
            state.step(&x.to_owned())?;
        }
        let metrics = Metrics {
            nll_per_step: nll_score(&lls)?,
            rmse: None,
            accuracy: Some(binary_accuracy(&predicted, &series.values)?),
        };
        records.push(EpochRecord { epoch, metrics });
        if stop_reached(options, &metrics) {
            break;
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianRule {
    Sgd,
    Natural,
}

pub fn train_gaussian(
    params: &mut GaussianDybmParams,
    state: &mut TraceState,
    mut esn: Option<&mut EsnConfig>,
    series: &TimeSeries,
    rule: GaussianRule,
    options: &LoopOptions,
) -> Result<Vec<EpochRecord>> {
    let mut records = Vec::new();
    let mut global_step = 0usize;
    for epoch in 0..options.epochs {
        let mut lls = Vec::with_capacity(series.len());
        let mut predicted = Array2::zeros(series.values.dim());
        for t in 0..series.len() {
            global_step += 1;
            let x = series.row(t);
            predicted.row_mut(t).assign(&predict_mean(params, state, esn.as_deref())?);
            lls.push(step_log_density(params, state, esn.as_deref(), &x)?);
            let eta = step_eta(options, global_step);
            match rule {
                GaussianRule::Sgd => sgd_step(params, state, esn.as_deref_mut(), &x, eta)?,
                GaussianRule::Natural => {
                    natural_step(params, state, esn.as_deref_mut(), &x, eta)?
                }
            }
            if let Some(esn) = esn.as_deref_mut() {
                esn_step(esn, &x)?;
            }
            state.step(&x.to_owned())?;
        }
        let metrics = Metrics {
            nll_per_step: nll_score(&lls)?,
            rmse: Some(rmse(&predicted, &series.values)?),
            accuracy: None,
        };
        records.push(EpochRecord { epoch, metrics });
        if stop_reached(options, &metrics) {
            break;
        }
    }
    Ok(records)
}

pub fn train_functional(
    params: &mut FunctionalDybmParams,
    state: &mut TraceState,
    steps: &[ObservationSet],
    options: &LoopOptions,
) -> Result<Vec<EpochRecord>> {
    let mut records = Vec::new();
    let mut global_step = 0usize;
    for epoch in 0..options.epochs {
        let mut lls = Vec::with_capacity(steps.len());
        for obs in steps {
            global_step += 1;
            lls.push(train_step(params, state, obs, step_eta(options, global_step))?);
        }
        let metrics =
            Metrics { nll_per_step: nll_score(&lls)?, rmse: None, accuracy: None };
        records.push(EpochRecord { epoch, metrics });
        if stop_reached(options, &metrics) {
            break;
        }
    }
    Ok(records)
}

pub fn train_hidden(
    model: &mut HiddenModel,
    series: &TimeSeries,
    options: &LoopOptions,
    rng: &mut Rng,
) -> Result<Vec<EpochRecord>> {
    let mut records = Vec::new();
    let mut global_step = 0usize;
    for epoch in 0..options.epochs {
        let mut lls = Vec::with_capacity(series.len());
        let mut predicted = Array2::zeros(series.values.dim());
        for t in 0..series.len() {
            global_step += 1;
            let snap = model.state.snapshot();
            predicted
                .row_mut(t)
                .assign(&sigmoid_vec(&visible_drive(&model.params, &snap)));
            let outcome =
                model.step_train(&series.row(t), step_eta(options, global_step), rng)?;
            lls.push(outcome.log_likelihood);
        }
        let metrics = Metrics {
            nll_per_step: nll_score(&lls)?,
            rmse: None,
            accuracy: Some(binary_accuracy(&predicted, &series.values)?),
        };
        records.push(EpochRecord { epoch, metrics });
        if stop_reached(options, &metrics) {
            break;
        }
    }
    Ok(records)
}

pub fn train_rtrbm(
    params: &mut RtrbmParams,
    series: &TimeSeries,
    phase: NegativePhase,
    options: &LoopOptions,
    rng: &mut Rng,
) -> Result<Vec<EpochRecord>> {
    let xs: Vec<Array1<f64>> = (0..series.len()).map(|t| series.row(t).to_owned()).collect();
    let mut records = Vec::new();
    for epoch in 0..options.epochs {
        let score =
            crate::rtrbm::train_epoch(params, &xs, step_eta(options, epoch + 1), phase, rng)?;
        let rs = hidden_mean_recursion(params, &xs);
        let mut predicted = Array2::zeros(series.values.dim());
        for t in 0..series.len() {
            let r_prev = if t == 0 { None } else { Some(&rs[t - 1]) };
            predicted.row_mut(t).assign(&next_visible_probability(params, r_prev)?);
        }
        let metrics = Metrics {
            nll_per_step: score,
            rmse: None,
            accuracy: Some(binary_accuracy(&predicted, &series.values)?),
        };
        records.push(EpochRecord { epoch, metrics });
        if stop_reached(options, &metrics) {
            break;
        }
    }
    Ok(records)
}

/// Mean-field scoring pass for the hidden model (no learning): hidden units
/// advance at conditional means, so the trace is deterministic.
pub fn score_hidden(model: &HiddenModel, series: &TimeSeries) -> Result<Vec<f64>> {
    let mut model = model.clone();
    (0..series.len()).map(|t| model.step_score(&series.row(t))).collect()
}
