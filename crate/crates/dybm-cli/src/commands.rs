use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use dybm_core::bench::{early_late_ratio, ols_slope, time_binary_training, time_rtrbm_online_bptt};
use dybm_core::binary::{self, RelaxedDybmParams};
use dybm_core::checkpoint::{
    self, BinaryModelCheckpoint, Checkpoint, FunctionalModelCheckpoint, GaussianModelCheckpoint,
    HiddenModelCheckpoint, ModelCheckpoint, RtrbmModelCheckpoint,
};
use dybm_core::config::TrainConfig;
use dybm_core::error::{DybmError, Result};
use dybm_core::functional::{
    self, load_observation_csv, FunctionalDybmParams, LandmarkSet, RbfKernel,
};
use dybm_core::gaussian::{self, EsnConfig, GaussianDybmParams};
use dybm_core::hidden::{HiddenDybmParams, HiddenModel, PhiMode};
use dybm_core::rng::{stream, substream};
use dybm_core::rtrbm::{self, hidden_mean_recursion, NegativePhase, RtrbmParams};
use dybm_core::series::{load_csv, write_csv, SeriesKind, TimeSeries};
use dybm_core::traces::TraceState;
use dybm_core::train::{
    score_hidden, train_binary, train_gaussian, train_functional, train_hidden, train_rtrbm,
    EpochRecord, GaussianRule, LoopOptions,
};

use crate::{BenchArgs, ForecastArgs, ModelKind, SampleArgs, ScoreArgs, TrainArgs};

fn load_config(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<usize>,
) -> Result<TrainConfig> {
    let mut config = match path {
        Some(p) => TrainConfig::from_json_file(p)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(epochs) = epochs {
        config.epochs = epochs;
    }
    Ok(config)
}

fn series_kind(kind: ModelKind) -> SeriesKind {
    match kind {
        ModelKind::DybmBinary | ModelKind::DybmHidden | ModelKind::Rtrbm => SeriesKind::Binary,
        _ => SeriesKind::Real,
    }
}

fn load_checkpoint_for(kind: ModelKind, path: &Path) -> Result<Checkpoint> {
    let cp = checkpoint::load(path)?;
    if cp.model.kind_name() != kind.name() {
        return Err(DybmError::Input(format!(
            "checkpoint holds a {} model, not {}",
            cp.model.kind_name(),
            kind.name()
        )));
    }
    Ok(cp)
}

fn write_rows(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 24 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn series_rows(series: &TimeSeries) -> Vec<Array1<f64>> {
    (0..series.len()).map(|t| series.row(t).to_owned()).collect()
}

fn check_width(expected: usize, found: usize, what: &str) -> Result<()> {
    if expected != found {
        return Err(DybmError::Input(format!(
            "{} has {} columns, model expects {}",
            what, found, expected
        )));
    }
    Ok(())
}

/// The ESN kind trains with the natural rule: the raw rule scales mean
/// updates by 1/sigma^2 and turns unstable once the fit tightens, which the
/// reservoir's many features only amplify.
fn gaussian_rule(kind: ModelKind) -> GaussianRule {
    match kind {
        ModelKind::DybmGaussian => GaussianRule::Sgd,
        _ => GaussianRule::Natural,
    }
}

fn hidden_mode(config: &TrainConfig) -> PhiMode {
    if config.exact_phi {
        PhiMode::Exact
    } else {
        PhiMode::Discounted(config.discount)
    }
}

fn negative_phase(config: &TrainConfig) -> NegativePhase {
    if config.exact_negative {
        NegativePhase::Exact
    } else {
        NegativePhase::Cd(config.cd_steps)
    }
}

/// Gaussian-family checkpoints share one layout; the reservoir section must
/// match what the named kind trains with.
fn build_gaussian(
    kind: ModelKind,
    section: &GaussianModelCheckpoint,
) -> Result<(GaussianDybmParams, TraceState, Option<EsnConfig>)> {
    let (params, state, esn) = section.build()?;
    match kind {
        ModelKind::DybmEsn if esn.is_none() => Err(DybmError::Checkpoint(
            "dybm-esn checkpoint is missing its reservoir section".into(),
        )),
        ModelKind::DybmGaussian | ModelKind::DybmGaussianNatural if esn.is_some() => {
            Err(DybmError::Checkpoint(format!(
                "{} checkpoint must not carry a reservoir section",
                kind.name()
            )))
        }
        _ => Ok((params, state, esn)),
    }
}

fn gaussian_variant(kind: ModelKind, section: GaussianModelCheckpoint) -> ModelCheckpoint {
    match kind {
        ModelKind::DybmGaussianNatural => ModelCheckpoint::GaussianNatural(section),
        ModelKind::DybmEsn => ModelCheckpoint::Esn(section),
        _ => ModelCheckpoint::Gaussian(section),
    }
}

fn metrics_header(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::DybmBinary | ModelKind::DybmHidden | ModelKind::Rtrbm => {
            "epoch,nll_per_step,accuracy"
        }
        ModelKind::DybmFunctional => "epoch,nll_per_step",
        _ => "epoch,nll_per_step,rmse",
    }
}

fn metrics_rows(kind: ModelKind, records: &[EpochRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| match kind {
            ModelKind::DybmBinary | ModelKind::DybmHidden | ModelKind::Rtrbm => format!(
                "{},{},{}",
                r.epoch,
                r.metrics.nll_per_step,
                r.metrics.accuracy.unwrap_or(f64::NAN)
            ),
            ModelKind::DybmFunctional => format!("{},{}", r.epoch, r.metrics.nll_per_step),
            _ => format!(
                "{},{},{}",
                r.epoch,
                r.metrics.nll_per_step,
                r.metrics.rmse.unwrap_or(f64::NAN)
            ),
        })
        .collect()
}

fn first_decay(config: &TrainConfig) -> Result<f64> {
    config
        .decay_rates
        .first()
        .copied()
        .ok_or_else(|| DybmError::Config("decay_rates must not be empty".into()))
}

pub fn train(args: TrainArgs) -> Result<()> {
    let config = load_config(&args.config, args.seed, args.epochs)?;
    let options = LoopOptions {
        eta: config.learning_rate,
        epochs: config.epochs,
        eta_decay: config.eta_decay,
        stop_accuracy: None,
    };
    if args.model == ModelKind::DybmFunctional {
        return train_functional_series(&args, &config, &options);
    }

    let series = load_csv(&args.data, series_kind(args.model))?;
    let resume = match &args.checkpoint_in {
        Some(path) => {
            let cp = load_checkpoint_for(args.model, path)?;
            if cp.column_names != series.names {
                return Err(DybmError::Input(format!(
                    "checkpoint columns {:?} do not match data columns {:?}",
                    cp.column_names, series.names
                )));
            }
            Some(cp.model)
        }
        None => None,
    };
    let mut init_rng = substream(config.seed, stream::INIT);
    let mut train_rng = substream(config.seed, stream::TRAIN);
    let n = series.dim();

    let (records, model_section) = match args.model {
        ModelKind::DybmBinary => {
            let (mut params, mut state) = match resume {
                Some(ModelCheckpoint::Binary(section)) => section.build()?,
                Some(_) => unreachable!("kind checked at load"),
                None => {
                    let params = RelaxedDybmParams::init(
                        n,
                        &config.decay_rates,
                        config.delay,
                        &mut init_rng,
                    );
                    let state = params.new_state()?;
                    (params, state)
                }
            };
            check_width(params.dim(), n, "series")?;
            let records = train_binary(&mut params, &mut state, &series, &options)?;
            let section = BinaryModelCheckpoint::capture(&params, &state);
            (records, ModelCheckpoint::Binary(section))
        }
        ModelKind::DybmGaussian | ModelKind::DybmGaussianNatural | ModelKind::DybmEsn => {
            let (mut params, mut state, mut esn) = match resume {
                Some(ModelCheckpoint::Gaussian(section))
                | Some(ModelCheckpoint::GaussianNatural(section))
                | Some(ModelCheckpoint::Esn(section)) => build_gaussian(args.model, &section)?,
                Some(_) => unreachable!("kind checked at load"),
                None => {
                    let params = GaussianDybmParams::init(
                        n,
                        &config.decay_rates,
                        config.delay,
                        config.sigma_init,
                        &mut init_rng,
                    );
                    let state = params.new_state()?;
                    let esn = if args.model == ModelKind::DybmEsn {
                        Some(EsnConfig::new(n, &config.esn, &mut init_rng)?)
                    } else {
                        None
                    };
                    (params, state, esn)
                }
            };
            check_width(params.dim(), n, "series")?;
            let records = train_gaussian(
                &mut params,
                &mut state,
                esn.as_mut(),
                &series,
                gaussian_rule(args.model),
                &options,
            )?;
            let section = GaussianModelCheckpoint::capture(&params, &state, esn.as_ref());
            (records, gaussian_variant(args.model, section))
        }
        ModelKind::DybmHidden => {
            let mut model = match resume {
                Some(ModelCheckpoint::Hidden(section)) => section.build(hidden_mode(&config))?,
                Some(_) => unreachable!("kind checked at load"),
                None => {
                    let params = HiddenDybmParams::init(
                        n,
                        config.hidden_units,
                        first_decay(&config)?,
                        config.delay,
                        &mut init_rng,
                    )?;
                    HiddenModel::new(params, hidden_mode(&config))?
                }
            };
            check_width(model.params.visible_units(), n, "series")?;
            let records = train_hidden(&mut model, &series, &options, &mut train_rng)?;
            let section = HiddenModelCheckpoint::capture(&model);
            (records, ModelCheckpoint::Hidden(section))
        }
        ModelKind::Rtrbm => {
            let mut params = match resume {
                Some(ModelCheckpoint::Rtrbm(section)) => section.build()?,
                Some(_) => unreachable!("kind checked at load"),
                None => RtrbmParams::init(n, config.hidden_units, &mut init_rng),
            };
            check_width(params.visible_units(), n, "series")?;
            let records = train_rtrbm(
                &mut params,
                &series,
                negative_phase(&config),
                &options,
                &mut train_rng,
            )?;
            let section = RtrbmModelCheckpoint::capture(&params);
            (records, ModelCheckpoint::Rtrbm(section))
        }
        ModelKind::DybmFunctional => unreachable!("handled above"),
    };

    if let Some(path) = &args.out {
        write_rows(path, metrics_header(args.model), &metrics_rows(args.model, &records))?;
    }
    if let Some(path) = &args.checkpoint_out {
        checkpoint::save(path, &Checkpoint::new(series.names.clone(), model_section))?;
    }
    Ok(())
}

fn functional_fresh(
    config: &TrainConfig,
) -> Result<(FunctionalDybmParams, TraceState)> {
    let landmarks = match &config.landmarks {
        Some(points) => LandmarkSet::new(points.clone())?,
        None => LandmarkSet::grid(config.landmark_count, &config.domain)?,
    };
    let kernel = RbfKernel::from_settings(&config.kernel, &landmarks)?;
    let params =
        FunctionalDybmParams::zeros(landmarks, kernel, &config.decay_rates, config.delay)?;
    let state = params.new_state()?;
    Ok((params, state))
}

fn landmark_names(count: usize) -> Vec<String> {
    (0..count).map(|i| format!("g{}", i)).collect()
}

fn train_functional_series(
    args: &TrainArgs,
    config: &TrainConfig,
    options: &LoopOptions,
) -> Result<()> {
    let steps = load_observation_csv(&args.data)?;
    let (mut params, mut state) = match &args.checkpoint_in {
        Some(path) => {
            let cp = load_checkpoint_for(args.model, path)?;
            match cp.model {
                ModelCheckpoint::Functional(section) => section.build()?,
                _ => unreachable!("kind checked at load"),
            }
        }
        None => functional_fresh(config)?,
    };
    let records = train_functional(&mut params, &mut state, &steps, options)?;
    if let Some(path) = &args.out {
        write_rows(path, metrics_header(args.model), &metrics_rows(args.model, &records))?;
    }
    if let Some(path) = &args.checkpoint_out {
        let section = FunctionalModelCheckpoint::capture(&params, &state);
        let cp = Checkpoint::new(
            landmark_names(params.landmark_count()),
            ModelCheckpoint::Functional(section),
        );
        checkpoint::save(path, &cp)?;
    }
    Ok(())
}

fn positive_horizon(raw: i64) -> Result<usize> {
    if raw < 1 {
        return Err(DybmError::Input(format!("horizon must be at least 1, got {}", raw)));
    }
    Ok(raw as usize)
}

pub fn forecast(args: ForecastArgs) -> Result<()> {
    let horizon = positive_horizon(args.horizon)?;
    let cp = load_checkpoint_for(args.model, &args.checkpoint_in)?;
    let names = cp.column_names.clone();

    let values: Array2<f64> = match (args.model, cp.model) {
        (ModelKind::DybmBinary, ModelCheckpoint::Binary(section)) => {
            let (params, mut state) = section.build()?;
            if let Some(path) = &args.data {
                let context = load_csv(path, SeriesKind::Binary)?;
                check_width(params.dim(), context.dim(), "context series")?;
                for t in 0..context.len() {
                    state.step(&context.row(t).to_owned())?;
                }
            }
            binary::forecast(&params, &state, horizon)?
        }
        (
            ModelKind::DybmGaussian | ModelKind::DybmGaussianNatural | ModelKind::DybmEsn,
            ModelCheckpoint::Gaussian(section)
            | ModelCheckpoint::GaussianNatural(section)
            | ModelCheckpoint::Esn(section),
        ) => {
            let (params, mut state, mut esn) = build_gaussian(args.model, &section)?;
            if let Some(path) = &args.data {
                let context = load_csv(path, SeriesKind::Real)?;
                check_width(params.dim(), context.dim(), "context series")?;
                for t in 0..context.len() {
                    if let Some(esn) = esn.as_mut() {
                        gaussian::esn_step(esn, &context.row(t))?;
                    }
                    state.step(&context.row(t).to_owned())?;
                }
            }
            gaussian::forecast(&params, &state, esn.as_ref(), horizon)?
        }
        (ModelKind::DybmFunctional, ModelCheckpoint::Functional(section)) => {
            let (params, mut state) = section.build()?;
            if let Some(path) = &args.data {
                for obs in &load_observation_csv(path)? {
                    let g_hat = functional::map_estimate(&params, &state, obs)?;
                    state.step(&g_hat)?;
                }
            }
            functional::forecast(&params, &state, horizon)?
        }
        (ModelKind::DybmHidden, ModelCheckpoint::Hidden(section)) => {
            // The φ estimator mode only matters during training.
            let mut model = section.build(PhiMode::Discounted(0.0))?;
            if let Some(path) = &args.data {
                let context = load_csv(path, SeriesKind::Binary)?;
                check_width(model.params.visible_units(), context.dim(), "context series")?;
                for t in 0..context.len() {
                    model.step_score(&context.row(t))?;
                }
            }
            model.forecast(horizon)?
        }
        (ModelKind::Rtrbm, ModelCheckpoint::Rtrbm(section)) => {
            let params = section.build()?;
            let r_prev = match &args.data {
                Some(path) => {
                    let context = load_csv(path, SeriesKind::Binary)?;
                    check_width(params.visible_units(), context.dim(), "context series")?;
                    hidden_mean_recursion(&params, &series_rows(&context)).pop()
                }
                None => None,
            };
            rtrbm::forecast(&params, r_prev.as_ref(), horizon)?
        }
        _ => unreachable!("kind checked at load"),
    };

    let out = TimeSeries::new(values, SeriesKind::Real, names)?;
    write_csv(&args.out, &out)
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let cp = load_checkpoint_for(args.model, &args.checkpoint_in)?;
    let mut header = "t,nll_per_step";

    let nlls: Vec<f64> = match (args.model, cp.model) {
        (ModelKind::DybmBinary, ModelCheckpoint::Binary(section)) => {
            let (params, mut state) = section.build()?;
            let series = load_csv(&args.data, SeriesKind::Binary)?;
            check_width(params.dim(), series.dim(), "series")?;
            let mut nlls = Vec::with_capacity(series.len());
            for t in 0..series.len() {
                nlls.push(-binary::step_log_likelihood(&params, &state, &series.row(t))?);
                state.step(&series.row(t).to_owned())?;
            }
            nlls
        }
        (
            ModelKind::DybmGaussian | ModelKind::DybmGaussianNatural | ModelKind::DybmEsn,
            ModelCheckpoint::Gaussian(section)
            | ModelCheckpoint::GaussianNatural(section)
            | ModelCheckpoint::Esn(section),
        ) => {
            let (params, mut state, mut esn) = build_gaussian(args.model, &section)?;
            let series = load_csv(&args.data, SeriesKind::Real)?;
            check_width(params.dim(), series.dim(), "series")?;
            let mut nlls = Vec::with_capacity(series.len());
            for t in 0..series.len() {
                nlls.push(-gaussian::step_log_density(
                    &params,
                    &state,
                    esn.as_ref(),
                    &series.row(t),
                )?);
                if let Some(esn) = esn.as_mut() {
                    gaussian::esn_step(esn, &series.row(t))?;
                }
                state.step(&series.row(t).to_owned())?;
            }
            nlls
        }
        (ModelKind::DybmFunctional, ModelCheckpoint::Functional(section)) => {
            let (params, mut state) = section.build()?;
            let steps = load_observation_csv(&args.data)?;
            let mut nlls = Vec::with_capacity(steps.len());
            for obs in &steps {
                nlls.push(-functional::step_log_density(&params, &state, obs)?);
                let g_hat = functional::map_estimate(&params, &state, obs)?;
                state.step(&g_hat)?;
            }
            nlls
        }
        (ModelKind::DybmHidden, ModelCheckpoint::Hidden(section)) => {
            let model = section.build(PhiMode::Discounted(0.0))?;
            let series = load_csv(&args.data, SeriesKind::Binary)?;
            check_width(model.params.visible_units(), series.dim(), "series")?;
            score_hidden(&model, &series)?.into_iter().map(|ll| -ll).collect()
        }
        (ModelKind::Rtrbm, ModelCheckpoint::Rtrbm(section)) => {
            let params = section.build()?;
            let series = load_csv(&args.data, SeriesKind::Binary)?;
            check_width(params.visible_units(), series.dim(), "series")?;
            let xs = series_rows(&series);
            let rs = hidden_mean_recursion(&params, &xs);
            let exact = params.visible_units() <= rtrbm::MAX_SCORING_UNITS;
            if !exact {
                header = "t,free_energy";
            }
            let mut nlls = Vec::with_capacity(xs.len());
            for (t, x) in xs.iter().enumerate() {
                let r_prev = if t == 0 { None } else { Some(&rs[t - 1]) };
                nlls.push(if exact {
                    -rtrbm::conditional_visible_logprob(&params, r_prev, &x.view())?
                } else {
                    rtrbm::free_energy(&params, r_prev, &x.view())
                });
            }
            nlls
        }
        _ => unreachable!("kind checked at load"),
    };

    let rows: Vec<String> =
        nlls.iter().enumerate().map(|(t, v)| format!("{},{}", t, v)).collect();
    write_rows(&args.out, header, &rows)
}

pub fn sample(args: SampleArgs) -> Result<()> {
    let steps = positive_horizon(args.horizon)?;
    let config = load_config(&args.config, None, None)?;
    let cp = load_checkpoint_for(args.model, &args.checkpoint_in)?;
    let names = cp.column_names.clone();
    let mut rng = substream(args.seed, stream::SAMPLE);

    let (values, kind): (Array2<f64>, SeriesKind) = match (args.model, cp.model) {
        (ModelKind::DybmBinary, ModelCheckpoint::Binary(section)) => {
            let (params, mut state) = section.build()?;
            let mut values = Array2::zeros((steps, params.dim()));
            for t in 0..steps {
                values
                    .row_mut(t)
                    .assign(&binary::sample_step(&params, &mut state, &mut rng)?);
            }
            (values, SeriesKind::Binary)
        }
        (
            ModelKind::DybmGaussian | ModelKind::DybmGaussianNatural | ModelKind::DybmEsn,
            ModelCheckpoint::Gaussian(section)
            | ModelCheckpoint::GaussianNatural(section)
            | ModelCheckpoint::Esn(section),
        ) => {
            let (params, mut state, mut esn) = build_gaussian(args.model, &section)?;
            let mut values = Array2::zeros((steps, params.dim()));
            for t in 0..steps {
                values.row_mut(t).assign(&gaussian::sample_step(
                    &params,
                    &mut state,
                    esn.as_mut(),
                    &mut rng,
                )?);
            }
            (values, SeriesKind::Real)
        }
        (ModelKind::DybmFunctional, ModelCheckpoint::Functional(section)) => {
            let (params, mut state) = section.build()?;
            let mut values = Array2::zeros((steps, params.landmark_count()));
            for t in 0..steps {
                values
                    .row_mut(t)
                    .assign(&functional::sample_step(&params, &mut state, &mut rng)?);
            }
            (values, SeriesKind::Real)
        }
        (ModelKind::DybmHidden, ModelCheckpoint::Hidden(section)) => {
            let mut model = section.build(PhiMode::Discounted(0.0))?;
            let mut values = Array2::zeros((steps, model.params.visible_units()));
            for t in 0..steps {
                values.row_mut(t).assign(&model.sample_step(&mut rng)?);
            }
            (values, SeriesKind::Binary)
        }
        (ModelKind::Rtrbm, ModelCheckpoint::Rtrbm(section)) => {
            let params = section.build()?;
            (
                rtrbm::sample_sequence(&params, steps, config.cd_steps, &mut rng)?,
                SeriesKind::Binary,
            )
        }
        _ => unreachable!("kind checked at load"),
    };

    let out = TimeSeries::new(values, kind, names)?;
    write_csv(&args.out, &out)
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let config = load_config(&args.config, args.seed, None)?;
    let default_units = match args.model {
        ModelKind::DybmBinary => 20,
        ModelKind::Rtrbm => 10,
        other => {
            return Err(DybmError::Input(format!(
                "bench supports dybm-binary and rtrbm, not {}",
                other.name()
            )))
        }
    };
    let xs: Vec<Array1<f64>> = match &args.data {
        Some(path) => series_rows(&load_csv(path, SeriesKind::Binary)?),
        None => {
            let mut rng = substream(config.seed, stream::DATA);
            use rand::Rng as _;
            (0..1000)
                .map(|_| {
                    Array1::from_shape_fn(default_units, |_| f64::from(rng.random::<bool>()))
                })
                .collect()
        }
    };
    let n = xs[0].len();
    let mut init_rng = substream(config.seed, stream::INIT);
    let mut train_rng = substream(config.seed, stream::TRAIN);

    let times = match args.model {
        ModelKind::DybmBinary => {
            let mut params =
                RelaxedDybmParams::init(n, &config.decay_rates, config.delay, &mut init_rng);
            let mut state = params.new_state()?;
            time_binary_training(&mut params, &mut state, &xs, config.learning_rate, 100)?
        }
        _ => {
            let mut params = RtrbmParams::init(n, config.hidden_units, &mut init_rng);
            time_rtrbm_online_bptt(
                &mut params,
                &xs,
                config.learning_rate,
                negative_phase(&config),
                10,
                &mut train_rng,
            )?
        }
    };

    let rows: Vec<String> =
        times.iter().enumerate().map(|(t, v)| format!("{},{}", t, v)).collect();
    write_rows(&args.out, "t,step_wall_time_ns", &rows)?;

    let stat = ols_slope(&times)?;
    let window = (times.len() / 2).min(100);
    let ratio = early_late_ratio(&times, window)?;
    println!("model={} steps={} units={}", args.model.name(), times.len(), n);
    println!("slope_ns_per_step={}", stat.slope);
    println!("slope_std_error={}", stat.std_error);
    println!("t_stat={}", stat.t_stat);
    println!("p_value={}", stat.p_value);
    println!("early_late_ratio={} window={}", ratio, window);
    Ok(())
}
