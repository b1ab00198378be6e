//! JSON snapshots of every model kind: parameters plus the online state
//! needed to resume a stream mid-flight. One writer path produces canonical
//! bytes, so save → load → save is byte-identical.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::binary::RelaxedDybmParams;
use crate::error::{DybmError, Result};
use crate::functional::{FunctionalDybmParams, LandmarkSet, RbfKernel};
use crate::gaussian::{EsnConfig, GaussianDybmParams};
use crate::hidden::{
    HiddenDybmParams, HiddenModel, HiddenTraceState, PhiBlocks, PhiMode, PhiStepRecord,
    TraceSnapshot,
};
use crate::rtrbm::RtrbmParams;
use crate::traces::{FifoQueue, TraceState};

pub const FORMAT_VERSION: u32 = 1;

type Matrix = Vec<Vec<f64>>;

fn mat(m: &Array2<f64>) -> Matrix {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn unmat(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<Array2<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(DybmError::Checkpoint(format!(
            "{} must be {}x{}",
            what, nrows, ncols
        )));
    }
    Ok(Array2::from_shape_fn((nrows, ncols), |(i, j)| rows[i][j]))
}

fn vec1(v: &Array1<f64>) -> Vec<f64> {
    v.to_vec()
}

fn unvec(v: &[f64], n: usize, what: &str) -> Result<Array1<f64>> {
    if v.len() != n {
        return Err(DybmError::Checkpoint(format!("{} must have {} entries", what, n)));
    }
    Ok(Array1::from_vec(v.to_vec()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStateCheckpoint {
    pub alpha: Matrix,
    pub gamma: Vec<f64>,
    /// In-transit patterns, oldest first.
    pub queue: Vec<Vec<f64>>,
    pub mu: f64,
}

impl TraceStateCheckpoint {
    fn capture(state: &TraceState) -> Self {
        TraceStateCheckpoint {
            alpha: mat(&state.alpha),
            gamma: vec1(&state.gamma),
            queue: state.fifo.rows().iter().map(vec1).collect(),
            mu: state.mu,
        }
    }

    fn build(&self, dim: usize, decay_rates: &[f64], delay: usize) -> Result<TraceState> {
        let rows = self
            .queue
            .iter()
            .map(|r| unvec(r, dim, "queue row"))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceState {
            alpha: unmat(&self.alpha, decay_rates.len(), dim, "alpha")?,
            gamma: unvec(&self.gamma, dim, "gamma")?,
            fifo: FifoQueue::from_rows(dim, delay, rows)?,
            decay_rates: decay_rates.to_vec(),
            mu: self.mu,
            delay,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryModelCheckpoint {
    pub bias: Vec<f64>,
    pub lag_weights: Vec<Matrix>,
    pub trace_weights: Vec<Matrix>,
    pub decay_rates: Vec<f64>,
    pub delay: usize,
    pub state: TraceStateCheckpoint,
}

impl BinaryModelCheckpoint {
    pub fn capture(params: &RelaxedDybmParams, state: &TraceState) -> Self {
        BinaryModelCheckpoint {
            bias: vec1(&params.b),
            lag_weights: params.w.iter().map(mat).collect(),
            trace_weights: params.u.iter().map(mat).collect(),
            decay_rates: params.decay_rates.clone(),
            delay: params.delay,
            state: TraceStateCheckpoint::capture(state),
        }
    }

    pub fn build(&self) -> Result<(RelaxedDybmParams, TraceState)> {
        let n = self.bias.len();
        if self.delay < 1 {
            return Err(DybmError::Checkpoint("delay must be at least 1".into()));
        }
        if self.lag_weights.len() != self.delay - 1 {
            return Err(DybmError::Checkpoint(format!(
                "delay {} requires {} lag blocks, found {}",
                self.delay,
                self.delay - 1,
                self.lag_weights.len()
            )));
        }
        if self.trace_weights.len() != self.decay_rates.len() {
            return Err(DybmError::Checkpoint(format!(
                "{} decay rates but {} trace blocks",
                self.decay_rates.len(),
                self.trace_weights.len()
            )));
        }
        let mut params = RelaxedDybmParams::zeros(n, &self.decay_rates, self.delay);
        params.b = unvec(&self.bias, n, "bias")?;
        for (k, block) in self.lag_weights.iter().enumerate() {
            params.w[k] = unmat(block, n, n, "lag block")?;
        }
        for (k, block) in self.trace_weights.iter().enumerate() {
            params.u[k] = unmat(block, n, n, "trace block")?;
        }
        let state = self.state.build(n, &self.decay_rates, self.delay)?;
        Ok((params, state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsnCheckpoint {
    pub w_rec: Matrix,
    pub w_in: Matrix,
    pub leak: f64,
    pub state: Vec<f64>,
    pub readout: Matrix,
}

impl EsnCheckpoint {
    fn capture(esn: &EsnConfig) -> Self {
        EsnCheckpoint {
            w_rec: mat(&esn.w_rec),
            w_in: mat(&esn.w_in),
            leak: esn.leak,
            state: vec1(&esn.state),
            readout: mat(&esn.readout),
        }
    }

    fn build(&self, n: usize) -> Result<EsnConfig> {
        let m = self.w_rec.len();
        Ok(EsnConfig {
            w_rec: unmat(&self.w_rec, m, m, "w_rec")?,
            w_in: unmat(&self.w_in, m, n, "w_in")?,
            leak: self.leak,
            state: unvec(&self.state, m, "reservoir state")?,
            readout: unmat(&self.readout, m, n, "readout")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianModelCheckpoint {
    pub bias: Vec<f64>,
    pub lag_weights: Vec<Matrix>,
    pub trace_weights: Vec<Matrix>,
    pub decay_rates: Vec<f64>,
    pub delay: usize,
    pub sigma: Vec<f64>,
    pub state: TraceStateCheckpoint,
    pub esn: Option<EsnCheckpoint>,
}

impl GaussianModelCheckpoint {
    pub fn capture(
        params: &GaussianDybmParams,
        state: &TraceState,
        esn: Option<&EsnConfig>,
    ) -> Self {
        GaussianModelCheckpoint {
            bias: vec1(&params.core.b),
            lag_weights: params.core.w.iter().map(mat).collect(),
            trace_weights: params.core.u.iter().map(mat).collect(),
            decay_rates: params.core.decay_rates.clone(),
            delay: params.core.delay,
            sigma: vec1(&params.sigma),
            state: TraceStateCheckpoint::capture(state),
            esn: esn.map(EsnCheckpoint::capture),
        }
    }

    pub fn build(&self) -> Result<(GaussianDybmParams, TraceState, Option<EsnConfig>)> {
        let shell = BinaryModelCheckpoint {
            bias: self.bias.clone(),
            lag_weights: self.lag_weights.clone(),
            trace_weights: self.trace_weights.clone(),
            decay_rates: self.decay_rates.clone(),
            delay: self.delay,
            state: self.state.clone(),
        };
        let (core, state) = shell.build()?;
        let n = core.b.len();
        let params = GaussianDybmParams { core, sigma: unvec(&self.sigma, n, "sigma")? };
        let esn = match &self.esn {
            Some(section) => Some(section.build(n)?),
            None => None,
        };
        Ok((params, state, esn))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenRecordCheckpoint {
    pub x_lags: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub h_lags: Vec<Vec<f64>>,
    pub beta_h: Vec<f64>,
    pub hidden_sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenModelCheckpoint {
    pub bias: Vec<f64>,
    pub hidden_units: usize,
    pub visible_weights: Vec<Matrix>,
    pub hidden_to_visible: Vec<Matrix>,
    pub visible_to_hidden: Vec<Matrix>,
    pub hidden_to_hidden: Vec<Matrix>,
    pub lambda: f64,
    pub delay: usize,
    pub alpha: Vec<f64>,
    pub beta_h: Vec<f64>,
    pub visible_queue: Vec<Vec<f64>>,
    pub hidden_queue: Vec<Vec<f64>>,
    pub accumulator_u: Vec<Matrix>,
    pub accumulator_z: Vec<Matrix>,
    /// Per-step records, present only when the exact estimator was running.
    pub history: Vec<HiddenRecordCheckpoint>,
}

impl HiddenModelCheckpoint {
    pub fn capture(model: &HiddenModel) -> Self {
        let record = |r: &PhiStepRecord| HiddenRecordCheckpoint {
            x_lags: r.inputs.x_lags.iter().map(vec1).collect(),
            alpha: vec1(&r.inputs.alpha),
            h_lags: r.inputs.h_lags.iter().map(vec1).collect(),
            beta_h: vec1(&r.inputs.beta_h),
            hidden_sample: vec1(&r.h),
        };
        HiddenModelCheckpoint {
            bias: vec1(&model.params.b),
            hidden_units: model.params.hidden_units(),
            visible_weights: model.params.w.iter().map(mat).collect(),
            hidden_to_visible: model.params.v.iter().map(mat).collect(),
            visible_to_hidden: model.params.u.iter().map(mat).collect(),
            hidden_to_hidden: model.params.z.iter().map(mat).collect(),
            lambda: model.params.lambda,
            delay: model.params.delay,
            alpha: vec1(&model.state.alpha),
            beta_h: vec1(&model.state.beta_h),
            visible_queue: model.state.fifo_v.rows().iter().map(vec1).collect(),
            hidden_queue: model.state.fifo_h.rows().iter().map(vec1).collect(),
            accumulator_u: model.accumulator.u.iter().map(mat).collect(),
            accumulator_z: model.accumulator.z.iter().map(mat).collect(),
            history: model.history.iter().map(record).collect(),
        }
    }

    pub fn build(&self, mode: PhiMode) -> Result<HiddenModel> {
        let n_v = self.bias.len();
        let n_h = self.hidden_units;
        let d = self.delay;
        let mut params = HiddenDybmParams::zeros(n_v, n_h, self.lambda, d)?;
        params.b = unvec(&self.bias, n_v, "bias")?;
        let families: [(&Vec<Matrix>, usize, usize, &str); 4] = [
            (&self.visible_weights, n_v, n_v, "visible weight block"),
            (&self.hidden_to_visible, n_h, n_v, "hidden-to-visible block"),
            (&self.visible_to_hidden, n_v, n_h, "visible-to-hidden block"),
            (&self.hidden_to_hidden, n_h, n_h, "hidden-to-hidden block"),
        ];
        for (blocks, _, _, what) in &families {
            if blocks.len() != d {
                return Err(DybmError::Checkpoint(format!(
                    "delay {} requires {} {}s, found {}",
                    d, d, what, blocks.len()
                )));
            }
        }
        for k in 0..d {
            params.w[k] = unmat(&self.visible_weights[k], n_v, n_v, "visible weight block")?;
            params.v[k] = unmat(&self.hidden_to_visible[k], n_h, n_v, "hidden-to-visible block")?;
            params.u[k] = unmat(&self.visible_to_hidden[k], n_v, n_h, "visible-to-hidden block")?;
            params.z[k] = unmat(&self.hidden_to_hidden[k], n_h, n_h, "hidden-to-hidden block")?;
        }

        let state = HiddenTraceState {
            alpha: unvec(&self.alpha, n_v, "alpha")?,
            beta_h: unvec(&self.beta_h, n_h, "beta_h")?,
            fifo_v: FifoQueue::from_rows(
                n_v,
                d,
                self.visible_queue
                    .iter()
                    .map(|r| unvec(r, n_v, "visible queue row"))
                    .collect::<Result<Vec<_>>>()?,
            )?,
            fifo_h: FifoQueue::from_rows(
                n_h,
                d,
                self.hidden_queue
                    .iter()
                    .map(|r| unvec(r, n_h, "hidden queue row"))
                    .collect::<Result<Vec<_>>>()?,
            )?,
            lambda: self.lambda,
            delay: d,
        };

        if self.accumulator_u.len() != d || self.accumulator_z.len() != d {
            return Err(DybmError::Checkpoint("accumulator block count mismatch".into()));
        }
        let mut accumulator = PhiBlocks::zeros_like(&params);
        for k in 0..d {
            accumulator.u[k] = unmat(&self.accumulator_u[k], n_v, n_h, "accumulator u block")?;
            accumulator.z[k] = unmat(&self.accumulator_z[k], n_h, n_h, "accumulator z block")?;
        }

        let mut history = Vec::with_capacity(self.history.len());
        for rec in &self.history {
            if rec.x_lags.len() != d - 1 || rec.h_lags.len() != d - 1 {
                return Err(DybmError::Checkpoint("history record lag count mismatch".into()));
            }
            history.push(PhiStepRecord {
                inputs: TraceSnapshot {
                    x_lags: rec
                        .x_lags
                        .iter()
                        .map(|r| unvec(r, n_v, "history x lag"))
                        .collect::<Result<Vec<_>>>()?,
                    alpha: unvec(&rec.alpha, n_v, "history alpha")?,
                    h_lags: rec
                        .h_lags
                        .iter()
                        .map(|r| unvec(r, n_h, "history h lag"))
                        .collect::<Result<Vec<_>>>()?,
                    beta_h: unvec(&rec.beta_h, n_h, "history beta_h")?,
                },
                h: unvec(&rec.hidden_sample, n_h, "history hidden sample")?,
            });
        }

        let mut model = HiddenModel::new(params, mode)?;
        model.state = state;
        model.accumulator = accumulator;
        model.history = history;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalModelCheckpoint {
    pub bias: Vec<f64>,
    pub lag_weights: Vec<Matrix>,
    pub trace_weights: Vec<Matrix>,
    pub decay_rates: Vec<f64>,
    pub delay: usize,
    pub landmarks: Vec<Vec<f64>>,
    pub bandwidth: f64,
    pub noise: f64,
    pub state: TraceStateCheckpoint,
}

impl FunctionalModelCheckpoint {
    pub fn capture(params: &FunctionalDybmParams, state: &TraceState) -> Self {
        FunctionalModelCheckpoint {
            bias: vec1(&params.b),
            lag_weights: params.w.iter().map(mat).collect(),
            trace_weights: params.u.iter().map(mat).collect(),
            decay_rates: params.decay_rates.clone(),
            delay: params.delay,
            landmarks: params.landmarks.points().to_vec(),
            bandwidth: params.kernel.bandwidth,
            noise: params.kernel.noise,
            state: TraceStateCheckpoint::capture(state),
        }
    }

    pub fn build(&self) -> Result<(FunctionalDybmParams, TraceState)> {
        let landmarks = LandmarkSet::new(self.landmarks.clone())?;
        let kernel = RbfKernel::new(self.bandwidth, self.noise)?;
        let m = landmarks.len();
        if self.delay < 1 {
            return Err(DybmError::Checkpoint("delay must be at least 1".into()));
        }
        if self.lag_weights.len() != self.delay - 1
            || self.trace_weights.len() != self.decay_rates.len()
        {
            return Err(DybmError::Checkpoint("weight block counts do not match delay/decays".into()));
        }
        let mut params =
            FunctionalDybmParams::zeros(landmarks, kernel, &self.decay_rates, self.delay)?;
        params.b = unvec(&self.bias, m, "bias")?;
        for (k, block) in self.lag_weights.iter().enumerate() {
            params.w[k] = unmat(block, m, m, "lag block")?;
        }
        for (k, block) in self.trace_weights.iter().enumerate() {
            params.u[k] = unmat(block, m, m, "trace block")?;
        }
        let state = self.state.build(m, &self.decay_rates, self.delay)?;
        Ok((params, state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtrbmModelCheckpoint {
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub initial_bias: Vec<f64>,
    pub visible_to_hidden: Matrix,
    pub hidden_to_hidden: Matrix,
}

impl RtrbmModelCheckpoint {
    pub fn capture(params: &RtrbmParams) -> Self {
        RtrbmModelCheckpoint {
            visible_bias: vec1(&params.b_v),
            hidden_bias: vec1(&params.b_h),
            initial_bias: vec1(&params.b_init),
            visible_to_hidden: mat(&params.w),
            hidden_to_hidden: mat(&params.u),
        }
    }

    pub fn build(&self) -> Result<RtrbmParams> {
        let n_v = self.visible_bias.len();
        let n_h = self.hidden_bias.len();
        Ok(RtrbmParams {
            b_v: unvec(&self.visible_bias, n_v, "visible bias")?,
            b_h: unvec(&self.hidden_bias, n_h, "hidden bias")?,
            b_init: unvec(&self.initial_bias, n_h, "initial bias")?,
            w: unmat(&self.visible_to_hidden, n_v, n_h, "visible-to-hidden")?,
            u: unmat(&self.hidden_to_hidden, n_h, n_h, "hidden-to-hidden")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind")]
pub enum ModelCheckpoint {
    #[serde(rename = "dybm-binary")]
    Binary(BinaryModelCheckpoint),
    #[serde(rename = "dybm-gaussian")]
    Gaussian(GaussianModelCheckpoint),
    #[serde(rename = "dybm-gaussian-natural")]
    GaussianNatural(GaussianModelCheckpoint),
    #[serde(rename = "dybm-esn")]
    Esn(GaussianModelCheckpoint),
    #[serde(rename = "dybm-functional")]
    Functional(FunctionalModelCheckpoint),
    #[serde(rename = "dybm-hidden")]
    Hidden(HiddenModelCheckpoint),
    #[serde(rename = "rtrbm")]
    Rtrbm(RtrbmModelCheckpoint),
}

impl ModelCheckpoint {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelCheckpoint::Binary(_) => "dybm-binary",
            ModelCheckpoint::Gaussian(_) => "dybm-gaussian",
            ModelCheckpoint::GaussianNatural(_) => "dybm-gaussian-natural",
            ModelCheckpoint::Esn(_) => "dybm-esn",
            ModelCheckpoint::Functional(_) => "dybm-functional",
            ModelCheckpoint::Hidden(_) => "dybm-hidden",
            ModelCheckpoint::Rtrbm(_) => "rtrbm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub column_names: Vec<String>,
    pub model: ModelCheckpoint,
}

impl Checkpoint {
    pub fn new(column_names: Vec<String>, model: ModelCheckpoint) -> Self {
        Checkpoint { format_version: FORMAT_VERSION, column_names, model }
    }
}

/// The one true byte representation: pretty JSON plus a trailing newline.
pub fn canonical_json(checkpoint: &Checkpoint) -> Result<String> {
    let mut text = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| DybmError::Checkpoint(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn save(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, canonical_json(checkpoint)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let checkpoint: Checkpoint =
        serde_json::from_str(&text).map_err(|e| DybmError::Checkpoint(e.to_string()))?;
    if checkpoint.format_version != FORMAT_VERSION {
        return Err(DybmError::Checkpoint(format!(
            "unsupported format version {} (expected {})",
            checkpoint.format_version, FORMAT_VERSION
        )));
    }
    Ok(checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::sgd_step_relaxed;
    use crate::config::EsnSettings;
    use crate::gaussian::sgd_step;
    use crate::rng::seeded_rng;
    use ndarray::array;
    use rand::Rng as _;

    fn trained_binary() -> (RelaxedDybmParams, TraceState) {
        let mut rng = seeded_rng(90);
        let mut params = RelaxedDybmParams::init(3, &[0.2, 0.6], 3, &mut rng);
        let mut state = params.new_state().unwrap();
        for _ in 0..20 {
            let x = Array1::from_shape_fn(3, |_| f64::from(rng.random::<bool>()));
            sgd_step_relaxed(&mut params, &state, &x.view(), 0.1).unwrap();
            state.step(&x).unwrap();
        }
        (params, state)
    }

    #[test]
    fn binary_round_trip_is_byte_identical_and_lossless() {
        let (params, state) = trained_binary();
        let cp = Checkpoint::new(
            vec!["a".into(), "b".into(), "c".into()],
            ModelCheckpoint::Binary(BinaryModelCheckpoint::capture(&params, &state)),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save(&path, &cp).unwrap();
        let first_bytes = std::fs::read(&path).unwrap();

        let loaded = load(&path).unwrap();
        assert_eq!(loaded, cp);
        save(&path, &loaded).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first_bytes);

        match loaded.model {
            ModelCheckpoint::Binary(section) => {
                let (rebuilt, rebuilt_state) = section.build().unwrap();
                assert_eq!(rebuilt, params);
                assert_eq!(rebuilt_state, state);
            }
            _ => panic!("kind changed in transit"),
        }
    }

    #[test]
    fn gaussian_with_reservoir_round_trips() {
        let mut rng = seeded_rng(91);
        let mut params = GaussianDybmParams::zeros(2, &[0.5], 2, 1.0);
        params.core.b = array![0.1, -0.2];
        let mut state = params.new_state().unwrap();
        let settings = EsnSettings { size: 4, leak: 0.5, spectral_radius: 0.8 };
        let mut esn = EsnConfig::new(2, &settings, &mut rng).unwrap();
        for _ in 0..10 {
            let x = array![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            sgd_step(&mut params, &state, Some(&mut esn), &x.view(), 0.01).unwrap();
            state.step(&x).unwrap();
        }
        let cp = Checkpoint::new(
            vec!["u".into(), "v".into()],
            ModelCheckpoint::Esn(GaussianModelCheckpoint::capture(&params, &state, Some(&esn))),
        );
        let text = canonical_json(&cp).unwrap();
        let parsed: Checkpoint = serde_json::from_str(&text).unwrap();
        match &parsed.model {
            ModelCheckpoint::Esn(section) => {
                let (p2, s2, e2) = section.build().unwrap();
                assert_eq!(p2, params);
                assert_eq!(s2, state);
                assert_eq!(e2.unwrap(), esn);
            }
            _ => panic!("kind changed in transit"),
        }
        assert_eq!(canonical_json(&parsed).unwrap(), text);
    }

    #[test]
    fn hidden_round_trip_preserves_accumulator_and_history() {
        let mut rng = seeded_rng(92);
        let params = HiddenDybmParams::init(2, 2, 0.4, 2, &mut rng).unwrap();
        let mut model = HiddenModel::new(params, PhiMode::Exact).unwrap();
        for _ in 0..5 {
            let x = Array1::from_shape_fn(2, |_| f64::from(rng.random::<bool>()));
            model.step_train(&x.view(), 0.05, &mut rng).unwrap();
        }
        let cp = Checkpoint::new(
            vec!["x1".into(), "x2".into()],
            ModelCheckpoint::Hidden(HiddenModelCheckpoint::capture(&model)),
        );
        let text = canonical_json(&cp).unwrap();
        let parsed: Checkpoint = serde_json::from_str(&text).unwrap();
        match &parsed.model {
            ModelCheckpoint::Hidden(section) => {
                let rebuilt = section.build(PhiMode::Exact).unwrap();
                assert_eq!(rebuilt.params, model.params);
                assert_eq!(rebuilt.state, model.state);
                assert_eq!(rebuilt.accumulator, model.accumulator);
                assert_eq!(rebuilt.history.len(), model.history.len());
                for (a, b) in rebuilt.history.iter().zip(model.history.iter()) {
                    assert_eq!(a.inputs, b.inputs);
                    assert_eq!(a.h, b.h);
                }
            }
            _ => panic!("kind changed in transit"),
        }
    }

    #[test]
    fn functional_and_rtrbm_round_trip() {
        let landmarks = LandmarkSet::grid(4, &[[0.0, 1.0]]).unwrap();
        let kernel = RbfKernel::new(0.4, 0.01).unwrap();
        let mut params = FunctionalDybmParams::zeros(landmarks, kernel, &[0.5], 2).unwrap();
        params.b = array![0.1, 0.2, -0.3, 0.4];
        let state = params.new_state().unwrap();
        let cp = Checkpoint::new(
            (0..4).map(|i| format!("g{}", i)).collect(),
            ModelCheckpoint::Functional(FunctionalModelCheckpoint::capture(&params, &state)),
        );
        let text = canonical_json(&cp).unwrap();
        let parsed: Checkpoint = serde_json::from_str(&text).unwrap();
        match &parsed.model {
            ModelCheckpoint::Functional(section) => {
                let (p2, s2) = section.build().unwrap();
                assert_eq!(p2, params);
                assert_eq!(s2, state);
            }
            _ => panic!("kind changed in transit"),
        }

        let mut rng = seeded_rng(93);
        let rtrbm = RtrbmParams::init(3, 2, &mut rng);
        let cp = Checkpoint::new(
            vec!["a".into(), "b".into(), "c".into()],
            ModelCheckpoint::Rtrbm(RtrbmModelCheckpoint::capture(&rtrbm)),
        );
        let text = canonical_json(&cp).unwrap();
        let parsed: Checkpoint = serde_json::from_str(&text).unwrap();
        match &parsed.model {
            ModelCheckpoint::Rtrbm(section) => assert_eq!(section.build().unwrap(), rtrbm),
            _ => panic!("kind changed in transit"),
        }
    }

    #[test]
    fn malformed_checkpoints_are_rejected() {
        let (params, state) = trained_binary();
        let cp = Checkpoint::new(
            vec!["a".into(), "b".into(), "c".into()],
            ModelCheckpoint::Binary(BinaryModelCheckpoint::capture(&params, &state)),
        );
        let text = canonical_json(&cp).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");

        // Unknown field inside the model section.
        let bad = text.replace("\"bias\"", "\"bogus\": 1,\n    \"bias\"");
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(load(&path), Err(DybmError::Checkpoint(_))));

        // Unsupported format version.
        let bad = text.replace("\"format_version\": 1", "\"format_version\": 9");
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(load(&path), Err(DybmError::Checkpoint(_))));

        // Unknown model kind.
        let bad = text.replace("dybm-binary", "dybm-quantum");
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(load(&path), Err(DybmError::Checkpoint(_))));

        // Truncated file.
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load(&path), Err(DybmError::Checkpoint(_))));
    }

    #[test]
    fn dimension_lies_are_caught_at_build() {
        let (params, state) = trained_binary();
        let mut section = BinaryModelCheckpoint::capture(&params, &state);
        section.bias.push(0.0);
        assert!(section.build().is_err());

        let mut section = BinaryModelCheckpoint::capture(&params, &state);
        section.lag_weights.pop();
        assert!(section.build().is_err());

        let mut section = BinaryModelCheckpoint::capture(&params, &state);
        section.state.queue.push(vec![0.0; 3]);
        assert!(section.build().is_err());
    }
}
