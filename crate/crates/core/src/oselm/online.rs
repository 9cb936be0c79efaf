//! Two-stage online run over an aligned stream: node-count search on the
//! calibration window, online training up to the cutoff, then strain-only
//! estimation with frozen weights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{default_initial_block, OselmState, DEFAULT_RIDGE};
use crate::alignment::AlignedSample;
use crate::elm::{Activation, ElmModel, HiddenParams};
use crate::error::{Error, Result};
use crate::evaluation::THETA_Y;
use crate::pso::{fitness_node_count, pso_search, PsoConfig, PsoOutcome};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    /// Leading window (seconds from the first sample) used for the node-count search.
    pub calibration_span_s: f64,
    /// Leading fraction of the stream used for online updates.
    pub training_fraction: f64,
    /// Samples per recursive update.
    pub chunk_size: usize,
    /// Size of the initialization block; defaults to `max(2N, N + 5)`.
    pub initial_block: Option<usize>,
    pub ridge: f64,
    pub activation: Activation,
    /// 3 for (θx, θy, θz), 1 for θy only.
    pub output_dim: usize,
    pub pso: PsoConfig,
    pub seed: u64,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            calibration_span_s: 10.0,
            training_fraction: 0.25,
            chunk_size: 1,
            initial_block: None,
            ridge: DEFAULT_RIDGE,
            activation: Activation::Sigmoid,
            output_dim: 3,
            pso: PsoConfig::default(),
            seed: 0,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.training_fraction > 0.0 && self.training_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "training_fraction must lie in (0, 1], got {}",
                self.training_fraction
            )));
        }
        if !(self.calibration_span_s >= 0.0 && self.calibration_span_s.is_finite()) {
            return Err(Error::InvalidConfig("calibration_span_s must be >= 0".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be >= 1".into()));
        }
        if self.output_dim != 1 && self.output_dim != 3 {
            return Err(Error::InvalidConfig(format!(
                "output_dim must be 1 or 3, got {}",
                self.output_dim
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidConfig("ridge must be >= 0".into()));
        }
        if self.initial_block == Some(0) {
            return Err(Error::InvalidConfig("initial_block must be >= 1".into()));
        }
        self.pso.validate()
    }

    pub fn hidden_seed(&self) -> u64 {
        derive_seed(self.seed, "hidden")
    }

    pub fn pso_seed(&self) -> u64 {
        derive_seed(self.seed, "pso")
    }
}

/// Strain-only estimate for one aligned sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub t: u64,
    /// (θx, θy, θz); off-axis entries are 0 for a θy-only model.
    pub theta: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub state: OselmState,
    pub model: ElmModel,
    pub pso: PsoOutcome,
    /// Effective search interval after fitting it to the available data.
    pub pso_bounds: (usize, usize),
    pub hidden_seed: u64,
    pub calibration_samples: usize,
    /// Index of the first sample after the training cutoff.
    pub cutoff: usize,
    pub initial_block: usize,
    pub estimates: Vec<Estimate>,
}

impl OnlineRun {
    pub fn n_hidden(&self) -> usize {
        self.model.hidden().n_hidden()
    }

    /// Recursive updates applied after initialization.
    pub fn update_chunks(&self) -> u64 {
        self.state.chunks_seen() - 1
    }
}

/// Input and target matrices for a run of aligned samples.
pub fn design_matrices(samples: &[AlignedSample], output_dim: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = samples.first().map_or(0, |s| s.voltages.len());
    let inputs = DMatrix::from_fn(samples.len(), m, |i, j| samples[i].voltages[j]);
    let targets = if output_dim == 1 {
        DMatrix::from_fn(samples.len(), 1, |i, _| samples[i].theta_avg[THETA_Y])
    } else {
        DMatrix::from_fn(samples.len(), 3, |i, j| samples[i].theta_avg[j])
    };
    (inputs, targets)
}

/// Lifts a model output row to an angle triple.
pub fn to_triple(output: &[f64]) -> [f64; 3] {
    match output {
        [y] => [0.0, *y, 0.0],
        [x, y, z, ..] => [*x, *y, *z],
        _ => [0.0; 3],
    }
}

/// Number of leading samples in the training segment: `⌊fraction · len⌋`.
pub fn training_cutoff(len: usize, fraction: f64) -> usize {
    ((len as f64) * fraction).floor() as usize
}

pub fn run_online(stream: &[AlignedSample], config: &OnlineConfig) -> Result<OnlineRun> {
    config.validate()?;
    let first = stream.first().ok_or(Error::InsufficientData {
        what: "online run",
        required: 1,
        available: 0,
    })?;
    let m = first.voltages.len();
    if let Some(bad) = stream.iter().find(|s| s.voltages.len() != m) {
        return Err(Error::DimensionMismatch {
            context: "aligned sample width",
            expected: m,
            actual: bad.voltages.len(),
        });
    }

    let cutoff = training_cutoff(stream.len(), config.training_fraction);
    // Targets past the cutoff are never read, calibration included.
    let calib_end_ms = first.t as f64 + config.calibration_span_s * 1000.0;
    let calibration_samples = stream[..cutoff]
        .iter()
        .take_while(|s| (s.t as f64) < calib_end_ms)
        .count();
    let calib = &stream[..calibration_samples];

    // Largest node count both the calibration split and the initial block allow.
    let block = |n: usize| config.initial_block.unwrap_or_else(|| default_initial_block(n));
    let mut hi = config.pso.n_max.min(calibration_samples * 4 / 5);
    while hi >= config.pso.n_min && (block(hi) > cutoff || block(hi) < hi) {
        hi -= 1;
    }
    let lo = config.pso.n_min;
    if hi < lo {
        let required_cal = crate::pso::min_calibration_samples(lo);
        if calibration_samples < required_cal {
            return Err(Error::InsufficientData {
                what: "calibration window",
                required: required_cal,
                available: calibration_samples,
            });
        }
        return Err(Error::InsufficientData {
            what: "online initialization block",
            required: block(lo).max(lo),
            available: cutoff,
        });
    }

    let hidden_seed = config.hidden_seed();
    let pso_cfg = PsoConfig {
        n_max: hi,
        seed: config.pso_seed(),
        ..config.pso.clone()
    };
    let pso = pso_search(
        |n| fitness_node_count(calib, n, hidden_seed, config.activation, config.ridge),
        &pso_cfg,
    )?;

    let n = pso.best_n;
    let hidden = HiddenParams::random(n, m, config.activation, hidden_seed)?;
    let n0 = block(n);
    let (inputs, targets) = design_matrices(&stream[..cutoff], config.output_dim);
    let mut state = OselmState::init(
        hidden,
        &inputs.rows(0, n0).into_owned(),
        &targets.rows(0, n0).into_owned(),
        config.ridge,
    )?;
    state.update_chunked(
        &inputs.rows(n0, cutoff - n0).into_owned(),
        &targets.rows(n0, cutoff - n0).into_owned(),
        config.chunk_size,
    )?;

    let model = state.model();
    let held_out = &stream[cutoff..];
    let estimates = if held_out.is_empty() {
        Vec::new()
    } else {
        let x = DMatrix::from_fn(held_out.len(), m, |i, j| held_out[i].voltages[j]);
        let pred = model.predict_batch(&x)?;
        held_out
            .iter()
            .enumerate()
            .map(|(i, s)| Estimate {
                t: s.t,
                theta: to_triple(&pred.row(i).iter().copied().collect::<Vec<_>>()),
            })
            .collect()
    };

    Ok(OnlineRun {
        state,
        model,
        pso,
        pso_bounds: (lo, hi),
        hidden_seed,
        calibration_samples,
        cutoff,
        initial_block: n0,
        estimates,
    })
}
