//! Random-feature single-hidden-layer network (extreme learning machine).
//!
//! Only the output weights are fitted; the hidden layer is drawn once from a
//! seed and then frozen.

mod codec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use codec::{load_model, save_model, FORMAT_VERSION};
pub(crate) use codec::{ModelReader, ModelWriter, PayloadKind};

/// Hidden-node activation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidConfig(format!("unknown activation `{other}`"))),
        }
    }
}

/// Input weights (one row per hidden node) and biases of the hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenParams {
    weights: DMatrix<f64>,
    biases: DVector<f64>,
    activation: Activation,
}

impl HiddenParams {
    pub fn new(weights: DMatrix<f64>, biases: DVector<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidConfig(
                "hidden layer needs at least one node and one input".into(),
            ));
        }
        if biases.len() != weights.nrows() {
            return Err(Error::DimensionMismatch {
                context: "hidden biases",
                expected: weights.nrows(),
                actual: biases.len(),
            });
        }
        if !all_finite(weights.as_slice()) || !all_finite(biases.as_slice()) {
            return Err(Error::NonFinite("hidden parameters"));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    /// Draws weights then biases i.i.d. uniform on [-1, 1] from `seed`.
    ///
    /// Weights are drawn node by node, input by input, so the result depends
    /// only on `(n_hidden, n_inputs, seed)`.
    pub fn random(
        n_hidden: usize,
        n_inputs: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if n_hidden == 0 || n_inputs == 0 {
            return Err(Error::InvalidConfig(format!(
                "hidden layer shape {n_hidden}x{n_inputs} must be positive"
            )));
        }
        let mut rng = seed::rng(seed);
        let weights =
            DMatrix::from_row_iterator(n_hidden, n_inputs, (0..n_hidden * n_inputs).map(|_| {
                rng.random_range(-1.0..=1.0)
            }));
        let biases = DVector::from_iterator(n_hidden, (0..n_hidden).map(|_| rng.random_range(-1.0..=1.0)));
        Self::new(weights, biases, activation)
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &DVector<f64> {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Hidden-layer output matrix: entry (i, j) is `activation(a_j · x_i + b_j)`.
    pub fn hidden_matrix(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                context: "hidden_matrix input columns",
                expected: self.n_inputs(),
                actual: inputs.ncols(),
            });
        }
        if !all_finite(inputs.as_slice()) {
            return Err(Error::NonFinite("hidden_matrix inputs"));
        }
        let mut h = inputs * self.weights.transpose();
        for (j, mut col) in h.column_iter_mut().enumerate() {
            let b = self.biases[j];
            col.apply(|z| *z = self.activation.apply(*z + b));
        }
        Ok(h)
    }

    /// Hidden activations of one input vector as a 1×N row.
    pub fn hidden_row(&self, input: &[f64]) -> Result<DMatrix<f64>> {
        self.hidden_matrix(&DMatrix::from_row_slice(1, input.len(), input))
    }
}

/// Output weights β, one row per hidden node and one column per output.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputWeights(DMatrix<f64>);

impl OutputWeights {
    pub fn new(beta: DMatrix<f64>) -> Result<Self> {
        if !all_finite(beta.as_slice()) {
            return Err(Error::NonFinite("output weights"));
        }
        Ok(Self(beta))
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Minimum-norm least-squares solution of `H β = targets`, via SVD.
pub fn batch_fit(h: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<OutputWeights> {
    if h.nrows() == 0 {
        return Err(Error::InsufficientData {
            what: "batch_fit",
            required: 1,
            available: 0,
        });
    }
    if targets.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch {
            context: "batch_fit target rows",
            expected: h.nrows(),
            actual: targets.nrows(),
        });
    }
    if !all_finite(h.as_slice()) || !all_finite(targets.as_slice()) {
        return Err(Error::NonFinite("batch_fit inputs"));
    }
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    // Same cutoff as LAPACK-style pinv defaults.
    let eps = smax * (h.nrows().max(h.ncols()) as f64) * f64::EPSILON;
    let beta = svd
        .solve(targets, eps)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    OutputWeights::new(beta)
}

/// A fitted network: hidden layer plus output weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    hidden: HiddenParams,
    output: OutputWeights,
}

impl ElmModel {
    pub fn new(hidden: HiddenParams, output: OutputWeights) -> Result<Self> {
        if output.beta().nrows() != hidden.n_hidden() {
            return Err(Error::DimensionMismatch {
                context: "output weight rows",
                expected: hidden.n_hidden(),
                actual: output.beta().nrows(),
            });
        }
        if output.beta().ncols() == 0 {
            return Err(Error::InvalidConfig("output dimension must be positive".into()));
        }
        Ok(Self { hidden, output })
    }

    /// Fits β in one shot on a full batch.
    pub fn fit(hidden: HiddenParams, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<Self> {
        let h = hidden.hidden_matrix(inputs)?;
        let output = batch_fit(&h, targets)?;
        Self::new(hidden, output)
    }

    pub fn hidden(&self) -> &HiddenParams {
        &self.hidden
    }

    pub fn output(&self) -> &OutputWeights {
        &self.output
    }

    pub fn n_inputs(&self) -> usize {
        self.hidden.n_inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.output.beta().ncols()
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                context: "predict input length",
                expected: self.n_inputs(),
                actual: input.len(),
            });
        }
        let row = self.hidden.hidden_row(input)? * self.output.beta();
        Ok(row.iter().copied().collect())
    }

    /// Predicts every row of `inputs` at once.
    pub fn predict_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.hidden.hidden_matrix(inputs)? * self.output.beta())
    }
}

pub(crate) fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}
