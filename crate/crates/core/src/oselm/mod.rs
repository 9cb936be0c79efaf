//! Online sequential ELM: block initialization followed by recursive chunk
//! updates of the output weights.
//!
//! The state keeps `M = (Σ HᵀH + λI)⁻¹` and updates it per chunk with the
//! Woodbury identity, so each update only inverts a `chunk × chunk` matrix
//! and no sample history is stored.

mod online;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::elm::{all_finite, ElmModel, HiddenParams, ModelReader, ModelWriter, OutputWeights, PayloadKind};
use crate::error::{Error, Result};

pub use online::{design_matrices, run_online, to_triple, training_cutoff, Estimate, OnlineConfig, OnlineRun};

/// Ridge added to the initial `HᵀH` before inversion.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Largest condition number accepted for the initial `HᵀH + λI`.
const MAX_INIT_CONDITION: f64 = 1e13;

/// Default size of the initialization block: `2N`, never below `N + 5`.
pub fn default_initial_block(n_hidden: usize) -> usize {
    (2 * n_hidden).max(n_hidden + 5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OselmState {
    hidden: HiddenParams,
    beta: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    chunks_seen: u64,
    samples_seen: u64,
}

impl OselmState {
    /// Fits the first block: `β⁰ = (H₀ᵀH₀ + λI)⁻¹ H₀ᵀ θ₀`.
    pub fn init(
        hidden: HiddenParams,
        inputs: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        ridge: f64,
    ) -> Result<Self> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge must be >= 0, got {ridge}")));
        }
        check_block(&hidden, inputs, targets, None)?;
        let n = hidden.n_hidden();
        if inputs.nrows() < n {
            return Err(Error::IllConditioned {
                reason: format!(
                    "initial block has {} samples but the layer has {n} hidden nodes",
                    inputs.nrows()
                ),
            });
        }
        let h = hidden.hidden_matrix(inputs)?;
        let mut k = h.tr_mul(&h);
        for i in 0..n {
            k[(i, i)] += ridge;
        }

        let eig = SymmetricEigen::new(k.clone());
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_INIT_CONDITION {
            return Err(Error::IllConditioned {
                reason: format!("HᵀH + λI has eigenvalues in [{lo:e}, {hi:e}]"),
            });
        }
        let chol = Cholesky::new(k).ok_or_else(|| Error::IllConditioned {
            reason: "HᵀH + λI is not positive definite".into(),
        })?;
        let mut m_inv = chol.inverse();
        symmetrize(&mut m_inv);
        let beta = &m_inv * h.tr_mul(targets);
        if !all_finite(beta.as_slice()) || !all_finite(m_inv.as_slice()) {
            return Err(Error::NonFinite("initial online state"));
        }
        Ok(Self {
            hidden,
            beta,
            m_inv,
            chunks_seen: 1,
            samples_seen: inputs.nrows() as u64,
        })
    }

    /// Absorbs one chunk:
    ///
    /// ```text
    /// M ← M − M Hᵀ (I + H M Hᵀ)⁻¹ H M
    /// β ← β + M Hᵀ (θ − H β)
    /// ```
    ///
    /// On error the state is left untouched.
    pub fn update(&mut self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<()> {
        check_block(&self.hidden, inputs, targets, Some(self.beta.ncols()))?;
        if inputs.nrows() == 0 {
            return Err(Error::InsufficientData {
                what: "online update chunk",
                required: 1,
                available: 0,
            });
        }
        let h = self.hidden.hidden_matrix(inputs)?;
        let hm = &h * &self.m_inv;
        let mut inner = &hm * h.transpose();
        for i in 0..inner.nrows() {
            inner[(i, i)] += 1.0;
        }
        let chol = Cholesky::new(inner).ok_or_else(|| {
            Error::Conditioning(format!(
                "I + H M Hᵀ is not positive definite for a chunk of {}",
                inputs.nrows()
            ))
        })?;
        let gain = chol.solve(&hm);
        let mut m_next = &self.m_inv - hm.tr_mul(&gain);
        symmetrize(&mut m_next);

        let residual = targets - &h * &self.beta;
        let beta_next = &self.beta + &m_next * h.tr_mul(&residual);
        if !all_finite(beta_next.as_slice()) || !all_finite(m_next.as_slice()) {
            return Err(Error::NonFinite("online update"));
        }
        self.m_inv = m_next;
        self.beta = beta_next;
        self.chunks_seen += 1;
        self.samples_seen += inputs.nrows() as u64;
        Ok(())
    }

    /// Feeds `inputs` in consecutive chunks of at most `chunk_size` rows.
    pub fn update_chunked(
        &mut self,
        inputs: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        chunk_size: usize,
    ) -> Result<()> {
        if chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk size must be positive".into()));
        }
        let mut start = 0;
        while start < inputs.nrows() {
            let len = chunk_size.min(inputs.nrows() - start);
            self.update(
                &inputs.rows(start, len).into_owned(),
                &targets.rows(start, len).into_owned(),
            )?;
            start += len;
        }
        Ok(())
    }

    pub fn hidden(&self) -> &HiddenParams {
        &self.hidden
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn m_inv(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn chunks_seen(&self) -> u64 {
        self.chunks_seen
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// Frozen snapshot of the current weights.
    pub fn model(&self) -> ElmModel {
        ElmModel::new(
            self.hidden.clone(),
            OutputWeights::new(self.beta.clone()).expect("state is finite"),
        )
        .expect("state dimensions are consistent")
    }

    /// Serializes the model plus `M` and counters for resumable training.
    pub fn save(&self) -> Vec<u8> {
        let mut w = ModelWriter::new(PayloadKind::OnlineState, &self.model());
        w.u64(self.chunks_seen);
        w.u64(self.samples_seen);
        w.matrix(&self.m_inv);
        w.finish()
    }

    pub fn load(bytes: &[u8]) -> Result<Self> {
        let (mut r, kind, model) = ModelReader::open(bytes)?;
        if kind != PayloadKind::OnlineState {
            return Err(Error::Decode("payload carries no online training state".into()));
        }
        let n = model.hidden().n_hidden();
        let chunks_seen = r.u64()?;
        let samples_seen = r.u64()?;
        let m_inv = r.matrix(n, n)?;
        r.finish()?;
        if !all_finite(m_inv.as_slice()) {
            return Err(Error::Decode("non-finite inverse covariance".into()));
        }
        Ok(Self {
            beta: model.output().beta().clone(),
            hidden: model.hidden().clone(),
            m_inv,
            chunks_seen,
            samples_seen,
        })
    }
}

fn check_block(
    hidden: &HiddenParams,
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    output_dim: Option<usize>,
) -> Result<()> {
    if inputs.ncols() != hidden.n_inputs() {
        return Err(Error::DimensionMismatch {
            context: "online block input columns",
            expected: hidden.n_inputs(),
            actual: inputs.ncols(),
        });
    }
    if targets.nrows() != inputs.nrows() {
        return Err(Error::DimensionMismatch {
            context: "online block target rows",
            expected: inputs.nrows(),
            actual: targets.nrows(),
        });
    }
    if let Some(d) = output_dim {
        if targets.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "online block target columns",
                expected: d,
                actual: targets.ncols(),
            });
        }
    } else if targets.ncols() == 0 {
        return Err(Error::InvalidConfig("output dimension must be positive".into()));
    }
    if !all_finite(inputs.as_slice()) || !all_finite(targets.as_slice()) {
        return Err(Error::NonFinite("online block"));
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
