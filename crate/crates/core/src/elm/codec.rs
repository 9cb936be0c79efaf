//! Versioned binary container for fitted models.
//!
//! Layout (all integers and floats little-endian, matrices row-major):
//!
//! ```text
//! offset  size        field
//! 0       4           magic  b"WBEL"
//! 4       2           format version (u16)
//! 6       1           payload kind: 0 = fitted model, 1 = resumable online state
//! 7       1           activation: 0 = sigmoid, 1 = tanh
//! 8       4           n_hidden  (u32, N)
//! 12      4           n_inputs  (u32, m)
//! 16      4           output_dim (u32, d)
//! 20      8·N·m       hidden weights, N rows × m columns
//! ..      8·N         hidden biases
//! ..      8·N·d       output weights β, N rows × d columns
//! kind 1 only:
//! ..      8           chunks_seen (u64)
//! ..      8           samples_seen (u64)
//! ..      8·N·N       inverse covariance M, N × N
//! ```

use nalgebra::{DMatrix, DVector};

use super::{Activation, ElmModel, HiddenParams, OutputWeights};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WBEL";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PayloadKind {
    Model = 0,
    OnlineState = 1,
}

pub(crate) struct ModelWriter {
    buf: Vec<u8>,
}

impl ModelWriter {
    pub(crate) fn new(kind: PayloadKind, model: &ElmModel) -> Self {
        let hidden = model.hidden();
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(MAGIC);
        w.buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        w.buf.push(kind as u8);
        w.buf.push(hidden.activation().tag());
        w.u32(hidden.n_hidden());
        w.u32(hidden.n_inputs());
        w.u32(model.output_dim());
        w.matrix(hidden.weights());
        for b in hidden.biases().iter() {
            w.f64(*b);
        }
        w.matrix(model.output().beta());
        w
    }

    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("dimension exceeds u32");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn matrix(&mut self, m: &DMatrix<f64>) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)]);
            }
        }
    }

    pub(crate) fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ModelReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ModelReader<'a> {
    /// Parses the header and model section, returning the payload kind.
    pub(crate) fn open(bytes: &'a [u8]) -> Result<(Self, PayloadKind, ElmModel)> {
        let mut r = Self { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let kind = match r.take(1)?[0] {
            0 => PayloadKind::Model,
            1 => PayloadKind::OnlineState,
            k => return Err(Error::Decode(format!("unknown payload kind {k}"))),
        };
        let tag = r.take(1)?[0];
        let activation = Activation::from_tag(tag)
            .ok_or_else(|| Error::Decode(format!("unknown activation tag {tag}")))?;
        let n_hidden = r.u32()?;
        let n_inputs = r.u32()?;
        let output_dim = r.u32()?;
        if n_hidden == 0 || n_inputs == 0 || output_dim == 0 {
            return Err(Error::Decode("zero dimension in header".into()));
        }
        let weights = r.matrix(n_hidden, n_inputs)?;
        let biases = DVector::from_iterator(
            n_hidden,
            r.matrix(n_hidden, 1)?.iter().copied(),
        );
        let beta = r.matrix(n_hidden, output_dim)?;
        let hidden = HiddenParams::new(weights, biases, activation)
            .map_err(|e| Error::Decode(e.to_string()))?;
        let output = OutputWeights::new(beta).map_err(|e| Error::Decode(e.to_string()))?;
        let model = ElmModel::new(hidden, output)?;
        Ok((r, kind, model))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Decode(format!("truncated payload at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Decode("matrix size overflow".into()))?;
        let raw = self.take(len)?;
        Ok(DMatrix::from_row_iterator(
            rows,
            cols,
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        ))
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Decode(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn save_model(model: &ElmModel) -> Vec<u8> {
    ModelWriter::new(PayloadKind::Model, model).finish()
}

/// Decodes a fitted model. Resumable online-state payloads are accepted and
/// their training state is discarded.
pub fn load_model(bytes: &[u8]) -> Result<ElmModel> {
    let (mut r, kind, model) = ModelReader::open(bytes)?;
    if kind == PayloadKind::OnlineState {
        let n = model.hidden().n_hidden();
        r.u64()?;
        r.u64()?;
        r.matrix(n, n)?;
    }
    r.finish()?;
    Ok(model)
}
