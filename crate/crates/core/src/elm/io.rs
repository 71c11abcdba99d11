//! Model and state files.
//!
//! Model: `b"OSEM-MDL"`, version byte, `u32` LE `n_in`, `L`, `n_out`,
//! activation tag byte, then `W`, `b` (as a `1 × L` matrix), `η` and `P`,
//! each in the binary matrix format of [`crate::linalg::io`].
//!
//! State: `b"OSEM-STA"`, version byte, `u64` LE `samples_seen`, then `P`
//! and `η` in the binary matrix format.

use std::fs;
use std::path::Path;

use crate::elm::model::{Activation, ElmModel, Topology};
use crate::elm::online::OnlineState;
use crate::error::{Error, Result};
use crate::linalg::io::{read_matrix, write_matrix};
use crate::linalg::Matrix;

pub const MODEL_MAGIC: &[u8; 8] = b"OSEM-MDL";
pub const STATE_MAGIC: &[u8; 8] = b"OSEM-STA";
pub const FILE_VERSION: u8 = 1;

/// Serialises `model` together with the covariance `p` of its training state.
pub fn encode_model(model: &ElmModel, p: &Matrix) -> Result<Vec<u8>> {
    let topo = model.topology();
    if p.shape() != (topo.n_hidden, topo.n_hidden) {
        return Err(Error::dim("encode_model", (topo.n_hidden, topo.n_hidden), p.shape()));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.push(FILE_VERSION);
    for d in [topo.n_in, topo.n_hidden, topo.n_out] {
        let d = u32::try_from(d).map_err(|_| Error::Format("topology exceeds u32".into()))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    buf.push(model.activation().tag());
    write_matrix(&mut buf, model.input_weights())?;
    write_matrix(&mut buf, &Matrix::row_vector(model.bias()))?;
    write_matrix(&mut buf, model.eta())?;
    write_matrix(&mut buf, p)?;
    Ok(buf)
}

pub fn decode_model(bytes: &[u8]) -> Result<(ElmModel, Matrix)> {
    let mut r = bytes;
    let header = take(&mut r, 8 + 1 + 12 + 1)?;
    if &header[..8] != MODEL_MAGIC {
        return Err(Error::Format("bad model magic".into()));
    }
    if header[8] != FILE_VERSION {
        return Err(Error::Format(format!("unsupported model version {}", header[8])));
    }
    let dim = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap()) as usize;
    let topo = Topology::new(dim(9), dim(13), dim(17)).map_err(|e| Error::Format(e.to_string()))?;
    let activation = Activation::from_tag(header[21])?;
    let w = read_matrix(&mut r)?;
    let b = read_matrix(&mut r)?;
    let eta = read_matrix(&mut r)?;
    let p = read_matrix(&mut r)?;
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    if b.rows() != 1 {
        return Err(Error::Format("bias must be a single row".into()));
    }
    if p.shape() != (topo.n_hidden, topo.n_hidden) {
        return Err(Error::Format("covariance shape does not match topology".into()));
    }
    let model = ElmModel::from_parts(topo, w, b.into_vec(), eta, activation)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((model, p))
}

pub fn save_model(path: impl AsRef<Path>, model: &ElmModel, p: &Matrix) -> Result<()> {
    fs::write(path, encode_model(model, p)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ElmModel, Matrix)> {
    decode_model(&fs::read(path)?)
}

pub fn encode_state(state: &OnlineState) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(STATE_MAGIC);
    buf.push(FILE_VERSION);
    buf.extend_from_slice(&(state.samples_seen as u64).to_le_bytes());
    write_matrix(&mut buf, &state.p)?;
    write_matrix(&mut buf, &state.eta)?;
    Ok(buf)
}

pub fn decode_state(bytes: &[u8]) -> Result<OnlineState> {
    let mut r = bytes;
    let header = take(&mut r, 8 + 1 + 8)?;
    if &header[..8] != STATE_MAGIC {
        return Err(Error::Format("bad state magic".into()));
    }
    if header[8] != FILE_VERSION {
        return Err(Error::Format(format!("unsupported state version {}", header[8])));
    }
    let samples_seen = u64::from_le_bytes(header[9..17].try_into().unwrap()) as usize;
    let p = read_matrix(&mut r)?;
    let eta = read_matrix(&mut r)?;
    if !r.is_empty() {
        return Err(Error::Format("trailing bytes after state".into()));
    }
    if p.rows() != p.cols() || p.rows() != eta.rows() {
        return Err(Error::Format("state matrices have inconsistent shapes".into()));
    }
    Ok(OnlineState { p, eta, samples_seen })
}

pub fn save_state(path: impl AsRef<Path>, state: &OnlineState) -> Result<()> {
    fs::write(path, encode_state(state)?)?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<OnlineState> {
    decode_state(&fs::read(path)?)
}

fn take<'a>(r: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if r.len() < n {
        return Err(Error::Format("truncated header".into()));
    }
    let (head, tail) = r.split_at(n);
    *r = tail;
    Ok(head)
}
