//! Binary checkpoints: every parameter with its Adam moments, the buffers,
//! the optimizer step, the training RNG state and a free-form model tag.

use std::path::Path;

use super::params::{Buffer, ModelParams, Param};
use super::tensor::Tensor2;
use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HXCK";
const VERSION: u32 = 1;

/// Position of the seeded stream that drives dropout and shuffling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RngState {
    pub seed: u64,
    pub counter: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Describes the architecture, e.g. a serialised model config.
    pub tag: String,
    pub params: ModelParams,
    pub rng: RngState,
    pub epoch: u64,
}

fn write_tensor(w: &mut Writer, t: &Tensor2) {
    w.u64(t.rows() as u64);
    w.u64(t.cols() as u64);
    w.f64s(t.data());
}

fn read_tensor(r: &mut Reader) -> Result<Tensor2> {
    let rows = r.usize()?;
    let cols = r.usize()?;
    let data = r.f64s()?;
    Tensor2::from_vec(rows, cols, data).map_err(|e| Error::format("checkpoint", e.to_string()))
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.str(&self.tag);
        w.u64(self.epoch);
        w.u64(self.rng.seed);
        w.u64(self.rng.counter);
        w.u64(self.params.step);
        w.u64(self.params.params.len() as u64);
        for p in &self.params.params {
            w.str(&p.name);
            write_tensor(&mut w, &p.value);
            write_tensor(&mut w, &p.m);
            write_tensor(&mut w, &p.v);
        }
        w.u64(self.params.buffers.len() as u64);
        for b in &self.params.buffers {
            w.str(&b.name);
            w.f64s(&b.values);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        let (mut r, version) = Reader::open(bytes, MAGIC, "checkpoint")?;
        binio::expect_version(version, VERSION, "checkpoint")?;
        let tag = r.str()?;
        let epoch = r.u64()?;
        let rng = RngState {
            seed: r.u64()?,
            counter: r.u64()?,
        };
        let step = r.u64()?;
        let np = r.usize()?;
        let mut params = Vec::new();
        for _ in 0..np {
            let name = r.str()?;
            let value = read_tensor(&mut r)?;
            let m = read_tensor(&mut r)?;
            let v = read_tensor(&mut r)?;
            if m.shape() != value.shape() || v.shape() != value.shape() {
                return Err(Error::format("checkpoint", format!("moment shape mismatch for {name}")));
            }
            let grad = Tensor2::zeros(value.rows(), value.cols());
            params.push(Param {
                name,
                value,
                grad,
                m,
                v,
            });
        }
        let nb = r.usize()?;
        let mut buffers = Vec::new();
        for _ in 0..nb {
            buffers.push(Buffer {
                name: r.str()?,
                values: r.f64s()?,
            });
        }
        r.finish()?;
        Ok(Checkpoint {
            tag,
            params: ModelParams { params, buffers, step },
            rng,
            epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::from_bytes(&binio::read_file(path)?)
    }
}
