//! Message-passing regressors with jumping-knowledge readout.
//!
//! Each layer computes `ReLU(P H W + b)` where `P` is the self-looped
//! adjacency (sum aggregation) or its symmetric normalisation. The outputs
//! of all layers are concatenated and fed to an MLP head that emits one
//! scalar per vertex.

mod model;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{spmm, AdjacencyOperator, OperatorKind};
use crate::nn::{add_row_bias, relu, Tensor2};

pub use model::{GnnModel, NodeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Sum over the neighbourhood and the vertex itself.
    Gnn,
    /// Symmetrically normalised aggregation.
    Gcn,
}

impl Variant {
    pub fn operator_kind(self) -> OperatorKind {
        match self {
            Variant::Gnn => OperatorKind::SelfLoops,
            Variant::Gcn => OperatorKind::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnConfig {
    pub variant: Variant,
    pub layer_dims: Vec<usize>,
    /// Hidden widths of the readout MLP.
    pub readout_hidden: Vec<usize>,
    pub dropout: f64,
    pub use_batch_norm: bool,
}

impl GnnConfig {
    pub fn new(variant: Variant) -> Self {
        GnnConfig {
            variant,
            layer_dims: vec![32, 64],
            readout_hidden: vec![64],
            dropout: 0.1,
            use_batch_norm: variant == Variant::Gnn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.is_empty() {
            return Err(Error::Config("at least one message-passing layer is required".into()));
        }
        if self.layer_dims.iter().chain(&self.readout_hidden).any(|&d| d == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Width of the concatenated layer outputs.
    pub fn jk_width(&self) -> usize {
        self.layer_dims.iter().sum()
    }
}

fn check_kind(op: &AdjacencyOperator, want: OperatorKind) -> Result<()> {
    if op.kind() != want {
        return Err(Error::Config(format!("expected {want:?} operator, got {:?}", op.kind())));
    }
    Ok(())
}

fn mp_layer(op: &AdjacencyOperator, h: &Tensor2, w: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    let mut z = spmm(op, &h.matmul(w)?)?;
    add_row_bias(&mut z, b)?;
    Ok(relu(&z))
}

/// `ReLU(Ã H W + b)`.
pub fn mp_layer_gnn(op: &AdjacencyOperator, h: &Tensor2, w: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    check_kind(op, OperatorKind::SelfLoops)?;
    mp_layer(op, h, w, b)
}

/// `ReLU(Â H W + b)`.
pub fn mp_layer_gcn(op: &AdjacencyOperator, h: &Tensor2, w: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    check_kind(op, OperatorKind::Normalized)?;
    mp_layer(op, h, w, b)
}
