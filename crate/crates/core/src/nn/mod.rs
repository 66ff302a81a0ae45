//! Dense tensors, layers with manual backward passes, losses and Adam.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod mlp;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{Checkpoint, RngState};
pub use gradcheck::{grad_check, Differentiable, GradCheckOptions, GradCheckReport};
pub use layers::{add_row_bias, linear, relu, relu_backward, BatchNorm, BatchNormCache, Dropout, Linear, Mode};
pub use loss::{mae_loss, mse_loss, LossKind};
pub use mlp::{MlpCache, MlpHead};
pub use params::{Buffer, BufferId, ModelParams, Param, ParamId};
pub use tensor::{cmp_rows, dot, Tensor2};
