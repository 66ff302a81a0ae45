//! Feature-vector regressors used as reference points for the graph models.

mod external;
mod linear;
mod mlp;

pub use external::{align_predictions, import_external_predictions, parse_predictions, ExternalPredictions};
pub use linear::{
    lasso_fit, lasso_lambda_max, lasso_objective, sgd_linear_fit, LassoFit, LassoOptions, LinearModel, Penalty,
    SgdOptions,
};
pub use mlp::{mlp_fit, MlpConfig, MlpModel};
