//! Dense numeric primitives with exact forward semantics and analytic
//! gradients, validated against central finite differences.

mod adam;
mod gradcheck;
mod mask;
mod matrix;
mod ops;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use gradcheck::{central_difference, grad_check, relative_error};
pub use mask::CausalMask;
pub use matrix::{matmul, matmul_abt, matmul_atb, Matrix};
pub use ops::{
    attn_value_mix_canonical, dropout_mask, feedforward, feedforward_backward, feedforward_cached,
    layer_norm, layer_norm_backward, layer_norm_rows, masked_softmax, masked_softmax_backward,
    softmax_rows, softmax_rows_backward, softmax_rows_canonical, DropoutPlan, FeedforwardCache,
    LayerNormCache,
};
