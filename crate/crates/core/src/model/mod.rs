//! The autoregressive transformer decoder with instance embeddings and a
//! Gaussian output head.

mod attention;
mod block;
mod checkpoint;
mod config;
mod decode;
mod net;
mod params;

pub use attention::{attention_head, HeadCache};
pub use block::{decoder_block, BlockCache};
pub use checkpoint::{Checkpoint, NamedTensor, PreprocessManifest};
pub use config::{grid_candidates, num_params, GridSpec, ModelConfig};
pub use decode::DecodeState;
pub use net::{backward, forward, forward_eval, ForwardMode, ModelOutput, NetCache};
pub use params::{BlockParams, HeadParams, LayerNormParams, ModelParams};
