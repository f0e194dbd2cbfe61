//! Small feed-forward encoders with hand-written reverse-mode gradients
//! and an Adam optimizer.

mod adam;
mod checkpoint;
mod net;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use net::{Activation, EncoderNet, ForwardCache, Gradients, Layer, OutputMode, MIN_NORM};
