//! Binary embedding containers and bridging over externally produced
//! representations.

mod bridge;
mod container;

pub use bridge::{
    bridge_external, scaling_sweep, write_scaling_csv, AlignedBank, BridgeReport, ScalingPoint,
};
pub use container::{Dtype, EmbeddingContainer, MAGIC, VERSION};
