pub mod bridge;
pub mod cli;
pub mod contrastive;
pub mod embed_io;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod maze;
pub mod numerics;
pub mod synthdata;

pub use error::{Error, FormatError, Result};
