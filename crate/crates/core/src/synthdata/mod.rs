//! Linear-Gaussian generator for three modalities `A ← B → C` with an
//! optional shared latent shift that breaks `A ⟂ C | B`.

mod dataset;
mod generator;
mod standardize;

pub use dataset::{split_pairs, PairDataset, Split, SplitSizes, Splits, TripleDataset};
pub use generator::{make_generator, sample_triples, Generator, SynthSpec};
pub use standardize::Standardizer;
