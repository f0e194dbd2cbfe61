//! Critic functions, the symmetrized InfoNCE objective and the training
//! loops that fit encoder pairs (and chains sharing a middle encoder).

mod critic;
mod infonce;
mod train;

pub use critic::{critic_backward, critic_score, score_matrix, CriticKind};
pub use infonce::{infonce_loss, infonce_loss_and_grad, InfoNceOutput};
pub use train::{
    train_chain, train_pair, ChainTrainer, EpochLoss, LossHistory, PairTrainer, TrainConfig,
    TrainedChain, TrainedPair,
};
