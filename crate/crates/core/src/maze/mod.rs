//! Continuous maze with edge walls, ordinal row/column annotations,
//! goal-directed or random-walk data collection, and language-conditioned policies that
//! score actions either directly or by marginalizing over future states.

mod data;
mod env;
mod labels;
mod policy;

pub use data::{
    collect, label_features, make_crl_pairs, make_lang_pairs, sample_offset, uniform_state,
    CollectPolicy, Featurizer, Trajectory,
};
pub use env::{Cell, MazeEnv, State, ACTIONS, ACTION_NAMES, LEFT};
pub use labels::{column_and_row_labels, find_label, ordinal, LanguageLabel};
pub use policy::{
    action_heatmap, fork_episodes, label_heatmap, rollout, rollout_eval, train_maze, train_maze_on,
    write_heatmap_csv, Episode, MazeConfig, MazeModel, PolicyKind, RolloutReport, Selection,
};
