//! CAJA: an assembly-line decision game with an AI teammate.
//!
//! Each cycle the player sees an object's visible features and the AI's
//! recommendation, then either accepts it or computes the answer at an
//! opportunity cost. The AI errs exactly on a conjunctive region of the
//! feature space. Midway through a session the AI is updated, and the update
//! can keep, shrink or move that region.

pub mod config;
pub mod error;
pub mod features;
pub mod money;
pub mod players;
pub mod session;
pub mod stream;

pub use config::{Action, GameConfig, LearnerParams, RewardMatrix, UpdateKind};
pub use error::{Error, FieldError, Result};
pub use features::{
    generate_boundary, make_compatible_update, make_incompatible_update, Attribute, ErrorBoundary, FeatureSpace,
    Literal, VisibleFeatures,
};
pub use money::Money;
pub use players::{
    binned_mean_rewards, naive_policy_value, play, run_scripted_player, PlayResult, Player, PlayerKind, RewardBin,
};
pub use session::{now_ms, ActionCounts, GameSession, StepOutcome, TeamTraceRecord};
pub use stream::{generate_stream, phase_error_count, GameObject, ObjectStream, ObjectView};

/// Objects that err after an update but not before it.
pub fn new_errors(old: &ErrorBoundary, new: &ErrorBoundary, space: &FeatureSpace) -> Vec<VisibleFeatures> {
    space
        .enumerate()
        .into_iter()
        .filter(|o| new.contains(o) && !old.contains(o))
        .collect()
}
