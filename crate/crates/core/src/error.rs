use crate::scene::SpriteId;
use thiserror::Error;

/// Errors surfaced by scenario loading, model construction, and regulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// The all-warp baseline (plus any forced re-renders) does not fit the
    /// frame budget, so no feasible plan exists for this frame.
    #[error(
        "frame {frame}: baseline spend {needed} exceeds budget {budget}; \
         apply spatial degradation or reduce the sprite set"
    )]
    InfeasibleBudget {
        frame: usize,
        needed: f64,
        budget: f64,
    },

    #[error("point sets differ in length ({src} vs {dst})")]
    PointCountMismatch { src: usize, dst: usize },

    #[error("affine fit needs at least 3 point pairs, got {0}")]
    TooFewPoints(usize),

    #[error("sprite {0} has never been rendered; warp is not a legal action")]
    NeverRendered(SpriteId),

    #[error("no attention probability for sprite {0}")]
    MissingAttention(SpriteId),

    #[error("sprite {0} does not belong to any object in the attention model")]
    OrphanSprite(SpriteId),

    #[error("quality knob out of range: {0}")]
    QualityOutOfRange(String),

    /// Re-rendering this sprite costs no more than warping it, so it is never
    /// a knapsack candidate; callers assign it a re-render directly.
    #[error("sprite {0} has nonpositive marginal compute cost; always render it")]
    AlwaysRender(SpriteId),

    #[error("exact search is limited to {limit} candidates, got {got}")]
    TooManyCandidates { limit: usize, got: usize },

    #[error("plan references unknown sprite {0}")]
    UnknownSprite(SpriteId),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
