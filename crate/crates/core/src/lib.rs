//! Decision-theoretic regulation of rendering approximations.
//!
//! A frame is a set of sprites, each either re-rendered from geometry or
//! reused through a cheap 2D affine warp. Every choice carries per-dimension
//! error estimates (fiducials); a perceptual cost model weighs those into
//! per-sprite costs; attention models turn costs into expected costs; and a
//! per-frame regulator picks the action set minimizing expected cost within
//! a compute budget. The simulator drives the loop over multi-frame
//! scenarios and emits CSV traces.

pub mod attention;
pub mod config;
pub mod cost;
pub mod error;
pub mod fiducial;
pub mod regulator;
pub mod scene;
pub mod sim;

pub use attention::{AttentionModel, Attenuation, GroupPriorSpec, GroupPriors};
pub use config::{load_config, SimConfig};
pub use cost::{CostHistory, CostModel};
pub use error::Error;
pub use fiducial::{Affine2D, Fiducial, QualityErrorModel, QualityVector, RenderAction};
pub use regulator::{ComputeCostModel, FramePlan, KnapsackItem, Policy, Selection};
pub use scene::{
    generate_synthetic, load_scenario, save_scenario, CharacteristicPoints, GeneratorSpec,
    ObjectGroup, ObjectId, Scenario, SceneObject, Sprite, SpriteId,
};
pub use sim::{compare_policies, run_sequence, FrameTrace, PolicySummary};
