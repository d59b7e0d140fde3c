//! Scene data model: sprites, objects, and multi-frame scenarios.
//!
//! A [`Scenario`] is a self-contained description of a sprite animation: gold
//! characteristic points per sprite per frame, object grouping, per-sprite
//! level-of-detail declarations, a compute cost model, and a frame budget.
//! Scenarios are immutable after load and safe to share across runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fiducial::QualityVector;
use crate::regulator::ComputeCostModel;

mod io;
mod synth;

pub use io::{load_scenario, save_scenario, scenario_from_json, scenario_to_json};
pub use synth::{generate_synthetic, GeneratorSpec, GroupWeights, MotionClass, MotionWeights};

/// Identifier of a sprite. Ordering doubles as the deterministic tie-breaker
/// throughout the regulator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpriteId(String);

impl SpriteId {
    pub fn new(id: impl Into<String>) -> Self {
        SpriteId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpriteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SpriteId {
    fn from(s: &str) -> Self {
        SpriteId::new(s)
    }
}

/// Identifier of a scene object (a group of sprites perceived as one thing).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        ObjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId::new(s)
    }
}

/// Ordered screen-space positions (pixels) tracked per sprite to estimate the
/// error of reusing a previous rendering through an affine warp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct CharacteristicPoints(Vec<[f64; 2]>);

impl CharacteristicPoints {
    /// At least 3 points, all coordinates finite. Collinear sets are allowed
    /// here; the affine fitter flags them as degenerate.
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, Error> {
        if points.len() < 3 {
            return Err(Error::Validation(format!(
                "characteristic point set needs at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation(
                "characteristic point coordinates must be finite".into(),
            ));
        }
        Ok(CharacteristicPoints(points))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[[f64; 2]] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, [f64; 2]> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for CharacteristicPoints {
    type Output = [f64; 2];

    fn index(&self, i: usize) -> &[f64; 2] {
        &self.0[i]
    }
}

impl TryFrom<Vec<[f64; 2]>> for CharacteristicPoints {
    type Error = Error;

    fn try_from(points: Vec<[f64; 2]>) -> Result<Self, Error> {
        CharacteristicPoints::new(points)
    }
}

impl From<CharacteristicPoints> for Vec<[f64; 2]> {
    fn from(p: CharacteristicPoints) -> Self {
        p.0
    }
}

/// One declared level of geometric detail. Coarser levels have fewer polygons
/// and a larger declared error relative to the full model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LodLevel {
    pub level: u32,
    pub polygon_count: u64,
    pub geometry_error: f64,
}

/// Authoring group of an object, used to seed attention priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectGroup {
    PrimaryActor,
    SecondaryActor,
    CriticalEnvironment,
    BackgroundEnvironment,
}

impl ObjectGroup {
    pub const ALL: [ObjectGroup; 4] = [
        ObjectGroup::PrimaryActor,
        ObjectGroup::SecondaryActor,
        ObjectGroup::CriticalEnvironment,
        ObjectGroup::BackgroundEnvironment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectGroup::PrimaryActor => "primary_actor",
            ObjectGroup::SecondaryActor => "secondary_actor",
            ObjectGroup::CriticalEnvironment => "critical_environment",
            ObjectGroup::BackgroundEnvironment => "background_environment",
        }
    }
}

impl fmt::Display for ObjectGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A set of sprites perceived as one contiguous object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: ObjectId,
    pub group: ObjectGroup,
    #[serde(rename = "sprites")]
    pub sprite_ids: Vec<SpriteId>,
    /// Sprites that define the object silhouette; boosts their conditional
    /// attention when models are authored from groups.
    #[serde(rename = "edge_sprites", default)]
    pub edge_sprite_ids: Vec<SpriteId>,
}

/// Static per-sprite declarations that do not vary by frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpriteDecl {
    /// Level-of-detail table, finest first. `geometry_error` of level 0 must
    /// be 0 and the declared errors must not decrease with the level.
    #[serde(default = "default_polygon_budget")]
    pub polygon_budget: Vec<LodLevel>,
    #[serde(default = "default_max_texture_lod")]
    pub max_texture_lod: u32,
    #[serde(default = "default_max_shading_level")]
    pub max_shading_level: u32,
}

fn default_polygon_budget() -> Vec<LodLevel> {
    vec![LodLevel {
        level: 0,
        polygon_count: 1000,
        geometry_error: 0.0,
    }]
}

fn default_max_texture_lod() -> u32 {
    3
}

fn default_max_shading_level() -> u32 {
    2
}

impl Default for SpriteDecl {
    fn default() -> Self {
        SpriteDecl {
            polygon_budget: default_polygon_budget(),
            max_texture_lod: default_max_texture_lod(),
            max_shading_level: default_max_shading_level(),
        }
    }
}

/// Per-frame observable state of one sprite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpriteFrameState {
    pub points: CharacteristicPoints,
    /// Fraction of the projection surface covered by the sprite, in [0, 1].
    /// 0 marks a sprite that is absent this frame.
    pub area_fraction: f64,
    pub pixel_count: u64,
}

/// A complete multi-frame input: per-frame sprite states, object grouping,
/// static sprite declarations, and the compute model and budget under which
/// the sequence is regulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Compute units available per frame.
    pub frame_budget: f64,
    pub compute_model: ComputeCostModel,
    /// Optional static declarations; sprites without an entry use defaults.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sprites: BTreeMap<SpriteId, SpriteDecl>,
    pub objects: Vec<SceneObject>,
    /// One map per frame, sprite id to state. Every frame must carry exactly
    /// the sprite set of frame 0; absence is modeled as zero area.
    pub frames: Vec<BTreeMap<SpriteId, SpriteFrameState>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Static declarations for a sprite, falling back to defaults.
    pub fn decl(&self, id: &SpriteId) -> SpriteDecl {
        self.sprites.get(id).cloned().unwrap_or_default()
    }

    pub fn object_of(&self, id: &SpriteId) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.sprite_ids.contains(id))
    }

    pub fn sprite_ids(&self) -> Vec<SpriteId> {
        self.frames
            .first()
            .map(|f| f.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.frame_budget.is_finite() && self.frame_budget > 0.0) {
            return Err(Error::Validation(format!(
                "frame_budget must be positive and finite, got {}",
                self.frame_budget
            )));
        }
        self.compute_model.validate()?;
        if self.frames.is_empty() {
            return Err(Error::Validation("scenario has no frames".into()));
        }

        let frame0: BTreeSet<&SpriteId> = self.frames[0].keys().collect();
        if frame0.is_empty() {
            return Err(Error::Validation("frame 0 has no sprites".into()));
        }
        for id in &frame0 {
            validate_token("sprite id", id.as_str())?;
        }

        // Frames must agree on the sprite set and on per-sprite point counts.
        let mut point_counts: BTreeMap<&SpriteId, usize> = BTreeMap::new();
        for (idx, frame) in self.frames.iter().enumerate() {
            let ids: BTreeSet<&SpriteId> = frame.keys().collect();
            if ids != frame0 {
                return Err(Error::Validation(format!(
                    "frame {idx} does not carry the sprite set of frame 0 \
                     (sprites appear from frame 0; absence is area_fraction 0)"
                )));
            }
            for (id, state) in frame {
                if !(0.0..=1.0).contains(&state.area_fraction) || !state.area_fraction.is_finite() {
                    return Err(Error::Validation(format!(
                        "area_fraction out of range for sprite {id} in frame {idx}: {}",
                        state.area_fraction
                    )));
                }
                let n = state.points.len();
                match point_counts.get(id) {
                    None => {
                        point_counts.insert(id, n);
                    }
                    Some(&expected) if expected != n => {
                        return Err(Error::Validation(format!(
                            "sprite {id} changes point count in frame {idx} ({expected} vs {n})"
                        )));
                    }
                    _ => {}
                }
            }
        }

        // Objects partition the sprite set.
        if self.objects.is_empty() {
            return Err(Error::Validation("scenario declares no objects".into()));
        }
        let mut owned: BTreeMap<&SpriteId, &ObjectId> = BTreeMap::new();
        let mut object_ids: BTreeSet<&ObjectId> = BTreeSet::new();
        for object in &self.objects {
            validate_token("object id", object.id.as_str())?;
            if !object_ids.insert(&object.id) {
                return Err(Error::Validation(format!(
                    "duplicate object id {}",
                    object.id
                )));
            }
            if object.sprite_ids.is_empty() {
                return Err(Error::Validation(format!(
                    "object {} has no sprites",
                    object.id
                )));
            }
            for sid in &object.sprite_ids {
                if !frame0.contains(sid) {
                    return Err(Error::Validation(format!(
                        "object {} references sprite {} absent from the frames",
                        object.id, sid
                    )));
                }
                if let Some(prev) = owned.insert(sid, &object.id) {
                    return Err(Error::Validation(format!(
                        "sprite {sid} belongs to both object {prev} and object {}",
                        object.id
                    )));
                }
            }
            for sid in &object.edge_sprite_ids {
                if !object.sprite_ids.contains(sid) {
                    return Err(Error::Validation(format!(
                        "object {} marks non-member sprite {} as an edge sprite",
                        object.id, sid
                    )));
                }
            }
        }
        for id in &frame0 {
            if !owned.contains_key(*id) {
                return Err(Error::Validation(format!(
                    "sprite {id} belongs to no object"
                )));
            }
        }

        for (id, decl) in &self.sprites {
            if !frame0.contains(id) {
                return Err(Error::Validation(format!(
                    "sprite declaration for {id} has no matching sprite in the frames"
                )));
            }
            validate_polygon_budget(id, &decl.polygon_budget)?;
        }
        Ok(())
    }
}

fn validate_token(kind: &str, token: &str) -> Result<(), Error> {
    let ok = !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{kind} {token:?} must be a nonempty token of [A-Za-z0-9_.-]"
        )))
    }
}

fn validate_polygon_budget(id: &SpriteId, budget: &[LodLevel]) -> Result<(), Error> {
    if budget.is_empty() {
        return Err(Error::Validation(format!(
            "sprite {id} declares an empty polygon budget"
        )));
    }
    for (i, lod) in budget.iter().enumerate() {
        if lod.level as usize != i {
            return Err(Error::Validation(format!(
                "sprite {id} polygon budget levels must be 0..n in order, found level {} at index {i}",
                lod.level
            )));
        }
        if !(lod.geometry_error.is_finite() && lod.geometry_error >= 0.0) {
            return Err(Error::Validation(format!(
                "sprite {id} level {i} geometry_error must be finite and nonnegative"
            )));
        }
    }
    if budget[0].geometry_error != 0.0 {
        return Err(Error::Validation(format!(
            "sprite {id} finest level must declare geometry_error 0"
        )));
    }
    for pair in budget.windows(2) {
        if pair[1].polygon_count > pair[0].polygon_count {
            return Err(Error::Validation(format!(
                "sprite {id} polygon counts must not increase with the level"
            )));
        }
        if pair[1].geometry_error < pair[0].geometry_error {
            return Err(Error::Validation(format!(
                "sprite {id} geometry errors must not decrease with the level"
            )));
        }
    }
    Ok(())
}

/// Snapshot taken the last time a sprite was re-rendered from geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSnapshot {
    pub points: CharacteristicPoints,
    pub frame: usize,
    pub quality: QualityVector,
}

/// The unit of regulation: current screen state plus rendering history for
/// one sprite.
#[derive(Debug, Clone, PartialEq)]
pub struct Sprite {
    pub id: SpriteId,
    pub object_id: ObjectId,
    pub group: ObjectGroup,
    pub area_fraction: f64,
    /// Ideal positions of the characteristic points this frame.
    pub points_gold: CharacteristicPoints,
    pub pixel_count: u64,
    pub polygon_budget: Vec<LodLevel>,
    pub max_texture_lod: u32,
    pub max_shading_level: u32,
    /// `None` until the sprite has been rendered once; warping is illegal
    /// before that.
    pub last_render: Option<RenderSnapshot>,
}

impl Sprite {
    /// Builds the runtime sprite from a scenario's frame-0 state.
    pub fn from_scenario(scenario: &Scenario, id: &SpriteId) -> Result<Sprite, Error> {
        let state = scenario
            .frames
            .first()
            .and_then(|f| f.get(id))
            .ok_or_else(|| Error::UnknownSprite(id.clone()))?;
        let object = scenario
            .object_of(id)
            .ok_or_else(|| Error::Validation(format!("sprite {id} belongs to no object")))?;
        let decl = scenario.decl(id);
        Ok(Sprite {
            id: id.clone(),
            object_id: object.id.clone(),
            group: object.group,
            area_fraction: state.area_fraction,
            points_gold: state.points.clone(),
            pixel_count: state.pixel_count,
            polygon_budget: decl.polygon_budget,
            max_texture_lod: decl.max_texture_lod,
            max_shading_level: decl.max_shading_level,
            last_render: None,
        })
    }

    pub fn warp_eligible(&self) -> bool {
        self.last_render.is_some()
    }

    pub fn geometry_lod_count(&self) -> u32 {
        self.polygon_budget.len() as u32
    }

    /// Advances the observable per-frame state.
    pub fn apply_frame_state(&mut self, state: &SpriteFrameState) {
        self.area_fraction = state.area_fraction;
        self.points_gold = state.points.clone();
        self.pixel_count = state.pixel_count;
    }

    /// Records a re-render at the current gold points.
    pub fn mark_rendered(&mut self, frame: usize, quality: QualityVector) {
        self.last_render = Some(RenderSnapshot {
            points: self.points_gold.clone(),
            frame,
            quality,
        });
    }
}

/// Small valid scenario shared by unit tests across the crate.
#[cfg(test)]
pub(crate) fn tiny_scenario() -> Scenario {
    let points = CharacteristicPoints::new(vec![
        [80.0, 80.0],
        [120.0, 80.0],
        [120.0, 120.0],
        [80.0, 120.0],
    ])
    .unwrap();
    let state = SpriteFrameState {
        points,
        area_fraction: 0.1,
        pixel_count: 10_000,
    };
    let mut frame = BTreeMap::new();
    frame.insert(SpriteId::from("a"), state.clone());
    frame.insert(SpriteId::from("b"), state);
    Scenario {
        frame_budget: 50.0,
        compute_model: ComputeCostModel::default(),
        sprites: BTreeMap::new(),
        objects: vec![SceneObject {
            id: ObjectId::from("obj"),
            group: ObjectGroup::PrimaryActor,
            sprite_ids: vec![SpriteId::from("a"), SpriteId::from("b")],
            edge_sprite_ids: vec![SpriteId::from("a")],
        }],
        frames: vec![frame.clone(), frame.clone(), frame],
        seed: None,
    }
}
