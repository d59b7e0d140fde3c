//! Deterministic synthetic scenarios for tests and desk-scale experiments.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::regulator::ComputeCostModel;
use crate::scene::{
    CharacteristicPoints, LodLevel, ObjectGroup, ObjectId, Scenario, SceneObject, SpriteDecl,
    SpriteFrameState, SpriteId,
};

/// Motion class assigned to a synthetic sprite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    Static,
    Translating,
    Rotating,
    /// Affine drift plus a shared-phase sinusoidal displacement with a
    /// per-point coefficient vector. The non-affine residual of this class
    /// grows monotonically while the phase stays within a quarter cycle,
    /// which the generator guarantees over the scenario length.
    Wobble,
}

/// Sampling weights over motion classes. Weights need not sum to 1; they are
/// normalized over the positive entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionWeights {
    #[serde(rename = "static")]
    pub stationary: f64,
    pub translating: f64,
    pub rotating: f64,
    pub wobble: f64,
}

impl Default for MotionWeights {
    fn default() -> Self {
        MotionWeights {
            stationary: 1.0,
            translating: 1.0,
            rotating: 1.0,
            wobble: 1.0,
        }
    }
}

impl MotionWeights {
    pub fn only(class: MotionClass) -> Self {
        let mut w = MotionWeights {
            stationary: 0.0,
            translating: 0.0,
            rotating: 0.0,
            wobble: 0.0,
        };
        match class {
            MotionClass::Static => w.stationary = 1.0,
            MotionClass::Translating => w.translating = 1.0,
            MotionClass::Rotating => w.rotating = 1.0,
            MotionClass::Wobble => w.wobble = 1.0,
        }
        w
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<MotionClass, Error> {
        let entries = [
            (MotionClass::Static, self.stationary),
            (MotionClass::Translating, self.translating),
            (MotionClass::Rotating, self.rotating),
            (MotionClass::Wobble, self.wobble),
        ];
        sample_weighted(rng, &entries, "motion")
    }
}

/// Sampling weights over object groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupWeights {
    pub primary_actor: f64,
    pub secondary_actor: f64,
    pub critical_environment: f64,
    pub background_environment: f64,
}

impl Default for GroupWeights {
    fn default() -> Self {
        GroupWeights {
            primary_actor: 1.0,
            secondary_actor: 1.0,
            critical_environment: 1.0,
            background_environment: 1.0,
        }
    }
}

impl GroupWeights {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<ObjectGroup, Error> {
        let entries = [
            (ObjectGroup::PrimaryActor, self.primary_actor),
            (ObjectGroup::SecondaryActor, self.secondary_actor),
            (ObjectGroup::CriticalEnvironment, self.critical_environment),
            (ObjectGroup::BackgroundEnvironment, self.background_environment),
        ];
        sample_weighted(rng, &entries, "group")
    }
}

fn sample_weighted<T: Copy>(
    rng: &mut ChaCha8Rng,
    entries: &[(T, f64)],
    what: &str,
) -> Result<T, Error> {
    let total: f64 = entries.iter().map(|(_, w)| w.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::Validation(format!(
            "{what} weights must include at least one positive entry"
        )));
    }
    let mut x = rng.random_range(0.0..total);
    for (value, w) in entries {
        let w = w.max(0.0);
        if x < w {
            return Ok(*value);
        }
        x -= w;
    }
    Ok(entries.last().expect("nonempty").0)
}

/// Parameters of the synthetic scenario generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub sprite_count: usize,
    pub frame_count: usize,
    #[serde(default)]
    pub motion_weights: MotionWeights,
    #[serde(default)]
    pub group_weights: GroupWeights,
    #[serde(default = "default_points_per_sprite")]
    pub points_per_sprite: usize,
    #[serde(default = "default_sprites_per_object")]
    pub sprites_per_object: usize,
    /// Frame budget as warp-all spend plus this fraction of the gap up to
    /// render-all spend. 0 gives warp-only budgets, 1 renders everything.
    #[serde(default = "default_budget_fraction")]
    pub budget_fraction: f64,
    /// Wobble phase advance over the whole scenario, in cycles. Values up to
    /// 0.25 keep the non-affine residual growing monotonically.
    #[serde(default = "default_wobble_cycles")]
    pub wobble_cycles: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compute_model: Option<ComputeCostModel>,
}

fn default_points_per_sprite() -> usize {
    4
}

fn default_sprites_per_object() -> usize {
    2
}

fn default_budget_fraction() -> f64 {
    0.35
}

fn default_wobble_cycles() -> f64 {
    0.25
}

impl GeneratorSpec {
    pub fn new(sprite_count: usize, frame_count: usize) -> Self {
        GeneratorSpec {
            sprite_count,
            frame_count,
            motion_weights: MotionWeights::default(),
            group_weights: GroupWeights::default(),
            points_per_sprite: default_points_per_sprite(),
            sprites_per_object: default_sprites_per_object(),
            budget_fraction: default_budget_fraction(),
            wobble_cycles: default_wobble_cycles(),
            compute_model: None,
        }
    }
}

struct SpriteMotion {
    base: Vec<[f64; 2]>,
    velocity: [f64; 2],
    /// Rotation in radians per frame about the base centroid.
    spin: f64,
    /// Per-point wobble coefficient vectors, scaled by the shared phase.
    wobble: Vec<[f64; 2]>,
    wobble_rate: f64,
}

impl SpriteMotion {
    fn points_at(&self, t: usize) -> Vec<[f64; 2]> {
        let t = t as f64;
        let (cx, cy) = centroid(&self.base);
        let angle = self.spin * t;
        let (sin, cos) = angle.sin_cos();
        let phase = (self.wobble_rate * t).sin();
        self.base
            .iter()
            .zip(&self.wobble)
            .map(|(p, c)| {
                let dx = p[0] - cx;
                let dy = p[1] - cy;
                [
                    cx + cos * dx - sin * dy + self.velocity[0] * t + phase * c[0],
                    cy + sin * dx + cos * dy + self.velocity[1] * t + phase * c[1],
                ]
            })
            .collect()
    }
}

fn centroid(points: &[[f64; 2]]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p[0]).sum();
    let sy: f64 = points.iter().map(|p| p[1]).sum();
    (sx / n, sy / n)
}

/// Builds a validated scenario as a pure function of `(spec, seed)`.
pub fn generate_synthetic(spec: &GeneratorSpec, seed: u64) -> Result<Scenario, Error> {
    if spec.sprite_count < 1 {
        return Err(Error::Validation("sprite_count must be at least 1".into()));
    }
    if spec.frame_count < 1 {
        return Err(Error::Validation("frame_count must be at least 1".into()));
    }
    if spec.points_per_sprite < 3 {
        return Err(Error::Validation(
            "points_per_sprite must be at least 3".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.budget_fraction) {
        return Err(Error::Validation(
            "budget_fraction must lie in [0, 1]".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let compute_model = spec.compute_model.clone().unwrap_or_default();
    compute_model.validate()?;

    let ids: Vec<SpriteId> = (0..spec.sprite_count)
        .map(|i| SpriteId::new(format!("s{i:03}")))
        .collect();

    // One wobble rate for the whole scene so every wobbling sprite stays
    // within the monotone quarter cycle.
    let span = (spec.frame_count.saturating_sub(1)).max(1) as f64;
    let wobble_rate = 2.0 * std::f64::consts::PI * spec.wobble_cycles / span;

    let mut motions = Vec::with_capacity(ids.len());
    let mut decls: BTreeMap<SpriteId, SpriteDecl> = BTreeMap::new();
    let mut areas = Vec::with_capacity(ids.len());
    let mut pixel_counts = Vec::with_capacity(ids.len());

    for id in &ids {
        let class = spec.motion_weights.sample(&mut rng)?;
        let cx = rng.random_range(120.0..680.0);
        let cy = rng.random_range(120.0..480.0);
        let radius = rng.random_range(20.0..80.0);
        let base: Vec<[f64; 2]> = (0..spec.points_per_sprite)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / spec.points_per_sprite as f64
                    + rng.random_range(-0.2..0.2);
                let r = radius * rng.random_range(0.8..1.2);
                [cx + r * theta.cos(), cy + r * theta.sin()]
            })
            .collect();

        let velocity = if matches!(class, MotionClass::Translating | MotionClass::Wobble) {
            [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]
        } else {
            [0.0, 0.0]
        };
        let spin = if matches!(class, MotionClass::Rotating) {
            rng.random_range(0.01..0.05) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
        } else {
            0.0
        };
        let wobble = if matches!(class, MotionClass::Wobble) {
            (0..spec.points_per_sprite)
                .map(|_| {
                    [
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                    ]
                })
                .collect()
        } else {
            vec![[0.0, 0.0]; spec.points_per_sprite]
        };
        motions.push(SpriteMotion {
            base,
            velocity,
            spin,
            wobble,
            wobble_rate,
        });

        let area: f64 = rng.random_range(0.02..0.25);
        areas.push(area);
        pixel_counts.push((area * 480_000.0).round() as u64);

        let full = rng.random_range(1_500..8_000) as u64;
        let mid_error = rng.random_range(0.05..0.2);
        let coarse_error = rng.random_range(0.25..0.6);
        decls.insert(
            id.clone(),
            SpriteDecl {
                polygon_budget: vec![
                    LodLevel {
                        level: 0,
                        polygon_count: full,
                        geometry_error: 0.0,
                    },
                    LodLevel {
                        level: 1,
                        polygon_count: full / 4,
                        geometry_error: mid_error,
                    },
                    LodLevel {
                        level: 2,
                        polygon_count: full / 20,
                        geometry_error: coarse_error,
                    },
                ],
                max_texture_lod: 3,
                max_shading_level: 2,
            },
        );
    }

    // Objects take consecutive sprites; the first member is the edge sprite.
    let per_object = spec.sprites_per_object.max(1);
    let mut objects = Vec::new();
    for (obj_idx, chunk) in ids.chunks(per_object).enumerate() {
        let group = spec.group_weights.sample(&mut rng)?;
        objects.push(SceneObject {
            id: ObjectId::new(format!("o{obj_idx:02}")),
            group,
            sprite_ids: chunk.to_vec(),
            edge_sprite_ids: vec![chunk[0].clone()],
        });
    }

    let mut frames = Vec::with_capacity(spec.frame_count);
    for t in 0..spec.frame_count {
        let mut frame = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            let points = CharacteristicPoints::new(motions[i].points_at(t))
                .expect("generated points are finite");
            frame.insert(
                id.clone(),
                SpriteFrameState {
                    points,
                    area_fraction: areas[i],
                    pixel_count: pixel_counts[i],
                },
            );
        }
        frames.push(frame);
    }

    // Budget interpolates between the warp-all and render-all spends of the
    // first frame.
    let mut warp_all = 0.0;
    let mut render_all = 0.0;
    for (i, id) in ids.iter().enumerate() {
        let decl = &decls[id];
        let polygons = decl.polygon_budget[0].polygon_count as f64;
        let pixels = pixel_counts[i] as f64;
        warp_all += compute_model.warp_base + compute_model.warp_per_pixel * pixels;
        render_all += compute_model.render_base
            + compute_model.render_per_polygon * polygons
            + compute_model.render_per_pixel * pixels;
    }
    let frame_budget = warp_all + spec.budget_fraction * (render_all - warp_all).max(0.0);

    let scenario = Scenario {
        frame_budget,
        compute_model,
        sprites: decls,
        objects,
        frames,
        seed: Some(seed),
    };
    scenario.validate()?;
    Ok(scenario)
}
