//! Per-frame action selection under a compute budget.
//!
//! For each warp-eligible sprite the regulator computes the marginal compute
//! cost of re-rendering versus warping and the expected perceptual benefit of
//! doing so under the active attention model. The ratio of the two is the
//! sprite's refinement rate; the selection problem is a 0/1 knapsack over the
//! budget left after the all-warp baseline. The multi-dimension pass then
//! tries one predefined degradation step per quality dimension in a fixed
//! order, keeping a step only when the re-renders it buys outweigh the
//! quality it gives up.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attention::AttentionModel;
use crate::cost::{frame_cost, sprite_cost, CostModel};
use crate::error::Error;
use crate::fiducial::{
    evaluate_fiducial, QualityErrorModel, QualityVector, RenderAction,
};
use crate::scene::{CharacteristicPoints, Sprite, SpriteId};

mod knapsack;

pub use knapsack::{
    best_single, exact_oracle, greedy_fill, greedy_with_best_single, sahni, KnapsackItem,
    Selection, MAX_EXACT_CANDIDATES,
};

/// Compute spend model, in abstract budget units. Rendering scales with the
/// polygon count at the chosen geometry level and with the pixels actually
/// shaded; warping scales with pixels alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComputeCostModel {
    pub render_base: f64,
    pub render_per_polygon: f64,
    pub render_per_pixel: f64,
    pub warp_base: f64,
    pub warp_per_pixel: f64,
}

impl Default for ComputeCostModel {
    fn default() -> Self {
        ComputeCostModel {
            render_base: 1.0,
            render_per_polygon: 1e-3,
            render_per_pixel: 5e-5,
            warp_base: 0.2,
            warp_per_pixel: 5e-6,
        }
    }
}

impl ComputeCostModel {
    pub fn validate(&self) -> Result<(), Error> {
        let coefficients = [
            self.render_base,
            self.render_per_polygon,
            self.render_per_pixel,
            self.warp_base,
            self.warp_per_pixel,
        ];
        if coefficients.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Validation(
                "compute cost coefficients must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn render_cost(&self, sprite: &Sprite, q: &QualityVector) -> f64 {
        let polygons = sprite.polygon_budget[q.geometry_lod as usize].polygon_count as f64;
        self.render_base
            + self.render_per_polygon * polygons
            + self.render_per_pixel * sprite.pixel_count as f64 * q.spatial_factor * q.spatial_factor
    }

    pub fn warp_cost(&self, sprite: &Sprite) -> f64 {
        self.warp_base + self.warp_per_pixel * sprite.pixel_count as f64
    }

    /// Whether re-rendering at the finest quality costs more than warping.
    /// Scenarios violating this for some sprite make warping pointless there;
    /// such sprites are assigned a re-render outright.
    pub fn dominates_warp(&self, sprite: &Sprite) -> bool {
        self.render_cost(sprite, &QualityVector::finest()) > self.warp_cost(sprite)
    }
}

/// Difference in compute between re-rendering at `q` and warping.
pub fn marginal_compute_cost(sprite: &Sprite, q: &QualityVector, model: &ComputeCostModel) -> f64 {
    model.render_cost(sprite, q) - model.warp_cost(sprite)
}

/// Expected perceptual cost this sprite contributes under a warp minus its
/// contribution under a re-render at `q`: what re-rendering buys. Nonnegative
/// whenever `q` is the finest quality.
pub fn marginal_perceptual_benefit(
    sprite: &Sprite,
    current: &CharacteristicPoints,
    q: &QualityVector,
    attention: &AttentionModel,
    cost_model: &CostModel,
    quality_model: &QualityErrorModel,
) -> Result<f64, Error> {
    let weight = attention.weight(&sprite.id)?;
    let warp_fid = evaluate_fiducial(sprite, &RenderAction::Warp, current, quality_model)?;
    let render_fid = quality_model.quality_errors(sprite, q)?;
    let warp_cost = sprite_cost(sprite.area_fraction, &warp_fid, cost_model);
    let render_cost = sprite_cost(sprite.area_fraction, &render_fid, cost_model);
    Ok(weight * (warp_cost - render_cost))
}

/// Expected perceptual refinement per budget unit. A nonpositive denominator
/// means the sprite should simply be re-rendered and never enters the
/// knapsack.
pub fn refinement_rate(
    id: &SpriteId,
    perceptual_benefit: f64,
    compute_cost: f64,
) -> Result<f64, Error> {
    if compute_cost <= 0.0 {
        return Err(Error::AlwaysRender(id.clone()));
    }
    Ok(perceptual_benefit / compute_cost)
}

/// Frame regulation policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    /// Greedy by refinement rate, compared against the best single item.
    Greedy,
    /// Limited subset search seeded with subsets of size up to k (k <= 3).
    Sahni(usize),
    /// Greedy baseline plus one degradation step per quality dimension.
    Multidim,
    /// Re-render everything at the finest quality; errors if over budget.
    RenderAll,
    /// Warp everything that can be warped.
    WarpAll,
    /// Exact knapsack per frame; limited to small candidate sets.
    Oracle,
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "greedy" => Ok(Policy::Greedy),
            "multidim" => Ok(Policy::Multidim),
            "render-all" => Ok(Policy::RenderAll),
            "warp-all" => Ok(Policy::WarpAll),
            "oracle" => Ok(Policy::Oracle),
            other => {
                if let Some(k) = other.strip_prefix("sahni:") {
                    let k: usize = k.parse().map_err(|_| {
                        Error::Validation(format!("bad subset size in policy {other:?}"))
                    })?;
                    if k > 3 {
                        return Err(Error::Validation(
                            "sahni subset size is limited to 3".into(),
                        ));
                    }
                    Ok(Policy::Sahni(k))
                } else {
                    Err(Error::Validation(format!(
                        "unknown policy {other:?}; expected \
                         greedy|sahni:k|multidim|render-all|warp-all|oracle"
                    )))
                }
            }
        }
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.to_string()
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Greedy => write!(f, "greedy"),
            Policy::Sahni(k) => write!(f, "sahni:{k}"),
            Policy::Multidim => write!(f, "multidim"),
            Policy::RenderAll => write!(f, "render-all"),
            Policy::WarpAll => write!(f, "warp-all"),
            Policy::Oracle => write!(f, "oracle"),
        }
    }
}

/// Predefined degradation step per quality dimension for the multi-dimension
/// pass. A level step of 0 or a spatial factor of 1 disables that dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegradationSteps {
    pub texture_levels: u32,
    pub geometry_levels: u32,
    pub spatial_factor: f64,
    pub shading_levels: u32,
}

impl Default for DegradationSteps {
    fn default() -> Self {
        DegradationSteps {
            texture_levels: 1,
            geometry_levels: 1,
            spatial_factor: 0.75,
            shading_levels: 1,
        }
    }
}

impl DegradationSteps {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.spatial_factor.is_finite()
            && self.spatial_factor > 0.0
            && self.spatial_factor <= 1.0)
        {
            return Err(Error::Validation(
                "spatial degradation factor must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// The quality dimensions explored by the multi-dimension pass, in its fixed
/// priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DegradeDimension {
    Texture,
    Geometry,
    Spatial,
    Shading,
}

impl fmt::Display for DegradeDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DegradeDimension::Texture => "texture",
            DegradeDimension::Geometry => "geometry",
            DegradeDimension::Spatial => "spatial",
            DegradeDimension::Shading => "shading",
        };
        f.write_str(name)
    }
}

const DIMENSION_ORDER: [DegradeDimension; 4] = [
    DegradeDimension::Texture,
    DegradeDimension::Geometry,
    DegradeDimension::Spatial,
    DegradeDimension::Shading,
];

/// Benefits below this are treated as zero when building candidates. The
/// affine fit leaves residuals around 1e-25 pixels^2 on motion-free sprites;
/// re-rendering for such phantom gains would waste budget and skew re-render
/// counts.
pub const BENEFIT_EPSILON: f64 = 1e-12;

fn apply_step(
    q: &QualityVector,
    dim: DegradeDimension,
    steps: &DegradationSteps,
) -> Option<QualityVector> {
    let mut next = *q;
    match dim {
        DegradeDimension::Texture => {
            if steps.texture_levels == 0 {
                return None;
            }
            next.texture_lod += steps.texture_levels;
        }
        DegradeDimension::Geometry => {
            if steps.geometry_levels == 0 {
                return None;
            }
            next.geometry_lod += steps.geometry_levels;
        }
        DegradeDimension::Spatial => {
            if steps.spatial_factor >= 1.0 {
                return None;
            }
            next.spatial_factor *= steps.spatial_factor;
        }
        DegradeDimension::Shading => {
            if steps.shading_levels == 0 {
                return None;
            }
            next.shading_level += steps.shading_levels;
        }
    }
    Some(next)
}

/// Everything the regulator needs to plan one frame. Sprites carry their
/// current gold points; the context is read-only and planning is pure.
#[derive(Clone, Copy)]
pub struct RegulationContext<'a> {
    pub sprites: &'a BTreeMap<SpriteId, Sprite>,
    pub frame: usize,
    pub budget: f64,
    pub attention: &'a AttentionModel,
    pub cost_model: &'a CostModel,
    pub quality_model: &'a QualityErrorModel,
    pub compute_model: &'a ComputeCostModel,
    pub degradation: &'a DegradationSteps,
}

/// Planner diagnostics kept alongside a plan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanDiagnostics {
    /// Refinement rate of every warp-eligible sprite with positive marginal
    /// compute cost.
    pub refinement_rates: BTreeMap<SpriteId, f64>,
    /// Sprites re-rendered outright because warping saves nothing.
    pub always_render: Vec<SpriteId>,
    /// Degradation dimensions skipped by the pruning test, with reasons.
    pub pruned_dimensions: Vec<String>,
    /// Quality vector applied to this frame's re-renders (before per-sprite
    /// clamping).
    pub rerender_quality: QualityVector,
    /// Expected cost of the greedy baseline the multi-dimension pass started
    /// from.
    pub baseline_expected_cost: Option<f64>,
}

/// The regulator's decision for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub frame: usize,
    pub actions: BTreeMap<SpriteId, RenderAction>,
    /// Expected perceptual cost of the frame under the active attention
    /// model.
    pub expected_cost: f64,
    /// Unweighted sum of per-sprite perceptual costs.
    pub raw_cost: f64,
    /// Predicted compute spend; never exceeds the budget.
    pub spend: f64,
    pub policy: String,
    pub diagnostics: PlanDiagnostics,
}

impl FramePlan {
    pub fn rerender_count(&self) -> usize {
        self.actions.values().filter(|a| a.is_rerender()).count()
    }
}

struct CandidateSet {
    items: Vec<KnapsackItem>,
    /// Warp spend of all candidates plus render spend of forced re-renders.
    base_spend: f64,
    forced: BTreeMap<SpriteId, RenderAction>,
    always_render: Vec<SpriteId>,
    rates: BTreeMap<SpriteId, f64>,
}

fn build_candidates(
    ctx: &RegulationContext<'_>,
    quality: &QualityVector,
) -> Result<CandidateSet, Error> {
    let mut set = CandidateSet {
        items: Vec::new(),
        base_spend: 0.0,
        forced: BTreeMap::new(),
        always_render: Vec::new(),
        rates: BTreeMap::new(),
    };
    for (id, sprite) in ctx.sprites {
        let q = quality.clamped_for(sprite);
        if !sprite.warp_eligible() {
            // First appearance: the render cost is charged before the
            // knapsack runs.
            set.base_spend += ctx.compute_model.render_cost(sprite, &q);
            set.forced.insert(id.clone(), RenderAction::Rerender(q));
            continue;
        }
        let delta_compute = marginal_compute_cost(sprite, &q, ctx.compute_model);
        if delta_compute <= 0.0 {
            set.base_spend += ctx.compute_model.render_cost(sprite, &q);
            set.forced.insert(id.clone(), RenderAction::Rerender(q));
            set.always_render.push(id.clone());
            continue;
        }
        set.base_spend += ctx.compute_model.warp_cost(sprite);
        let benefit = marginal_perceptual_benefit(
            sprite,
            &sprite.points_gold,
            &q,
            ctx.attention,
            ctx.cost_model,
            ctx.quality_model,
        )?;
        set.rates
            .insert(id.clone(), refinement_rate(id, benefit, delta_compute)?);
        if benefit > BENEFIT_EPSILON {
            set.items.push(KnapsackItem {
                id: id.clone(),
                benefit,
                weight: delta_compute,
            });
        }
    }
    if set.base_spend > ctx.budget {
        return Err(Error::InfeasibleBudget {
            frame: ctx.frame,
            needed: set.base_spend,
            budget: ctx.budget,
        });
    }
    Ok(set)
}

/// Expected and raw perceptual cost of executing `actions` on the current
/// frame state, plus the per-sprite costs.
pub fn evaluate_actions(
    ctx: &RegulationContext<'_>,
    actions: &BTreeMap<SpriteId, RenderAction>,
) -> Result<(f64, f64, BTreeMap<SpriteId, f64>), Error> {
    let mut costs = BTreeMap::new();
    for (id, action) in actions {
        let sprite = ctx
            .sprites
            .get(id)
            .ok_or_else(|| Error::UnknownSprite(id.clone()))?;
        let fid = evaluate_fiducial(sprite, action, &sprite.points_gold, ctx.quality_model)?;
        costs.insert(
            id.clone(),
            sprite_cost(sprite.area_fraction, &fid, ctx.cost_model),
        );
    }
    let expected = ctx.attention.expected_cost(&costs)?;
    let raw = frame_cost(&costs);
    Ok((expected, raw, costs))
}

fn assemble_plan(
    ctx: &RegulationContext<'_>,
    policy: Policy,
    quality: &QualityVector,
    cands: &CandidateSet,
    selection: &Selection,
) -> Result<FramePlan, Error> {
    let mut actions = BTreeMap::new();
    for (id, sprite) in ctx.sprites {
        let action = if let Some(forced) = cands.forced.get(id) {
            *forced
        } else if selection.chosen.contains(id) {
            RenderAction::Rerender(quality.clamped_for(sprite))
        } else {
            RenderAction::Warp
        };
        actions.insert(id.clone(), action);
    }
    let (expected_cost, raw_cost, _) = evaluate_actions(ctx, &actions)?;
    let spend = cands.base_spend + selection.spend;
    debug_assert!(spend <= ctx.budget);
    Ok(FramePlan {
        frame: ctx.frame,
        actions,
        expected_cost,
        raw_cost,
        spend,
        policy: policy.to_string(),
        diagnostics: PlanDiagnostics {
            refinement_rates: cands.rates.clone(),
            always_render: cands.always_render.clone(),
            pruned_dimensions: Vec::new(),
            rerender_quality: *quality,
            baseline_expected_cost: None,
        },
    })
}

/// Plans one frame under the given policy.
pub fn plan_frame(ctx: &RegulationContext<'_>, policy: Policy) -> Result<FramePlan, Error> {
    ctx.degradation.validate()?;
    let finest = QualityVector::finest();
    match policy {
        Policy::RenderAll => {
            let mut actions = BTreeMap::new();
            let mut spend = 0.0;
            for (id, sprite) in ctx.sprites {
                let q = finest.clamped_for(sprite);
                spend += ctx.compute_model.render_cost(sprite, &q);
                actions.insert(id.clone(), RenderAction::Rerender(q));
            }
            if spend > ctx.budget {
                return Err(Error::InfeasibleBudget {
                    frame: ctx.frame,
                    needed: spend,
                    budget: ctx.budget,
                });
            }
            let (expected_cost, raw_cost, _) = evaluate_actions(ctx, &actions)?;
            Ok(FramePlan {
                frame: ctx.frame,
                actions,
                expected_cost,
                raw_cost,
                spend,
                policy: policy.to_string(),
                diagnostics: PlanDiagnostics {
                    rerender_quality: finest,
                    ..PlanDiagnostics::default()
                },
            })
        }
        Policy::WarpAll => {
            let cands = build_candidates(ctx, &finest)?;
            assemble_plan(ctx, policy, &finest, &cands, &Selection::default())
        }
        Policy::Greedy => {
            let cands = build_candidates(ctx, &finest)?;
            let selection = greedy_with_best_single(&cands.items, ctx.budget - cands.base_spend);
            assemble_plan(ctx, policy, &finest, &cands, &selection)
        }
        Policy::Sahni(k) => {
            let cands = build_candidates(ctx, &finest)?;
            let selection = sahni(&cands.items, ctx.budget - cands.base_spend, k)?;
            assemble_plan(ctx, policy, &finest, &cands, &selection)
        }
        Policy::Oracle => {
            let cands = build_candidates(ctx, &finest)?;
            let selection = exact_oracle(&cands.items, ctx.budget - cands.base_spend)?;
            assemble_plan(ctx, policy, &finest, &cands, &selection)
        }
        Policy::Multidim => multidim_greedy(ctx),
    }
}

/// The added rerender-side cost a degradation step inflicts on one sprite.
fn step_penalty(
    ctx: &RegulationContext<'_>,
    sprite: &Sprite,
    from: &QualityVector,
    to: &QualityVector,
) -> Result<f64, Error> {
    let weight = ctx.attention.weight(&sprite.id)?;
    let before = ctx
        .quality_model
        .quality_errors(sprite, &from.clamped_for(sprite))?;
    let after = ctx
        .quality_model
        .quality_errors(sprite, &to.clamped_for(sprite))?;
    Ok(weight
        * (sprite_cost(sprite.area_fraction, &after, ctx.cost_model)
            - sprite_cost(sprite.area_fraction, &before, ctx.cost_model)))
}

/// Greedy baseline plus one myopic degradation step per dimension, explored
/// as texture, then geometry, then spatial sampling, then shading. A step is
/// kept only when the whole-frame expected cost strictly drops. A dimension
/// is skipped early when re-rendering the first-pruned sprite could not even
/// pay for the smallest cost increase the step inflicts.
pub fn multidim_greedy(ctx: &RegulationContext<'_>) -> Result<FramePlan, Error> {
    let mut quality = QualityVector::finest();
    let mut cands = build_candidates(ctx, &quality)?;
    let mut selection = greedy_with_best_single(&cands.items, ctx.budget - cands.base_spend);
    let mut incumbent = assemble_plan(ctx, Policy::Multidim, &quality, &cands, &selection)?;
    let baseline_expected_cost = incumbent.expected_cost;
    let mut pruned = Vec::new();

    for dim in DIMENSION_ORDER {
        let Some(next_quality) = apply_step(&quality, dim, ctx.degradation) else {
            continue;
        };
        let Some((_, gain_bound)) = selection.first_skipped.clone() else {
            pruned.push(format!("{dim}: no sprite was pruned by the deadline"));
            continue;
        };
        // Smallest cost increase the step could inflict, over the sprites
        // known to be on the rerender side.
        let mut min_penalty = f64::INFINITY;
        for id in selection.chosen.iter().chain(cands.forced.keys()) {
            let sprite = &ctx.sprites[id];
            min_penalty = min_penalty.min(step_penalty(ctx, sprite, &quality, &next_quality)?);
        }
        if min_penalty.is_finite() && gain_bound < min_penalty {
            pruned.push(format!(
                "{dim}: best regain {gain_bound:.6} below minimum step cost {min_penalty:.6}"
            ));
            continue;
        }

        let next_cands = build_candidates(ctx, &next_quality)?;
        let next_selection =
            greedy_with_best_single(&next_cands.items, ctx.budget - next_cands.base_spend);
        let candidate_plan =
            assemble_plan(ctx, Policy::Multidim, &next_quality, &next_cands, &next_selection)?;
        if candidate_plan.expected_cost < incumbent.expected_cost {
            incumbent = candidate_plan;
            quality = next_quality;
            cands = next_cands;
            selection = next_selection;
        }
    }

    incumbent.diagnostics.pruned_dimensions = pruned;
    incumbent.diagnostics.baseline_expected_cost = Some(baseline_expected_cost);
    Ok(incumbent)
}
