//! Constructed fixtures for the multi-dimension degradation pass: one where a
//! spatial step frees exactly enough budget to buy back a valuable
//! re-render, one where every step is harmful, and one with budget to spare.

use std::collections::BTreeMap;

use framereg_core::attention::BinaryModel;
use framereg_core::cost::CostModel;
use framereg_core::fiducial::{warp_error, QualityErrorModel, QualityVector, RenderAction};
use framereg_core::regulator::{plan_frame, ComputeCostModel, DegradationSteps, RegulationContext};
use framereg_core::scene::{CharacteristicPoints, LodLevel, RenderSnapshot};
use framereg_core::{AttentionModel, ObjectGroup, Policy, Sprite, SpriteId};

fn sprite(id: &str, pixel_count: u64, area: f64, wobble: f64) -> Sprite {
    let snapshot: Vec<[f64; 2]> = vec![[0.0, 0.0], [100.0, 0.0], [100.0, 100.0], [0.0, 100.0]];
    // A hyperbolic-ish displacement pattern: no affine transform absorbs it.
    let gold: Vec<[f64; 2]> = snapshot
        .iter()
        .zip([(1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (-1.0, -1.0)])
        .map(|(p, (dx, dy))| [p[0] + wobble * dx, p[1] + wobble * dy])
        .collect();
    Sprite {
        id: SpriteId::from(id),
        object_id: "o".into(),
        group: ObjectGroup::PrimaryActor,
        area_fraction: area,
        points_gold: CharacteristicPoints::new(gold).unwrap(),
        pixel_count,
        polygon_budget: vec![LodLevel {
            level: 0,
            polygon_count: 100,
            geometry_error: 0.0,
        }],
        max_texture_lod: 0,
        max_shading_level: 0,
        last_render: Some(RenderSnapshot {
            points: CharacteristicPoints::new(snapshot).unwrap(),
            frame: 0,
            quality: QualityVector::finest(),
        }),
    }
}

fn full_attention(ids: &[&str]) -> AttentionModel {
    AttentionModel::Binary(BinaryModel {
        probabilities: ids.iter().map(|id| (SpriteId::from(*id), 1.0)).collect(),
        alpha: 0.0,
    })
}

fn pixel_only_compute() -> ComputeCostModel {
    ComputeCostModel {
        render_base: 1.0,
        render_per_polygon: 0.0,
        render_per_pixel: 1e-4,
        warp_base: 0.1,
        warp_per_pixel: 0.0,
    }
}

#[test]
fn spatial_step_buys_back_a_valuable_rerender() {
    let wobbly = sprite("wobbly", 100_000, 0.5, 3.0);
    let calm = sprite("calm", 1_000, 0.1, 0.0);
    assert!(warp_error(&wobbly, &wobbly.points_gold.clone()).unwrap() > 10.0);

    let sprites: BTreeMap<SpriteId, Sprite> = [
        (wobbly.id.clone(), wobbly),
        (calm.id.clone(), calm),
    ]
    .into_iter()
    .collect();
    let attention = full_attention(&["wobbly", "calm"]);
    let cost_model = CostModel {
        w_geo: 1.0,
        w_res: 0.1,
        w_tex: 0.0,
        w_geom_lod: 0.0,
        w_shade: 0.0,
    };
    let compute_model = pixel_only_compute();
    let quality_model = QualityErrorModel::default();
    let degradation = DegradationSteps::default();

    // Warp baseline costs 0.2. Re-rendering the wobbly sprite at the finest
    // quality needs 10.9 more units; at spatial 0.75 it needs 6.525. The
    // budget leaves 8.0 after the baseline: only the degraded render fits.
    let ctx = RegulationContext {
        sprites: &sprites,
        frame: 1,
        budget: 8.2,
        attention: &attention,
        cost_model: &cost_model,
        quality_model: &quality_model,
        compute_model: &compute_model,
        degradation: &degradation,
    };

    let greedy = plan_frame(&ctx, Policy::Greedy).unwrap();
    assert!(
        greedy.actions.values().all(|a| !a.is_rerender()),
        "nothing fits at the finest quality"
    );

    let plan = plan_frame(&ctx, Policy::Multidim).unwrap();
    match plan.actions[&SpriteId::from("wobbly")] {
        RenderAction::Rerender(q) => assert!((q.spatial_factor - 0.75).abs() < 1e-12),
        RenderAction::Warp => panic!("degradation should have bought the re-render"),
    }
    assert!(plan.expected_cost < greedy.expected_cost);
    assert_eq!(plan.diagnostics.baseline_expected_cost, Some(greedy.expected_cost));
    assert!(plan.spend <= ctx.budget);
}

#[test]
fn harmful_steps_leave_the_baseline_untouched() {
    let big = sprite("big", 100_000, 0.5, 2.0);
    let small = sprite("small", 90_000, 0.4, 0.5);
    let sprites: BTreeMap<SpriteId, Sprite> = [
        (big.id.clone(), big),
        (small.id.clone(), small),
    ]
    .into_iter()
    .collect();
    let attention = full_attention(&["big", "small"]);
    // Resolution loss dominates any conceivable warp-error gain.
    let cost_model = CostModel {
        w_geo: 0.01,
        w_res: 500.0,
        w_tex: 500.0,
        w_geom_lod: 500.0,
        w_shade: 500.0,
    };
    let compute_model = pixel_only_compute();
    let quality_model = QualityErrorModel::default();
    let degradation = DegradationSteps::default();

    // Budget fits the big sprite's render but not both.
    let ctx = RegulationContext {
        sprites: &sprites,
        frame: 1,
        budget: 11.5,
        attention: &attention,
        cost_model: &cost_model,
        quality_model: &quality_model,
        compute_model: &compute_model,
        degradation: &degradation,
    };

    let greedy = plan_frame(&ctx, Policy::Greedy).unwrap();
    assert_eq!(greedy.rerender_count(), 1);

    let plan = plan_frame(&ctx, Policy::Multidim).unwrap();
    assert_eq!(plan.actions, greedy.actions);
    assert_eq!(plan.expected_cost, greedy.expected_cost);
    assert_eq!(plan.diagnostics.baseline_expected_cost, Some(greedy.expected_cost));
}

#[test]
fn ample_budget_needs_no_degradation() {
    let a = sprite("a", 50_000, 0.3, 2.0);
    let b = sprite("b", 40_000, 0.3, 1.5);
    let sprites: BTreeMap<SpriteId, Sprite> =
        [(a.id.clone(), a), (b.id.clone(), b)].into_iter().collect();
    let attention = full_attention(&["a", "b"]);
    let cost_model = CostModel {
        w_geo: 1.0,
        w_res: 1.0,
        w_tex: 0.5,
        w_geom_lod: 1.0,
        w_shade: 0.25,
    };
    let compute_model = pixel_only_compute();
    let quality_model = QualityErrorModel::default();
    let degradation = DegradationSteps::default();

    let ctx = RegulationContext {
        sprites: &sprites,
        frame: 1,
        budget: 100.0,
        attention: &attention,
        cost_model: &cost_model,
        quality_model: &quality_model,
        compute_model: &compute_model,
        degradation: &degradation,
    };
    let plan = plan_frame(&ctx, Policy::Multidim).unwrap();
    for action in plan.actions.values() {
        match action {
            RenderAction::Rerender(q) => assert!(q.is_finest()),
            RenderAction::Warp => panic!("everything should re-render"),
        }
    }
    assert_eq!(plan.expected_cost, 0.0);
}
