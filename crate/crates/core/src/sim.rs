//! The frame loop: applies plans, evolves sprite state and cost histories,
//! accounts realized spend against the budget, and emits per-frame traces.
//!
//! Frame 0 bootstraps by re-rendering every sprite at the finest quality (no
//! warp history exists yet), so its spend is reported but exempt from the
//! budget; the trace carries a `bootstrap` flag. Every later frame is planned
//! by the regulator and never exceeds the budget. A run is a pure function of
//! `(scenario, config)`: two runs produce byte-identical traces.

use std::collections::BTreeMap;

use crate::attention::{
    attention_from_groups, condition_on_cost, AttentionModel, BinaryModel, ContinuousModel,
    PiecewiseDensity,
};
use crate::config::{AttentionKind, SimConfig};
use crate::cost::{frame_cost, sprite_cost, CostHistory, CostModel};
use crate::error::Error;
use crate::fiducial::{evaluate_fiducial, Fiducial, QualityErrorModel, QualityVector, RenderAction};
use crate::regulator::{
    plan_frame, ComputeCostModel, FramePlan, Policy, RegulationContext,
};
use crate::scene::{ObjectGroup, ObjectId, Scenario, Sprite, SpriteFrameState, SpriteId};

/// Mutable per-run state: runtime sprites plus the per-sprite cost history.
#[derive(Debug, Clone)]
pub struct SimState {
    pub sprites: BTreeMap<SpriteId, Sprite>,
    pub history: CostHistory,
}

impl SimState {
    pub fn from_scenario(
        scenario: &Scenario,
        history_window: usize,
        persistence_lambda: f64,
    ) -> Result<Self, Error> {
        let mut sprites = BTreeMap::new();
        for id in scenario.sprite_ids() {
            sprites.insert(id.clone(), Sprite::from_scenario(scenario, &id)?);
        }
        Ok(SimState {
            sprites,
            history: CostHistory::new(history_window, persistence_lambda)?,
        })
    }
}

/// Read-only model bundle used to evaluate one frame.
#[derive(Clone, Copy)]
pub struct FrameModels<'a> {
    pub attention: &'a AttentionModel,
    pub cost: &'a CostModel,
    pub quality: &'a QualityErrorModel,
    pub compute: &'a ComputeCostModel,
}

/// Per-sprite trace entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpriteTraceRow {
    pub sprite: SpriteId,
    pub object: ObjectId,
    pub group: ObjectGroup,
    pub action: RenderAction,
    /// Effective quality: the re-render quality, or the stored quality of the
    /// warped sprite.
    pub quality: QualityVector,
    pub fiducial: Fiducial,
    pub cost: f64,
    pub attention_weight: f64,
    pub compute: f64,
}

/// Frame-level totals.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTotals {
    /// Expected perceptual cost under the active attention model.
    pub expected_cost: f64,
    /// Unweighted sum of per-sprite costs.
    pub raw_cost: f64,
    pub spend: f64,
    pub slack: f64,
    pub policy: String,
    pub flags: Vec<String>,
}

/// One frame of simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame: usize,
    pub rows: Vec<SpriteTraceRow>,
    pub totals: FrameTotals,
}

/// Applies a plan to the frame's inputs: evaluates realized fiducials and
/// costs, pushes cost history, updates render snapshots, and returns the
/// trace. The plan must reference only known sprites.
pub fn run_frame(
    state: &mut SimState,
    frame: usize,
    inputs: &BTreeMap<SpriteId, SpriteFrameState>,
    plan: &FramePlan,
    models: &FrameModels<'_>,
    budget: f64,
) -> Result<FrameTrace, Error> {
    for id in plan.actions.keys() {
        if !state.sprites.contains_key(id) {
            return Err(Error::UnknownSprite(id.clone()));
        }
    }
    for (id, sprite) in &mut state.sprites {
        if let Some(input) = inputs.get(id) {
            sprite.apply_frame_state(input);
        }
    }

    let mut rows = Vec::with_capacity(plan.actions.len());
    let mut costs = BTreeMap::new();
    for (id, action) in &plan.actions {
        let sprite = &state.sprites[id];
        let fiducial = evaluate_fiducial(sprite, action, &sprite.points_gold, models.quality)?;
        let cost = sprite_cost(sprite.area_fraction, &fiducial, models.cost);
        let attention_weight = models.attention.weight(id)?;
        let (quality, compute) = match action {
            RenderAction::Rerender(q) => (*q, models.compute.render_cost(sprite, q)),
            RenderAction::Warp => {
                let snapshot = sprite
                    .last_render
                    .as_ref()
                    .ok_or_else(|| Error::NeverRendered(id.clone()))?;
                (snapshot.quality, models.compute.warp_cost(sprite))
            }
        };
        rows.push(SpriteTraceRow {
            sprite: id.clone(),
            object: sprite.object_id.clone(),
            group: sprite.group,
            action: *action,
            quality,
            fiducial,
            cost,
            attention_weight,
            compute,
        });
        costs.insert(id.clone(), cost);
    }

    let expected_cost = models.attention.expected_cost(&costs)?;
    let raw_cost = frame_cost(&costs);
    for (id, cost) in &costs {
        state.history.push(id, *cost)?;
    }
    for (id, action) in &plan.actions {
        if let RenderAction::Rerender(q) = action {
            state.sprites.get_mut(id).unwrap().mark_rendered(frame, *q);
        }
    }

    Ok(FrameTrace {
        frame,
        rows,
        totals: FrameTotals {
            expected_cost,
            raw_cost,
            spend: plan.spend,
            slack: budget - plan.spend,
            policy: plan.policy.clone(),
            flags: Vec::new(),
        },
    })
}

/// One configured simulation run over a scenario.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    config: &'a SimConfig,
    cost_model: CostModel,
    quality_model: QualityErrorModel,
    compute_model: ComputeCostModel,
    state: SimState,
    next_frame: usize,
    relaxed_sprites: Vec<SpriteId>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a SimConfig) -> Result<Self, Error> {
        scenario.validate()?;
        config.validate()?;
        let compute_model = config
            .compute_model
            .clone()
            .unwrap_or_else(|| scenario.compute_model.clone());
        compute_model.validate()?;

        let state = SimState::from_scenario(
            scenario,
            config.cost_model.history_window,
            config.cost_model.persistence_lambda,
        )?;

        // Warping must be a saving for every sprite unless the config
        // explicitly relaxes this; relaxed sprites re-render every frame.
        let mut relaxed_sprites = Vec::new();
        for (id, sprite) in &state.sprites {
            if !compute_model.dominates_warp(sprite) {
                if config.regulator.relax_compute_invariant {
                    relaxed_sprites.push(id.clone());
                } else {
                    return Err(Error::Validation(format!(
                        "rendering sprite {id} at the finest quality costs no more than \
                         warping it; set regulator.relax_compute_invariant to accept"
                    )));
                }
            }
        }

        if let Some(probabilities) = &config.attention.sprite_probabilities {
            if config.attention.model != AttentionKind::Binary {
                return Err(Error::Validation(
                    "sprite_probabilities require the binary attention model".into(),
                ));
            }
            for id in state.sprites.keys() {
                if !probabilities.contains_key(id) {
                    return Err(Error::MissingAttention(id.clone()));
                }
            }
        }

        Ok(Simulation {
            scenario,
            config,
            cost_model: config.cost_model.weights(),
            quality_model: QualityErrorModel::default(),
            compute_model,
            state,
            next_frame: 0,
            relaxed_sprites,
        })
    }

    /// Attention model for the current frame, rebuilt from sprite areas and,
    /// when cost conditioning is on, the cost history so far.
    fn attention_for_frame(
        &self,
        inputs: &BTreeMap<SpriteId, SpriteFrameState>,
    ) -> Result<AttentionModel, Error> {
        let attention = &self.config.attention;
        if let Some(probabilities) = &attention.sprite_probabilities {
            return Ok(AttentionModel::Binary(BinaryModel {
                probabilities: probabilities.clone(),
                alpha: attention.alpha,
            }));
        }

        let areas: BTreeMap<SpriteId, f64> = inputs
            .iter()
            .map(|(id, s)| (id.clone(), s.area_fraction))
            .collect();
        let base = attention_from_groups(
            &self.scenario.objects,
            &areas,
            &attention.group_spec(),
            attention.alpha,
        )?;
        let conditioned = if attention.beta > 0.0 {
            condition_on_cost(&base, &self.state.history, attention.beta)?
        } else {
            base
        };
        Ok(match attention.model {
            AttentionKind::Object => AttentionModel::Object(conditioned),
            AttentionKind::Binary => AttentionModel::Binary(conditioned.flatten()),
            AttentionKind::Continuous => {
                let flat = conditioned.flatten();
                let mut densities = BTreeMap::new();
                for (id, p) in flat.probabilities {
                    densities.insert(id, PiecewiseDensity::two_point(attention.bins, p)?);
                }
                AttentionModel::Continuous(ContinuousModel {
                    densities,
                    attenuation: attention.attenuation,
                })
            }
        })
    }

    /// Frame 0: re-render everything at the finest quality. Spend is reported
    /// but not regulated; no warp history exists to do better.
    fn bootstrap_plan(&self, attention: &AttentionModel) -> Result<FramePlan, Error> {
        let mut actions = BTreeMap::new();
        let mut spend = 0.0;
        for (id, sprite) in &self.state.sprites {
            let q = QualityVector::finest().clamped_for(sprite);
            spend += self.compute_model.render_cost(sprite, &q);
            actions.insert(id.clone(), RenderAction::Rerender(q));
        }
        let mut costs = BTreeMap::new();
        for (id, sprite) in &self.state.sprites {
            let fid = self
                .quality_model
                .quality_errors(sprite, &QualityVector::finest().clamped_for(sprite))?;
            costs.insert(id.clone(), sprite_cost(sprite.area_fraction, &fid, &self.cost_model));
        }
        Ok(FramePlan {
            frame: 0,
            actions,
            expected_cost: attention.expected_cost(&costs)?,
            raw_cost: frame_cost(&costs),
            spend,
            policy: self.config.regulator.policy.to_string(),
            diagnostics: Default::default(),
        })
    }

    fn flags_for(&self, frame: usize) -> Vec<String> {
        let mut flags = Vec::new();
        if frame == 0 {
            flags.push("bootstrap".to_string());
        }
        if self.config.attention.sprite_probabilities.is_none() {
            // Group-derived models normalize attention across objects.
            flags.push("object_attention_normalized".to_string());
        }
        if !self.relaxed_sprites.is_empty() {
            flags.push("compute_invariant_relaxed".to_string());
        }
        flags
    }

    /// Advances one frame, returning its trace.
    pub fn step(&mut self) -> Result<FrameTrace, Error> {
        let frame = self.next_frame;
        assert!(frame < self.scenario.frame_count(), "run past the last frame");
        let inputs = &self.scenario.frames[frame];
        for (id, sprite) in &mut self.state.sprites {
            sprite.apply_frame_state(&inputs[id]);
        }
        let attention = self.attention_for_frame(inputs)?;

        let plan = if frame == 0 {
            self.bootstrap_plan(&attention)?
        } else {
            let ctx = RegulationContext {
                sprites: &self.state.sprites,
                frame,
                budget: self.scenario.frame_budget,
                attention: &attention,
                cost_model: &self.cost_model,
                quality_model: &self.quality_model,
                compute_model: &self.compute_model,
                degradation: &self.config.regulator.degradation,
            };
            plan_frame(&ctx, self.config.regulator.policy)?
        };

        let models = FrameModels {
            attention: &attention,
            cost: &self.cost_model,
            quality: &self.quality_model,
            compute: &self.compute_model,
        };
        let mut trace = run_frame(
            &mut self.state,
            frame,
            inputs,
            &plan,
            &models,
            self.scenario.frame_budget,
        )?;
        trace.totals.flags = self.flags_for(frame);
        self.next_frame += 1;
        Ok(trace)
    }

    pub fn run(mut self) -> Result<Vec<FrameTrace>, Error> {
        let mut traces = Vec::with_capacity(self.scenario.frame_count());
        for _ in 0..self.scenario.frame_count() {
            traces.push(self.step()?);
        }
        Ok(traces)
    }
}

/// Runs a scenario under a config. Deterministic: the result is a pure
/// function of its arguments.
pub fn run_sequence(scenario: &Scenario, config: &SimConfig) -> Result<Vec<FrameTrace>, Error> {
    Simulation::new(scenario, config)?.run()
}

/// Exact- versus configured-policy planning of a single frame, after
/// replaying the preceding frames under the configured policy.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub frame: usize,
    /// Warp-eligible candidates with their refinement rates.
    pub candidates: Vec<(SpriteId, f64)>,
    pub policy_plan: FramePlan,
    pub oracle_plan: FramePlan,
}

/// Replays frames `0..frame` under the configured policy, then plans frame
/// `frame` with `policy` without executing it. Frame 0 is the bootstrap and
/// cannot be planned this way.
pub fn replay_plan(
    scenario: &Scenario,
    config: &SimConfig,
    frame: usize,
    policy: Policy,
) -> Result<FramePlan, Error> {
    if frame == 0 || frame >= scenario.frame_count() {
        return Err(Error::Validation(format!(
            "planned frame must lie in 1..{}, got {frame}",
            scenario.frame_count()
        )));
    }
    let mut sim = Simulation::new(scenario, config)?;
    for _ in 0..frame {
        sim.step()?;
    }
    let inputs = &scenario.frames[frame];
    for (id, sprite) in &mut sim.state.sprites {
        sprite.apply_frame_state(&inputs[id]);
    }
    let attention = sim.attention_for_frame(inputs)?;
    let ctx = RegulationContext {
        sprites: &sim.state.sprites,
        frame,
        budget: scenario.frame_budget,
        attention: &attention,
        cost_model: &sim.cost_model,
        quality_model: &sim.quality_model,
        compute_model: &sim.compute_model,
        degradation: &sim.config.regulator.degradation,
    };
    plan_frame(&ctx, policy)
}

/// Solves frame `frame` exactly and compares it with the configured policy.
pub fn oracle_frame(
    scenario: &Scenario,
    config: &SimConfig,
    frame: usize,
) -> Result<OracleReport, Error> {
    let policy_plan = replay_plan(scenario, config, frame, config.regulator.policy)?;
    let oracle_plan = replay_plan(scenario, config, frame, Policy::Oracle)?;
    let candidates = policy_plan
        .diagnostics
        .refinement_rates
        .iter()
        .map(|(id, rate)| (id.clone(), *rate))
        .collect();
    Ok(OracleReport {
        frame,
        candidates,
        policy_plan,
        oracle_plan,
    })
}

/// Summary metrics of one run, used by the policy comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub label: String,
    pub policy: String,
    pub frames: usize,
    /// Means and maxima are over regulated frames (frame 1 onward).
    pub mean_expected_cost: f64,
    pub max_expected_cost: f64,
    pub mean_budget_utilization: f64,
    pub rerenders_total: usize,
    /// Indexed like [`ObjectGroup::ALL`].
    pub rerenders_by_group: [usize; 4],
}

/// Condenses a run into comparison metrics. Bootstrap frame 0 is excluded
/// from means and re-render counts.
pub fn summarize_run(label: &str, traces: &[FrameTrace]) -> PolicySummary {
    let policy = traces
        .first()
        .map(|t| t.totals.policy.clone())
        .unwrap_or_default();
    let regulated = if traces.len() > 1 { &traces[1..] } else { &[] };
    let n = regulated.len() as f64;
    let mut mean_expected_cost = 0.0;
    let mut max_expected_cost = 0.0_f64;
    let mut mean_budget_utilization = 0.0;
    let mut rerenders_total = 0;
    let mut rerenders_by_group = [0usize; 4];
    for trace in regulated {
        mean_expected_cost += trace.totals.expected_cost;
        max_expected_cost = max_expected_cost.max(trace.totals.expected_cost);
        let budget = trace.totals.spend + trace.totals.slack;
        if budget > 0.0 {
            mean_budget_utilization += trace.totals.spend / budget;
        }
        for row in &trace.rows {
            if row.action.is_rerender() {
                rerenders_total += 1;
                let slot = ObjectGroup::ALL
                    .iter()
                    .position(|g| *g == row.group)
                    .expect("group is one of the four");
                rerenders_by_group[slot] += 1;
            }
        }
    }
    if n > 0.0 {
        mean_expected_cost /= n;
        mean_budget_utilization /= n;
    }
    PolicySummary {
        label: label.to_string(),
        policy,
        frames: traces.len(),
        mean_expected_cost,
        max_expected_cost,
        mean_budget_utilization,
        rerenders_total,
        rerenders_by_group,
    }
}

/// Runs each labeled config over the scenario and summarizes it. At least two
/// configs are required.
pub fn compare_policies(
    scenario: &Scenario,
    configs: &[(String, SimConfig)],
) -> Result<Vec<PolicySummary>, Error> {
    if configs.len() < 2 {
        return Err(Error::Validation(format!(
            "compare needs at least 2 configs, got {}",
            configs.len()
        )));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for (label, config) in configs {
        let traces = run_sequence(scenario, config)?;
        rows.push(summarize_run(label, &traces));
    }
    Ok(rows)
}

/// Formats a float with 9 significant digits, for reproducible trace diffs.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.8e}")
    }
}

/// Fixed trace CSV column order.
pub const TRACE_COLUMNS: &str = "frame,row,sprite,object,group,action,\
spatial_factor,texture_lod,geometry_lod,shading_level,\
warp_error,resolution_error,texture_error,geometry_error,shading_error,\
cost,attention_weight,compute,\
expected_cost,raw_cost,spend,slack,policy,flags";

/// Renders traces as CSV: one row per sprite per frame plus one totals row
/// per frame.
pub fn trace_csv(traces: &[FrameTrace]) -> String {
    let mut out = String::new();
    out.push_str(TRACE_COLUMNS);
    out.push('\n');
    for trace in traces {
        for row in &trace.rows {
            out.push_str(&format!(
                "{},sprite,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},,,,,,\n",
                trace.frame,
                row.sprite,
                row.object,
                row.group,
                row.action.label(),
                fmt_sig(row.quality.spatial_factor),
                row.quality.texture_lod,
                row.quality.geometry_lod,
                row.quality.shading_level,
                fmt_sig(row.fiducial.geometric_warp_error),
                fmt_sig(row.fiducial.resolution_error),
                fmt_sig(row.fiducial.texture_error),
                fmt_sig(row.fiducial.geometry_error),
                fmt_sig(row.fiducial.shading_error),
                fmt_sig(row.cost),
                fmt_sig(row.attention_weight),
                fmt_sig(row.compute),
            ));
        }
        out.push_str(&format!(
            "{},frame,,,,,,,,,,,,,,,,,{},{},{},{},{},{}\n",
            trace.frame,
            fmt_sig(trace.totals.expected_cost),
            fmt_sig(trace.totals.raw_cost),
            fmt_sig(trace.totals.spend),
            fmt_sig(trace.totals.slack),
            trace.totals.policy,
            trace.totals.flags.join(";"),
        ));
    }
    out
}

/// Fixed comparison CSV column order.
pub const COMPARISON_COLUMNS: &str = "label,policy,frames,mean_expected_cost,\
max_expected_cost,mean_budget_utilization,rerenders_total,\
rerenders_primary_actor,rerenders_secondary_actor,\
rerenders_critical_environment,rerenders_background_environment";

/// Renders a policy comparison as CSV.
pub fn comparison_csv(rows: &[PolicySummary]) -> String {
    let mut out = String::new();
    out.push_str(COMPARISON_COLUMNS);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.label,
            row.policy,
            row.frames,
            fmt_sig(row.mean_expected_cost),
            fmt_sig(row.max_expected_cost),
            fmt_sig(row.mean_budget_utilization),
            row.rerenders_total,
            row.rerenders_by_group[0],
            row.rerenders_by_group[1],
            row.rerenders_by_group[2],
            row.rerenders_by_group[3],
        ));
    }
    out
}
