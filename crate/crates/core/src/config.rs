//! Run configuration: perceptual cost weights, attention model selection, an
//! optional compute model override, and regulator settings. All sections and
//! fields have defaults, so `{}` is a valid config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attention::{Attenuation, GroupModulation, GroupPriorSpec, GroupPriors};
use crate::cost::CostModel;
use crate::error::Error;
use crate::regulator::{ComputeCostModel, DegradationSteps, Policy};
use crate::scene::SpriteId;

/// Cost section: fiducial weights plus the persistence history parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostConfig {
    pub w_geo: f64,
    pub w_res: f64,
    pub w_tex: f64,
    pub w_geom_lod: f64,
    pub w_shade: f64,
    /// Frames of per-sprite cost history kept for persistence scoring.
    pub history_window: usize,
    /// Gain of the saturating persistence combiner.
    pub persistence_lambda: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        let weights = CostModel::default();
        CostConfig {
            w_geo: weights.w_geo,
            w_res: weights.w_res,
            w_tex: weights.w_tex,
            w_geom_lod: weights.w_geom_lod,
            w_shade: weights.w_shade,
            history_window: 8,
            persistence_lambda: 1.0,
        }
    }
}

impl CostConfig {
    pub fn weights(&self) -> CostModel {
        CostModel {
            w_geo: self.w_geo,
            w_res: self.w_res,
            w_tex: self.w_tex,
            w_geom_lod: self.w_geom_lod,
            w_shade: self.w_shade,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.weights().validate()?;
        if self.history_window == 0 {
            return Err(Error::Validation("history_window must be at least 1".into()));
        }
        if !(self.persistence_lambda.is_finite() && self.persistence_lambda > 0.0) {
            return Err(Error::Validation(
                "persistence_lambda must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Attention model family to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionKind {
    Binary,
    Continuous,
    Object,
}

/// Attention section. Group-derived models are built per frame from object
/// groups and sprite areas; a binary model may instead be given explicit
/// per-sprite probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionConfig {
    pub model: AttentionKind,
    /// Discount on the cost of unattended sprites.
    pub alpha: f64,
    /// Gain of cost-conditioned attention; 0 disables it.
    pub beta: f64,
    /// Bins of the continuous model's densities.
    pub bins: usize,
    pub group_priors: GroupPriors,
    pub area_exponent: f64,
    pub edge_bonus: f64,
    /// Attenuation map of the continuous model.
    pub attenuation: Attenuation,
    /// Explicit per-sprite probabilities for the binary model; bypasses
    /// group-derived marginals and need not be normalized.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sprite_probabilities: Option<BTreeMap<SpriteId, f64>>,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            model: AttentionKind::Binary,
            alpha: 0.2,
            beta: 0.0,
            bins: 16,
            group_priors: GroupPriors::default(),
            area_exponent: 1.0,
            edge_bonus: 0.5,
            attenuation: Attenuation::Linear,
            sprite_probabilities: None,
        }
    }
}

impl AttentionConfig {
    pub fn group_spec(&self) -> GroupPriorSpec {
        GroupPriorSpec {
            priors: self.group_priors,
            modulation: GroupModulation {
                area_exponent: self.area_exponent,
                edge_bonus: self.edge_bonus,
            },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.alpha.is_finite() && (0.0..=1.0).contains(&self.alpha)) {
            return Err(Error::Validation(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Validation("beta must be nonnegative".into()));
        }
        if self.bins == 0 {
            return Err(Error::Validation("bins must be at least 1".into()));
        }
        self.group_spec().validate()?;
        self.attenuation.validate()?;
        if let Some(probabilities) = &self.sprite_probabilities {
            for (id, p) in probabilities {
                if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                    return Err(Error::Validation(format!(
                        "sprite probability for {id} must lie in [0, 1], got {p}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Regulator section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegulatorConfig {
    pub policy: Policy,
    pub degradation: DegradationSteps,
    /// Accept scenarios where rendering some sprite at the finest quality is
    /// no dearer than warping it; such sprites are re-rendered outright.
    pub relax_compute_invariant: bool,
}

impl Default for RegulatorConfig {
    fn default() -> Self {
        RegulatorConfig {
            policy: Policy::Greedy,
            degradation: DegradationSteps::default(),
            relax_compute_invariant: false,
        }
    }
}

/// A full run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub cost_model: CostConfig,
    pub attention: AttentionConfig,
    /// Overrides the scenario's compute model when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compute_model: Option<ComputeCostModel>,
    pub regulator: RegulatorConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.cost_model.validate()?;
        self.attention.validate()?;
        if let Some(compute) = &self.compute_model {
            compute.validate()?;
        }
        self.regulator.degradation.validate()?;
        Ok(())
    }
}

/// Loads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, Error> {
    let text = fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.as_ref().display())))?;
    config_from_json(&text)
}

/// Parses and validates a config from JSON text.
pub fn config_from_json(text: &str) -> Result<SimConfig, Error> {
    let config: SimConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
