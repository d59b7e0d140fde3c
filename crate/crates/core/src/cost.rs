//! Perceptual cost: weighs fiducial components into a per-sprite cost, sums
//! sprite costs into a frame cost, and tracks recent per-sprite costs so that
//! persistent artifacts can feed back into attention.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fiducial::Fiducial;
use crate::scene::SpriteId;

/// Weights applied to fiducial components. The geometric weight is per
/// pixels^2, the rest per normalized error unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub w_geo: f64,
    pub w_res: f64,
    pub w_tex: f64,
    pub w_geom_lod: f64,
    pub w_shade: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            w_geo: 0.05,
            w_res: 1.0,
            w_tex: 0.5,
            w_geom_lod: 1.0,
            w_shade: 0.25,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), Error> {
        let weights = [self.w_geo, self.w_res, self.w_tex, self.w_geom_lod, self.w_shade];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(
                "cost weights must be finite and nonnegative".into(),
            ));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::Validation(
                "at least one cost weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Perceptual cost of one sprite: screen area times the weighted sum of its
/// fiducial components. Zero exactly when the fiducial is zero or the sprite
/// covers no area.
pub fn sprite_cost(area_fraction: f64, fid: &Fiducial, model: &CostModel) -> f64 {
    area_fraction
        * (model.w_geo * fid.geometric_warp_error
            + model.w_res * fid.resolution_error
            + model.w_tex * fid.texture_error
            + model.w_geom_lod * fid.geometry_error
            + model.w_shade * fid.shading_error)
}

/// Combines per-sprite costs into a whole-frame cost. The additive combiner
/// is the default; richer interactions across sprites can plug in here.
pub trait CostCombiner {
    fn combine(&self, costs: &BTreeMap<SpriteId, f64>) -> f64;
}

/// Plain sum over sprites. Iteration in id order makes the result independent
/// of insertion order.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdditiveCombiner;

impl CostCombiner for AdditiveCombiner {
    fn combine(&self, costs: &BTreeMap<SpriteId, f64>) -> f64 {
        costs.values().sum()
    }
}

/// Whole-frame perceptual cost under the additive combiner.
pub fn frame_cost(costs: &BTreeMap<SpriteId, f64>) -> f64 {
    AdditiveCombiner.combine(costs)
}

/// Bounded per-sprite history of recent frame costs.
///
/// `persistence` condenses a sprite's window into a score in [0, 1) via
/// `1 - exp(-lambda * mean)`: zero history scores 0, and pointwise larger
/// windows never score lower.
#[derive(Debug, Clone, PartialEq)]
pub struct CostHistory {
    window: usize,
    lambda: f64,
    buffers: BTreeMap<SpriteId, VecDeque<f64>>,
}

impl CostHistory {
    pub fn new(window: usize, lambda: f64) -> Result<Self, Error> {
        if window == 0 {
            return Err(Error::Validation("history window must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Validation(
                "persistence lambda must be positive and finite".into(),
            ));
        }
        Ok(CostHistory {
            window,
            lambda,
            buffers: BTreeMap::new(),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Appends a frame cost for a sprite, evicting beyond the window.
    pub fn push(&mut self, id: &SpriteId, cost: f64) -> Result<(), Error> {
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(Error::Validation(format!(
                "history cost for sprite {id} must be finite and nonnegative, got {cost}"
            )));
        }
        let buffer = self.buffers.entry(id.clone()).or_default();
        buffer.push_back(cost);
        while buffer.len() > self.window {
            buffer.pop_front();
        }
        Ok(())
    }

    pub fn recent(&self, id: &SpriteId) -> &[f64] {
        self.buffers
            .get(id)
            .map(|b| b.as_slices().0)
            .unwrap_or(&[])
    }

    /// Persistence score in [0, 1); 0 for an empty history.
    pub fn persistence(&self, id: &SpriteId) -> f64 {
        match self.buffers.get(id) {
            None => 0.0,
            Some(buffer) if buffer.is_empty() => 0.0,
            Some(buffer) => {
                let mean: f64 = buffer.iter().sum::<f64>() / buffer.len() as f64;
                1.0 - (-self.lambda * mean).exp()
            }
        }
    }
}
