//! Probability models over viewer attention and the expected perceptual cost
//! they induce.
//!
//! Three families are supported. A binary model gives each sprite a
//! probability of being attended; unattended cost is discounted by a constant
//! factor alpha, so a sprite's expected contribution is
//! `[p + (1 - p) * alpha] * cost`. A continuous model treats attention as a
//! scalar in [0, 1] with a per-sprite piecewise-constant density and a
//! monotone attenuation map applied to the cost. An object-conditioned model
//! assigns probabilities to contiguous objects and conditional probabilities
//! to their member sprites; the sprite marginal is the product.
//!
//! Every family exposes a per-sprite `weight`; expected frame cost is the
//! weight-cost dot product, which keeps the degenerate reductions exact: with
//! alpha = 1 the binary form collapses to the raw frame cost, and with
//! alpha = 0 only attended mass contributes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cost::CostHistory;
use crate::error::Error;
use crate::scene::{ObjectGroup, ObjectId, SceneObject, SpriteId};

/// Tolerance used for probability normalization checks.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Subdivisions per density bin for the midpoint rule on the attenuation map.
/// 256 keeps the quadrature error below 1e-5 relative even for sharply curved
/// attenuation maps.
const BIN_SUBDIVISIONS: usize = 256;

fn check_probability(what: &str, p: f64) -> Result<(), Error> {
    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
        return Err(Error::Validation(format!(
            "{what} must be a probability in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Attenuation of perceptual cost as a function of the attention level
/// x in [0, 1]. All variants are monotone nondecreasing into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attenuation {
    /// alpha(x) = x
    Linear,
    /// alpha(x) = value, independent of x
    Constant { value: f64 },
    /// alpha(x) = x^gamma with gamma > 0
    Power { gamma: f64 },
}

impl Attenuation {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Attenuation::Linear => Ok(()),
            Attenuation::Constant { value } => check_probability("constant attenuation", *value),
            Attenuation::Power { gamma } => {
                if gamma.is_finite() && *gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "attenuation exponent must be positive, got {gamma}"
                    )))
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Attenuation::Linear => x,
            Attenuation::Constant { value } => *value,
            Attenuation::Power { gamma } => x.powf(*gamma),
        }
    }

    /// Midpoint-rule integral over [lo, hi].
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let h = (hi - lo) / BIN_SUBDIVISIONS as f64;
        (0..BIN_SUBDIVISIONS)
            .map(|i| self.eval(lo + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h
    }
}

/// Piecewise-constant probability density over the attention level [0, 1],
/// represented by K equal bins of density values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PiecewiseDensity(Vec<f64>);

impl PiecewiseDensity {
    pub fn new(bins: Vec<f64>) -> Result<Self, Error> {
        if bins.is_empty() {
            return Err(Error::Validation("density needs at least one bin".into()));
        }
        if bins.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(
                "density bins must be finite and nonnegative".into(),
            ));
        }
        let integral: f64 = bins.iter().sum::<f64>() / bins.len() as f64;
        if (integral - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Validation(format!(
                "density must integrate to 1, got {integral}"
            )));
        }
        Ok(PiecewiseDensity(bins))
    }

    /// Uniform density on [0, 1].
    pub fn uniform(bins: usize) -> Self {
        PiecewiseDensity(vec![1.0; bins.max(1)])
    }

    /// Density splitting its mass between the bottom bin (no attention) and
    /// the top bin (full attention): `top_mass` goes to the top.
    pub fn two_point(bins: usize, top_mass: f64) -> Result<Self, Error> {
        check_probability("top-bin mass", top_mass)?;
        let k = bins.max(1);
        let mut values = vec![0.0; k];
        values[0] = (1.0 - top_mass) * k as f64;
        values[k - 1] += top_mass * k as f64;
        Ok(PiecewiseDensity(values))
    }

    pub fn bins(&self) -> &[f64] {
        &self.0
    }

    /// Expected attenuation under this density: the integral of
    /// `density(x) * attenuation(x)` over [0, 1].
    pub fn expected_attenuation(&self, attenuation: &Attenuation) -> f64 {
        let k = self.0.len();
        let width = 1.0 / k as f64;
        self.0
            .iter()
            .enumerate()
            .map(|(i, v)| v * attenuation.integral(i as f64 * width, (i + 1) as f64 * width))
            .sum()
    }
}

impl TryFrom<Vec<f64>> for PiecewiseDensity {
    type Error = Error;

    fn try_from(bins: Vec<f64>) -> Result<Self, Error> {
        PiecewiseDensity::new(bins)
    }
}

impl From<PiecewiseDensity> for Vec<f64> {
    fn from(d: PiecewiseDensity) -> Self {
        d.0
    }
}

/// Binary attention: each sprite is attended with probability p; unattended
/// cost is discounted by the constant alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub probabilities: BTreeMap<SpriteId, f64>,
    pub alpha: f64,
}

impl BinaryModel {
    pub fn validate(&self) -> Result<(), Error> {
        check_probability("alpha", self.alpha)?;
        for (id, p) in &self.probabilities {
            check_probability(&format!("p({id})"), *p)?;
        }
        Ok(())
    }

    /// Expected fraction of the sprite's cost that is perceived.
    pub fn weight(&self, id: &SpriteId) -> Result<f64, Error> {
        let p = self
            .probabilities
            .get(id)
            .ok_or_else(|| Error::MissingAttention(id.clone()))?;
        Ok(p + (1.0 - p) * self.alpha)
    }
}

/// Continuous attention: per-sprite densities over the attention level plus a
/// shared attenuation map.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousModel {
    pub densities: BTreeMap<SpriteId, PiecewiseDensity>,
    pub attenuation: Attenuation,
}

impl ContinuousModel {
    pub fn validate(&self) -> Result<(), Error> {
        self.attenuation.validate()
    }

    pub fn weight(&self, id: &SpriteId) -> Result<f64, Error> {
        let density = self
            .densities
            .get(id)
            .ok_or_else(|| Error::MissingAttention(id.clone()))?;
        Ok(density.expected_attenuation(&self.attenuation))
    }
}

/// Attention assigned to one object and its member sprites.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAttention {
    /// Probability that the viewer attends to this object.
    pub probability: f64,
    /// Probability of attending to each member sprite given attention to the
    /// object. Sums to at most 1 per object.
    pub sprite_conditionals: BTreeMap<SpriteId, f64>,
}

/// Object-conditioned attention with a constant unattended discount.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub alpha: f64,
    pub objects: BTreeMap<ObjectId, ObjectAttention>,
}

impl ObjectModel {
    pub fn validate(&self) -> Result<(), Error> {
        check_probability("alpha", self.alpha)?;
        for (object_id, attention) in &self.objects {
            check_probability(&format!("p({object_id})"), attention.probability)?;
            let mut total = 0.0;
            for (sprite_id, p) in &attention.sprite_conditionals {
                check_probability(&format!("p({sprite_id}|{object_id})"), *p)?;
                total += p;
            }
            if total > 1.0 + PROBABILITY_TOL {
                return Err(Error::Validation(format!(
                    "conditional probabilities of object {object_id} sum to {total} > 1"
                )));
            }
        }
        Ok(())
    }

    fn lookup(&self, id: &SpriteId) -> Result<(&ObjectAttention, f64), Error> {
        for attention in self.objects.values() {
            if let Some(conditional) = attention.sprite_conditionals.get(id) {
                return Ok((attention, *conditional));
            }
        }
        Err(Error::OrphanSprite(id.clone()))
    }

    /// Marginal probability of attending to a sprite: conditional times the
    /// owning object's probability.
    pub fn marginal(&self, id: &SpriteId) -> Result<f64, Error> {
        let (attention, conditional) = self.lookup(id)?;
        Ok(conditional * attention.probability)
    }

    pub fn weight(&self, id: &SpriteId) -> Result<f64, Error> {
        let q = self.marginal(id)?;
        Ok(q + (1.0 - q) * self.alpha)
    }

    /// Collapses the model to a binary one over sprite marginals. Expected
    /// costs are identical for any cost assignment.
    pub fn flatten(&self) -> BinaryModel {
        let mut probabilities = BTreeMap::new();
        for attention in self.objects.values() {
            for (sprite_id, conditional) in &attention.sprite_conditionals {
                probabilities.insert(sprite_id.clone(), conditional * attention.probability);
            }
        }
        BinaryModel {
            probabilities,
            alpha: self.alpha,
        }
    }
}

/// A probability structure over viewer attention.
#[derive(Debug, Clone, PartialEq)]
pub enum AttentionModel {
    Binary(BinaryModel),
    Continuous(ContinuousModel),
    Object(ObjectModel),
}

impl AttentionModel {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            AttentionModel::Binary(m) => m.validate(),
            AttentionModel::Continuous(m) => m.validate(),
            AttentionModel::Object(m) => m.validate(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AttentionModel::Binary(_) => "binary",
            AttentionModel::Continuous(_) => "continuous",
            AttentionModel::Object(_) => "object",
        }
    }

    /// Expected fraction of the sprite's perceptual cost that the viewer is
    /// modeled to perceive.
    pub fn weight(&self, id: &SpriteId) -> Result<f64, Error> {
        match self {
            AttentionModel::Binary(m) => m.weight(id),
            AttentionModel::Continuous(m) => m.weight(id),
            AttentionModel::Object(m) => m.weight(id),
        }
    }

    /// Expected frame cost: the weight-cost dot product over sprites, summed
    /// in sprite-id order.
    pub fn expected_cost(&self, costs: &BTreeMap<SpriteId, f64>) -> Result<f64, Error> {
        let mut total = 0.0;
        for (id, cost) in costs {
            total += self.weight(id)? * cost;
        }
        Ok(total)
    }
}

/// Expected frame cost under a binary model.
pub fn expected_cost_binary(
    costs: &BTreeMap<SpriteId, f64>,
    model: &BinaryModel,
) -> Result<f64, Error> {
    let mut total = 0.0;
    for (id, cost) in costs {
        total += model.weight(id)? * cost;
    }
    Ok(total)
}

/// Expected frame cost under a continuous model.
pub fn expected_cost_continuous(
    costs: &BTreeMap<SpriteId, f64>,
    model: &ContinuousModel,
) -> Result<f64, Error> {
    let mut total = 0.0;
    for (id, cost) in costs {
        total += model.weight(id)? * cost;
    }
    Ok(total)
}

/// Expected frame cost under an object-conditioned model.
pub fn expected_cost_object(
    costs: &BTreeMap<SpriteId, f64>,
    model: &ObjectModel,
) -> Result<f64, Error> {
    let mut total = 0.0;
    for (id, cost) in costs {
        total += model.weight(id)? * cost;
    }
    Ok(total)
}

/// Prior attention probability per authoring group. Priors sum to 1; groups
/// with no visible objects in a frame forfeit their mass to the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupPriors {
    pub primary_actor: f64,
    pub secondary_actor: f64,
    pub critical_environment: f64,
    pub background_environment: f64,
}

impl Default for GroupPriors {
    fn default() -> Self {
        GroupPriors {
            primary_actor: 0.6,
            secondary_actor: 0.25,
            critical_environment: 0.1,
            background_environment: 0.05,
        }
    }
}

impl GroupPriors {
    pub fn get(&self, group: ObjectGroup) -> f64 {
        match group {
            ObjectGroup::PrimaryActor => self.primary_actor,
            ObjectGroup::SecondaryActor => self.secondary_actor,
            ObjectGroup::CriticalEnvironment => self.critical_environment,
            ObjectGroup::BackgroundEnvironment => self.background_environment,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let values = [
            self.primary_actor,
            self.secondary_actor,
            self.critical_environment,
            self.background_environment,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(
                "group priors must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Validation(format!(
                "group priors must sum to 1, got {total}"
            )));
        }
        Ok(())
    }
}

/// Feature modulation applied when authoring attention from groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupModulation {
    /// Exponent on the summed member area when splitting a group prior
    /// across its objects.
    pub area_exponent: f64,
    /// Relative boost of silhouette-defining sprites within an object.
    pub edge_bonus: f64,
}

impl Default for GroupModulation {
    fn default() -> Self {
        GroupModulation {
            area_exponent: 1.0,
            edge_bonus: 0.5,
        }
    }
}

/// Authoring spec: group priors plus modulation features.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupPriorSpec {
    pub priors: GroupPriors,
    pub modulation: GroupModulation,
}

impl GroupPriorSpec {
    pub fn validate(&self) -> Result<(), Error> {
        self.priors.validate()?;
        if !(self.modulation.area_exponent.is_finite() && self.modulation.area_exponent > 0.0) {
            return Err(Error::Validation("area exponent must be positive".into()));
        }
        if !(self.modulation.edge_bonus.is_finite() && self.modulation.edge_bonus >= 0.0) {
            return Err(Error::Validation("edge bonus must be nonnegative".into()));
        }
        Ok(())
    }
}

fn pow_or_identity(x: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        x
    } else {
        x.powf(exponent)
    }
}

/// Builds an object-conditioned model from authored groups.
///
/// Each group's prior is split across its objects in proportion to an area
/// salience `s(object) = (sum of member areas)^area_exponent`; priors of
/// groups with no visible object are renormalized away so object
/// probabilities sum to 1 (a single locus of attention). Within an object,
/// sprite conditionals are proportional to area, with edge sprites boosted by
/// `1 + edge_bonus`, normalized to sum to 1. Objects with no visible area
/// receive probability 0 and a uniform conditional.
pub fn attention_from_groups(
    objects: &[SceneObject],
    areas: &BTreeMap<SpriteId, f64>,
    spec: &GroupPriorSpec,
    alpha: f64,
) -> Result<ObjectModel, Error> {
    if objects.is_empty() {
        return Err(Error::Validation(
            "attention_from_groups needs at least one object".into(),
        ));
    }
    spec.validate()?;
    check_probability("alpha", alpha)?;

    let area_of = |id: &SpriteId| areas.get(id).copied().unwrap_or(0.0);

    let salience: Vec<f64> = objects
        .iter()
        .map(|o| {
            let total: f64 = o.sprite_ids.iter().map(&area_of).sum();
            if total > 0.0 {
                pow_or_identity(total, spec.modulation.area_exponent)
            } else {
                0.0
            }
        })
        .collect();

    let mut group_mass: BTreeMap<ObjectGroup, f64> = BTreeMap::new();
    for (object, s) in objects.iter().zip(&salience) {
        *group_mass.entry(object.group).or_insert(0.0) += s;
    }
    let prior_total: f64 = ObjectGroup::ALL
        .iter()
        .filter(|g| group_mass.get(g).copied().unwrap_or(0.0) > 0.0)
        .map(|g| spec.priors.get(*g))
        .sum();

    let mut model = ObjectModel {
        alpha,
        objects: BTreeMap::new(),
    };
    for (object, s) in objects.iter().zip(&salience) {
        let mass = group_mass[&object.group];
        let probability = if *s > 0.0 && mass > 0.0 && prior_total > 0.0 {
            spec.priors.get(object.group) / prior_total * s / mass
        } else {
            0.0
        };

        let weights: Vec<f64> = object
            .sprite_ids
            .iter()
            .map(|id| {
                let edge = object.edge_sprite_ids.contains(id);
                area_of(id) * (1.0 + if edge { spec.modulation.edge_bonus } else { 0.0 })
            })
            .collect();
        let weight_total: f64 = weights.iter().sum();
        let sprite_conditionals = object
            .sprite_ids
            .iter()
            .zip(&weights)
            .map(|(id, w)| {
                let conditional = if weight_total > 0.0 {
                    w / weight_total
                } else {
                    1.0 / object.sprite_ids.len() as f64
                };
                (id.clone(), conditional)
            })
            .collect();

        model.objects.insert(
            object.id.clone(),
            ObjectAttention {
                probability,
                sprite_conditionals,
            },
        );
    }
    model.validate()?;
    Ok(model)
}

/// Reweights sprite conditionals by artifact persistence: each conditional is
/// scaled by `1 + beta * persistence(sprite)` and renormalized within its
/// object. `beta = 0` returns the model unchanged.
pub fn condition_on_cost(
    model: &ObjectModel,
    histories: &CostHistory,
    beta: f64,
) -> Result<ObjectModel, Error> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Validation(format!(
            "persistence gain beta must be nonnegative, got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(model.clone());
    }
    let mut conditioned = model.clone();
    for attention in conditioned.objects.values_mut() {
        let boosted: BTreeMap<SpriteId, f64> = attention
            .sprite_conditionals
            .iter()
            .map(|(id, p)| (id.clone(), p * (1.0 + beta * histories.persistence(id))))
            .collect();
        let total: f64 = boosted.values().sum();
        if total > 0.0 {
            attention.sprite_conditionals = boosted
                .into_iter()
                .map(|(id, w)| (id, w / total))
                .collect();
        }
    }
    Ok(conditioned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn costs(entries: &[(&str, f64)]) -> BTreeMap<SpriteId, f64> {
        entries
            .iter()
            .map(|(id, c)| (SpriteId::from(*id), *c))
            .collect()
    }

    fn binary(entries: &[(&str, f64)], alpha: f64) -> BinaryModel {
        BinaryModel {
            probabilities: entries
                .iter()
                .map(|(id, p)| (SpriteId::from(*id), *p))
                .collect(),
            alpha,
        }
    }

    #[test]
    fn binary_substitution_example() {
        let model = binary(&[("s", 0.6)], 0.5);
        let c = costs(&[("s", 10.0)]);
        assert_relative_eq!(
            expected_cost_binary(&c, &model).unwrap(),
            8.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn binary_alpha_one_is_the_raw_sum() {
        let model = binary(&[("a", 0.3), ("b", 0.9)], 1.0);
        let c = costs(&[("a", 2.5), ("b", 4.25)]);
        let expected = expected_cost_binary(&c, &model).unwrap();
        assert_eq!(expected, crate::cost::frame_cost(&c));
    }

    #[test]
    fn binary_alpha_zero_keeps_attended_mass_only() {
        let model = binary(&[("a", 0.3), ("b", 0.9)], 0.0);
        let c = costs(&[("a", 2.5), ("b", 4.0)]);
        let expected = expected_cost_binary(&c, &model).unwrap();
        assert_eq!(expected, 0.3 * 2.5 + 0.9 * 4.0);
    }

    #[test]
    fn binary_missing_probability_errors() {
        let model = binary(&[("a", 0.3)], 0.0);
        let c = costs(&[("a", 1.0), ("b", 1.0)]);
        assert!(matches!(
            expected_cost_binary(&c, &model),
            Err(Error::MissingAttention(_))
        ));
    }

    #[test]
    fn continuous_uniform_linear_halves_cost() {
        let model = ContinuousModel {
            densities: [(SpriteId::from("s"), PiecewiseDensity::uniform(16))]
                .into_iter()
                .collect(),
            attenuation: Attenuation::Linear,
        };
        let c = costs(&[("s", 10.0)]);
        assert_relative_eq!(
            expected_cost_continuous(&c, &model).unwrap(),
            5.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn continuous_top_bin_mass_with_unit_attenuation_keeps_cost() {
        let model = ContinuousModel {
            densities: [(
                SpriteId::from("s"),
                PiecewiseDensity::two_point(16, 1.0).unwrap(),
            )]
            .into_iter()
            .collect(),
            attenuation: Attenuation::Constant { value: 1.0 },
        };
        let c = costs(&[("s", 7.25)]);
        assert_relative_eq!(
            expected_cost_continuous(&c, &model).unwrap(),
            7.25,
            epsilon = 1e-6
        );
    }

    #[test]
    fn unnormalized_density_is_rejected() {
        assert!(PiecewiseDensity::new(vec![1.0, 0.5]).is_err());
        assert!(PiecewiseDensity::new(vec![1.5, 0.5]).is_ok());
    }

    #[test]
    fn object_substitution_examples() {
        let certain = ObjectModel {
            alpha: 0.0,
            objects: [(
                ObjectId::from("o"),
                ObjectAttention {
                    probability: 1.0,
                    sprite_conditionals: [(SpriteId::from("s"), 1.0)].into_iter().collect(),
                },
            )]
            .into_iter()
            .collect(),
        };
        assert_eq!(
            expected_cost_object(&costs(&[("s", 4.0)]), &certain).unwrap(),
            4.0
        );

        let half = ObjectModel {
            alpha: 0.0,
            objects: [(
                ObjectId::from("o"),
                ObjectAttention {
                    probability: 0.5,
                    sprite_conditionals: [(SpriteId::from("s"), 0.4)].into_iter().collect(),
                },
            )]
            .into_iter()
            .collect(),
        };
        assert_relative_eq!(
            expected_cost_object(&costs(&[("s", 10.0)]), &half).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn orphan_sprite_errors() {
        let model = ObjectModel {
            alpha: 0.0,
            objects: BTreeMap::new(),
        };
        assert!(matches!(
            expected_cost_object(&costs(&[("s", 1.0)]), &model),
            Err(Error::OrphanSprite(_))
        ));
    }

    fn scene(groups: &[(&str, ObjectGroup, &[(&str, f64)], &[&str])]) -> (Vec<SceneObject>, BTreeMap<SpriteId, f64>) {
        let mut objects = Vec::new();
        let mut areas = BTreeMap::new();
        for (object_id, group, sprites, edges) in groups {
            objects.push(SceneObject {
                id: ObjectId::from(*object_id),
                group: *group,
                sprite_ids: sprites.iter().map(|(id, _)| SpriteId::from(*id)).collect(),
                edge_sprite_ids: edges.iter().map(|id| SpriteId::from(*id)).collect(),
            });
            for (id, area) in *sprites {
                areas.insert(SpriteId::from(*id), *area);
            }
        }
        (objects, areas)
    }

    #[test]
    fn one_object_per_group_recovers_the_priors() {
        let (objects, areas) = scene(&[
            ("p", ObjectGroup::PrimaryActor, &[("p0", 0.1)], &[]),
            ("s", ObjectGroup::SecondaryActor, &[("s0", 0.1)], &[]),
            ("c", ObjectGroup::CriticalEnvironment, &[("c0", 0.1)], &[]),
            ("b", ObjectGroup::BackgroundEnvironment, &[("b0", 0.1)], &[]),
        ]);
        let model =
            attention_from_groups(&objects, &areas, &GroupPriorSpec::default(), 0.0).unwrap();
        let p = |id: &str| model.objects[&ObjectId::from(id)].probability;
        assert_relative_eq!(p("p"), 0.6, epsilon = 1e-12);
        assert_relative_eq!(p("s"), 0.25, epsilon = 1e-12);
        assert_relative_eq!(p("c"), 0.1, epsilon = 1e-12);
        assert_relative_eq!(p("b"), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn group_prior_splits_proportionally_to_area() {
        let (objects, areas) = scene(&[
            ("p1", ObjectGroup::PrimaryActor, &[("a", 0.2)], &[]),
            ("p2", ObjectGroup::PrimaryActor, &[("b", 0.1)], &[]),
            ("s", ObjectGroup::SecondaryActor, &[("s0", 0.1)], &[]),
            ("c", ObjectGroup::CriticalEnvironment, &[("c0", 0.1)], &[]),
            ("e", ObjectGroup::BackgroundEnvironment, &[("e0", 0.1)], &[]),
        ]);
        let model =
            attention_from_groups(&objects, &areas, &GroupPriorSpec::default(), 0.0).unwrap();
        assert_relative_eq!(
            model.objects[&ObjectId::from("p1")].probability,
            0.4,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            model.objects[&ObjectId::from("p2")].probability,
            0.2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_groups_forfeit_their_prior() {
        let (objects, areas) = scene(&[
            ("p", ObjectGroup::PrimaryActor, &[("a", 0.2)], &[]),
            ("b", ObjectGroup::BackgroundEnvironment, &[("e0", 0.2)], &[]),
        ]);
        let model =
            attention_from_groups(&objects, &areas, &GroupPriorSpec::default(), 0.0).unwrap();
        let total: f64 = model.objects.values().map(|o| o.probability).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            model.objects[&ObjectId::from("p")].probability,
            0.6 / 0.65,
            epsilon = 1e-12
        );
    }

    #[test]
    fn edge_sprites_get_boosted_conditionals() {
        let (objects, areas) = scene(&[(
            "o",
            ObjectGroup::PrimaryActor,
            &[("edge", 0.1), ("fill", 0.1)],
            &["edge"],
        )]);
        let model =
            attention_from_groups(&objects, &areas, &GroupPriorSpec::default(), 0.0).unwrap();
        let conditionals = &model.objects[&ObjectId::from("o")].sprite_conditionals;
        assert_relative_eq!(conditionals[&SpriteId::from("edge")], 0.6, epsilon = 1e-12);
        assert_relative_eq!(conditionals[&SpriteId::from("fill")], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn condition_on_cost_reweights_and_renormalizes() {
        let model = ObjectModel {
            alpha: 0.0,
            objects: [(
                ObjectId::from("o"),
                ObjectAttention {
                    probability: 1.0,
                    sprite_conditionals: [
                        (SpriteId::from("calm"), 0.5),
                        (SpriteId::from("flicker"), 0.5),
                    ]
                    .into_iter()
                    .collect(),
                },
            )]
            .into_iter()
            .collect(),
        };
        // persistence 0 vs 0.5: push a cost whose score is exactly 0.5
        let mut histories = CostHistory::new(4, 1.0).unwrap();
        let cost_for_half = -(0.5_f64.ln()); // 1 - exp(-c) = 0.5
        histories.push(&SpriteId::from("flicker"), cost_for_half).unwrap();
        histories.push(&SpriteId::from("calm"), 0.0).unwrap();

        let conditioned = condition_on_cost(&model, &histories, 1.0).unwrap();
        let c = &conditioned.objects[&ObjectId::from("o")].sprite_conditionals;
        assert_relative_eq!(c[&SpriteId::from("calm")], 0.4, epsilon = 1e-12);
        assert_relative_eq!(c[&SpriteId::from("flicker")], 0.6, epsilon = 1e-12);

        let untouched = condition_on_cost(&model, &histories, 0.0).unwrap();
        assert_eq!(untouched, model);
    }

    #[test]
    fn flattening_preserves_expected_cost() {
        let model = ObjectModel {
            alpha: 0.25,
            objects: [
                (
                    ObjectId::from("o1"),
                    ObjectAttention {
                        probability: 0.7,
                        sprite_conditionals: [
                            (SpriteId::from("a"), 0.5),
                            (SpriteId::from("b"), 0.5),
                        ]
                        .into_iter()
                        .collect(),
                    },
                ),
                (
                    ObjectId::from("o2"),
                    ObjectAttention {
                        probability: 0.3,
                        sprite_conditionals: [(SpriteId::from("c"), 1.0)].into_iter().collect(),
                    },
                ),
            ]
            .into_iter()
            .collect(),
        };
        let c = costs(&[("a", 1.5), ("b", 2.5), ("c", 4.0)]);
        let object_cost = expected_cost_object(&c, &model).unwrap();
        let flat_cost = expected_cost_binary(&c, &model.flatten()).unwrap();
        assert_eq!(object_cost, flat_cost);
    }
}
