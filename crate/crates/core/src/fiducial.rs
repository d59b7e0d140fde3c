//! Per-dimension error measures for a sprite under a candidate action.
//!
//! The geometric measure fits a 2D affine transform from the characteristic
//! points at the last render to their current gold positions and reports the
//! residual sum of squared distances. Quality measures map the resolution,
//! texture, geometry, and shading knobs to errors in normalized or declared
//! units. A re-render at the finest quality has a zero fiducial by
//! construction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scene::{CharacteristicPoints, Sprite};

/// A 2D affine transform: linear part plus translation, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2D {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl Affine2D {
    pub fn identity() -> Self {
        Affine2D {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.linear[0][0] * p[0] + self.linear[0][1] * p[1] + self.translation[0],
            self.linear[1][0] * p[0] + self.linear[1][1] * p[1] + self.translation[1],
        ]
    }
}

/// Result of a least-squares affine fit between two point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub transform: Affine2D,
    /// Sum of squared distances between transformed source points and
    /// destination points, in pixels^2.
    pub residual: f64,
    /// Set when the source points are collinear or coincident; the transform
    /// is then the minimum-norm solution rather than a unique optimum.
    pub degenerate: bool,
}

/// Fits the affine transform minimizing the sum of squared distances between
/// transformed `src` points and `dst` points.
pub fn fit_affine(
    src: &CharacteristicPoints,
    dst: &CharacteristicPoints,
) -> Result<AffineFit, Error> {
    if src.len() != dst.len() {
        return Err(Error::PointCountMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    if src.len() < 3 {
        return Err(Error::TooFewPoints(src.len()));
    }

    let n = src.len();
    let design = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => src[r][0],
        1 => src[r][1],
        _ => 1.0,
    });
    let bx = DVector::from_fn(n, |r, _| dst[r][0]);
    let by = DVector::from_fn(n, |r, _| dst[r][1]);

    let svd = design.svd(true, true);
    // The constant column keeps the largest singular value at 1 or above.
    let max_sv = svd.singular_values.max();
    let tol = max_sv * f64::EPSILON * n.max(3) as f64;
    let degenerate = svd.rank(tol) < 3;
    let row_x = svd.solve(&bx, tol).map_err(|e| Error::Validation(e.into()))?;
    let row_y = svd.solve(&by, tol).map_err(|e| Error::Validation(e.into()))?;

    let transform = Affine2D {
        linear: [[row_x[0], row_x[1]], [row_y[0], row_y[1]]],
        translation: [row_x[2], row_y[2]],
    };
    let residual = src
        .iter()
        .zip(dst.iter())
        .map(|(p, q)| {
            let m = transform.apply(*p);
            let dx = m[0] - q[0];
            let dy = m[1] - q[1];
            dx * dx + dy * dy
        })
        .sum();
    Ok(AffineFit {
        transform,
        residual,
        degenerate,
    })
}

/// Residual of reusing the sprite's last rendering, warped by the best affine
/// transform, against the current gold points.
pub fn warp_error(sprite: &Sprite, current: &CharacteristicPoints) -> Result<f64, Error> {
    let snapshot = sprite
        .last_render
        .as_ref()
        .ok_or_else(|| Error::NeverRendered(sprite.id.clone()))?;
    Ok(fit_affine(&snapshot.points, current)?.residual)
}

/// Per-sprite quality knobs of a rendering action. Level 0 and spatial factor
/// 1 are the finest settings on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityVector {
    /// Fraction of full spatial resolution, in (0, 1].
    pub spatial_factor: f64,
    pub texture_lod: u32,
    pub geometry_lod: u32,
    pub shading_level: u32,
}

impl QualityVector {
    pub const fn finest() -> Self {
        QualityVector {
            spatial_factor: 1.0,
            texture_lod: 0,
            geometry_lod: 0,
            shading_level: 0,
        }
    }

    pub fn is_finest(&self) -> bool {
        *self == QualityVector::finest()
    }

    pub fn validate_for(&self, sprite: &Sprite) -> Result<(), Error> {
        if !(self.spatial_factor.is_finite()
            && self.spatial_factor > 0.0
            && self.spatial_factor <= 1.0)
        {
            return Err(Error::QualityOutOfRange(format!(
                "spatial_factor {} not in (0, 1]",
                self.spatial_factor
            )));
        }
        if self.texture_lod > sprite.max_texture_lod {
            return Err(Error::QualityOutOfRange(format!(
                "texture_lod {} exceeds max {} for sprite {}",
                self.texture_lod, sprite.max_texture_lod, sprite.id
            )));
        }
        if self.geometry_lod >= sprite.geometry_lod_count() {
            return Err(Error::QualityOutOfRange(format!(
                "geometry_lod {} exceeds declared levels {} for sprite {}",
                self.geometry_lod,
                sprite.geometry_lod_count(),
                sprite.id
            )));
        }
        if self.shading_level > sprite.max_shading_level {
            return Err(Error::QualityOutOfRange(format!(
                "shading_level {} exceeds max {} for sprite {}",
                self.shading_level, sprite.max_shading_level, sprite.id
            )));
        }
        Ok(())
    }

    /// Clamps each knob into the sprite's declared range. Used when one
    /// frame-wide quality vector is applied to sprites with differing ranges.
    pub fn clamped_for(&self, sprite: &Sprite) -> QualityVector {
        QualityVector {
            spatial_factor: self.spatial_factor.clamp(f64::MIN_POSITIVE, 1.0),
            texture_lod: self.texture_lod.min(sprite.max_texture_lod),
            geometry_lod: self.geometry_lod.min(sprite.geometry_lod_count() - 1),
            shading_level: self.shading_level.min(sprite.max_shading_level),
        }
    }
}

impl Default for QualityVector {
    fn default() -> Self {
        QualityVector::finest()
    }
}

/// The per-sprite decision: re-render from geometry at some quality, or reuse
/// the last rendering through an affine warp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RenderAction {
    Rerender(QualityVector),
    Warp,
}

impl RenderAction {
    pub fn label(&self) -> &'static str {
        match self {
            RenderAction::Rerender(_) => "rerender",
            RenderAction::Warp => "warp",
        }
    }

    pub fn is_rerender(&self) -> bool {
        matches!(self, RenderAction::Rerender(_))
    }
}

/// Per-dimension error estimates relative to a gold-standard rendering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fiducial {
    /// Pixels^2, from the affine reuse fit. 0 for a fresh render.
    pub geometric_warp_error: f64,
    /// Normalized [0, 1].
    pub resolution_error: f64,
    /// Normalized [0, 1].
    pub texture_error: f64,
    /// Declared units from the sprite's LOD table.
    pub geometry_error: f64,
    /// Normalized [0, 1].
    pub shading_error: f64,
}

impl Fiducial {
    pub const ZERO: Fiducial = Fiducial {
        geometric_warp_error: 0.0,
        resolution_error: 0.0,
        texture_error: 0.0,
        geometry_error: 0.0,
        shading_error: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        *self == Fiducial::ZERO
    }
}

/// Functional forms mapping quality knobs to errors. The defaults are linear
/// in resolution and shading and halve the texture error term per level;
/// geometry reads the declared table. Each form is monotone in the coarseness
/// of its knob for any valid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualityErrorModel {
    /// Exponent on (1 - spatial_factor); must be positive.
    pub resolution_exponent: f64,
    /// Texture error is 1 - base^(-lod); must exceed 1.
    pub texture_base: f64,
    /// Exponent on shading_level / max_shading_level; must be positive.
    pub shading_exponent: f64,
}

impl Default for QualityErrorModel {
    fn default() -> Self {
        QualityErrorModel {
            resolution_exponent: 1.0,
            texture_base: 2.0,
            shading_exponent: 1.0,
        }
    }
}

fn pow_or_identity(x: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        x
    } else {
        x.powf(exponent)
    }
}

impl QualityErrorModel {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.resolution_exponent > 0.0 && self.resolution_exponent.is_finite()) {
            return Err(Error::Validation("resolution_exponent must be positive".into()));
        }
        if !(self.texture_base > 1.0 && self.texture_base.is_finite()) {
            return Err(Error::Validation("texture_base must exceed 1".into()));
        }
        if !(self.shading_exponent > 0.0 && self.shading_exponent.is_finite()) {
            return Err(Error::Validation("shading_exponent must be positive".into()));
        }
        Ok(())
    }

    /// Errors induced by the quality knobs alone; the geometric warp
    /// component is 0 here and filled in by [`evaluate_fiducial`] for warps.
    pub fn quality_errors(&self, sprite: &Sprite, q: &QualityVector) -> Result<Fiducial, Error> {
        q.validate_for(sprite)?;
        let resolution_error = pow_or_identity(1.0 - q.spatial_factor, self.resolution_exponent);
        let texture_error = 1.0 - self.texture_base.powi(-(q.texture_lod as i32));
        let geometry_error = sprite.polygon_budget[q.geometry_lod as usize].geometry_error;
        let shading_error = if sprite.max_shading_level == 0 {
            0.0
        } else {
            pow_or_identity(
                q.shading_level as f64 / sprite.max_shading_level as f64,
                self.shading_exponent,
            )
        };
        Ok(Fiducial {
            geometric_warp_error: 0.0,
            resolution_error,
            texture_error,
            geometry_error,
            shading_error,
        })
    }
}

/// Full fiducial of taking `action` on `sprite` whose gold points are
/// `current`.
pub fn evaluate_fiducial(
    sprite: &Sprite,
    action: &RenderAction,
    current: &CharacteristicPoints,
    model: &QualityErrorModel,
) -> Result<Fiducial, Error> {
    match action {
        RenderAction::Rerender(q) => model.quality_errors(sprite, q),
        RenderAction::Warp => {
            let snapshot = sprite
                .last_render
                .as_ref()
                .ok_or_else(|| Error::NeverRendered(sprite.id.clone()))?;
            let mut fid = model.quality_errors(sprite, &snapshot.quality)?;
            fid.geometric_warp_error = fit_affine(&snapshot.points, current)?.residual;
            Ok(fid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{tiny_scenario, SpriteId};
    use approx::assert_relative_eq;

    fn points(v: &[[f64; 2]]) -> CharacteristicPoints {
        CharacteristicPoints::new(v.to_vec()).unwrap()
    }

    fn test_sprite() -> Sprite {
        let scenario = tiny_scenario();
        Sprite::from_scenario(&scenario, &SpriteId::from("a")).unwrap()
    }

    #[test]
    fn identity_fit_has_zero_residual() {
        let src = points(&[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]]);
        let fit = fit_affine(&src, &src).unwrap();
        assert!(!fit.degenerate);
        assert_relative_eq!(fit.residual, 0.0, epsilon = 1e-18);
        for (i, row) in fit.transform.linear.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(*v, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn translation_is_recovered_exactly() {
        let src = points(&[[3.0, 1.0], [9.0, 2.0], [5.0, 8.0], [1.0, 6.0]]);
        let dst = points(
            &src.iter()
                .map(|p| [p[0] + 5.0, p[1] - 2.0])
                .collect::<Vec<_>>(),
        );
        let fit = fit_affine(&src, &dst).unwrap();
        assert_relative_eq!(fit.transform.translation[0], 5.0, epsilon = 1e-9);
        assert_relative_eq!(fit.transform.translation[1], -2.0, epsilon = 1e-9);
        assert!(fit.residual < 1e-18);
    }

    #[test]
    fn collinear_points_set_the_degeneracy_flag() {
        let src = points(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        let dst = points(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.1]]);
        let fit = fit_affine(&src, &dst).unwrap();
        assert!(fit.degenerate);
        assert!(fit.residual.is_finite());
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let src = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let dst = points(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(
            fit_affine(&src, &dst),
            Err(Error::PointCountMismatch { .. })
        ));
    }

    #[test]
    fn warp_error_is_zero_without_motion() {
        let mut sprite = test_sprite();
        sprite.mark_rendered(0, QualityVector::finest());
        let current = sprite.points_gold.clone();
        assert!(warp_error(&sprite, &current).unwrap() < 1e-18);
    }

    #[test]
    fn warp_error_is_zero_under_rotation() {
        let mut sprite = test_sprite();
        sprite.mark_rendered(0, QualityVector::finest());
        let (sin, cos) = 0.3_f64.sin_cos();
        let rotated = CharacteristicPoints::new(
            sprite
                .points_gold
                .iter()
                .map(|p| [cos * p[0] - sin * p[1], sin * p[0] + cos * p[1]])
                .collect(),
        )
        .unwrap();
        assert!(warp_error(&sprite, &rotated).unwrap() < 1e-9);
    }

    #[test]
    fn warp_on_unrendered_sprite_errors() {
        let sprite = test_sprite();
        let current = sprite.points_gold.clone();
        assert!(matches!(
            warp_error(&sprite, &current),
            Err(Error::NeverRendered(_))
        ));
    }

    #[test]
    fn finest_quality_is_a_zero_fiducial() {
        let sprite = test_sprite();
        let fid = QualityErrorModel::default()
            .quality_errors(&sprite, &QualityVector::finest())
            .unwrap();
        assert!(fid.is_zero());
    }

    #[test]
    fn quarter_resolution_gives_three_quarters_error() {
        let sprite = test_sprite();
        let q = QualityVector {
            spatial_factor: 0.25,
            ..QualityVector::finest()
        };
        let fid = QualityErrorModel::default().quality_errors(&sprite, &q).unwrap();
        assert_relative_eq!(fid.resolution_error, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn geometry_error_reads_the_declared_table() {
        let mut sprite = test_sprite();
        sprite.polygon_budget = vec![
            crate::scene::LodLevel {
                level: 0,
                polygon_count: 6795,
                geometry_error: 0.0,
            },
            crate::scene::LodLevel {
                level: 1,
                polygon_count: 97,
                geometry_error: 0.37,
            },
        ];
        let q = QualityVector {
            geometry_lod: 1,
            ..QualityVector::finest()
        };
        let fid = QualityErrorModel::default().quality_errors(&sprite, &q).unwrap();
        assert_eq!(fid.geometry_error, 0.37);
    }

    #[test]
    fn out_of_range_knob_is_rejected() {
        let sprite = test_sprite();
        let q = QualityVector {
            texture_lod: sprite.max_texture_lod + 1,
            ..QualityVector::finest()
        };
        assert!(matches!(
            QualityErrorModel::default().quality_errors(&sprite, &q),
            Err(Error::QualityOutOfRange(_))
        ));
    }

    #[test]
    fn rerender_at_finest_evaluates_to_zero() {
        let sprite = test_sprite();
        let current = sprite.points_gold.clone();
        let fid = evaluate_fiducial(
            &sprite,
            &RenderAction::Rerender(QualityVector::finest()),
            &current,
            &QualityErrorModel::default(),
        )
        .unwrap();
        assert!(fid.is_zero());
    }

    #[test]
    fn warp_right_after_render_without_motion_is_zero() {
        let mut sprite = test_sprite();
        sprite.mark_rendered(0, QualityVector::finest());
        let current = sprite.points_gold.clone();
        let fid = evaluate_fiducial(
            &sprite,
            &RenderAction::Warp,
            &current,
            &QualityErrorModel::default(),
        )
        .unwrap();
        assert!(fid.geometric_warp_error < 1e-18);
        assert_eq!(fid.resolution_error, 0.0);
        assert_eq!(fid.texture_error, 0.0);
        assert_eq!(fid.geometry_error, 0.0);
        assert_eq!(fid.shading_error, 0.0);
    }

    #[test]
    fn texture_error_halves_toward_one() {
        let sprite = test_sprite();
        let model = QualityErrorModel::default();
        let mut prev = -1.0;
        for lod in 0..=sprite.max_texture_lod {
            let q = QualityVector {
                texture_lod: lod,
                ..QualityVector::finest()
            };
            let fid = model.quality_errors(&sprite, &q).unwrap();
            assert!(fid.texture_error > prev);
            prev = fid.texture_error;
        }
        let q1 = QualityVector {
            texture_lod: 1,
            ..QualityVector::finest()
        };
        assert_relative_eq!(
            model.quality_errors(&sprite, &q1).unwrap().texture_error,
            0.5,
            epsilon = 1e-12
        );
    }
}
