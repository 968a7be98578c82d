use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RigidTransform, SceneError};
use crate::mesh::{ExpressionWeights, NEUTRAL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    /// World position in metres.
    pub position: [f64; 3],
    pub intensity: f64,
    pub color: [f64; 3],
}

impl PointLight {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(SceneError::InvalidLight("position must be finite"));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(SceneError::InvalidLight(
                "intensity must be finite and >= 0",
            ));
        }
        if self.color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(SceneError::InvalidLight(
                "color components must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn position(&self) -> Point3<f64> {
        Point3::from(self.position)
    }
}

/// Ranges the per-frame scene parameters are drawn from. Distances and the
/// light box are in millimetres, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub frame_count: u64,
    pub seed: u64,
    pub distance_mm: [f64; 2],
    pub yaw_deg: [f64; 2],
    pub pitch_deg: [f64; 2],
    pub roll_deg: [f64; 2],
    pub expressions: Vec<String>,
    /// Weight given to the drawn expression.
    pub expression_weight: [f64; 2],
    pub light_min_mm: [f64; 3],
    pub light_max_mm: [f64; 3],
    pub light_intensity: f64,
    pub light_color: [f64; 3],
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            frame_count: 100,
            seed: 42,
            distance_mm: [700.0, 1000.0],
            yaw_deg: [-45.0, 45.0],
            pitch_deg: [-20.0, 20.0],
            roll_deg: [-10.0, 10.0],
            expressions: ["neutral", "angry", "happy", "sad", "scared"]
                .into_iter()
                .map(String::from)
                .collect(),
            expression_weight: [1.0, 1.0],
            light_min_mm: [-300.0, -300.0, -50.0],
            light_max_mm: [300.0, 300.0, 50.0],
            // Fronto-parallel facet at 0.85 m with the light at the camera:
            // 0.75 * (0.15 + 0.66 / 0.85^2) ~= 0.80.
            light_intensity: 0.66,
            light_color: [1.0, 1.0, 1.0],
        }
    }
}

/// One frame's worth of scene variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub frame_index: u64,
    /// Per-frame stream seed, derived from the global seed and frame index.
    pub seed: u64,
    /// Metres from the camera centre to the head origin.
    pub camera_distance: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    /// Model-to-world placement of the head.
    pub head_pose: RigidTransform,
    pub expression_name: String,
    pub expression: ExpressionWeights,
    pub light: PointLight,
}

fn check_range(field: &'static str, r: &[f64; 2]) -> Result<(), SceneError> {
    if !(r[0].is_finite() && r[1].is_finite()) {
        return Err(SceneError::InvalidRange {
            field,
            reason: "bounds must be finite",
        });
    }
    if r[0] > r[1] {
        return Err(SceneError::InvalidRange {
            field,
            reason: "lower bound exceeds upper bound",
        });
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        check_range("distance_mm", &self.distance_mm)?;
        if self.distance_mm[0] <= 0.0 {
            return Err(SceneError::InvalidRange {
                field: "distance_mm",
                reason: "distances must be positive",
            });
        }
        check_range("yaw_deg", &self.yaw_deg)?;
        check_range("pitch_deg", &self.pitch_deg)?;
        check_range("roll_deg", &self.roll_deg)?;
        check_range("expression_weight", &self.expression_weight)?;
        if self.expression_weight[0] < 0.0 || self.expression_weight[1] > 1.0 {
            return Err(SceneError::InvalidRange {
                field: "expression_weight",
                reason: "weights must lie in [0, 1]",
            });
        }
        for axis in 0..3 {
            check_range(
                "light_min_mm/light_max_mm",
                &[self.light_min_mm[axis], self.light_max_mm[axis]],
            )?;
        }
        if self.expressions.is_empty() {
            return Err(SceneError::EmptyExpressionSet);
        }
        PointLight {
            position: [0.0; 3],
            intensity: self.light_intensity,
            color: self.light_color,
        }
        .validate()
    }
}

/// SplitMix64 finaliser.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent stream for one frame.
pub fn frame_seed(global_seed: u64, frame_index: u64) -> u64 {
    splitmix64(global_seed ^ splitmix64(frame_index))
}

/// Uniform draw on `[lo, hi]`; returns `lo` exactly for a degenerate range.
fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Draws the scene configuration for `frame_index`. The result depends only
/// on the arguments, never on which other frames were sampled before.
pub fn sample_scene(
    config: &SweepConfig,
    frame_index: u64,
    global_seed: u64,
) -> Result<SceneSample, SceneError> {
    config.validate()?;
    let seed = frame_seed(global_seed, frame_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Draw order is part of the output format; do not reorder.
    let distance_mm = uniform(&mut rng, config.distance_mm);
    let yaw = uniform(&mut rng, config.yaw_deg);
    let pitch = uniform(&mut rng, config.pitch_deg);
    let roll = uniform(&mut rng, config.roll_deg);
    let expr_idx = rng.random_range(0..config.expressions.len());
    let weight = uniform(&mut rng, config.expression_weight);
    let mut light_mm = [0.0; 3];
    for (axis, slot) in light_mm.iter_mut().enumerate() {
        *slot = uniform(
            &mut rng,
            [config.light_min_mm[axis], config.light_max_mm[axis]],
        );
    }

    // Keep the stored distance inside the closed range despite rounding.
    let camera_distance = (distance_mm / 1000.0).clamp(
        config.distance_mm[0] / 1000.0,
        config.distance_mm[1] / 1000.0,
    );
    let head_pose =
        RigidTransform::from_euler_deg(yaw, pitch, roll, Vector3::new(0.0, 0.0, -camera_distance))?;
    let expression_name = config.expressions[expr_idx].clone();
    let expression = if expression_name == NEUTRAL {
        ExpressionWeights::default()
    } else {
        ExpressionWeights::single(&expression_name, weight).map_err(|_| {
            SceneError::InvalidRange {
                field: "expression_weight",
                reason: "weight must be finite",
            }
        })?
    };

    Ok(SceneSample {
        frame_index,
        seed,
        camera_distance,
        yaw_deg: yaw,
        pitch_deg: pitch,
        roll_deg: roll,
        head_pose,
        expression_name,
        expression,
        light: PointLight {
            position: light_mm.map(|v| v / 1000.0),
            intensity: config.light_intensity,
            color: config.light_color,
        },
    })
}

/// Unit vector from the head origin toward the light.
pub fn light_direction(
    sample: &SceneSample,
    head_origin: &Point3<f64>,
) -> Result<Vector3<f64>, SceneError> {
    let d = sample.light.position() - head_origin;
    let n = d.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(SceneError::DegenerateGeometry(
            "light position coincides with the head origin",
        ));
    }
    Ok(d / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_light(pos: [f64; 3]) -> SceneSample {
        let mut s = sample_scene(&SweepConfig::default(), 0, 1).unwrap();
        s.light.position = pos;
        s
    }

    #[test]
    fn distance_within_default_range() {
        let cfg = SweepConfig::default();
        for i in 0..2000 {
            let s = sample_scene(&cfg, i, 7).unwrap();
            assert!((0.7..=1.0).contains(&s.camera_distance));
        }
    }

    #[test]
    fn repeated_calls_are_bit_identical() {
        let cfg = SweepConfig::default();
        let a = sample_scene(&cfg, 12, 42).unwrap();
        let b = sample_scene(&cfg, 12, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.camera_distance.to_bits(), b.camera_distance.to_bits());
    }

    #[test]
    fn frames_differ() {
        let cfg = SweepConfig::default();
        let a = sample_scene(&cfg, 0, 42).unwrap();
        let b = sample_scene(&cfg, 1, 42).unwrap();
        assert_ne!(a.seed, b.seed);
        assert_ne!(a.camera_distance, b.camera_distance);
    }

    #[test]
    fn empty_expression_set_rejected() {
        let cfg = SweepConfig {
            expressions: vec![],
            ..SweepConfig::default()
        };
        assert!(matches!(
            sample_scene(&cfg, 0, 0),
            Err(SceneError::EmptyExpressionSet)
        ));
    }

    #[test]
    fn inverted_range_rejected() {
        let cfg = SweepConfig {
            yaw_deg: [10.0, -10.0],
            ..SweepConfig::default()
        };
        assert!(matches!(
            sample_scene(&cfg, 0, 0),
            Err(SceneError::InvalidRange {
                field: "yaw_deg",
                ..
            })
        ));
    }

    #[test]
    fn degenerate_range_returns_bound() {
        let cfg = SweepConfig {
            distance_mm: [850.0, 850.0],
            ..SweepConfig::default()
        };
        assert_eq!(sample_scene(&cfg, 3, 3).unwrap().camera_distance, 0.85);
    }

    #[test]
    fn neutral_means_no_weights() {
        let cfg = SweepConfig {
            expressions: vec![NEUTRAL.into()],
            ..SweepConfig::default()
        };
        assert!(sample_scene(&cfg, 0, 0).unwrap().expression.is_empty());
    }

    #[test]
    fn light_direction_axis_aligned() {
        let d = light_direction(&with_light([0.0, 0.0, 1.0]), &Point3::origin()).unwrap();
        assert_eq!(d, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn light_direction_diagonal() {
        let d = light_direction(&with_light([1.0, 1.0, 0.0]), &Point3::origin()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d - Vector3::new(h, h, 0.0)).norm() < 1e-15);
        assert!((d.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn light_at_head_is_degenerate() {
        assert!(matches!(
            light_direction(&with_light([0.0; 3]), &Point3::origin()),
            Err(SceneError::DegenerateGeometry(_))
        ));
    }
}
