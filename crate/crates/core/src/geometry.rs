//! Unified global grounding frame and 7-DoF boxes.
//!
//! The unified frame puts its origin at the first camera's optical center,
//! its +x axis along the ground-plane projection of that camera's optical
//! axis, and +z along gravity-up. Source data is assumed z-up.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Box9DoF, CameraFrame, Mat3, Scene, Vec3};

/// Below this length a ground-plane projection is treated as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-6;

/// Wraps an angle into (-pi, pi].
///
/// Results that land within 1e-12 of -pi are reported as +pi so the upper
/// boundary stays included.
pub fn wrap_yaw(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFinite("yaw"));
    }
    let mut r = theta - TAU * (theta / TAU).round();
    if r <= -PI + 1e-12 {
        r = PI;
    } else if r > PI {
        r -= TAU;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnifiedFrame {
    pub origin: Vec3,
    pub x_axis: Vec3,
    pub y_axis: Vec3,
    pub up: Vec3,
}

impl UnifiedFrame {
    pub const IDENTITY: UnifiedFrame = UnifiedFrame {
        origin: Vec3::ZERO,
        x_axis: Vec3::X,
        y_axis: Vec3::Y,
        up: Vec3::Z,
    };

    /// Unified-to-source rotation (columns are the frame axes).
    pub fn basis(&self) -> Mat3 {
        Mat3::from_columns(self.x_axis, self.y_axis, self.up)
    }

    /// Expresses a source-frame point in the unified frame.
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(self.x_axis), d.dot(self.y_axis), d.dot(self.up))
    }
}

/// Builds the unified frame from the first camera of a trajectory.
pub fn build_unified_frame(first: &CameraFrame) -> Result<UnifiedFrame> {
    let axis = first.optical_axis();
    let ground = Vec3::new(axis.x, axis.y, 0.0);
    let len = ground.norm();
    if len.is_nan() || len < DEGENERACY_EPS {
        return Err(Error::DegenerateProjection);
    }
    let x_axis = ground * (1.0 / len);
    let up = Vec3::Z;
    Ok(UnifiedFrame {
        origin: first.optical_center(),
        x_axis,
        y_axis: up.cross(x_axis),
        up,
    })
}

/// Builds the unified frame for a scene from its lowest-index camera.
pub fn scene_frame(scene: &Scene) -> Result<UnifiedFrame> {
    let first = scene
        .first_camera()
        .ok_or_else(|| Error::MissingTrajectory {
            scene_id: scene.scene_id.clone(),
        })?;
    build_unified_frame(first)
}

pub fn transform_point(frame: &UnifiedFrame, p: Vec3) -> Vec3 {
    frame.transform_point(p)
}

/// 7-DoF box in the unified frame: center, local extents (l, w, h) and yaw
/// about +z in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box7DoF {
    pub center: Vec3,
    pub size: [f64; 3],
    pub yaw: f64,
}

impl Box7DoF {
    pub fn new(center: Vec3, size: [f64; 3], yaw: f64) -> Self {
        Self { center, size, yaw }
    }

    /// The seven values in answer order.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.center.x,
            self.center.y,
            self.center.z,
            self.size[0],
            self.size[1],
            self.size[2],
            self.yaw,
        ]
    }
}

/// Converts a source 9-DoF box into the unified frame, dropping roll and
/// pitch. Yaw is the z angle of a Z-Y-X Euler decomposition of the rotation
/// expressed in the unified frame. `id` is only used for error reporting.
pub fn box9_to_box7(frame: &UnifiedFrame, b: &Box9DoF, id: &str) -> Result<Box7DoF> {
    let local = frame.basis().transpose().mul_mat(&b.rotation);
    let (c, s) = (local.rows[0][0], local.rows[1][0]);
    if c.hypot(s) < DEGENERACY_EPS {
        return Err(Error::GimbalDegenerate { id: id.to_owned() });
    }
    Ok(Box7DoF {
        center: frame.transform_point(b.center),
        size: b.size,
        yaw: wrap_yaw(s.atan2(c))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedObject {
    pub id: String,
    pub category: String,
    #[serde(rename = "box")]
    pub bbox: Box7DoF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedScene {
    pub scene_id: String,
    pub frame: UnifiedFrame,
    pub objects: Vec<NormalizedObject>,
}

/// Error from [`normalize_scene`]: either the frame itself failed or some
/// boxes were gimbal-degenerate.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizeError {
    Frame(Error),
    Degenerate(Vec<String>),
}

/// Expresses every box of a scene as a 7-DoF box in the unified frame.
pub fn normalize_scene(scene: &Scene) -> std::result::Result<NormalizedScene, NormalizeError> {
    let frame = scene_frame(scene).map_err(NormalizeError::Frame)?;
    let mut objects = Vec::with_capacity(scene.objects.len());
    let mut degenerate = Vec::new();
    for obj in &scene.objects {
        match box9_to_box7(&frame, &obj.bbox, &obj.id) {
            Ok(bbox) => objects.push(NormalizedObject {
                id: obj.id.clone(),
                category: obj.category.clone(),
                bbox,
            }),
            Err(_) => degenerate.push(obj.id.clone()),
        }
    }
    if !degenerate.is_empty() {
        return Err(NormalizeError::Degenerate(degenerate));
    }
    Ok(NormalizedScene {
        scene_id: scene.scene_id.clone(),
        frame,
        objects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    /// Camera whose optical axis (local +z) points along `forward`, with
    /// local y pointing down where possible.
    fn camera_looking(at: Vec3, forward: Vec3) -> CameraFrame {
        let z = forward * (1.0 / forward.norm());
        let down = -Vec3::Z;
        let x = down.cross(z);
        let x = if x.norm() < 1e-9 { Vec3::X } else { x * (1.0 / x.norm()) };
        let y = z.cross(x);
        CameraFrame {
            index: 0,
            rotation: Mat3::from_columns(x, y, z),
            translation: at,
        }
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_yaw(0.0).unwrap(), 0.0);
        assert_eq!(wrap_yaw(3.0 * PI).unwrap(), PI);
        assert_eq!(wrap_yaw(PI).unwrap(), PI);
        assert_eq!(wrap_yaw(-PI).unwrap(), PI);
        assert!(wrap_yaw(f64::NAN).is_err());
        assert!(wrap_yaw(f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_matches_repeated_reduction() {
        // Oracle: add or subtract 2pi until inside (-pi, pi].
        fn reduce(mut t: f64) -> f64 {
            while t > PI {
                t -= TAU;
            }
            while t <= -PI {
                t += TAU;
            }
            t
        }
        assert!((reduce(-3.5 * PI) - FRAC_PI_2).abs() < 1e-12);
        assert!((wrap_yaw(-3.5 * PI).unwrap() - FRAC_PI_2).abs() < 1e-12);
        for i in -200..200 {
            let t = i as f64 * 0.173;
            assert!((wrap_yaw(t).unwrap() - reduce(t)).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn camera_along_x_gives_identity_frame() {
        let frame = build_unified_frame(&camera_looking(Vec3::ZERO, Vec3::X)).unwrap();
        assert!(close(frame.origin, Vec3::ZERO, 0.0));
        assert!(close(frame.x_axis, Vec3::X, 1e-15));
        assert!(close(frame.y_axis, Vec3::Y, 1e-15));
        assert!(close(frame.up, Vec3::Z, 0.0));
    }

    #[test]
    fn camera_along_y_frame() {
        let cam = camera_looking(Vec3::new(1.0, 1.0, 0.5), Vec3::Y);
        let frame = build_unified_frame(&cam).unwrap();
        assert_eq!(frame.origin, Vec3::new(1.0, 1.0, 0.5));
        assert!(close(frame.x_axis, Vec3::Y, 1e-15));
        // up x x_axis = z x y = -x
        assert!(close(frame.y_axis, Vec3::new(-1.0, 0.0, 0.0), 1e-15));
        let p = frame.transform_point(Vec3::new(1.0, 3.0, 0.5));
        assert!(close(p, Vec3::new(2.0, 0.0, 0.0), 1e-12));
        assert_eq!(frame.transform_point(frame.origin), Vec3::ZERO);
    }

    #[test]
    fn tilted_camera_projects_to_ground() {
        let cam = camera_looking(Vec3::ZERO, Vec3::new(1.0, 1.0, -3.0));
        let frame = build_unified_frame(&cam).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(frame.x_axis, Vec3::new(s, s, 0.0), 1e-12));
        assert!(frame.basis().check_rotation(1e-9).is_ok());
    }

    #[test]
    fn downward_camera_is_degenerate() {
        let cam = CameraFrame {
            index: 0,
            rotation: Mat3::rot_x(PI),
            translation: Vec3::ZERO,
        };
        assert_eq!(cam.optical_axis().z, -1.0);
        assert_eq!(build_unified_frame(&cam), Err(Error::DegenerateProjection));
    }

    #[test]
    fn box_conversion_examples() {
        let b = Box9DoF::axis_aligned(Vec3::new(1.0, 2.0, 3.0), [0.5, 0.6, 0.7]);
        let b7 = box9_to_box7(&UnifiedFrame::IDENTITY, &b, "b").unwrap();
        assert_eq!(b7.center, b.center);
        assert_eq!(b7.yaw, 0.0);
        assert_eq!(b7.size, b.size);

        let b = Box9DoF::with_yaw(Vec3::ZERO, [1.0; 3], FRAC_PI_2);
        let b7 = box9_to_box7(&UnifiedFrame::IDENTITY, &b, "b").unwrap();
        assert!((b7.yaw - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn yaw_shift_matches_composed_rotation() {
        let frame = build_unified_frame(&camera_looking(Vec3::ZERO, Vec3::Y)).unwrap();
        for i in 0..50 {
            let theta = -3.0 + i as f64 * 0.13;
            let b = Box9DoF::with_yaw(Vec3::new(0.3, -1.0, 0.2), [1.0, 2.0, 0.5], theta);
            let b7 = box9_to_box7(&frame, &b, "b").unwrap();
            // Oracle: compose F^T R and read the rotated local x-axis.
            let m = frame.basis().transpose().mul_mat(&b.rotation);
            let expected = wrap_yaw(m.rows[1][0].atan2(m.rows[0][0])).unwrap();
            assert!((b7.yaw - expected).abs() < 1e-12);
            assert!((b7.yaw - wrap_yaw(theta - FRAC_PI_2).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn roll_and_pitch_are_dropped() {
        let r = Mat3::rot_z(0.4).mul_mat(&Mat3::rot_y(0.2)).mul_mat(&Mat3::rot_x(-0.3));
        let b = Box9DoF::new(Vec3::ZERO, [1.0; 3], r);
        let b7 = box9_to_box7(&UnifiedFrame::IDENTITY, &b, "b").unwrap();
        assert!((b7.yaw - 0.4).abs() < 1e-12);
    }

    #[test]
    fn vertical_local_x_is_gimbal_degenerate() {
        let b = Box9DoF::new(Vec3::ZERO, [1.0; 3], Mat3::rot_y(-FRAC_PI_2));
        assert_eq!(
            box9_to_box7(&UnifiedFrame::IDENTITY, &b, "lamp"),
            Err(Error::GimbalDegenerate { id: "lamp".into() })
        );
    }
}
