//! Scene data model: objects with oriented boxes, camera trajectories and
//! the scene JSON codec.
//!
//! Scene JSON:
//!
//! ```json
//! {
//!   "scene_id": "scene0000_00",
//!   "objects": [
//!     {"id": "chair_0", "category": "chair",
//!      "center": [1.0, 2.0, 0.4], "size": [0.5, 0.5, 0.9],
//!      "rotation": [1,0,0, 0,1,0, 0,0,1], "first_frame": 12}
//!   ],
//!   "trajectory": [
//!     {"index": 0, "rotation": [0,0,1, -1,0,0, 0,-1,0], "translation": [0,0,1.5]}
//!   ]
//! }
//! ```
//!
//! Rotations are row-major object-to-world (or camera-to-world) matrices.
//! All lengths are meters.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for orthonormality and determinant checks on input rotations.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Row-major 3x3 matrix, used for rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 9]", into = "[f64; 9]")]
pub struct Mat3 {
    pub rows: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self { rows }
    }

    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Self {
            rows: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    /// Right-handed rotation by `angle` radians about +z.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rows([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rows([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let r = &self.rows;
        Mat3::from_rows([
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.rows[i][k] * o.rows[k][j]).sum();
            }
        }
        Mat3::from_rows(out)
    }

    pub fn determinant(&self) -> f64 {
        let r = &self.rows;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    /// Checks `R^T R = I` and `det R = +1` within `tol`. Returns a
    /// description of the first violation.
    pub fn check_rotation(&self, tol: f64) -> std::result::Result<(), String> {
        if self.rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err("non-finite entry".into());
        }
        let rtr = self.transpose().mul_mat(self);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                let dev = (rtr.rows[i][j] - expect).abs();
                if dev > tol {
                    return Err(format!("R^T R deviates from identity by {dev:e} at ({i},{j})"));
                }
            }
        }
        let det = self.determinant();
        if (det - 1.0).abs() > tol {
            return Err(format!("determinant {det}"));
        }
        Ok(())
    }
}

impl From<[f64; 9]> for Mat3 {
    fn from(a: [f64; 9]) -> Self {
        Mat3::from_rows([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]])
    }
}

impl From<Mat3> for [f64; 9] {
    fn from(m: Mat3) -> Self {
        let r = m.rows;
        [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]]
    }
}

/// Oriented box in the source frame: center, local extents and an
/// object-to-world rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box9DoF {
    pub center: Vec3,
    /// (l, w, h) along the box's local x, y, z axes.
    pub size: [f64; 3],
    pub rotation: Mat3,
}

impl Box9DoF {
    pub fn new(center: Vec3, size: [f64; 3], rotation: Mat3) -> Self {
        Self {
            center,
            size,
            rotation,
        }
    }

    pub fn axis_aligned(center: Vec3, size: [f64; 3]) -> Self {
        Self::new(center, size, Mat3::IDENTITY)
    }

    pub fn with_yaw(center: Vec3, size: [f64; 3], yaw: f64) -> Self {
        Self::new(center, size, Mat3::rot_z(yaw))
    }
}

/// Camera-to-world pose of one video frame. The camera looks along its
/// local +z axis (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pub index: u64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl CameraFrame {
    pub fn optical_center(&self) -> Vec3 {
        self.translation
    }

    pub fn optical_axis(&self) -> Vec3 {
        self.rotation.column(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRecord {
    pub id: String,
    pub category: String,
    pub bbox: Box9DoF,
    pub first_frame: Option<u64>,
}

impl ObjectRecord {
    pub fn new(id: impl Into<String>, category: impl Into<String>, bbox: Box9DoF) -> Self {
        Self {
            id: id.into(),
            category: category.into(),
            bbox,
            first_frame: None,
        }
    }

    pub fn with_first_frame(mut self, frame: u64) -> Self {
        self.first_frame = Some(frame);
        self
    }

    pub fn center(&self) -> Vec3 {
        self.bbox.center
    }
}

/// Euclidean distance between the 3D box centers of two objects.
pub fn center_distance(a: &ObjectRecord, b: &ObjectRecord) -> f64 {
    a.bbox.center.distance(b.bbox.center)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub objects: Vec<ObjectRecord>,
    pub trajectory: Option<Vec<CameraFrame>>,
}

impl Scene {
    /// Builds a validated scene.
    pub fn new(
        scene_id: impl Into<String>,
        objects: Vec<ObjectRecord>,
        trajectory: Option<Vec<CameraFrame>>,
    ) -> Result<Self> {
        let scene = Self {
            scene_id: scene_id.into(),
            objects,
            trajectory,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn object(&self, id: &str) -> Option<&ObjectRecord> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn first_camera(&self) -> Option<&CameraFrame> {
        self.trajectory.as_ref().and_then(|t| t.first())
    }

    fn validate(&self) -> Result<()> {
        if self.objects.is_empty() {
            return Err(Error::InvalidField {
                path: "objects".into(),
                detail: "scene must contain at least one object".into(),
            });
        }
        let mut seen = HashSet::new();
        for (i, obj) in self.objects.iter().enumerate() {
            let path = |field: &str| format!("objects[{i}].{field}");
            if !seen.insert(obj.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: obj.id.clone(),
                    path: path("id"),
                });
            }
            if obj.category.trim().is_empty() {
                return Err(Error::InvalidField {
                    path: path("category"),
                    detail: format!("object `{}` has an empty category", obj.id),
                });
            }
            if !obj.bbox.center.is_finite() {
                return Err(Error::InvalidField {
                    path: path("center"),
                    detail: format!("object `{}` has a non-finite center", obj.id),
                });
            }
            for (k, &s) in obj.bbox.size.iter().enumerate() {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidSize {
                        id: obj.id.clone(),
                        path: format!("objects[{i}].size[{k}]"),
                        detail: format!("extent must be positive, got {s}"),
                    });
                }
            }
            obj.bbox
                .rotation
                .check_rotation(ORTHONORMAL_TOL)
                .map_err(|detail| Error::InvalidRotation {
                    id: obj.id.clone(),
                    path: path("rotation"),
                    detail,
                })?;
        }
        if let Some(traj) = &self.trajectory {
            for (i, cam) in traj.iter().enumerate() {
                let path = format!("trajectory[{i}]");
                if i > 0 && cam.index <= traj[i - 1].index {
                    return Err(Error::InvalidField {
                        path: format!("{path}.index"),
                        detail: "frame indices must be strictly increasing".into(),
                    });
                }
                if !cam.translation.is_finite() {
                    return Err(Error::InvalidField {
                        path: format!("{path}.translation"),
                        detail: "non-finite translation".into(),
                    });
                }
                cam.rotation
                    .check_rotation(ORTHONORMAL_TOL)
                    .map_err(|detail| Error::InvalidField {
                        path: format!("{path}.rotation"),
                        detail,
                    })?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    category: String,
    center: [f64; 3],
    size: [f64; 3],
    rotation: [f64; 9],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    first_frame: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    scene_id: String,
    objects: Vec<ObjectDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trajectory: Option<Vec<CameraFrame>>,
}

impl From<ObjectDoc> for ObjectRecord {
    fn from(d: ObjectDoc) -> Self {
        ObjectRecord {
            id: d.id,
            category: d.category,
            bbox: Box9DoF::new(d.center.into(), d.size, d.rotation.into()),
            first_frame: d.first_frame,
        }
    }
}

impl From<&ObjectRecord> for ObjectDoc {
    fn from(o: &ObjectRecord) -> Self {
        ObjectDoc {
            id: o.id.clone(),
            category: o.category.clone(),
            center: o.bbox.center.into(),
            size: o.bbox.size,
            rotation: o.bbox.rotation.into(),
            first_frame: o.first_frame,
        }
    }
}

/// Parses and validates a scene JSON document. Object order is preserved.
pub fn parse_scene(text: &str) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    Scene::new(
        doc.scene_id,
        doc.objects.into_iter().map(ObjectRecord::from).collect(),
        doc.trajectory,
    )
}

pub fn serialize_scene(scene: &Scene) -> String {
    let doc = SceneDoc {
        scene_id: scene.scene_id.clone(),
        objects: scene.objects.iter().map(ObjectDoc::from).collect(),
        trajectory: scene.trajectory.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("scene serialization is infallible")
}
