//! Indexed triangle meshes with additive morph targets.

mod obj;
pub mod synth;

pub use obj::{load_mesh_with_morphs, load_morph_manifest, parse_obj, write_obj};

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::RigidTransform;

/// Expression name that denotes the undeformed base mesh.
pub const NEUTRAL: &str = "neutral";

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: face index {index} out of range ({count} vertices defined)")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index} but only {count} exist")]
    BadTriangle {
        triangle: usize,
        index: u32,
        count: usize,
    },
    #[error("morph '{name}' has {found} entries, expected {expected}")]
    MorphLength {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{found} texture-coordinate faces for {expected} triangles")]
    TexcoordCount { expected: usize, found: usize },
    #[error("unknown expression '{0}'")]
    UnknownExpression(String),
    #[error("expression weight for '{0}' is not finite")]
    NonFiniteWeight(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("pose: {0}")]
    Pose(#[from] crate::scene::SceneError),
    #[error("morph manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<MeshError>,
    },
}

/// Indexed triangle mesh in metres.
///
/// Texture coordinates are kept only when every face referenced one;
/// `uv_triangles` is then parallel to `triangles`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    normals: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
    texcoords: Vec<[f64; 2]>,
    uv_triangles: Vec<[u32; 3]>,
    morphs: BTreeMap<String, Vec<Vector3<f64>>>,
}

impl TriMesh {
    /// Builds a mesh and computes its vertex normals.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        if vertices
            .iter()
            .any(|v| !v.coords.iter().all(|c| c.is_finite()))
        {
            return Err(MeshError::NonFinite("vertex positions"));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= vertices.len()) {
                return Err(MeshError::BadTriangle {
                    triangle: t,
                    index,
                    count: vertices.len(),
                });
            }
        }
        let mut mesh = TriMesh {
            normals: Vec::new(),
            vertices,
            triangles,
            texcoords: Vec::new(),
            uv_triangles: Vec::new(),
            morphs: BTreeMap::new(),
        };
        mesh.update_normals();
        Ok(mesh)
    }

    /// Attaches texture coordinates. `uv_triangles` must be parallel to the
    /// triangle list and index into `texcoords`.
    pub fn with_texcoords(
        mut self,
        texcoords: Vec<[f64; 2]>,
        uv_triangles: Vec<[u32; 3]>,
    ) -> Result<Self, MeshError> {
        if uv_triangles.len() != self.triangles.len() {
            return Err(MeshError::TexcoordCount {
                expected: self.triangles.len(),
                found: uv_triangles.len(),
            });
        }
        for (t, tri) in uv_triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= texcoords.len()) {
                return Err(MeshError::BadTriangle {
                    triangle: t,
                    index,
                    count: texcoords.len(),
                });
            }
        }
        self.texcoords = texcoords;
        self.uv_triangles = uv_triangles;
        Ok(self)
    }

    pub fn add_morph(&mut self, name: &str, deltas: Vec<Vector3<f64>>) -> Result<(), MeshError> {
        if deltas.len() != self.vertices.len() {
            return Err(MeshError::MorphLength {
                name: name.to_owned(),
                expected: self.vertices.len(),
                found: deltas.len(),
            });
        }
        if deltas.iter().any(|d| !d.iter().all(|c| c.is_finite())) {
            return Err(MeshError::NonFinite("morph displacements"));
        }
        self.morphs.insert(name.to_owned(), deltas);
        Ok(())
    }

    /// Adds a morph from a full target shape with identical vertex order.
    pub fn add_morph_target(
        &mut self,
        name: &str,
        target: &[Point3<f64>],
    ) -> Result<(), MeshError> {
        if target.len() != self.vertices.len() {
            return Err(MeshError::MorphLength {
                name: name.to_owned(),
                expected: self.vertices.len(),
                found: target.len(),
            });
        }
        let deltas = target
            .iter()
            .zip(&self.vertices)
            .map(|(t, b)| t - b)
            .collect();
        self.add_morph(name, deltas)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn texcoords(&self) -> &[[f64; 2]] {
        &self.texcoords
    }

    pub fn uv_triangles(&self) -> &[[u32; 3]] {
        &self.uv_triangles
    }

    pub fn has_texcoords(&self) -> bool {
        !self.uv_triangles.is_empty()
    }

    pub fn morphs(&self) -> &BTreeMap<String, Vec<Vector3<f64>>> {
        &self.morphs
    }

    pub fn morph_names(&self) -> impl Iterator<Item = &str> {
        self.morphs.keys().map(String::as_str)
    }

    /// Vertices not touched by any face of nonzero area; their normal is zero.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        self.normals
            .iter()
            .enumerate()
            .filter(|(_, n)| n.norm_squared() == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::from([f64::INFINITY; 3]);
        let mut hi = Point3::from([f64::NEG_INFINITY; 3]);
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    fn update_normals(&mut self) {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i as usize]);
            // Cross product length is twice the area: area weighting for free.
            let n = (b - a).cross(&(c - a));
            if n.norm_squared() == 0.0 || !n.iter().all(|v| v.is_finite()) {
                continue;
            }
            for &i in tri {
                acc[i as usize] += n;
            }
        }
        for n in &mut acc {
            let len = n.norm();
            *n = if len > 0.0 {
                *n / len
            } else {
                Vector3::zeros()
            };
        }
        self.normals = acc;
    }
}

/// Per-expression blend weights, each clamped into `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpressionWeights(BTreeMap<String, f64>);

impl ExpressionWeights {
    pub fn new<I, S>(weights: I) -> Result<Self, MeshError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, w) in weights {
            let name = name.into();
            if !w.is_finite() {
                return Err(MeshError::NonFiniteWeight(name));
            }
            map.insert(name, w.clamp(0.0, 1.0));
        }
        Ok(ExpressionWeights(map))
    }

    pub fn single(name: &str, weight: f64) -> Result<Self, MeshError> {
        Self::new([(name, weight)])
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Blends morph targets onto the base shape: `v_i + Σ_e w_e · d_e,i`.
///
/// The result carries no morph targets of its own and has fresh normals.
pub fn apply_expression(mesh: &TriMesh, weights: &ExpressionWeights) -> Result<TriMesh, MeshError> {
    let mut vertices = mesh.vertices.clone();
    for (name, w) in weights.iter() {
        let deltas = mesh
            .morphs
            .get(name)
            .ok_or_else(|| MeshError::UnknownExpression(name.to_owned()))?;
        if w == 0.0 {
            continue;
        }
        for (v, d) in vertices.iter_mut().zip(deltas) {
            *v += d * w;
        }
    }
    let mut out = TriMesh {
        vertices,
        normals: Vec::new(),
        triangles: mesh.triangles.clone(),
        texcoords: mesh.texcoords.clone(),
        uv_triangles: mesh.uv_triangles.clone(),
        morphs: BTreeMap::new(),
    };
    out.update_normals();
    Ok(out)
}

/// Rotates then translates vertices; normals and morph deltas are rotated only.
pub fn transform_mesh(mesh: &TriMesh, pose: &RigidTransform) -> Result<TriMesh, MeshError> {
    pose.validate()?;
    let rotate = |d: &Vector3<f64>| pose.apply_vector(d);
    Ok(TriMesh {
        vertices: mesh.vertices.iter().map(|p| pose.apply_point(p)).collect(),
        normals: mesh.normals.iter().map(rotate).collect(),
        triangles: mesh.triangles.clone(),
        texcoords: mesh.texcoords.clone(),
        uv_triangles: mesh.uv_triangles.clone(),
        morphs: mesh
            .morphs
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(rotate).collect()))
            .collect(),
    })
}

/// Area-weighted vertex normals. Zero-area faces contribute nothing and
/// vertices without any contributing face get a zero normal.
pub fn recompute_normals(mesh: &TriMesh) -> TriMesh {
    let mut out = mesh.clone();
    out.update_normals();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn planar_ccw_triangle_normals_point_up() {
        for n in tri().normals() {
            assert_eq!(*n, Vector3::new(0.0, 0.0, 1.0));
        }
    }

    #[test]
    fn degenerate_triangle_is_ignored() {
        let m = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(5.0, 5.0, 5.0),
            ],
            vec![[0, 1, 2], [3, 3, 1]],
        )
        .unwrap();
        let m = recompute_normals(&m);
        assert!(m.normals().iter().all(|n| n.iter().all(|c| c.is_finite())));
        assert_eq!(m.normals()[1], Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(m.isolated_vertices(), vec![3]);
    }

    #[test]
    fn cube_corner_normals_are_unit() {
        let cube = synth::unit_cube();
        for n in cube.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
        // Area-weighted sum at a corner touching three faces points along the diagonal.
        let corner = cube.normals()[0];
        let diag = Vector3::new(-1.0, -1.0, -1.0).normalize();
        assert!(corner.dot(&diag) > 0.9);
    }

    #[test]
    fn zero_weights_leave_vertices() {
        let mut m = tri();
        m.add_morph("happy", vec![Vector3::new(0.1, 0.0, 0.0); 3])
            .unwrap();
        let out = apply_expression(&m, &ExpressionWeights::single("happy", 0.0).unwrap()).unwrap();
        assert_eq!(out.vertices(), m.vertices());
    }

    #[test]
    fn half_weight_is_midpoint() {
        let mut m = tri();
        m.add_morph(
            "smile",
            vec![
                Vector3::new(2.0, 0.0, 0.0),
                Vector3::zeros(),
                Vector3::zeros(),
            ],
        )
        .unwrap();
        let out = apply_expression(&m, &ExpressionWeights::single("smile", 0.5).unwrap()).unwrap();
        assert_eq!(out.vertices()[0], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn morphs_blend_additively() {
        let mut m = tri();
        let d1 = Vector3::new(0.01, 0.02, 0.0);
        let d2 = Vector3::new(0.0, -0.01, 0.03);
        m.add_morph("happy", vec![d1; 3]).unwrap();
        m.add_morph("sad", vec![d2; 3]).unwrap();
        let w = ExpressionWeights::new([("happy", 1.0), ("sad", 1.0)]).unwrap();
        let out = apply_expression(&m, &w).unwrap();
        for (o, b) in out.vertices().iter().zip(m.vertices()) {
            assert!((o - (b + d1 + d2)).norm() < 1e-15);
        }
        assert!(out.morphs().is_empty());
    }

    #[test]
    fn unknown_expression_rejected() {
        let err = apply_expression(&tri(), &ExpressionWeights::single("angry", 1.0).unwrap());
        assert!(matches!(err, Err(MeshError::UnknownExpression(n)) if n == "angry"));
    }

    #[test]
    fn weights_are_clamped() {
        let w = ExpressionWeights::new([("a", 1.7), ("b", -0.2)]).unwrap();
        assert_eq!(w.get("a"), Some(1.0));
        assert_eq!(w.get("b"), Some(0.0));
        assert!(ExpressionWeights::single("a", f64::NAN).is_err());
    }

    #[test]
    fn morph_length_checked() {
        let mut m = tri();
        assert!(matches!(
            m.add_morph("x", vec![Vector3::zeros(); 2]),
            Err(MeshError::MorphLength {
                expected: 3,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn identity_transform_is_noop() {
        let m = tri();
        let out = transform_mesh(&m, &RigidTransform::identity()).unwrap();
        assert_eq!(out.vertices(), m.vertices());
    }

    #[test]
    fn yaw_half_turn_twice_is_identity() {
        let m = synth::uv_sphere(Point3::new(0.1, 0.2, 0.3), 0.5, 8, 6);
        let half =
            RigidTransform::from_euler_deg(180.0, 0.0, 0.0, nalgebra::Vector3::zeros()).unwrap();
        let out = transform_mesh(&transform_mesh(&m, &half).unwrap(), &half).unwrap();
        for (a, b) in out.vertices().iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn translation_moves_bbox_centre() {
        let m = synth::unit_cube();
        let t = Vector3::new(0.0, 0.0, -0.85);
        let out = transform_mesh(&m, &RigidTransform::from_translation(t).unwrap()).unwrap();
        let centre = |m: &TriMesh| {
            let (lo, hi) = m.bounds();
            nalgebra::center(&lo, &hi)
        };
        assert!((centre(&out) - centre(&m) - t).norm() < 1e-15);
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(matches!(
            TriMesh::new(vec![Point3::origin()], vec![]),
            Err(MeshError::EmptyMesh)
        ));
    }
}
